#pragma once

#include <string>
#include <vector>

#include "mcqn/network.hpp"

namespace mcqn {

/// Names accepted by preset(): mm1, tandem, rybko_stolyar_stable,
/// rybko_stolyar_unstable, single_station_priority.
const std::vector<std::string>& preset_names();

/// Unvalidated spec of a named preset. Throws SpecError for unknown names.
NetworkSpec preset_network(const std::string& name);

/// Validated spec of a named preset. Throws SpecError for unknown names.
ValidatedSpec preset(const std::string& name);

}  // namespace mcqn
