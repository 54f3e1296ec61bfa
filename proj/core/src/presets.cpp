#include "mcqn/presets.hpp"

namespace mcqn {

namespace {

DistributionSpec exp_mean(double mean) { return DistributionSpec::exponential(1.0 / mean); }

// Two stations, two two-step routes that cross; each station gives priority
// to the class that finishes a route.
NetworkSpec rybko_stolyar(double long_mean) {
  std::vector<ClassSpec> classes(4);
  classes[0] = {0, exp_mean(1.0), exp_mean(0.1), {{1, 1.0}}};
  classes[1] = {1, std::nullopt, exp_mean(long_mean), {}};
  classes[2] = {1, exp_mean(1.0), exp_mean(0.1), {{3, 1.0}}};
  classes[3] = {0, std::nullopt, exp_mean(long_mean), {}};
  // Station 0 serves {0, 3} with 3 first; station 1 serves {1, 2} with 1 first.
  return make_network(classes, 2, {DisciplineKind::kStaticPriority, {1, 0, 1, 0}});
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"mm1", "tandem", "rybko_stolyar_stable",
                                              "rybko_stolyar_unstable", "single_station_priority"};
  return names;
}

NetworkSpec preset_network(const std::string& name) {
  if (name == "mm1") {
    return make_network({{0, exp_mean(2.0), exp_mean(1.0), {}}}, 1,
                        {DisciplineKind::kWorkConservingDefault, {}});
  }
  if (name == "tandem") {
    return make_network({{0, exp_mean(2.0), exp_mean(1.0), {{1, 1.0}}},
                         {1, std::nullopt, exp_mean(1.0), {}}},
                        2, {DisciplineKind::kWorkConservingDefault, {}});
  }
  if (name == "rybko_stolyar_unstable") return rybko_stolyar(0.6);
  if (name == "rybko_stolyar_stable") return rybko_stolyar(0.3);
  if (name == "single_station_priority") {
    // Re-entrant line at one station: class 0 feeds class 1, class 1 has priority.
    return make_network({{0, exp_mean(2.5), exp_mean(0.5), {{1, 1.0}}},
                         {0, std::nullopt, exp_mean(1.0), {}}},
                        1, {DisciplineKind::kStaticPriority, {1, 0}});
  }
  throw SpecError("unknown preset '" + name + "'");
}

ValidatedSpec preset(const std::string& name) { return validated(preset_network(name)); }

}  // namespace mcqn
