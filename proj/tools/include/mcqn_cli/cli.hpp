#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mcqn::cli {

/// Exit statuses of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

/// Commands accepted as the first positional argument.
const std::vector<std::string>& command_names();

/// mcqn <command> --config <path> [--seed <u64>] [--out <dir>] [--replications <n>] [--quiet]
///
/// Writes report.json and summary.txt plus command artifacts into the output
/// directory and returns one of the exit statuses above.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

/// 64-bit FNV-1a, used for the config hash recorded in every artifact.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace mcqn::cli
