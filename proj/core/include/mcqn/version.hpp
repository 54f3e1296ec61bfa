#pragma once

namespace mcqn {

// Kept in step with the package version in core/CMakeLists.txt.
inline constexpr const char* kVersion = "0.1.0";

}  // namespace mcqn
