#pragma once

#include <string>
#include <vector>

namespace curvealign::cli {

inline constexpr const char* kVersion = "1.0.0";

/// Entry point of the command-line tool; returns the process exit code
/// (0 ok, 2 usage/config, 3 IO, 4 numerical).
int run(int argc, char** argv);
/// Same, with argv[0] omitted.
int run(const std::vector<std::string>& args);

}  // namespace curvealign::cli
