#pragma once

#include <string>
#include <vector>

namespace scar {

// Full command-line surface; returns the process exit code.
// 0 success, 1 usage error, 2 data/validation error, 3 numerical failure.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);  // args without argv[0]

}  // namespace scar
