#pragma once

#include <string>
#include <vector>

namespace subcov::cli {

// Exit codes: 0 success, 2 validation error (bad arguments, malformed
// scenario or input file), 3 numeric failure.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace subcov::cli
