#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace vqoe::cli {

// Runs one subcommand. args[0] is the program name. Returns 0 on success,
// 1 on input errors and 2 on internal errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vqoe::cli
