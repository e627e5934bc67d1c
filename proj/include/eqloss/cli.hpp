#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace eqloss {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitBudget = 2;

/// Runs the eqloss command line (argv[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace eqloss
