#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace prmkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitBackend = 2;

/// Runs one prmkit command line. argv[0] is the program name.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace prmkit::cli
