#pragma once

#include <stdexcept>
#include <string>

namespace tn {

// Invalid designs, malformed configs, out-of-range path parameters.
// CLI maps this to exit code 2.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Nonconvergence of an equilibrium solve after all recovery attempts.
// CLI maps this to exit code 3.
struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable, unwritable, or structurally corrupt files.
// CLI maps this to exit code 4.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tn
