#pragma once

#include <stdexcept>
#include <string>

namespace mdiqkd {

// Invalid user-supplied parameters (maps to CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical routine failed to converge (maps to CLI exit code 3).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs are valid but the analysis cannot produce a bound
// (e.g. sigma_A + sigma_B >= 1, decoy intensities too close).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mdiqkd
