#pragma once

#include <cmath>
#include <string>

#include "mdiqkd/errors.hpp"

namespace mdiqkd {

struct BisectionResult {
  double root = 0.0;
  int iterations = 0;
};

// Finds a sign change of `f` inside [lower, upper]. The bracket must already
// straddle the root. Stops once the bracket width is below
// rel_tol * |midpoint| or the midpoint stops moving (one ulp).
template <typename Function>
BisectionResult bisect(Function&& f, double lower, double upper,
                       double rel_tol, int max_iterations) {
  double f_lower = f(lower);
  double const f_upper = f(upper);
  if (f_lower == 0.0) return {lower, 0};
  if (f_upper == 0.0) return {upper, 0};
  if (std::signbit(f_lower) == std::signbit(f_upper)) {
    throw SolverError("bisect: bracket [" + std::to_string(lower) + ", " +
                      std::to_string(upper) + "] does not straddle a root");
  }
  for (int it = 1; it <= max_iterations; ++it) {
    double const middle = lower + 0.5 * (upper - lower);
    if (middle == lower || middle == upper) return {middle, it};
    double const f_middle = f(middle);
    if (f_middle == 0.0) return {middle, it};
    if (std::signbit(f_middle) == std::signbit(f_lower)) {
      lower = middle;
      f_lower = f_middle;
    } else {
      upper = middle;
    }
    if (upper - lower <= rel_tol * std::abs(middle)) {
      return {lower + 0.5 * (upper - lower), it};
    }
  }
  throw SolverError("bisect: no convergence after " +
                    std::to_string(max_iterations) + " iterations");
}

}  // namespace mdiqkd
