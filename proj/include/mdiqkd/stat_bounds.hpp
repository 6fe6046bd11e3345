#pragma once

#include <cstddef>
#include <span>

namespace mdiqkd {

struct ChernoffConfig {
  double xi = 1e-7;          // failure probability of each estimate
  double rel_tol = 1e-12;    // bisection tolerance on delta
  int max_iterations = 400;

  void validate() const;
};

// Expected-count envelope [mu^L, mu^U] of an observed count.
struct Envelope {
  double lower = 0.0;
  double upper = 0.0;
};

// Left-hand sides of the Chernoff tail equations in log form. The solved
// deltas make these equal ln(xi/2).
//   lower tail:  [d - (1+d) ln(1+d)] X / (1+d)
//   upper tail:  [-d - (1-d) ln(1-d)] X / (1-d)
double chernoff_log_tail_lower(double delta, double count);
double chernoff_log_tail_upper(double delta, double count);

// Solved deltas. Both throw SolverError on non-convergence.
double chernoff_delta_lower(double count, ChernoffConfig const& cfg);
double chernoff_delta_upper(double count, ChernoffConfig const& cfg);

// mu^L(X) = X / (1 + delta_1); 0 for X = 0.
double chernoff_lower(double count, ChernoffConfig const& cfg);
// mu^U(X) = X / (1 - delta_2); ln(2/xi) for X = 0.
double chernoff_upper(double count, ChernoffConfig const& cfg);

struct WeightedCount {
  double coefficient = 0.0;
  double count = 0.0;
};

// Joint lower bound on sum_i c_i <X_i>. Sorting c descending and telescoping,
//   sum_k (c_(k) - c_(k+1)) mu^L(X_(1) + ... + X_(k)),
// which uses one Chernoff estimate per nested partial sum.
double combo_lower(std::span<WeightedCount const> terms,
                   ChernoffConfig const& cfg);
// Mirror of combo_lower with mu^U.
double combo_upper(std::span<WeightedCount const> terms,
                   ChernoffConfig const& cfg);

enum class StatisticsMode {
  finite,      // Chernoff envelopes
  asymptotic,  // envelopes collapse onto the observed values
};

// Chernoff bounds with a call counter, so an analysis can report how many
// estimates its failure probability is spread over. Not shareable across
// threads; create one per analysis.
class ChernoffEstimator {
 public:
  explicit ChernoffEstimator(ChernoffConfig cfg = {},
                             StatisticsMode mode = StatisticsMode::finite);

  double lower(double count) const;
  double upper(double count) const;
  Envelope envelope(double count) const { return {lower(count), upper(count)}; }
  double combo_lower(std::span<WeightedCount const> terms) const;
  double combo_upper(std::span<WeightedCount const> terms) const;

  ChernoffConfig const& config() const { return cfg_; }
  StatisticsMode mode() const { return mode_; }
  std::size_t invocations() const { return invocations_; }

 private:
  ChernoffConfig cfg_;
  StatisticsMode mode_;
  mutable std::size_t invocations_ = 0;
};

}  // namespace mdiqkd
