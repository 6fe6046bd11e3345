#include "mdiqkd/stat_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mdiqkd/bisection.hpp"
#include "mdiqkd/errors.hpp"

namespace mdiqkd {

void ChernoffConfig::validate() const {
  if (!(xi > 0.0 && xi < 1.0)) throw ConfigError("xi must lie in (0, 1)");
  if (!(rel_tol > 0.0)) throw ConfigError("chernoff rel_tol must be > 0");
  if (max_iterations < 1) throw ConfigError("chernoff max_iterations < 1");
}

double chernoff_log_tail_lower(double delta, double count) {
  return count * (delta / (1.0 + delta) - std::log1p(delta));
}

double chernoff_log_tail_upper(double delta, double count) {
  return count * (-delta / (1.0 - delta) - std::log1p(-delta));
}

namespace {

void check_count(double count) {
  if (!(count >= 0.0) || !std::isfinite(count)) {
    throw std::domain_error("chernoff: count must be finite and >= 0");
  }
}

}  // namespace

double chernoff_delta_lower(double count, ChernoffConfig const& cfg) {
  check_count(count);
  double const target = std::log(cfg.xi / 2.0);
  auto f = [&](double d) { return chernoff_log_tail_lower(d, count) - target; };
  double lo = 1e-12;
  // Only reachable for astronomically large counts.
  while (f(lo) <= 0.0) {
    lo *= 1e-3;
    if (lo < 1e-300) throw SolverError("chernoff_delta_lower: no bracket");
  }
  double hi = 1.0;
  for (int doublings = 0; f(hi) > 0.0; ++doublings) {
    if (doublings > 1100) throw SolverError("chernoff_delta_lower: no bracket");
    hi *= 2.0;
  }
  return bisect(f, lo, hi, cfg.rel_tol, cfg.max_iterations).root;
}

namespace {

// Solves the upper tail condition in u = -ln(1 - delta), which keeps full
// resolution of 1 - delta when delta approaches 1 (small counts).
double chernoff_log_stretch_upper(double count, ChernoffConfig const& cfg) {
  double const target = std::log(cfg.xi / 2.0);
  auto f = [&](double u) { return count * (u - std::expm1(u)) - target; };
  double lo = 1e-12;
  while (f(lo) <= 0.0) {
    lo *= 1e-3;
    if (lo < 1e-300) throw SolverError("chernoff_delta_upper: no bracket");
  }
  double hi = 1.0;
  for (int doublings = 0; f(hi) > 0.0; ++doublings) {
    if (doublings > 10) throw SolverError("chernoff_delta_upper: no bracket");
    hi *= 2.0;
  }
  return bisect(f, lo, hi, cfg.rel_tol, cfg.max_iterations).root;
}

}  // namespace

double chernoff_delta_upper(double count, ChernoffConfig const& cfg) {
  check_count(count);
  return -std::expm1(-chernoff_log_stretch_upper(count, cfg));
}

double chernoff_lower(double count, ChernoffConfig const& cfg) {
  check_count(count);
  if (count == 0.0) return 0.0;
  return count / (1.0 + chernoff_delta_lower(count, cfg));
}

double chernoff_upper(double count, ChernoffConfig const& cfg) {
  check_count(count);
  if (count == 0.0) return std::log(2.0 / cfg.xi);
  return count * std::exp(chernoff_log_stretch_upper(count, cfg));
}

namespace {

template <typename Bound>
double telescoped(std::span<WeightedCount const> terms, Bound&& bound) {
  std::vector<WeightedCount> sorted(terms.begin(), terms.end());
  for (auto const& t : sorted) {
    if (!(t.coefficient >= 0.0)) {
      throw std::domain_error("combo bound: coefficients must be >= 0");
    }
    check_count(t.count);
  }
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](WeightedCount const& a, WeightedCount const& b) {
                     return a.coefficient > b.coefficient;
                   });
  double total = 0.0;
  double partial = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    partial += sorted[k].count;
    double const next =
        k + 1 < sorted.size() ? sorted[k + 1].coefficient : 0.0;
    double const step = sorted[k].coefficient - next;
    if (step > 0.0) total += step * bound(partial);
  }
  return total;
}

}  // namespace

double combo_lower(std::span<WeightedCount const> terms,
                   ChernoffConfig const& cfg) {
  return telescoped(terms, [&](double x) { return chernoff_lower(x, cfg); });
}

double combo_upper(std::span<WeightedCount const> terms,
                   ChernoffConfig const& cfg) {
  return telescoped(terms, [&](double x) { return chernoff_upper(x, cfg); });
}

ChernoffEstimator::ChernoffEstimator(ChernoffConfig cfg, StatisticsMode mode)
    : cfg_(cfg), mode_(mode) {
  cfg_.validate();
}

double ChernoffEstimator::lower(double count) const {
  if (mode_ == StatisticsMode::asymptotic) return count;
  ++invocations_;
  return chernoff_lower(count, cfg_);
}

double ChernoffEstimator::upper(double count) const {
  if (mode_ == StatisticsMode::asymptotic) return count;
  ++invocations_;
  return chernoff_upper(count, cfg_);
}

double ChernoffEstimator::combo_lower(
    std::span<WeightedCount const> terms) const {
  return telescoped(terms, [&](double x) { return lower(x); });
}

double ChernoffEstimator::combo_upper(
    std::span<WeightedCount const> terms) const {
  return telescoped(terms, [&](double x) { return upper(x); });
}

}  // namespace mdiqkd
