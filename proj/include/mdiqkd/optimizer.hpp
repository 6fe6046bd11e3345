#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mdiqkd/channel_sim.hpp"
#include "mdiqkd/keyrate_core.hpp"
#include "mdiqkd/source_model.hpp"

namespace mdiqkd {

// Symmetric protocol parameters; p_v = 1 - p_x - p_y - p_z.
struct ProtocolPoint {
  double mu_x = 0.1;
  double mu_y = 0.4;
  double mu_z = 0.5;
  double p_x = 0.1;
  double p_y = 0.1;
  double p_z = 0.7;

  double p_v() const { return 1.0 - p_x - p_y - p_z; }
  std::array<double, 6> as_array() const {
    return {mu_x, mu_y, mu_z, p_x, p_y, p_z};
  }
  static ProtocolPoint from_array(std::array<double, 6> const& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
  }
  bool operator==(ProtocolPoint const&) const = default;
};

struct OptimizationProblem {
  ChannelParams channel;
  double delta1 = 0.0;
  double delta2 = 0.0;
  StatisticsMode statistics = StatisticsMode::finite;
  MinimizerConfig minimizer;
};

// Both sides use the same sources.
SourceEnsemble make_ensemble(ProtocolPoint const& point, double delta1,
                             double delta2);

// Box: mu_x in [1e-4, mu_y), mu_y in (mu_x, 1], mu_z in [1e-3, 1],
// probabilities in (0, 1) with p_v > 0.
bool in_box(ProtocolPoint const& point);

// Secure key rate at `point`; 0 for points outside the box or failing the
// decoy conditions.
double evaluate(OptimizationProblem const& problem, ProtocolPoint const& point);

struct Evaluation {
  ProtocolPoint point;
  double rate = 0.0;
  // Search objective: the rate when positive, otherwise a continuous
  // non-positive extension of the key-rate bound (-1 outside the feasible
  // region).
  double score = 0.0;
};

// Rate and search score at `point`.
Evaluation search_evaluate(OptimizationProblem const& problem,
                           ProtocolPoint const& point);

struct OptimizerConfig {
  int restarts = 8;
  int budget = 4000;  // total evaluations across restarts
};

struct OptimizationResult {
  ProtocolPoint best;
  double rate = 0.0;
  std::vector<Evaluation> log;
};

// Multi-start Nelder-Mead on the 6 parameters, projected onto the box.
// Start points: every warm start, the default point, then seeded random
// points, until `restarts` local searches have run (warm starts are always
// included). Deterministic in `seed`.
OptimizationResult optimize(OptimizationProblem const& problem,
                            std::uint64_t seed, OptimizerConfig const& cfg,
                            std::vector<ProtocolPoint> const& warm_starts = {});

// Evaluation log as CSV: mu_x,mu_y,mu_z,p_v,p_x,p_y,p_z,rate.
void write_evaluation_log(std::ostream& out,
                          std::vector<Evaluation> const& log);

struct SweepPoint {
  double distance_km = 0.0;
  ProtocolPoint point;
  KeyRateReport report;
};

// Key rate versus distance. With `optimize_each` the distances are optimized
// twice: nearest to farthest, each search warm-started from the nearer
// optimum, then farthest to nearest, warm-started from the first-pass optimum
// and the next farther one. Matching entries of `seeds` (if any) are added
// as warm starts in both passes. Results are returned in the order of
// `distances`.
std::vector<SweepPoint> sweep(OptimizationProblem const& problem,
                              std::vector<double> const& distances,
                              ProtocolPoint const& fixed_point,
                              bool optimize_each, std::uint64_t seed,
                              OptimizerConfig const& cfg,
                              std::vector<SweepPoint> const* seeds = nullptr);

}  // namespace mdiqkd
