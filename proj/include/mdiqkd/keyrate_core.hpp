#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mdiqkd/channel_sim.hpp"
#include "mdiqkd/source_model.hpp"
#include "mdiqkd/stat_bounds.hpp"

namespace mdiqkd {

// Leakage factors of the imperfect vacuum source into the x and y decoys.
struct SigmaFactors {
  double alice_x = 0.0;
  double bob_x = 0.0;
  double alice_y = 0.0;
  double bob_y = 0.0;

  double x_sum() const { return alice_x + bob_x; }
  double y_sum() const { return alice_y + bob_y; }
};

// sigma_A^x = a_0^{x,U} a_1^{v,U} / (a_0^{v,L} a_1^{x,L}) and analogues.
// Throws ConfigError on a zero denominator and InfeasibleError when
// sigma_A + sigma_B >= 1 for either decoy.
SigmaFactors sigma_factors(PhotonCoeffBounds const& bounds);

struct MinimizerConfig {
  int grid_points = 1001;    // uniform H grid
  double refine_tol = 1e-10; // golden-section tolerance relative to H^U
};

struct AnalysisInputs {
  SourceEnsemble ensemble;
  PhotonCoeffBounds bounds;
  PairObservables observables;
  ChernoffConfig chernoff;
  StatisticsMode statistics = StatisticsMode::finite;
  double ec_inefficiency = 1.16;  // f
  MinimizerConfig minimizer;

  void validate() const;
};

// Simulated-experiment inputs: coefficient bounds from `ensemble`, observables
// from the channel model.
AnalysisInputs make_analysis_inputs(SourceEnsemble const& ensemble,
                                    ChannelParams const& params);

struct JointBound {
  std::string group;  // e.g. "S:xx+vy"
  bool is_upper = false;
  double count_bound = 0.0;  // bound on sum_lr L_lr <S_lr> (or <T_lr>)
};

// Chernoff envelopes on the expected counting rates of the analysed sources,
// in rate units (per emitted pulse pair of that source).
struct ExpectationEnvelope {
  std::array<Envelope, 16> counting_rate{};  // <S_lr>, used pairs only
  double error_rate_xx_upper = 0.0;          // <T_xx>^U
  std::vector<JointBound> joint;             // the grouped constraints
  PairObservables observables;
  ChernoffEstimator estimator;

  Envelope const& rate(Source l, Source r) const {
    return counting_rate[4 * index(l) + index(r)];
  }
};

ExpectationEnvelope expectation_envelopes(AnalysisInputs const& inputs);

// Lower bound on S+ = a_1^{y,L} b_2^{y,L} <S_xx>
//   + K (a_0^{y,L}/a_0^{v,U} <S_vy> + b_0^{y,L}/b_0^{v,U} <S_yv>),
// K = a_1^{x,U} b_2^{x,U} / (1 - sigma_A^y - sigma_B^y).
double s_plus_lower(ExpectationEnvelope const& env,
                    PhotonCoeffBounds const& bounds);

// Upper bound on S- = K (<S_yy> + a_0^{y,U} b_0^{y,U}/(a_0^{v,L} b_0^{v,L}) <S_vv>).
double s_minus_upper(ExpectationEnvelope const& env,
                     PhotonCoeffBounds const& bounds);

// [H^L, H^U] with H^L clamped at 0. H^L may exceed H^U on pathological data;
// callers treat that as infeasible.
Interval h_range(ExpectationEnvelope const& env,
                 PhotonCoeffBounds const& bounds);

// a_1^{x,U} a_1^{y,L} (b_1^{x,U} b_2^{y,L} - b_2^{x,U} b_1^{y,L}).
double yield_denominator(PhotonCoeffBounds const& bounds);

// (S+ - S- - a_1^{y,L} b_2^{y,L} H) / denominator, clamped at 0.
// Throws ConfigError when the denominator is not positive.
double s11_lower(double h, double s_plus, double s_minus,
                 PhotonCoeffBounds const& bounds);

// (<T_xx>^U - H/2) / (a_1^{x,L} b_1^{x,L} s11L) clamped to [0, 1]; nullopt
// ("no key") when s11L <= 0. Values above 1/2 also mean no key.
std::optional<double> e11_upper(double h, double txx_upper, double s11L,
                                PhotonCoeffBounds const& bounds);

// -x log2 x - (1-x) log2(1-x), h(0) = h(1) = 0.
double binary_entropy(double x);

// R(H) for fixed data; everything independent of H is precomputed.
class KeyRateFunction {
 public:
  explicit KeyRateFunction(AnalysisInputs const& inputs);

  struct Point {
    double h = 0.0;
    double s11_lower = 0.0;
    std::optional<double> e11_upper;
    double rate = 0.0;  // raw, may be negative
  };

  Point evaluate(double h) const;
  double operator()(double h) const { return evaluate(h).rate; }

  Interval h_bounds() const { return h_range_; }
  double s_plus() const { return s_plus_; }
  double s_minus() const { return s_minus_; }
  double txx_upper() const { return txx_upper_; }
  double signal_rate() const { return s_zz_; }
  double signal_error() const { return e_zz_; }
  SigmaFactors const& sigma() const { return sigma_; }
  std::size_t chernoff_invocations() const { return invocations_; }

 private:
  PhotonCoeffBounds bounds_;
  SigmaFactors sigma_;
  Interval h_range_;
  double s_plus_ = 0.0;
  double s_minus_ = 0.0;
  double txx_upper_ = 0.0;
  double s_zz_ = 0.0;
  double e_zz_ = 0.0;
  double p_zz_ = 0.0;
  double ec_ = 0.0;
  std::size_t invocations_ = 0;
};

double key_rate_at(double h, AnalysisInputs const& inputs);

enum class RateStatus {
  ok,
  no_key,             // min_H R(H) <= 0
  decoy_conditions,   // source preconditions failed
  infeasible,         // sigma sums >= 1, empty H range, bad denominator
  invalid_input,
};

std::string to_string(RateStatus status);

struct KeyRateReport {
  double h_lower = 0.0;
  double h_upper = 0.0;
  double h_star = 0.0;
  double s11_lower = 0.0;
  double e11_upper = 0.0;  // 1 when no key at H*
  double s_zz = 0.0;
  double e_zz = 0.0;
  double rate = 0.0;        // max(0, min_H R(H)), per emitted pulse pair
  double raw_min = 0.0;     // min_H R(H) before clamping
  std::size_t chernoff_invocations = 0;
  std::vector<std::pair<double, double>> trace;  // (H, R(H)) grid samples
  RateStatus status = RateStatus::ok;
  std::string reason;
};

// R = max(0, min over H in [H^L, H^U] of R(H)): dense grid, then
// golden-section refinement around the grid minimum. Never throws for
// infeasible analyses; the status says why the rate is zero.
KeyRateReport secure_key_rate(AnalysisInputs const& inputs);

// `key = value` lines, one per report field (trace omitted).
std::string to_record(KeyRateReport const& report);

}  // namespace mdiqkd
