#include "mdiqkd/keyrate_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mdiqkd/errors.hpp"

namespace mdiqkd {

namespace {

constexpr Side A = Side::alice;
constexpr Side B = Side::bob;

}  // namespace

SigmaFactors sigma_factors(PhotonCoeffBounds const& b) {
  auto factor = [&](Side side, Source decoy) {
    double const den =
        b.lower(side, Source::v, 0) * b.lower(side, decoy, 1);
    if (!(den > 0.0)) {
      throw ConfigError("sigma factor: a_0^{v,L} a_1^{l,L} must be > 0");
    }
    return b.upper(side, decoy, 0) * b.upper(side, Source::v, 1) / den;
  };
  SigmaFactors s{factor(A, Source::x), factor(B, Source::x),
                 factor(A, Source::y), factor(B, Source::y)};
  if (!(s.x_sum() < 1.0) || !(s.y_sum() < 1.0)) {
    throw InfeasibleError("vacuum source too bright: sigma_A + sigma_B >= 1");
  }
  return s;
}

void AnalysisInputs::validate() const {
  ensemble.validate();
  observables.validate();
  chernoff.validate();
  if (!(ec_inefficiency >= 0.0)) throw ConfigError("f must be >= 0");
  if (minimizer.grid_points < 2) throw ConfigError("H grid needs >= 2 points");
  if (!(minimizer.refine_tol > 0.0)) throw ConfigError("refine_tol must be > 0");
}

AnalysisInputs make_analysis_inputs(SourceEnsemble const& ensemble,
                                    ChannelParams const& params) {
  AnalysisInputs in;
  in.ensemble = ensemble;
  in.bounds = coeff_bounds(ensemble);
  in.observables = build_observables(ensemble, params);
  in.chernoff.xi = params.xi;
  in.ec_inefficiency = params.f;
  return in;
}

ExpectationEnvelope expectation_envelopes(AnalysisInputs const& inputs) {
  ExpectationEnvelope env;
  env.observables = inputs.observables;
  env.estimator = ChernoffEstimator(inputs.chernoff, inputs.statistics);
  auto const& obs = inputs.observables;
  // Reported envelopes use their own estimator so the invocation count of
  // env.estimator covers only what the key rate depends on.
  ChernoffEstimator const reporting(inputs.chernoff, inputs.statistics);
  for (auto const& p : obs.pairs) {
    if (!p.used) continue;
    Envelope const e = reporting.envelope(p.counts);
    env.counting_rate[4 * index(p.l) + index(p.r)] = {e.lower / p.emitted,
                                                      e.upper / p.emitted};
  }
  auto const& xx = obs.at(Source::x, Source::x);
  env.error_rate_xx_upper = env.estimator.upper(xx.errors) / xx.emitted;

  using enum Source;
  auto counts = [&](std::initializer_list<std::pair<Source, Source>> group) {
    std::vector<WeightedCount> terms;
    for (auto [l, r] : group) terms.push_back({1.0, obs.at(l, r).counts});
    return terms;
  };
  auto errors = [&](std::initializer_list<std::pair<Source, Source>> group) {
    std::vector<WeightedCount> terms;
    for (auto [l, r] : group) terms.push_back({1.0, obs.at(l, r).errors});
    return terms;
  };
  env.joint = {
      {"S:xx+vy", false, reporting.combo_lower(counts({{x, x}, {v, y}}))},
      {"S:xx+yv", false, reporting.combo_lower(counts({{x, x}, {y, v}}))},
      {"S:vy+yv", false, reporting.combo_lower(counts({{v, y}, {y, v}}))},
      {"S:xx+vy+yv", false,
       reporting.combo_lower(counts({{x, x}, {v, y}, {y, v}}))},
      {"S:yy+vv", true, reporting.combo_upper(counts({{y, y}, {v, v}}))},
      {"T:vx+xv", false, reporting.combo_lower(errors({{v, x}, {x, v}}))},
      {"T:xx+vv", true, reporting.combo_upper(errors({{x, x}, {v, v}}))},
  };
  return env;
}

namespace {

WeightedCount rate_term(double rate_coefficient, PairRecord const& p,
                        bool use_errors) {
  return {rate_coefficient / p.emitted, use_errors ? p.errors : p.counts};
}

double y_scale(PhotonCoeffBounds const& b) {
  SigmaFactors const s = sigma_factors(b);
  return b.upper(A, Source::x, 1) * b.upper(B, Source::x, 2) /
         (1.0 - s.y_sum());
}

}  // namespace

double s_plus_lower(ExpectationEnvelope const& env,
                    PhotonCoeffBounds const& b) {
  using enum Source;
  double const k = y_scale(b);
  auto const& obs = env.observables;
  std::array terms{
      rate_term(b.lower(A, y, 1) * b.lower(B, y, 2), obs.at(x, x), false),
      rate_term(k * b.lower(A, y, 0) / b.upper(A, v, 0), obs.at(v, y), false),
      rate_term(k * b.lower(B, y, 0) / b.upper(B, v, 0), obs.at(y, v), false),
  };
  return env.estimator.combo_lower(terms);
}

double s_minus_upper(ExpectationEnvelope const& env,
                     PhotonCoeffBounds const& b) {
  using enum Source;
  double const k = y_scale(b);
  double const vv_weight = b.upper(A, y, 0) * b.upper(B, y, 0) /
                           (b.lower(A, v, 0) * b.lower(B, v, 0));
  auto const& obs = env.observables;
  std::array terms{
      rate_term(k, obs.at(y, y), false),
      rate_term(k * vv_weight, obs.at(v, v), false),
  };
  return env.estimator.combo_upper(terms);
}

Interval h_range(ExpectationEnvelope const& env, PhotonCoeffBounds const& b) {
  using enum Source;
  SigmaFactors const s = sigma_factors(b);
  auto const& obs = env.observables;
  std::array positive{
      rate_term(b.lower(A, x, 0) / b.upper(A, v, 0), obs.at(v, x), true),
      rate_term(b.lower(B, x, 0) / b.upper(B, v, 0), obs.at(x, v), true),
  };
  std::array negative{
      rate_term(b.upper(A, x, 0) * b.upper(B, x, 0) /
                    (b.lower(A, v, 0) * b.lower(B, v, 0)),
                obs.at(v, v), true),
      rate_term(s.x_sum(), obs.at(x, x), true),
  };
  double const pos = env.estimator.combo_lower(positive);
  double const neg = env.estimator.combo_upper(negative);
  double const lower = std::max(0.0, 2.0 / (1.0 - s.x_sum()) * (pos - neg));
  return {lower, 2.0 * env.error_rate_xx_upper};
}

double yield_denominator(PhotonCoeffBounds const& b) {
  using enum Source;
  return b.upper(A, x, 1) * b.lower(A, y, 1) *
         (b.upper(B, x, 1) * b.lower(B, y, 2) -
          b.upper(B, x, 2) * b.lower(B, y, 1));
}

double s11_lower(double h, double s_plus, double s_minus,
                 PhotonCoeffBounds const& b) {
  double const den = yield_denominator(b);
  if (!(den > 0.0)) {
    throw ConfigError(
        "single-photon yield bound undefined: decoy intensities too close");
  }
  double const num =
      s_plus - s_minus - b.lower(A, Source::y, 1) * b.lower(B, Source::y, 2) * h;
  return std::max(0.0, num / den);
}

std::optional<double> e11_upper(double h, double txx_upper, double s11L,
                                PhotonCoeffBounds const& b) {
  if (!(s11L > 0.0)) return std::nullopt;
  double const e = (txx_upper - h / 2.0) /
                   (b.lower(A, Source::x, 1) * b.lower(B, Source::x, 1) * s11L);
  return std::clamp(e, 0.0, 1.0);
}

double binary_entropy(double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error("binary_entropy: argument outside [0, 1]");
  }
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

KeyRateFunction::KeyRateFunction(AnalysisInputs const& inputs)
    : bounds_(inputs.bounds), sigma_(sigma_factors(inputs.bounds)) {
  ExpectationEnvelope const env = expectation_envelopes(inputs);
  s_plus_ = s_plus_lower(env, bounds_);
  s_minus_ = s_minus_upper(env, bounds_);
  h_range_ = h_range(env, bounds_);
  txx_upper_ = env.error_rate_xx_upper;
  invocations_ = env.estimator.invocations();
  auto const& zz = inputs.observables.at(Source::z, Source::z);
  s_zz_ = zz.counting_rate();
  e_zz_ = inputs.observables.signal_error_rate();
  p_zz_ = inputs.ensemble.alice.p_z * inputs.ensemble.bob.p_z;
  ec_ = inputs.ec_inefficiency;
  if (!(yield_denominator(bounds_) > 0.0)) {
    throw ConfigError(
        "single-photon yield bound undefined: decoy intensities too close");
  }
}

KeyRateFunction::Point KeyRateFunction::evaluate(double h) const {
  Point pt;
  pt.h = h;
  pt.s11_lower = s11_lower(h, s_plus_, s_minus_, bounds_);
  pt.e11_upper = e11_upper(h, txx_upper_, pt.s11_lower, bounds_);
  double privacy = 0.0;
  if (pt.e11_upper && *pt.e11_upper <= 0.5) {
    privacy = bounds_.lower(A, Source::z, 1) * bounds_.lower(B, Source::z, 1) *
              pt.s11_lower * (1.0 - binary_entropy(*pt.e11_upper));
  }
  pt.rate = p_zz_ * (privacy - ec_ * s_zz_ * binary_entropy(e_zz_));
  return pt;
}

double key_rate_at(double h, AnalysisInputs const& inputs) {
  return KeyRateFunction(inputs)(h);
}

std::string to_string(RateStatus status) {
  switch (status) {
    case RateStatus::ok: return "ok";
    case RateStatus::no_key: return "no_key";
    case RateStatus::decoy_conditions: return "decoy_conditions";
    case RateStatus::infeasible: return "infeasible";
    case RateStatus::invalid_input: return "invalid_input";
  }
  return "unknown";
}

namespace {

// Minimum of f on [lo, hi] by golden-section search.
std::pair<double, double> golden_minimum(KeyRateFunction const& f, double lo,
                                         double hi, double tol) {
  double const inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  double const mid = 0.5 * (a + b);
  std::array<std::pair<double, double>, 3> candidates{
      {{c, fc}, {d, fd}, {mid, f(mid)}}};
  return *std::min_element(
      candidates.begin(), candidates.end(),
      [](auto const& p, auto const& q) { return p.second < q.second; });
}

KeyRateReport zero_report(RateStatus status, std::string reason) {
  KeyRateReport r;
  r.status = status;
  r.reason = std::move(reason);
  r.e11_upper = 1.0;
  return r;
}

}  // namespace

KeyRateReport secure_key_rate(AnalysisInputs const& inputs) {
  try {
    inputs.validate();
  } catch (ConfigError const& e) {
    return zero_report(RateStatus::invalid_input, e.what());
  }
  ConditionReport const conditions = check_decoy_conditions(inputs.bounds);
  if (!conditions.passed()) {
    return zero_report(RateStatus::decoy_conditions,
                       conditions.failure_summary());
  }

  std::optional<KeyRateFunction> rate_fn;
  try {
    rate_fn.emplace(inputs);
  } catch (InfeasibleError const& e) {
    return zero_report(RateStatus::infeasible, e.what());
  } catch (ConfigError const& e) {
    return zero_report(RateStatus::infeasible, e.what());
  }
  KeyRateFunction const& f = *rate_fn;

  KeyRateReport report;
  report.h_lower = f.h_bounds().lower;
  report.h_upper = f.h_bounds().upper;
  report.s_zz = f.signal_rate();
  report.e_zz = f.signal_error();
  report.chernoff_invocations = f.chernoff_invocations();
  if (report.h_lower > report.h_upper) {
    report.status = RateStatus::infeasible;
    report.reason = "empty H range (H^L > H^U)";
    report.e11_upper = 1.0;
    return report;
  }

  double best_h = report.h_lower;
  double best = f(best_h);
  report.trace.emplace_back(best_h, best);
  double const width = report.h_upper - report.h_lower;
  if (width > 0.0) {
    int const n = inputs.minimizer.grid_points;
    report.trace.clear();
    report.trace.reserve(n);
    int best_i = 0;
    for (int i = 0; i < n; ++i) {
      double const h = i + 1 == n ? report.h_upper
                                  : report.h_lower + width * i / (n - 1);
      double const r = f(h);
      report.trace.emplace_back(h, r);
      if (i == 0 || r < best) {
        best = r;
        best_h = h;
        best_i = i;
      }
    }
    double const lo = report.trace[std::max(best_i - 1, 0)].first;
    double const hi = report.trace[std::min(best_i + 1, n - 1)].first;
    double const tol = inputs.minimizer.refine_tol *
                       std::max(report.h_upper, std::numeric_limits<double>::min());
    auto const [h_ref, r_ref] = golden_minimum(f, lo, hi, tol);
    if (r_ref < best) {
      best = r_ref;
      best_h = h_ref;
    }
  }

  KeyRateFunction::Point const at = f.evaluate(best_h);
  report.h_star = best_h;
  report.s11_lower = at.s11_lower;
  report.e11_upper = at.e11_upper.value_or(1.0);
  report.raw_min = best;
  report.rate = std::max(0.0, best);
  if (!(inputs.observables.at(Source::z, Source::z).counts > 0.0)) {
    report.rate = 0.0;
    report.status = RateStatus::no_key;
    report.reason = "no signal-basis counts";
  } else if (!(best > 0.0)) {
    report.status = RateStatus::no_key;
    report.reason = "min_H R(H) <= 0";
  }
  return report;
}

std::string to_record(KeyRateReport const& r) {
  std::ostringstream os;
  os.precision(17);
  os << "status = " << to_string(r.status) << '\n'
     << "reason = " << r.reason << '\n'
     << "R = " << r.rate << '\n'
     << "R_raw_min = " << r.raw_min << '\n'
     << "H_L = " << r.h_lower << '\n'
     << "H_U = " << r.h_upper << '\n'
     << "H_star = " << r.h_star << '\n'
     << "s11_L = " << r.s11_lower << '\n'
     << "e11_ph_U = " << r.e11_upper << '\n'
     << "S_zz = " << r.s_zz << '\n'
     << "E_zz = " << r.e_zz << '\n'
     << "chernoff_invocations = " << r.chernoff_invocations << '\n';
  return os.str();
}

}  // namespace mdiqkd
