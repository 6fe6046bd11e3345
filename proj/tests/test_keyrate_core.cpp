#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>
#include <fstream>

#include "oracle_inputs.hpp"
#include "doctest.h"
#include "mdiqkd/errors.hpp"
#include "mdiqkd/keyrate_core.hpp"

using namespace mdiqkd;
using boost::multiprecision::cpp_dec_float_50;

namespace {

SourceEnsemble default_sources(double delta1 = 0.0, double delta2 = 0.0) {
  SideSources s;
  s.delta1 = delta1;
  s.delta2 = delta2;
  return SourceEnsemble::symmetric(s);
}

ChannelParams at_distance(double km) {
  ChannelParams p;
  p.distance_km = km;
  return p;
}

AnalysisInputs inputs_at(double km, double delta1 = 0.0, double delta2 = 0.0,
                         StatisticsMode mode = StatisticsMode::finite) {
  AnalysisInputs in = make_analysis_inputs(default_sources(delta1, delta2),
                                           at_distance(km));
  in.statistics = mode;
  return in;
}

}  // namespace

TEST_CASE("sigma factors") {
  CHECK(sigma_factors(coeff_bounds(default_sources())).x_sum() == 0.0);
  CHECK(sigma_factors(coeff_bounds(default_sources())).y_sum() == 0.0);

  SigmaFactors const s = sigma_factors(coeff_bounds(default_sources(1e-6)));
  cpp_dec_float_50 const d1("1e-6"), mu("0.1");
  cpp_dec_float_50 const exact =
      exp(-mu) * (d1 * exp(-d1)) / (exp(-d1) * (mu * exp(-mu)));
  double const oracle = static_cast<double>(exact);
  CHECK(std::abs(s.alice_x - oracle) <= 1e-12 * oracle);
  CHECK(s.alice_x == s.bob_x);

  double prev = -1.0;
  for (double d1v : {0.0, 1e-7, 1e-6, 1e-4, 1e-2}) {
    double const v = sigma_factors(coeff_bounds(default_sources(d1v))).alice_y;
    CHECK(v >= prev);
    prev = v;
  }

  SideSources bright;
  bright.delta1 = 0.06;
  CHECK_THROWS_AS(
      sigma_factors(coeff_bounds(SourceEnsemble::symmetric(bright))),
      InfeasibleError);
}

TEST_CASE("expectation envelopes") {
  AnalysisInputs in = inputs_at(10.0);
  ExpectationEnvelope const env = expectation_envelopes(in);

  // True model rates lie inside the envelopes.
  SideSources const s;
  for (auto const& p : in.observables.pairs) {
    if (!p.used) continue;
    double const truth = pair_yield(simulation_intensity(s, p.l),
                                    simulation_intensity(s, p.r), p.basis,
                                    at_distance(10.0))
                             .q;
    Envelope const e = env.rate(p.l, p.r);
    INFO("pair ", source_name(p.l), source_name(p.r));
    CHECK(e.lower <= truth);
    CHECK(truth <= e.upper);
  }
  CHECK(env.joint.size() == 7);

  AnalysisInputs scaled = in;
  for (auto& p : scaled.observables.pairs) {
    p.emitted *= 100;
    p.counts *= 100;
    p.errors *= 100;
  }
  ExpectationEnvelope const big = expectation_envelopes(scaled);
  for (auto const& p : in.observables.pairs) {
    if (!p.used || p.counts == 0) continue;
    Envelope const a = env.rate(p.l, p.r);
    Envelope const b = big.rate(p.l, p.r);
    CHECK((b.upper - b.lower) < (a.upper - a.lower));
  }
}

TEST_CASE("S+, S-, H range") {
  AnalysisInputs in = inputs_at(10.0, 1e-6, 0.01);
  ExpectationEnvelope const env = expectation_envelopes(in);
  auto const& b = in.bounds;
  double const sp = s_plus_lower(env, b);
  double const sm = s_minus_upper(env, b);

  // Plug-in values at the observed rates.
  using enum Source;
  auto const& o = in.observables;
  SigmaFactors const sig = sigma_factors(b);
  double const k = b.upper(Side::alice, x, 1) * b.upper(Side::bob, x, 2) /
                   (1 - sig.y_sum());
  double const c1 = b.lower(Side::alice, y, 1) * b.lower(Side::bob, y, 2);
  double const c2 = k * b.lower(Side::alice, y, 0) / b.upper(Side::alice, v, 0);
  double const c3 = k * b.lower(Side::bob, y, 0) / b.upper(Side::bob, v, 0);
  double const plug_plus = c1 * o.at(x, x).counting_rate() +
                           c2 * o.at(v, y).counting_rate() +
                           c3 * o.at(y, v).counting_rate();
  double const vv_w = b.upper(Side::alice, y, 0) * b.upper(Side::bob, y, 0) /
                      (b.lower(Side::alice, v, 0) * b.lower(Side::bob, v, 0));
  double const plug_minus =
      k * (o.at(y, y).counting_rate() + vv_w * o.at(v, v).counting_rate());
  CHECK(sp <= plug_plus);
  CHECK(sm >= plug_minus);

  // Joint bounding beats bounding each term separately.
  ChernoffConfig const cfg = in.chernoff;
  auto lo = [&](PairRecord const& p) { return chernoff_lower(p.counts, cfg) / p.emitted; };
  auto hi = [&](PairRecord const& p) { return chernoff_upper(p.counts, cfg) / p.emitted; };
  double const naive_plus = c1 * lo(o.at(x, x)) + c2 * lo(o.at(v, y)) + c3 * lo(o.at(y, v));
  double const naive_minus = k * (hi(o.at(y, y)) + vv_w * hi(o.at(v, v)));
  CHECK(sp > naive_plus);
  CHECK(sm < naive_minus);

  Interval const h = h_range(env, b);
  CHECK(h.lower <= h.upper);
  CHECK(h.upper == doctest::Approx(2 * env.error_rate_xx_upper));

  AnalysisInputs quiet = in;
  for (auto& p : quiet.observables.pairs) p.errors = 0;
  CHECK(h_range(expectation_envelopes(quiet), quiet.bounds).lower == 0.0);

  // Infinite-data collapse equals the plug-in values.
  AnalysisInputs asym = inputs_at(10.0, 1e-6, 0.01, StatisticsMode::asymptotic);
  ExpectationEnvelope const ae = expectation_envelopes(asym);
  CHECK(s_plus_lower(ae, asym.bounds) == doctest::Approx(plug_plus).epsilon(1e-13));
  CHECK(s_minus_upper(ae, asym.bounds) == doctest::Approx(plug_minus).epsilon(1e-13));
}

TEST_CASE("s11 and e11 bounds") {
  auto const b = coeff_bounds(default_sources());
  double const den = yield_denominator(b);
  CHECK(den > 0.0);
  CHECK(s11_lower(0.0, 1e-3, 1e-3, b) == 0.0);
  double const s0 = s11_lower(0.0, 5e-3, 1e-3, b);
  double const s1 = s11_lower(1e-5, 5e-3, 1e-3, b);
  double const s2 = s11_lower(2e-5, 5e-3, 1e-3, b);
  CHECK(s1 < s0);
  CHECK(s0 - s1 == doctest::Approx(s1 - s2).epsilon(1e-9));
  CHECK(s11_lower(1.0, 5e-3, 1e-3, b) == 0.0);

  CHECK(*e11_upper(2e-4, 1e-4, 1e-3, b) == 0.0);
  CHECK_FALSE(e11_upper(0.0, 1e-4, 0.0, b).has_value());
  CHECK(*e11_upper(0.0, 1.0, 1e-9, b) == 1.0);
  double const e_mid = *e11_upper(0.0, 1e-4, 0.1, b);
  CHECK(e_mid > 0.0);
  CHECK(e_mid < 1.0);
  CHECK(*e11_upper(1e-5, 1e-4, 0.1, b) < e_mid);

  SideSources close;
  close.mu_x = 0.3;
  close.mu_y = 0.31;
  close.delta2 = 0.2;
  auto const cb = coeff_bounds(SourceEnsemble::symmetric(close));
  CHECK(yield_denominator(cb) <= 0.0);
  CHECK_THROWS_AS(s11_lower(0.0, 1.0, 0.0, cb), ConfigError);
}

TEST_CASE("binary entropy") {
  CHECK(binary_entropy(0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  cpp_dec_float_50 const x("0.11");
  cpp_dec_float_50 const h =
      (-x * log(x) - (1 - x) * log(1 - x)) / log(cpp_dec_float_50(2));
  CHECK(std::abs(binary_entropy(0.11) - static_cast<double>(h)) <= 1e-12);
  CHECK_THROWS_AS(binary_entropy(-0.1), std::domain_error);
  CHECK_THROWS_AS(binary_entropy(1.5), std::domain_error);
}

TEST_CASE("key rate at a given H") {
  AnalysisInputs in = inputs_at(10.0, 1e-6);
  KeyRateFunction const f(in);
  // Far beyond H^U the yield bound clamps to 0 and only the EC term is left.
  KeyRateFunction::Point const p = f.evaluate(1.0);
  CHECK(p.s11_lower == 0.0);
  CHECK_FALSE(p.e11_upper.has_value());
  double const pz2 = 0.7 * 0.7;
  CHECK(p.rate == doctest::Approx(-pz2 * 1.16 * f.signal_rate() *
                                  binary_entropy(f.signal_error())));
  CHECK(key_rate_at(f.h_bounds().lower, in) == doctest::Approx(f(f.h_bounds().lower)));
}

TEST_CASE("secure key rate regression at 10 km") {
  KeyRateReport const r = secure_key_rate(inputs_at(10.0, 1e-6));
  CHECK(r.status == RateStatus::ok);
  CHECK(r.rate > 0.0);
  CHECK(r.rate == doctest::Approx(7.2440713862394291e-06).epsilon(1e-9));
  CHECK(r.h_lower <= r.h_star);
  CHECK(r.h_star <= r.h_upper);
  CHECK(r.e11_upper <= 0.5);
  CHECK(r.chernoff_invocations > 0);
  CHECK(r.trace.size() == 1001);
  double grid_min = r.trace.front().second;
  for (auto const& [h, v] : r.trace) grid_min = std::min(grid_min, v);
  CHECK(r.raw_min <= grid_min);
  CHECK(r.raw_min >= grid_min - 1e-12);

  std::string const rec = to_record(r);
  CHECK(rec.find("R = ") != std::string::npos);
  CHECK(rec.find("chernoff_invocations = ") != std::string::npos);

  KeyRateReport const asym =
      secure_key_rate(inputs_at(10.0, 0.0, 0.0, StatisticsMode::asymptotic));
  CHECK(asym.chernoff_invocations == 0);
  CHECK(asym.rate > r.rate);
}

TEST_CASE("secure key rate status paths") {
  AnalysisInputs in = inputs_at(10.0);
  in.minimizer.grid_points = 1;
  CHECK(secure_key_rate(in).status == RateStatus::invalid_input);

  SideSources swapped;
  swapped.mu_x = 0.4;
  swapped.mu_y = 0.1;
  AnalysisInputs bad = inputs_at(10.0);
  bad.ensemble = SourceEnsemble::symmetric(swapped);
  bad.bounds = PhotonCoeffBounds(bad.ensemble);
  CHECK(secure_key_rate(bad).status == RateStatus::invalid_input);

  // Valid sources whose intensity ranges are too wide for the decoy method.
  SideSources close;
  close.mu_x = 0.3;
  close.mu_y = 0.31;
  close.delta2 = 0.2;
  bad.ensemble = SourceEnsemble::symmetric(close);
  bad.bounds = PhotonCoeffBounds(bad.ensemble);
  KeyRateReport const r = secure_key_rate(bad);
  CHECK(r.status == RateStatus::decoy_conditions);
  CHECK(r.rate == 0.0);
  CHECK(r.reason.find('\n') == std::string::npos);

  KeyRateReport const far = secure_key_rate(inputs_at(300.0, 1e-6));
  CHECK(far.status == RateStatus::no_key);
  CHECK(far.rate == 0.0);

  AnalysisInputs no_signal = inputs_at(10.0);
  no_signal.observables.at(Source::z, Source::z).counts = 0;
  no_signal.observables.at(Source::z, Source::z).errors = 0;
  CHECK(secure_key_rate(no_signal).status == RateStatus::no_key);

  // Degenerate H range: a single evaluation.
  AnalysisInputs flat = inputs_at(10.0, 0.0, 0.0, StatisticsMode::asymptotic);
  for (auto& p : flat.observables.pairs) {
    if (p.l == Source::v || p.r == Source::v) p.errors = 0;
  }
  flat.observables.at(Source::x, Source::x).errors = 0;
  KeyRateReport const one = secure_key_rate(flat);
  CHECK(one.h_lower == one.h_upper);
  CHECK(one.trace.size() == 1);
}

TEST_CASE("monotone degradation") {
  for (double km : {0.0, 20.0, 40.0}) {
    double prev = 1.0;
    for (double d2 : {0.0, 0.01, 0.03, 0.05}) {
      double const r = secure_key_rate(inputs_at(km, 1e-6, d2)).rate;
      CHECK(r <= prev);
      prev = r;
    }
    prev = 1.0;
    for (double d1 : {0.0, 1e-6, 1e-4, 1e-3}) {
      double const r = secure_key_rate(inputs_at(km, d1, 0.0)).rate;
      CHECK(r <= prev);
      prev = r;
    }
    prev = 0.0;
    for (double nt : {1e10, 1e11, 1e12, 1e13}) {
      ChannelParams p = at_distance(km);
      p.n_total = nt;
      double const r =
          secure_key_rate(make_analysis_inputs(default_sources(1e-6), p)).rate;
      CHECK(r >= prev);
      prev = r;
    }
  }
}

TEST_CASE("asymptotic collapse matches the count-form oracle") {
  for (double km : {0.0, 10.0, 25.0, 50.0}) {
    AnalysisInputs const in = inputs_at(km, 0.0, 0.0, StatisticsMode::asymptotic);
    KeyRateReport const r = secure_key_rate(in);
    oracle::Result const o = oracle::asymptotic_rate(
        oracle::counts_of(in.observables), oracle::setting_of(SideSources{}, 1e11, 1.16));
    INFO("L = ", km);
    CHECK(r.h_lower == doctest::Approx(o.h_lower).epsilon(1e-12));
    CHECK(r.h_upper == doctest::Approx(o.h_upper).epsilon(1e-12));
    CHECK(std::abs(r.raw_min - o.raw_min) <= 1e-9 * std::abs(o.raw_min));
  }
}

TEST_CASE("soundness on honest data") {
  for (double km : {10.0, 50.0}) {
    AnalysisInputs const in = inputs_at(km, 1e-6);
    KeyRateFunction const f(in);
    ChannelParams const p = at_distance(km);
    SinglePhotonTruth const truth = single_photon_truth(p);
    SideSources const s;
    double const h_true = vacuum_component_rate(s.mu_x, s.mu_x, p);
    INFO("L = ", km);
    CHECK(f.h_bounds().contains(h_true));
    KeyRateFunction::Point const at = f.evaluate(h_true);
    CHECK(at.s11_lower <= truth.yield);
    REQUIRE(at.e11_upper.has_value());
    CHECK(*at.e11_upper >= truth.phase_error);
  }
}
