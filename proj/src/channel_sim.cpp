#include "mdiqkd/channel_sim.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mdiqkd/errors.hpp"

namespace mdiqkd {

char basis_name(Basis b) {
  switch (b) {
    case Basis::X: return 'X';
    case Basis::Z: return 'Z';
    case Basis::mixed: return 'M';
  }
  return '?';
}

Basis basis_from_name(char c) {
  switch (c) {
    case 'X': return Basis::X;
    case 'Z': return Basis::Z;
    case 'M': return Basis::mixed;
    default: throw ConfigError(std::string("unknown basis '") + c + "'");
  }
}

void ChannelParams::validate() const {
  auto rate = [](double value, char const* name) {
    if (!(value >= 0.0 && value <= 1.0)) {
      throw ConfigError(std::string(name) + " must lie in [0, 1]");
    }
  };
  rate(e0, "e0");
  rate(e_d, "e_d");
  rate(p_d, "p_d");
  rate(eta_d, "eta_d");
  if (!(alpha_f >= 0.0) || !std::isfinite(alpha_f)) {
    throw ConfigError("alpha_f must be >= 0");
  }
  if (!(f >= 0.0) || !std::isfinite(f)) throw ConfigError("f must be >= 0");
  if (!(xi > 0.0 && xi < 1.0)) throw ConfigError("xi must lie in (0, 1)");
  if (!(n_total >= 1.0) || !std::isfinite(n_total)) {
    throw ConfigError("N_t must be >= 1");
  }
  if (!(distance_km >= 0.0) || !std::isfinite(distance_km)) {
    throw ConfigError("distance_km must be >= 0");
  }
}

double side_transmittance(ChannelParams const& params) {
  return params.eta_d *
         std::pow(10.0, -params.alpha_f * (params.distance_km / 2.0) / 10.0);
}

namespace {

double bessel_i0(double x) { return std::cyl_bessel_i(0.0, x); }

Gain clamp(Gain g) {
  g.q = std::clamp(g.q, 0.0, 1.0);
  g.eq = std::clamp(g.eq, 0.0, g.q);
  return g;
}

}  // namespace

Gain pair_yield(double mu_a, double mu_b, Basis basis,
                ChannelParams const& params) {
  if (!(mu_a >= 0.0 && mu_b >= 0.0)) {
    throw std::domain_error("pair_yield: intensities must be >= 0");
  }
  double const eta = side_transmittance(params);
  double const a = eta * mu_a;  // mean photon number reaching the relay
  double const b = eta * mu_b;
  double const keep = 1.0 - params.p_d;  // no dark click
  double const pd = params.p_d;

  switch (basis) {
    case Basis::X: {
      double const x = std::sqrt(a * b) / 2.0;
      double const y = keep * std::exp(-(a + b) / 4.0);
      double const i0_2x = bessel_i0(2.0 * x);
      double const q =
          2.0 * y * y * (1.0 + 2.0 * y * y - 4.0 * y * bessel_i0(x) + i0_2x);
      double const eq = params.e0 * q -
                        2.0 * (params.e0 - params.e_d) * y * y * (i0_2x - 1.0);
      return clamp({q, eq});
    }
    case Basis::Z: {
      double const both = keep * keep * std::exp(-(a + b) / 2.0);
      double const q_correct = 2.0 * both *
                               (1.0 - keep * std::exp(-a / 2.0)) *
                               (1.0 - keep * std::exp(-b / 2.0));
      double const q_wrong =
          2.0 * pd * both *
          (bessel_i0(std::sqrt(a * b)) - keep * std::exp(-(a + b) / 2.0));
      double const q = q_correct + q_wrong;
      double const eq = params.e_d * q_correct + (1.0 - params.e_d) * q_wrong;
      return clamp({q, eq});
    }
    case Basis::mixed: {
      // Alice rectilinear, Bob diagonal: Bob's light splits evenly onto the V
      // detectors, only the H detectors see interference.
      double const no_v = keep * std::exp(-b / 4.0);
      double const one_v = 2.0 * no_v * (1.0 - no_v);
      double const one_h =
          2.0 * keep * std::exp(-(2.0 * a + b) / 4.0) *
              bessel_i0(std::sqrt(a * b / 2.0)) -
          2.0 * keep * keep * std::exp(-(a + b / 2.0));
      double const q = one_v * one_h;
      return clamp({q, params.e0 * q});
    }
  }
  return {};
}

double PairObservables::signal_error_rate() const {
  auto const& zz = at(Source::z, Source::z);
  return zz.counts > 0.0 ? zz.errors / zz.counts : 0.0;
}

void PairObservables::validate() const {
  for (auto const& p : pairs) {
    std::string const name{source_name(p.l), source_name(p.r)};
    if (!(p.emitted > 0.0)) {
      throw ConfigError("observables " + name + ": L_lr must be > 0");
    }
    if (!(p.errors >= 0.0 && p.errors <= p.counts && p.counts <= p.emitted)) {
      throw ConfigError("observables " + name +
                        ": require 0 <= M_lr <= N_lr <= L_lr");
    }
  }
}

bool pair_used_by_analysis(Source l, Source r) {
  using enum Source;
  if (l == z || r == z) return l == z && r == z;
  if (l == v || r == v) return true;  // vv, vx, xv, vy, yv
  return l == r;                       // xx, yy
}

double simulation_intensity(SideSources const& s, Source source) {
  return source == Source::v ? s.delta1 / 2.0 : s.nominal_intensity(source);
}

PairObservables build_observables(SourceEnsemble const& ensemble,
                                  ChannelParams const& params) {
  ensemble.validate();
  params.validate();
  PairObservables obs;
  obs.n_total = params.n_total;
  for (Source l : kAllSources) {
    for (Source r : kAllSources) {
      PairRecord& rec = obs.at(l, r);
      rec.l = l;
      rec.r = r;
      rec.used = pair_used_by_analysis(l, r);
      rec.emitted = ensemble.alice.probability(l) *
                    ensemble.bob.probability(r) * params.n_total;
      double const mu_a = simulation_intensity(ensemble.alice, l);
      double const mu_b = simulation_intensity(ensemble.bob, r);
      bool const a_z = l == Source::z;
      bool const b_z = r == Source::z;
      Gain gain;
      if (a_z == b_z) {
        rec.basis = a_z ? Basis::Z : Basis::X;
        gain = pair_yield(mu_a, mu_b, rec.basis, params);
      } else {
        rec.basis = Basis::mixed;
        gain = a_z ? pair_yield(mu_a, mu_b, Basis::mixed, params)
                   : pair_yield(mu_b, mu_a, Basis::mixed, params);
      }
      // Default rounding mode is round-half-to-even.
      rec.counts = std::nearbyint(rec.emitted * gain.q);
      rec.errors = std::min(std::nearbyint(rec.emitted * gain.eq), rec.counts);
    }
  }
  return obs;
}

void write_observables_csv(std::ostream& out, PairObservables const& obs) {
  std::ostringstream os;
  os << "l,r,basis,L_lr,N_lr,M_lr\n";
  os.precision(17);
  for (auto const& p : obs.pairs) {
    os << source_name(p.l) << ',' << source_name(p.r) << ','
       << basis_name(p.basis) << ',' << p.emitted << ',';
    os.precision(0);
    os << std::fixed << p.counts << ',' << p.errors << '\n';
    os.unsetf(std::ios::floatfield);
    os.precision(17);
  }
  out << os.str();
}

PairObservables read_observables_csv(std::istream& in) {
  PairObservables obs;
  std::array<bool, 16> seen{};
  std::string line;
  int line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "l,r,basis,L_lr,N_lr,M_lr") {
        throw ConfigError("observables csv line " + std::to_string(line_no) +
                          ": unexpected header");
      }
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    auto fail = [&](std::string const& what) {
      throw ConfigError("observables csv line " + std::to_string(line_no) +
                        ": " + what);
    };
    if (cells.size() != 6) fail("expected 6 columns");
    if (cells[0].size() != 1 || cells[1].size() != 1 || cells[2].size() != 1) {
      fail("malformed source/basis column");
    }
    PairRecord rec;
    try {
      rec.l = source_from_name(cells[0][0]);
      rec.r = source_from_name(cells[1][0]);
      rec.basis = basis_from_name(cells[2][0]);
      rec.emitted = std::stod(cells[3]);
      rec.counts = std::stod(cells[4]);
      rec.errors = std::stod(cells[5]);
    } catch (std::exception const& e) {
      fail(e.what());
    }
    rec.used = pair_used_by_analysis(rec.l, rec.r);
    std::size_t const slot = 4 * index(rec.l) + index(rec.r);
    if (seen[slot]) fail("duplicate pair");
    seen[slot] = true;
    obs.pairs[slot] = rec;
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool s) { return s; })) {
    throw ConfigError("observables csv: all 16 pairs are required");
  }
  obs.n_total = 0.0;
  for (auto const& p : obs.pairs) obs.n_total += p.emitted;
  obs.validate();
  return obs;
}

SinglePhotonTruth single_photon_truth(ChannelParams const& params) {
  // Coefficient of mu_a mu_b in e^{mu_a + mu_b} Q_X(mu_a, mu_b), expanding
  // each term of the X-basis gain as e^{k (mu_a + mu_b)} times a series in
  // mu_a mu_b.
  double const eta = side_transmittance(params);
  double const c = 1.0 - params.p_d;
  auto sq = [](double v) { return v * v; };
  double const yield =
      2.0 * c * c * sq(1.0 - eta / 2.0) + 4.0 * std::pow(c, 4) * sq(1.0 - eta) -
      8.0 * std::pow(c, 3) * (sq(1.0 - 0.75 * eta) + eta * eta / 16.0) +
      2.0 * c * c * (sq(1.0 - eta / 2.0) + eta * eta / 4.0);
  double const error_yield =
      params.e0 * yield - 2.0 * (params.e0 - params.e_d) * c * c * eta * eta / 4.0;
  return {yield, error_yield, yield > 0.0 ? error_yield / yield : 0.0};
}

double vacuum_component_rate(double mu_a, double mu_b,
                             ChannelParams const& params) {
  double const q_a0 = pair_yield(mu_a, 0.0, Basis::X, params).q;
  double const q_0b = pair_yield(0.0, mu_b, Basis::X, params).q;
  double const q_00 = pair_yield(0.0, 0.0, Basis::X, params).q;
  return std::exp(-mu_b) * q_a0 + std::exp(-mu_a) * q_0b -
         std::exp(-mu_a - mu_b) * q_00;
}

}  // namespace mdiqkd
