#pragma once

// Straight-line evaluation of the asymptotic four-intensity key rate for
// exact sources (no intensity error, exact vacuum), written in count form and
// independent of the library's analysis code. Used as a test oracle.

#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>

namespace oracle {

struct Counts {
  double n_vv, n_vx, n_xv, n_vy, n_yv, n_xx, n_yy, n_zz;
  double m_vv, m_vx, m_xv, m_xx, m_zz;
};

struct Setting {
  double mu_x, mu_y, mu_z;
  double p_v, p_x, p_y, p_z;
  double n_total;
  double f;
};

inline double poisson(double mu, int k) {
  return std::exp(-mu) * std::pow(mu, k) / std::tgamma(k + 1.0);
}

inline double entropy(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return -x * std::log2(x) - (1 - x) * std::log2(1 - x);
}

struct Result {
  double rate;      // max(0, min_H R(H))
  double raw_min;   // min_H R(H)
  double h_lower;
  double h_upper;
};

inline Result asymptotic_rate(Counts const& c, Setting const& s) {
  double const nt = s.n_total;
  double const a1x = poisson(s.mu_x, 1), a2x = poisson(s.mu_x, 2);
  double const a1y = poisson(s.mu_y, 1), a2y = poisson(s.mu_y, 2);
  double const a0x = poisson(s.mu_x, 0), a0y = poisson(s.mu_y, 0);
  double const a1z = poisson(s.mu_z, 1);
  // Exact vacuum source: a_0^v = 1, a_1^v = 0, so every sigma factor is 0.

  // Multi-photon error counts of xx, upper bound (inclusion-exclusion).
  double const m_tilde_xx =
      c.m_xx - s.p_x * a0x / s.p_v * c.m_vx - s.p_x * a0x / s.p_v * c.m_xv +
      s.p_x * s.p_x * a0x * a0x / (s.p_v * s.p_v) * c.m_vv;
  // Multi-photon counts of yy, upper bound.
  double const n_tilde_yy =
      c.n_yy - s.p_y * a0y / s.p_v * c.n_vy - s.p_y * a0y / s.p_v * c.n_yv +
      s.p_y * s.p_y * a0y * a0y / (s.p_v * s.p_v) * c.n_vv;

  double const scale = s.p_x * s.p_x * nt;
  double const h_lower = std::max(0.0, 2.0 * (c.m_xx - m_tilde_xx) / scale);
  double const h_upper = 2.0 * c.m_xx / scale;
  double const den = a1x * a1y * (a1x * a2y - a2x * a1y);

  auto rate_at = [&](double h) {
    // Vacuum-side counts of xx are 2 m_xx^o = H p_x^2 N_t; the rest are
    // multi-photon-pair counts.
    double const n_tilde_xx = c.n_xx - h * scale;
    double const d11 = (a1y * a2y / (s.p_x * s.p_x) * n_tilde_xx -
                        a1x * a2x / (s.p_y * s.p_y) * n_tilde_yy) /
                       den;
    double const s11 = std::max(0.0, d11 / nt);
    double privacy = 0.0;
    if (s11 > 0.0) {
      double e = (c.m_xx - h * scale / 2.0) / (scale * a1x * a1x * s11);
      e = std::min(1.0, std::max(0.0, e));
      if (e <= 0.5) privacy = a1z * a1z * s11 * (1.0 - entropy(e));
    }
    double const s_zz = c.n_zz / (s.p_z * s.p_z * nt);
    double const e_zz = c.n_zz > 0 ? c.m_zz / c.n_zz : 0.0;
    return s.p_z * s.p_z * (privacy - s.f * s_zz * entropy(e_zz));
  };

  double best = rate_at(h_lower);
  if (h_upper > h_lower) {
    constexpr int kCoarse = 4001;
    int best_i = 0;
    for (int i = 0; i < kCoarse; ++i) {
      double const h = h_lower + (h_upper - h_lower) * i / (kCoarse - 1);
      double const r = rate_at(h);
      if (r < best) {
        best = r;
        best_i = i;
      }
    }
    double const step = (h_upper - h_lower) / (kCoarse - 1);
    double const lo = std::max(h_lower, h_lower + (best_i - 1) * step);
    double const hi = std::min(h_upper, h_lower + (best_i + 1) * step);
    auto const refined = boost::math::tools::brent_find_minima(
        rate_at, lo, hi, std::numeric_limits<double>::digits / 2 + 4);
    best = std::min(best, refined.second);
  }
  return {std::max(0.0, best), best, h_lower, h_upper};
}

}  // namespace oracle
