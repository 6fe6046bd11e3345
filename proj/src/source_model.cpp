#include "mdiqkd/source_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mdiqkd/errors.hpp"

namespace mdiqkd {

char source_name(Source s) { return "vxyz"[index(s)]; }

Source source_from_name(char c) {
  switch (c) {
    case 'v': return Source::v;
    case 'x': return Source::x;
    case 'y': return Source::y;
    case 'z': return Source::z;
    default: throw ConfigError(std::string("unknown source '") + c + "'");
  }
}

double SideSources::nominal_intensity(Source s) const {
  switch (s) {
    case Source::v: return 0.0;
    case Source::x: return mu_x;
    case Source::y: return mu_y;
    case Source::z: return mu_z;
  }
  return 0.0;
}

double SideSources::probability(Source s) const {
  switch (s) {
    case Source::v: return p_v;
    case Source::x: return p_x;
    case Source::y: return p_y;
    case Source::z: return p_z;
  }
  return 0.0;
}

Interval SideSources::intensity_range(Source s) const {
  if (s == Source::v) return {0.0, delta1};
  double const mu = nominal_intensity(s);
  return {mu * (1.0 - delta2), mu * (1.0 + delta2)};
}

void SideSources::validate(std::string const& side_label) const {
  auto fail = [&](std::string const& what) {
    throw ConfigError(side_label.empty() ? what : side_label + ": " + what);
  };
  for (double value : {mu_x, mu_y, mu_z, delta1, delta2, p_v, p_x, p_y, p_z}) {
    if (!std::isfinite(value)) fail("source parameters must be finite");
  }
  if (!(mu_x > 0.0)) fail("mu_x must be > 0");
  if (!(mu_x < mu_y)) fail("mu_x must be < mu_y");
  if (!(mu_z > 0.0)) fail("mu_z must be > 0");
  if (delta1 < 0.0) fail("delta1 must be >= 0");
  if (delta2 < 0.0 || delta2 >= 1.0) fail("delta2 must lie in [0, 1)");
  if (!(p_v > 0.0 && p_x > 0.0 && p_y > 0.0 && p_z > 0.0)) {
    fail("source probabilities must all be > 0");
  }
  double const total = p_v + p_x + p_y + p_z;
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "source probabilities must sum to 1 (got " << total << ")";
    fail(os.str());
  }
}

void SourceEnsemble::validate() const {
  alice.validate("alice");
  bob.validate("bob");
}

double poisson_coeff(double mu, int k) {
  if (!(mu >= 0.0) || k < 0) {
    throw std::domain_error("poisson_coeff: requires mu >= 0 and k >= 0");
  }
  if (mu == 0.0) return k == 0 ? 1.0 : 0.0;
  if (k <= 20) {
    double term = std::exp(-mu);
    for (int j = 1; j <= k; ++j) term *= mu / j;
    return term;
  }
  return std::exp(-mu + k * std::log(mu) - std::lgamma(k + 1.0));
}

Interval poisson_coeff_range(Interval intensity, int k) {
  double lo = poisson_coeff(intensity.lower, k);
  double hi = poisson_coeff(intensity.upper, k);
  Interval out{std::min(lo, hi), std::max(lo, hi)};
  // e^{-mu} mu^k / k! peaks at mu = k.
  if (k >= 1 && intensity.lower < k && k < intensity.upper) {
    out.upper = std::max(out.upper, poisson_coeff(static_cast<double>(k), k));
  }
  return out;
}

PhotonCoeffBounds::PhotonCoeffBounds(SourceEnsemble const& ensemble) {
  for (Side side : {Side::alice, Side::bob}) {
    auto const& sources = ensemble.side(side);
    for (Source s : kAllSources) {
      Interval const range = sources.intensity_range(s);
      ranges_[index(side)][index(s)] = range;
      for (int k = 0; k < kTabulated; ++k) {
        table_[index(side)][index(s)][k] = poisson_coeff_range(range, k);
      }
    }
  }
}

Interval PhotonCoeffBounds::coeff(Side side, Source source, int k) const {
  if (k < 0) throw std::domain_error("PhotonCoeffBounds: k must be >= 0");
  if (k < kTabulated) return table_[index(side)][index(source)][k];
  return poisson_coeff_range(ranges_[index(side)][index(source)], k);
}

PhotonCoeffBounds coeff_bounds(SourceEnsemble const& ensemble) {
  ensemble.validate();
  return PhotonCoeffBounds(ensemble);
}

bool ConditionReport::passed() const {
  return std::all_of(conditions.begin(), conditions.end(),
                     [](ConditionResult const& c) { return c.passed; });
}

std::string ConditionReport::failure_summary() const {
  std::ostringstream os;
  for (auto const& c : conditions) {
    if (c.passed) continue;
    if (os.tellp() > 0) os << "; ";
    os << "decoy condition '" << c.name << "' violated";
    if (c.first_violation_k) os << " at k = " << *c.first_violation_k;
    if (!c.detail.empty()) os << ": " << c.detail;
  }
  return os.str();
}

namespace {

std::string side_suffix(Side side) {
  return side == Side::alice ? "_alice" : "_bob";
}

ConditionResult check_ratio_ordering(PhotonCoeffBounds const& b, Side side,
                                     int k_max) {
  ConditionResult result;
  result.name = "ratio_ordering" + side_suffix(side);
  auto ratio = [&](int k) {
    return b.lower(side, Source::y, k) / b.upper(side, Source::x, k);
  };
  double const r1 = ratio(1);
  double const r2 = ratio(2);
  if (!(r2 >= r1)) {
    result.passed = false;
    result.first_violation_k = 2;
    result.detail = "a_2^{y,L}/a_2^{x,U} < a_1^{y,L}/a_1^{x,U}";
    return result;
  }
  for (int k = 3; k <= k_max; ++k) {
    if (!(ratio(k) >= r2)) {
      result.passed = false;
      result.first_violation_k = k;
      result.detail = "a_k^{y,L}/a_k^{x,U} < a_2^{y,L}/a_2^{x,U}";
      return result;
    }
  }
  return result;
}

ConditionResult check_vacuum_dominance(PhotonCoeffBounds const& b, Side side,
                                       int k_max) {
  ConditionResult result;
  result.name = "vacuum_dominance" + side_suffix(side);
  double const vacuum_max = b.intensity(side, Source::v).upper;
  if (vacuum_max == 0.0) {
    result.by_convention = true;
    result.detail = "exact vacuum source";
    return result;
  }
  // a_k^l a_1^v - a_1^l a_k^v = e^{-mu_l-mu_v} mu_l mu_v (mu_l^{k-1} -
  // mu_v^{k-1}) / k!, smallest at the lowest mu_l and highest mu_v.
  for (Source l : {Source::x, Source::y}) {
    double const mu_l = b.intensity(side, l).lower;
    for (int k = 2; k <= k_max; ++k) {
      double const lhs = poisson_coeff(mu_l, k) * poisson_coeff(vacuum_max, 1);
      double const rhs = poisson_coeff(mu_l, 1) * poisson_coeff(vacuum_max, k);
      if (!(lhs >= rhs)) {
        result.passed = false;
        result.first_violation_k = k;
        result.detail = std::string("source ") + source_name(l) +
                        " may be weaker than the vacuum source";
        return result;
      }
    }
  }
  return result;
}

ConditionResult check_disjoint(PhotonCoeffBounds const& b, Side side) {
  ConditionResult result;
  result.name = "disjoint_intensities" + side_suffix(side);
  if (!(b.intensity(side, Source::x).upper <
        b.intensity(side, Source::y).lower)) {
    result.passed = false;
    result.detail = "intensity ranges of x and y overlap";
  }
  return result;
}

}  // namespace

ConditionReport check_decoy_conditions(PhotonCoeffBounds const& bounds,
                                       int k_max) {
  if (k_max < 2) throw std::domain_error("check_decoy_conditions: k_max < 2");
  ConditionReport report;
  for (Side side : {Side::alice, Side::bob}) {
    report.conditions.push_back(check_disjoint(bounds, side));
    report.conditions.push_back(check_ratio_ordering(bounds, side, k_max));
    report.conditions.push_back(check_vacuum_dominance(bounds, side, k_max));
  }
  return report;
}

}  // namespace mdiqkd
