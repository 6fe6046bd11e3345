#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace mdiqkd {

// The four sources each party draws from: vacuum and two decoys in the X
// basis, signal in the Z basis.
enum class Source : std::size_t { v = 0, x = 1, y = 2, z = 3 };
enum class Side : std::size_t { alice = 0, bob = 1 };

inline constexpr std::array<Source, 4> kAllSources{Source::v, Source::x,
                                                   Source::y, Source::z};

constexpr std::size_t index(Source s) { return static_cast<std::size_t>(s); }
constexpr std::size_t index(Side s) { return static_cast<std::size_t>(s); }
char source_name(Source s);
Source source_from_name(char c);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  double width() const { return upper - lower; }
  bool contains(double value, double slack = 0.0) const {
    return value >= lower - slack && value <= upper + slack;
  }
};

// One party's weak coherent sources. Each emitted pulse of source l = x, y, z
// has intensity mu_l (1 + d) with |d| <= delta2; the vacuum source emits an
// unknown intensity in [0, delta1].
struct SideSources {
  double mu_x = 0.1;
  double mu_y = 0.4;
  double mu_z = 0.5;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double p_v = 0.1;
  double p_x = 0.1;
  double p_y = 0.1;
  double p_z = 0.7;

  double nominal_intensity(Source s) const;
  double probability(Source s) const;
  // Range of intensities a pulse of source s may carry.
  Interval intensity_range(Source s) const;
  // Throws ConfigError naming the first violated invariant.
  void validate(std::string const& side_label = "") const;
};

struct SourceEnsemble {
  SideSources alice;
  SideSources bob;

  SideSources const& side(Side s) const {
    return s == Side::alice ? alice : bob;
  }
  void validate() const;

  static SourceEnsemble symmetric(SideSources const& s) { return {s, s}; }
};

// e^{-mu} mu^k / k!. Throws std::domain_error for mu < 0 or k < 0.
double poisson_coeff(double mu, int k);

// Min and max of poisson_coeff(., k) over the intensity range [lo, hi].
Interval poisson_coeff_range(Interval intensity, int k);

// Worst-case photon-number coefficient intervals [a_k^L, a_k^U] for every
// source and side. k = 0, 1, 2 are tabulated; higher k are computed from the
// stored intensity ranges on demand.
class PhotonCoeffBounds {
 public:
  static constexpr int kTabulated = 3;

  PhotonCoeffBounds() = default;
  explicit PhotonCoeffBounds(SourceEnsemble const& ensemble);

  Interval coeff(Side side, Source source, int k) const;
  double lower(Side side, Source source, int k) const {
    return coeff(side, source, k).lower;
  }
  double upper(Side side, Source source, int k) const {
    return coeff(side, source, k).upper;
  }
  Interval intensity(Side side, Source source) const {
    return ranges_[index(side)][index(source)];
  }

 private:
  std::array<std::array<Interval, 4>, 2> ranges_{};
  std::array<std::array<std::array<Interval, kTabulated>, 4>, 2> table_{};
};

PhotonCoeffBounds coeff_bounds(SourceEnsemble const& ensemble);

struct ConditionResult {
  std::string name;
  bool passed = true;
  bool by_convention = false;
  std::optional<int> first_violation_k;
  std::string detail;
};

struct ConditionReport {
  std::vector<ConditionResult> conditions;

  bool passed() const;
  // Multi-line human readable summary of failing conditions.
  std::string failure_summary() const;
};

// Validates the decoy-state preconditions for k = 2..k_max:
//   * ratio ordering a_k^{y,L}/a_k^{x,U} >= a_2^{y,L}/a_2^{x,U}
//     >= a_1^{y,L}/a_1^{x,U} on both sides,
//   * per-pulse vacuum dominance a_k^l a_1^v >= a_1^l a_k^v (l = x, y) at the
//     worst jointly realizable intensity pair,
//   * disjoint x and y intensity ranges.
// For Poisson sources the ratio a_k^y/a_k^x grows geometrically in k once the
// ranges are disjoint, so checking up to k_max certifies the tail.
ConditionReport check_decoy_conditions(PhotonCoeffBounds const& bounds,
                                       int k_max = 20);

}  // namespace mdiqkd
