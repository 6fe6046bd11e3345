#include "mdiqkd/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "mdiqkd/errors.hpp"

namespace mdiqkd {

SourceEnsemble make_ensemble(ProtocolPoint const& pt, double delta1,
                             double delta2) {
  SideSources s;
  s.mu_x = pt.mu_x;
  s.mu_y = pt.mu_y;
  s.mu_z = pt.mu_z;
  s.delta1 = delta1;
  s.delta2 = delta2;
  s.p_x = pt.p_x;
  s.p_y = pt.p_y;
  s.p_z = pt.p_z;
  s.p_v = pt.p_v();
  return SourceEnsemble::symmetric(s);
}

bool in_box(ProtocolPoint const& pt) {
  auto open_unit = [](double p) { return p > 0.0 && p < 1.0; };
  return pt.mu_x >= 1e-4 && pt.mu_x < pt.mu_y && pt.mu_y <= 1.0 &&
         pt.mu_z >= 1e-3 && pt.mu_z <= 1.0 && open_unit(pt.p_x) &&
         open_unit(pt.p_y) && open_unit(pt.p_z) && pt.p_v() > 0.0;
}

namespace {

std::optional<AnalysisInputs> inputs_at(OptimizationProblem const& problem,
                                        ProtocolPoint const& pt) {
  if (!in_box(pt)) return std::nullopt;
  try {
    AnalysisInputs inputs = make_analysis_inputs(
        make_ensemble(pt, problem.delta1, problem.delta2), problem.channel);
    inputs.statistics = problem.statistics;
    inputs.minimizer = problem.minimizer;
    return inputs;
  } catch (ConfigError const&) {
    return std::nullopt;
  }
}

// Continuous extension of R(H) below the key threshold: 1 - h(e) continues
// as 1 - 2e past e = 1/2 and a negative unclamped s11 bound is kept, so the
// search can climb out of the zero-rate region.
double extended_rate(KeyRateFunction const& f, PhotonCoeffBounds const& b,
                     AnalysisInputs const& in, double h) {
  using enum Source;
  double const s = (f.s_plus() - f.s_minus() -
                    b.lower(Side::alice, y, 1) * b.lower(Side::bob, y, 2) * h) /
                   yield_denominator(b);
  double privacy = s;
  if (s > 0.0) {
    double const e = *e11_upper(h, f.txx_upper(), s, b);
    privacy *= e <= 0.5 ? 1.0 - binary_entropy(e) : 1.0 - 2.0 * e;
  }
  double const p_zz = in.ensemble.alice.p_z * in.ensemble.bob.p_z;
  return p_zz * (b.lower(Side::alice, z, 1) * b.lower(Side::bob, z, 1) * privacy -
                 in.ec_inefficiency * f.signal_rate() *
                     binary_entropy(f.signal_error()));
}

constexpr double kInvalidScore = -1.0;

}  // namespace

double evaluate(OptimizationProblem const& problem, ProtocolPoint const& pt) {
  auto const inputs = inputs_at(problem, pt);
  return inputs ? secure_key_rate(*inputs).rate : 0.0;
}

Evaluation search_evaluate(OptimizationProblem const& problem,
                           ProtocolPoint const& pt) {
  Evaluation out{pt, 0.0, kInvalidScore};
  auto const inputs = inputs_at(problem, pt);
  if (!inputs) return out;
  KeyRateReport const report = secure_key_rate(*inputs);
  out.rate = report.rate;
  if (report.rate > 0.0) {
    out.score = report.rate;
    return out;
  }
  if (report.status != RateStatus::ok && report.status != RateStatus::no_key) {
    return out;
  }
  KeyRateFunction const f(*inputs);
  Interval const hr = f.h_bounds();
  double worst = std::numeric_limits<double>::infinity();
  constexpr int kPoints = 33;
  for (int i = 0; i < kPoints; ++i) {
    double const h = hr.lower + hr.width() * i / (kPoints - 1);
    worst = std::min(worst, extended_rate(f, inputs->bounds, *inputs, h));
  }
  out.score = std::min(0.0, worst);
  return out;
}

namespace {

using Vec = std::array<double, 6>;

Vec project(Vec v) {
  v[0] = std::clamp(v[0], 1e-4, 1.0);
  v[1] = std::clamp(v[1], 1e-4, 1.0);
  v[2] = std::clamp(v[2], 1e-3, 1.0);
  for (int i = 3; i < 6; ++i) v[i] = std::clamp(v[i], 1e-6, 1.0 - 1e-6);
  double const total = v[3] + v[4] + v[5];
  double const cap = 1.0 - 1e-6;
  if (total > cap) {
    for (int i = 3; i < 6; ++i) v[i] *= cap / total;
  }
  return v;
}

ProtocolPoint random_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ProtocolPoint p;
  p.mu_x = 0.02 + 0.28 * u(rng);
  p.mu_y = std::min(1.0, p.mu_x + 0.1 + 0.5 * u(rng));
  p.mu_z = 0.1 + 0.7 * u(rng);
  p.p_z = 0.3 + 0.6 * u(rng);
  double const rest = 1.0 - p.p_z;
  p.p_x = rest * (0.15 + 0.35 * u(rng));
  p.p_y = rest * (0.15 + 0.35 * u(rng));
  return p;
}

class NelderMead {
 public:
  NelderMead(OptimizationProblem const& problem, std::vector<Evaluation>& log)
      : problem_(problem), log_(log) {}

  // Maximizes the rate starting at `start` with at most `budget` evaluations.
  Evaluation run(ProtocolPoint const& start, int budget) {
    budget_ = budget;
    std::array<Vec, 7> simplex;
    std::array<double, 7> value{};  // negated rates
    simplex[0] = project(start.as_array());
    for (int i = 0; i < 6; ++i) {
      Vec v = simplex[0];
      double const step = std::max(0.1 * std::abs(v[i]), 1e-3);
      v[i] += (v[i] + step <= (i < 3 ? 1.0 : 0.9)) ? step : -step;
      simplex[i + 1] = project(v);
    }
    for (int i = 0; i < 7 && budget_ > 0; ++i) value[i] = objective(simplex[i]);

    while (budget_ > 0) {
      std::array<int, 7> order;
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&](int a, int b) { return value[a] < value[b]; });
      int const best = order[0];
      int const worst = order[6];
      int const second_worst = order[5];
      if (spread(simplex, value, order) < 1e-12) break;

      Vec centroid{};
      for (int i = 0; i < 7; ++i) {
        if (i == worst) continue;
        for (int d = 0; d < 6; ++d) centroid[d] += simplex[i][d] / 6.0;
      }
      auto along = [&](double t) {
        Vec v;
        for (int d = 0; d < 6; ++d) {
          v[d] = centroid[d] + t * (simplex[worst][d] - centroid[d]);
        }
        return project(v);
      };

      Vec const reflected = along(-1.0);
      double const f_r = objective(reflected);
      if (f_r < value[best]) {
        Vec const expanded = along(-2.0);
        double const f_e = budget_ > 0 ? objective(expanded) : f_r;
        if (f_e < f_r) {
          simplex[worst] = expanded;
          value[worst] = f_e;
        } else {
          simplex[worst] = reflected;
          value[worst] = f_r;
        }
        continue;
      }
      if (f_r < value[second_worst]) {
        simplex[worst] = reflected;
        value[worst] = f_r;
        continue;
      }
      bool const outside = f_r < value[worst];
      Vec const contracted = along(outside ? -0.5 : 0.5);
      double const f_c = budget_ > 0 ? objective(contracted) : value[worst];
      if (f_c < std::min(f_r, value[worst])) {
        simplex[worst] = contracted;
        value[worst] = f_c;
        continue;
      }
      // Shrink toward the best vertex.
      for (int i = 0; i < 7 && budget_ > 0; ++i) {
        if (i == best) continue;
        for (int d = 0; d < 6; ++d) {
          simplex[i][d] =
              simplex[best][d] + 0.5 * (simplex[i][d] - simplex[best][d]);
        }
        simplex[i] = project(simplex[i]);
        value[i] = objective(simplex[i]);
      }
    }
    return best_;
  }

 private:
  static double spread(std::array<Vec, 7> const& simplex,
                       std::array<double, 7> const& value,
                       std::array<int, 7> const& order) {
    double size = 0.0;
    for (int i = 1; i < 7; ++i) {
      for (int d = 0; d < 6; ++d) {
        size = std::max(size,
                        std::abs(simplex[order[i]][d] - simplex[order[0]][d]));
      }
    }
    bool const flat = value[order[6]] == value[order[0]];
    return flat && value[order[0]] == -kInvalidScore ? 0.0 : size;
  }

  double objective(Vec const& v) {
    --budget_;
    Evaluation const e =
        search_evaluate(problem_, ProtocolPoint::from_array(v));
    log_.push_back(e);
    if (!seen_any_ || e.score > best_.score) {
      best_ = e;
      seen_any_ = true;
    }
    return -e.score;
  }

  OptimizationProblem const& problem_;
  std::vector<Evaluation>& log_;
  Evaluation best_;
  bool seen_any_ = false;
  int budget_ = 0;
};

}  // namespace

OptimizationResult optimize(OptimizationProblem const& problem,
                            std::uint64_t seed, OptimizerConfig const& cfg,
                            std::vector<ProtocolPoint> const& warm_starts) {
  if (cfg.budget < 1) throw ConfigError("optimizer budget must be >= 1");
  if (cfg.restarts < 1) throw ConfigError("optimizer restarts must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<ProtocolPoint> starts = warm_starts;
  starts.push_back(ProtocolPoint{});
  while (static_cast<int>(starts.size()) < cfg.restarts) {
    starts.push_back(random_point(rng));
  }
  int const per_start =
      std::max(1, cfg.budget / static_cast<int>(starts.size()));

  OptimizationResult result;
  result.best = starts.front();
  std::optional<Evaluation> best;
  for (auto const& start : starts) {
    NelderMead nm(problem, result.log);
    Evaluation const e = nm.run(start, per_start);
    if (!best || e.score > best->score) best = e;
  }
  result.best = best->point;
  result.rate = best->rate;
  return result;
}

void write_evaluation_log(std::ostream& out,
                          std::vector<Evaluation> const& log) {
  std::ostringstream os;
  os.precision(17);
  os << "mu_x,mu_y,mu_z,p_v,p_x,p_y,p_z,rate\n";
  for (auto const& e : log) {
    auto const& p = e.point;
    os << p.mu_x << ',' << p.mu_y << ',' << p.mu_z << ',' << p.p_v() << ','
       << p.p_x << ',' << p.p_y << ',' << p.p_z << ',' << e.rate << '\n';
  }
  out << os.str();
}

namespace {

KeyRateReport report_at(OptimizationProblem const& problem,
                        ProtocolPoint const& pt) {
  AnalysisInputs inputs;
  try {
    inputs = make_analysis_inputs(
        make_ensemble(pt, problem.delta1, problem.delta2), problem.channel);
  } catch (ConfigError const& e) {
    KeyRateReport r;
    r.status = RateStatus::invalid_input;
    r.reason = e.what();
    r.e11_upper = 1.0;
    return r;
  }
  inputs.statistics = problem.statistics;
  inputs.minimizer = problem.minimizer;
  KeyRateReport r = secure_key_rate(inputs);
  r.trace.clear();
  return r;
}

}  // namespace

std::vector<SweepPoint> sweep(OptimizationProblem const& problem,
                              std::vector<double> const& distances,
                              ProtocolPoint const& fixed_point,
                              bool optimize_each, std::uint64_t seed,
                              OptimizerConfig const& cfg,
                              std::vector<SweepPoint> const* seeds) {
  std::vector<SweepPoint> out(distances.size());
  auto at_distance = [&](double d) {
    OptimizationProblem p = problem;
    p.channel.distance_km = d;
    return p;
  };

  if (!optimize_each) {
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t i = next++; i < distances.size(); i = next++) {
        out[i] = {distances[i], fixed_point,
                  report_at(at_distance(distances[i]), fixed_point)};
      }
    };
    unsigned const workers = std::max(1u, std::thread::hardware_concurrency());
    if (workers == 1 || distances.size() < 2) {
      work();
    } else {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    return out;
  }

  std::vector<std::size_t> order(distances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return distances[a] < distances[b];
  });
  auto seeded = [&](std::size_t i, std::vector<ProtocolPoint> warm) {
    if (seeds) {
      for (auto const& s : *seeds) {
        if (s.distance_km == distances[i]) warm.push_back(s.point);
      }
    }
    return warm;
  };

  // Near to far: each search starts from the nearer optimum, which tracks the
  // positive-rate region as it shrinks.
  std::vector<ProtocolPoint> outward(distances.size());
  std::optional<ProtocolPoint> previous;
  for (std::size_t i : order) {
    std::vector<ProtocolPoint> warm;
    if (previous) warm.push_back(*previous);
    // Per-distance seeds so a distance's result does not depend on how many
    // random draws other distances consumed.
    outward[i] = optimize(at_distance(distances[i]), seed + 7919 * i, cfg,
                          seeded(i, std::move(warm)))
                     .best;
    previous = outward[i];
  }

  // Far to near, also starting from the farther optimum: the rate at each
  // distance is at least what the farther parameters achieve there.
  previous.reset();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    std::size_t const i = *it;
    std::vector<ProtocolPoint> warm{outward[i]};
    if (previous) warm.push_back(*previous);
    OptimizationProblem const p = at_distance(distances[i]);
    OptimizationResult const best =
        optimize(p, seed + 7919 * i + 104729, cfg, seeded(i, std::move(warm)));
    out[i] = {distances[i], best.best, report_at(p, best.best)};
    previous = best.best;
  }
  return out;
}

}  // namespace mdiqkd
