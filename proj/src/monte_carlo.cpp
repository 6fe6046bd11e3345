#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

#include "mdiqkd/channel_sim.hpp"

namespace mdiqkd {

namespace {

constexpr std::uint64_t kChunkTrials = 1u << 18;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Tally {
  std::uint64_t successes = 0;
  std::uint64_t errors = 0;
};

struct Polarized {
  std::complex<double> h;
  std::complex<double> v;
};

// Alice's (or Bob's) pulse in H/V modes for a given encoding basis and bit.
Polarized encode(std::complex<double> amplitude, bool diagonal, int bit) {
  if (diagonal) {
    double const s = std::numbers::sqrt2 / 2.0;
    return {amplitude * s, (bit ? -1.0 : 1.0) * amplitude * s};
  }
  return bit ? Polarized{{}, amplitude} : Polarized{amplitude, {}};
}

Tally run_chunk(double amp_a, double amp_b, Basis basis,
                ChannelParams const& params, std::uint64_t trials,
                std::uint64_t chunk_seed) {
  std::mt19937_64 rng(chunk_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  bool const alice_diagonal = basis == Basis::X;
  bool const bob_diagonal = basis != Basis::Z;
  double const inv_sqrt2 = std::numbers::sqrt2 / 2.0;

  auto photons = [&](double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<int>(mean)(rng);
  };
  auto clicks = [&](std::complex<double> field) {
    int const n = photons(std::norm(field));
    bool const dark = unit(rng) < params.p_d;
    return n > 0 || dark;
  };

  Tally tally;
  for (std::uint64_t t = 0; t < trials; ++t) {
    int const bit_a = static_cast<int>(rng() & 1u);
    int const bit_b = static_cast<int>(rng() & 1u);
    double const phase = 2.0 * std::numbers::pi * unit(rng);
    Polarized const a = encode(std::polar(amp_a, phase), alice_diagonal, bit_a);
    Polarized const b = encode({amp_b, 0.0}, bob_diagonal, bit_b);

    bool const c_h = clicks((a.h + b.h) * inv_sqrt2);
    bool const c_v = clicks((a.v + b.v) * inv_sqrt2);
    bool const d_h = clicks((a.h - b.h) * inv_sqrt2);
    bool const d_v = clicks((a.v - b.v) * inv_sqrt2);

    // Exactly one H and one V detector.
    if (c_h == d_h || c_v == d_v) continue;
    ++tally.successes;
    bool const psi_plus = c_h == c_v;
    bool error = basis == Basis::Z ? bit_a == bit_b
                                   : (psi_plus ? bit_a != bit_b
                                               : bit_a == bit_b);
    if (unit(rng) < params.e_d) error = !error;
    if (error) ++tally.errors;
  }
  return tally;
}

}  // namespace

McEstimate monte_carlo_yield(double mu_a, double mu_b, Basis basis,
                             ChannelParams const& params, std::uint64_t trials,
                             std::uint64_t seed, unsigned workers) {
  if (trials == 0) throw std::domain_error("monte_carlo_yield: trials < 1");
  if (!(mu_a >= 0.0 && mu_b >= 0.0)) {
    throw std::domain_error("monte_carlo_yield: intensities must be >= 0");
  }
  double const eta = side_transmittance(params);
  double const amp_a = std::sqrt(eta * mu_a);
  double const amp_b = std::sqrt(eta * mu_b);

  std::uint64_t const chunks = (trials + kChunkTrials - 1) / kChunkTrials;
  std::vector<Tally> results(chunks);
  std::atomic<std::uint64_t> next{0};
  auto work = [&] {
    for (std::uint64_t c = next++; c < chunks; c = next++) {
      std::uint64_t const n = std::min(kChunkTrials, trials - c * kChunkTrials);
      results[c] = run_chunk(amp_a, amp_b, basis, params, n,
                             splitmix64(seed ^ splitmix64(c)));
    }
  };
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, chunks));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  McEstimate est;
  est.trials = trials;
  for (auto const& r : results) {
    est.successes += r.successes;
    est.errors += r.errors;
  }
  double const n = static_cast<double>(trials);
  est.q = est.successes / n;
  est.eq = est.errors / n;
  est.q_stderr = std::sqrt(est.q * (1.0 - est.q) / n);
  est.eq_stderr = std::sqrt(est.eq * (1.0 - est.eq) / n);
  return est;
}

}  // namespace mdiqkd
