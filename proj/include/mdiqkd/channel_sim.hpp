#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "mdiqkd/source_model.hpp"

namespace mdiqkd {

enum class Basis { X, Z, mixed };

char basis_name(Basis b);
Basis basis_from_name(char c);

// Link and detector parameters. Defaults are the values of the
// reference simulation (N_t = 1e11, 0 km).
struct ChannelParams {
  double e0 = 0.5;          // error rate of vacuum-triggered counts
  double e_d = 0.015;       // misalignment error probability
  double p_d = 6.02e-6;     // dark count probability per detector per gate
  double eta_d = 0.145;     // detector efficiency
  double alpha_f = 0.2;     // fiber loss, dB/km
  double f = 1.16;          // error-correction inefficiency
  double xi = 1e-7;         // Chernoff failure probability
  double n_total = 1e11;    // N_t, emitted pulse pairs
  double distance_km = 0.0; // Alice to Bob; the relay sits at the midpoint

  void validate() const;
};

// eta_d * 10^{-alpha_f (L/2) / 10}.
double side_transmittance(ChannelParams const& params);

struct Gain {
  double q = 0.0;   // successful events per pulse pair
  double eq = 0.0;  // erroneous successful events per pulse pair
};

// Analytic gain of a pair of phase-randomized coherent pulses with
// intensities mu_a, mu_b at a beam-splitter + polarizing-beam-splitter Bell
// measurement with four threshold detectors. Success is one click in an H
// detector and one in a V detector. `basis` gives both parties' encoding;
// Basis::mixed means Alice in Z and Bob in X (error rate e0 by symmetry).
Gain pair_yield(double mu_a, double mu_b, Basis basis,
                ChannelParams const& params);

struct McEstimate {
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  std::uint64_t errors = 0;
  double q = 0.0;
  double eq = 0.0;
  double q_stderr = 0.0;
  double eq_stderr = 0.0;
};

// Photon-level Monte Carlo of the same measurement. Each trial draws random
// bits and global phases, propagates the coherent amplitudes through the
// beam splitter and polarizing beam splitters, samples a Poisson photon
// number for each of the four detector modes, adds dark clicks with
// probability p_d, and flips the error status of a successful event with
// probability e_d. Trials are split into fixed chunks with seeds derived from
// `seed`, so results do not depend on `workers` (0 = hardware concurrency).
McEstimate monte_carlo_yield(double mu_a, double mu_b, Basis basis,
                             ChannelParams const& params, std::uint64_t trials,
                             std::uint64_t seed, unsigned workers = 0);

struct PairRecord {
  Source l = Source::v;
  Source r = Source::v;
  Basis basis = Basis::X;
  double emitted = 0.0;  // L_lr = p_l p_r N_t
  double counts = 0.0;   // N_lr
  double errors = 0.0;   // M_lr
  bool used = false;     // consumed by the key-rate analysis

  double counting_rate() const { return counts / emitted; }  // S_lr
  double error_rate() const { return errors / emitted; }     // T_lr
};

// Observed counts for all 16 two-pulse sources.
struct PairObservables {
  std::array<PairRecord, 16> pairs{};
  double n_total = 0.0;

  PairRecord& at(Source l, Source r) { return pairs[4 * index(l) + index(r)]; }
  PairRecord const& at(Source l, Source r) const {
    return pairs[4 * index(l) + index(r)];
  }
  // E_zz = M_zz / N_zz, 0 when there are no zz counts.
  double signal_error_rate() const;
  void validate() const;
};

bool pair_used_by_analysis(Source l, Source r);

// Intensity the simulated sources actually emit: nominal mu_l, and delta1/2
// for the vacuum source.
double simulation_intensity(SideSources const& s, Source source);

// Expected counts at the simulation intensities, rounded half-to-even.
PairObservables build_observables(SourceEnsemble const& ensemble,
                                  ChannelParams const& params);

// CSV with header `l,r,basis,L_lr,N_lr,M_lr`.
void write_observables_csv(std::ostream& out, PairObservables const& obs);
PairObservables read_observables_csv(std::istream& in);

// Photon-number decomposition of the analytic model (X basis), used as a
// ground-truth oracle for the bounds the analysis produces.
struct SinglePhotonTruth {
  double yield = 0.0;        // s_11
  double error_yield = 0.0;  // e_11 s_11
  double phase_error = 0.0;  // e_11
};
SinglePhotonTruth single_photon_truth(ChannelParams const& params);

// sum over (j, k) with j = 0 or k = 0 of P(j; mu_a) P(k; mu_b) Y_jk, i.e. the
// true value of the nuisance parameter H for an xx source at these
// intensities (vacuum-side counts have error rate 1/2 in this model).
double vacuum_component_rate(double mu_a, double mu_b,
                             ChannelParams const& params);

}  // namespace mdiqkd
