#pragma once

// Adapters from library observables to the count-form oracle inputs.

#include "asymptotic_oracle.hpp"
#include "mdiqkd/channel_sim.hpp"
#include "mdiqkd/source_model.hpp"

namespace oracle {

inline Counts counts_of(mdiqkd::PairObservables const& o) {
  using enum mdiqkd::Source;
  return {o.at(v, v).counts, o.at(v, x).counts, o.at(x, v).counts,
          o.at(v, y).counts, o.at(y, v).counts, o.at(x, x).counts,
          o.at(y, y).counts, o.at(z, z).counts, o.at(v, v).errors,
          o.at(v, x).errors, o.at(x, v).errors, o.at(x, x).errors,
          o.at(z, z).errors};
}

inline Setting setting_of(mdiqkd::SideSources const& s, double n_total, double f) {
  return {s.mu_x, s.mu_y, s.mu_z, s.p_v, s.p_x, s.p_y, s.p_z, n_total, f};
}

}  // namespace oracle
