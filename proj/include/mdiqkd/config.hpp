#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mdiqkd/channel_sim.hpp"
#include "mdiqkd/keyrate_core.hpp"
#include "mdiqkd/optimizer.hpp"
#include "mdiqkd/source_model.hpp"

namespace mdiqkd {

// Everything a CLI run needs. Sources are symmetric across the two sides.
// Defaults are the reference link with the reference operating point.
struct RunConfig {
  ChannelParams channel;
  SideSources sources{.delta1 = 1e-6};
  StatisticsMode statistics = StatisticsMode::finite;
  MinimizerConfig minimizer;
  std::vector<double> distances{10.0};
  bool optimize = false;
  OptimizerConfig optimizer;
  std::uint64_t seed = 1;
  std::uint64_t mc_trials = 10'000'000;

  SourceEnsemble ensemble() const { return SourceEnsemble::symmetric(sources); }
  ProtocolPoint point() const;
  OptimizationProblem problem() const;
  // Canonical `key = value` text of every field; hashed for CSV provenance.
  std::string canonical() const;
  std::uint64_t hash() const;
};

// Parses `key = value` lines ('#' starts a comment). Unknown or duplicate
// keys and out-of-range values raise ConfigError with the line number and
// key; cross-field invariants are checked after all lines are read.
RunConfig parse_config(std::istream& in);
RunConfig load_config(std::string const& path);

// "A:B:STEP" (inclusive) or "d1,d2,...".
std::vector<double> parse_distances(std::string const& text);

// Documented keys with their defaults, in file order.
std::string default_config_text();

}  // namespace mdiqkd
