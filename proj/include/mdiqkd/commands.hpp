#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mdiqkd/config.hpp"

namespace mdiqkd {

inline constexpr char const* kVersion = "0.1.0";

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidationFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;

// Each command writes its primary output to `out`. `record_path`, when set,
// receives the machine-readable artifact (JSON record, CSV).

// Full pipeline at the single configured distance.
int cmd_rate(RunConfig const& cfg, std::ostream& out,
             std::optional<std::string> const& record_path);

// CSV: distance_km,mode,R,H_star,s11_L,e11_ph_U, preceded by a '#'
// provenance line (version, config hash, seed).
int cmd_scan(RunConfig const& cfg, std::ostream& out);
std::string scan_csv(RunConfig const& cfg);

// Optimizes at each configured distance; `record_path` receives the
// evaluation log CSV.
int cmd_optimize(RunConfig const& cfg, std::ostream& out,
                 std::optional<std::string> const& record_path);

struct ValidationPoint {
  double mu = 0.0;
  double distance_km = 0.0;
};

// Grid on which the analytic channel model is checked against Monte Carlo.
std::vector<ValidationPoint> default_validation_grid();

// Analytic vs Monte-Carlo gains on the validation grid, both bases, 3 sigma.
// `analytic_pd_scale` multiplies p_d in the analytic path only (a
// sensitivity hook for tests). Returns kExitValidationFailed on mismatch.
int cmd_validate_model(RunConfig const& cfg, std::ostream& out,
                       double analytic_pd_scale = 1.0,
                       std::vector<ValidationPoint> const& grid =
                           default_validation_grid());

}  // namespace mdiqkd
