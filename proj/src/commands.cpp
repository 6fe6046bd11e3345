#include "mdiqkd/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "mdiqkd/errors.hpp"

namespace mdiqkd {

namespace {

std::string provenance(RunConfig const& cfg) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(cfg.hash()));
  std::ostringstream os;
  os << "# mdiqkd " << kVersion << " config_hash=" << hash
     << " seed=" << cfg.seed << '\n';
  return os.str();
}

void write_file(std::string const& path, std::string const& content) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ConfigError("cannot open output file '" + path + "'");
  file << content;
}

void require_decoy_conditions(SourceEnsemble const& ensemble) {
  ConditionReport const report = check_decoy_conditions(coeff_bounds(ensemble));
  if (!report.passed()) throw ConfigError(report.failure_summary());
}

std::vector<double> ascending(std::vector<double> d) {
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());
  return d;
}

}  // namespace

int cmd_rate(RunConfig const& cfg, std::ostream& out,
             std::optional<std::string> const& record_path) {
  if (cfg.distances.size() != 1) {
    throw ConfigError("rate takes a single distance; use scan for several");
  }
  SourceEnsemble const ensemble = cfg.ensemble();
  require_decoy_conditions(ensemble);
  ChannelParams channel = cfg.channel;
  channel.distance_km = cfg.distances.front();
  AnalysisInputs inputs = make_analysis_inputs(ensemble, channel);
  inputs.statistics = cfg.statistics;
  inputs.minimizer = cfg.minimizer;
  KeyRateReport const report = secure_key_rate(inputs);

  std::ostringstream os;
  os.precision(17);
  os << "distance_km = " << channel.distance_km << '\n' << to_record(report);
  out << os.str();

  if (record_path) {
    nlohmann::ordered_json j;
    j["distance_km"] = channel.distance_km;
    j["status"] = to_string(report.status);
    j["reason"] = report.reason;
    j["R"] = report.rate;
    j["R_raw_min"] = report.raw_min;
    j["H_L"] = report.h_lower;
    j["H_U"] = report.h_upper;
    j["H_star"] = report.h_star;
    j["s11_L"] = report.s11_lower;
    j["e11_ph_U"] = report.e11_upper;
    j["S_zz"] = report.s_zz;
    j["E_zz"] = report.e_zz;
    j["chernoff_invocations"] = report.chernoff_invocations;
    j["trace"] = nlohmann::json::array();
    for (auto const& [h, r] : report.trace) j["trace"].push_back({h, r});
    write_file(*record_path, j.dump(2) + "\n");
  }
  return kExitOk;
}

std::string scan_csv(RunConfig const& cfg) {
  if (!cfg.optimize) require_decoy_conditions(cfg.ensemble());
  std::vector<double> const distances = ascending(cfg.distances);
  std::vector<SweepPoint> const rows =
      sweep(cfg.problem(), distances, cfg.point(), cfg.optimize, cfg.seed,
            cfg.optimizer);
  std::ostringstream os;
  os << provenance(cfg) << "distance_km,mode,R,H_star,s11_L,e11_ph_U\n";
  os.precision(17);
  for (auto const& row : rows) {
    os << row.distance_km << ',' << (cfg.optimize ? "optimized" : "fixed")
       << ',' << row.report.rate << ',' << row.report.h_star << ','
       << row.report.s11_lower << ',' << row.report.e11_upper << '\n';
  }
  return os.str();
}

int cmd_scan(RunConfig const& cfg, std::ostream& out) {
  out << scan_csv(cfg);
  return kExitOk;
}

int cmd_optimize(RunConfig const& cfg, std::ostream& out,
                 std::optional<std::string> const& record_path) {
  std::vector<double> const distances = ascending(cfg.distances);
  std::ostringstream log;
  log.precision(17);
  log << provenance(cfg) << "distance_km,mu_x,mu_y,mu_z,p_v,p_x,p_y,p_z,rate\n";
  std::ostringstream os;
  os.precision(10);
  for (std::size_t i = 0; i < distances.size(); ++i) {
    OptimizationProblem problem = cfg.problem();
    problem.channel.distance_km = distances[i];
    OptimizationResult const res =
        optimize(problem, cfg.seed + 7919 * i, cfg.optimizer, {cfg.point()});
    auto const& b = res.best;
    os << "distance_km = " << distances[i] << "  R = " << res.rate
       << "  mu_x = " << b.mu_x << "  mu_y = " << b.mu_y << "  mu_z = " << b.mu_z
       << "  p_v = " << b.p_v() << "  p_x = " << b.p_x << "  p_y = " << b.p_y
       << "  p_z = " << b.p_z << "  evaluations = " << res.log.size() << '\n';
    for (auto const& e : res.log) {
      auto const& p = e.point;
      log << distances[i] << ',' << p.mu_x << ',' << p.mu_y << ',' << p.mu_z
          << ',' << p.p_v() << ',' << p.p_x << ',' << p.p_y << ',' << p.p_z
          << ',' << e.rate << '\n';
    }
  }
  out << os.str();
  if (record_path) write_file(*record_path, log.str());
  return kExitOk;
}

std::vector<ValidationPoint> default_validation_grid() {
  return {{0.1, 0.0},  {0.1, 50.0}, {0.2, 10.0}, {0.3, 25.0}, {0.4, 50.0},
          {0.5, 0.0},  {0.5, 100.0}, {0.05, 20.0}, {0.8, 75.0}, {1.0, 150.0}};
}

int cmd_validate_model(RunConfig const& cfg, std::ostream& out,
                       double analytic_pd_scale,
                       std::vector<ValidationPoint> const& grid) {
  if (cfg.mc_trials < 1) throw ConfigError("mc_trials must be >= 1");
  bool all_pass = true;
  std::ostringstream os;
  os << std::setprecision(6);
  std::uint64_t run = 0;
  for (auto const& pt : grid) {
    for (Basis basis : {Basis::X, Basis::Z}) {
      ChannelParams params = cfg.channel;
      params.distance_km = pt.distance_km;
      ChannelParams analytic_params = params;
      analytic_params.p_d = std::min(1.0, params.p_d * analytic_pd_scale);
      Gain const g = pair_yield(pt.mu, pt.mu, basis, analytic_params);
      McEstimate const mc = monte_carlo_yield(pt.mu, pt.mu, basis, params,
                                              cfg.mc_trials, cfg.seed + run++);
      double const n = static_cast<double>(mc.trials);
      auto within = [&](double expected, double observed) {
        double const sigma = std::sqrt(expected * (1.0 - expected) / n);
        if (sigma == 0.0) return observed == expected;
        return std::abs(observed - expected) <= 3.0 * sigma;
      };
      bool const ok = within(g.q, mc.q) && within(g.eq, mc.eq);
      all_pass = all_pass && ok;
      os << (ok ? "PASS" : "FAIL") << " basis=" << basis_name(basis)
         << " mu=" << pt.mu << " L=" << pt.distance_km << " Q=" << g.q
         << " Q_mc=" << mc.q << " EQ=" << g.eq << " EQ_mc=" << mc.eq << '\n';
    }
  }
  os << (all_pass ? "model validation passed" : "model validation FAILED")
     << '\n';
  out << os.str();
  return all_pass ? kExitOk : kExitValidationFailed;
}

}  // namespace mdiqkd
