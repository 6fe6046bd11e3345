#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mdiqkd/commands.hpp"
#include "mdiqkd/errors.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> distances;
  std::optional<std::string> optimize;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "key = value config file")
      ->required();
  cmd->add_option("--out", opts.out, "output file");
  cmd->add_option("--seed", opts.seed, "seed (overrides config)");
  cmd->add_option("--distances", opts.distances, "A:B:STEP or comma list (km)");
  cmd->add_option("--optimize", opts.optimize, "on/off");
}

mdiqkd::RunConfig resolve(CommonOptions const& opts) {
  mdiqkd::RunConfig cfg = mdiqkd::load_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.distances) cfg.distances = mdiqkd::parse_distances(*opts.distances);
  if (opts.optimize) {
    if (*opts.optimize == "on") cfg.optimize = true;
    else if (*opts.optimize == "off") cfg.optimize = false;
    else throw mdiqkd::ConfigError("--optimize must be on or off");
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-key rate of four-intensity decoy-state MDI-QKD with "
               "intensity-fluctuating sources"};
  app.require_subcommand(1);
  app.set_version_flag("--version", mdiqkd::kVersion);

  CommonOptions opts;
  auto* rate = app.add_subcommand("rate", "key rate at one distance");
  auto* scan = app.add_subcommand("scan", "key rate versus distance (CSV)");
  auto* opt = app.add_subcommand("optimize", "optimize protocol parameters");
  auto* validate = app.add_subcommand(
      "validate-model", "check the analytic channel model against Monte Carlo");
  for (auto* cmd : {rate, scan, opt, validate}) add_common(cmd, opts);
  double pd_scale = 1.0;
  validate->add_option("--analytic-pd-scale", pd_scale)
      ->group("")  // test hook
      ->check(CLI::PositiveNumber);
  app.add_subcommand("defaults", "print the default config file")
      ->callback([] { std::cout << mdiqkd::default_config_text(); });

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const& e) {
    int const code = app.exit(e);
    return code == 0 ? 0 : mdiqkd::kExitConfig;
  }
  if (app.got_subcommand("defaults")) return mdiqkd::kExitOk;

  try {
    mdiqkd::RunConfig const cfg = resolve(opts);
    if (rate->parsed()) return mdiqkd::cmd_rate(cfg, std::cout, opts.out);
    if (opt->parsed()) return mdiqkd::cmd_optimize(cfg, std::cout, opts.out);
    if (validate->parsed()) {
      return mdiqkd::cmd_validate_model(cfg, std::cout, pd_scale);
    }
    std::string const csv = mdiqkd::scan_csv(cfg);
    if (opts.out) {
      std::ofstream file(*opts.out, std::ios::binary);
      if (!file) throw mdiqkd::ConfigError("cannot open output file '" + *opts.out + "'");
      file << csv;
    } else {
      std::cout << csv;
    }
    return mdiqkd::kExitOk;
  } catch (mdiqkd::ConfigError const& e) {
    std::cerr << "error: " << e.what() << '\n';
    return mdiqkd::kExitConfig;
  } catch (mdiqkd::SolverError const& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return mdiqkd::kExitSolver;
  } catch (std::exception const& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return mdiqkd::kExitSolver;
  }
}
