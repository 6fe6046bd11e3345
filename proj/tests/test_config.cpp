#include <sstream>

#include "doctest.h"
#include "mdiqkd/commands.hpp"
#include "mdiqkd/config.hpp"
#include "mdiqkd/errors.hpp"

using namespace mdiqkd;

namespace {

RunConfig parse(std::string const& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string error_of(std::string const& text) {
  try {
    parse(text);
  } catch (ConfigError const& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("defaults round-trip") {
  RunConfig const def = parse(default_config_text());
  RunConfig const plain;
  CHECK(def.canonical() == plain.canonical());
  CHECK(def.hash() == plain.hash());
  CHECK(parse("").canonical() == plain.canonical());
  CHECK(plain.sources.delta1 == 1e-6);
  CHECK(plain.channel.eta_d == 0.145);
}

TEST_CASE("parsing values") {
  RunConfig const c = parse(
      "# comment\n"
      "mu_x = 0.2   # trailing comment\n"
      "mu_y=0.5\n"
      "N_t = 1e13\n"
      "statistics = asymptotic\n"
      "distances = 0:20:10\n"
      "optimize = on\n"
      "mc_trials = 1e6\n"
      "seed = 12\n");
  CHECK(c.sources.mu_x == 0.2);
  CHECK(c.sources.mu_y == 0.5);
  CHECK(c.channel.n_total == 1e13);
  CHECK(c.statistics == StatisticsMode::asymptotic);
  CHECK(c.distances == std::vector<double>{0.0, 10.0, 20.0});
  CHECK(c.optimize);
  CHECK(c.mc_trials == 1'000'000);
  CHECK(c.seed == 12);
  CHECK(c.hash() != RunConfig{}.hash());
}

TEST_CASE("parse errors name line and key") {
  CHECK(error_of("xi = 0\n").find("line 1, key 'xi'") != std::string::npos);
  CHECK(error_of("\nfoo = 1\n").find("line 2: unknown key 'foo'") !=
        std::string::npos);
  CHECK(error_of("mu_x = 0.1\nmu_x = 0.2\n").find("duplicate key 'mu_x'") !=
        std::string::npos);
  CHECK(error_of("mu_x\n").find("expected key = value") != std::string::npos);
  CHECK(error_of("e_d = abc\n").find("not a finite number") != std::string::npos);
  CHECK(error_of("mc_trials = 0\n").find("key 'mc_trials'") != std::string::npos);
  CHECK(error_of("delta2 = 1\n").find("key 'delta2'") != std::string::npos);
  CHECK(error_of("optimize = maybe\n").find("key 'optimize'") != std::string::npos);

  std::string const swapped = error_of("mu_x = 0.5\nmu_y = 0.1\n");
  CHECK(swapped.find("mu_x (line 1), mu_y (line 2)") != std::string::npos);
  CHECK(swapped.find("decoy conditions") != std::string::npos);
  CHECK(error_of("p_z = 0.8\n").find("sum to 1") != std::string::npos);
}

TEST_CASE("distance lists") {
  CHECK(parse_distances("5") == std::vector<double>{5.0});
  CHECK(parse_distances("0, 50,100") == std::vector<double>{0.0, 50.0, 100.0});
  CHECK(parse_distances("0:1:0.25").size() == 5);
  CHECK(parse_distances("0:1:0.3").back() == doctest::Approx(0.9));
  CHECK_THROWS_AS(parse_distances("0:10"), ConfigError);
  CHECK_THROWS_AS(parse_distances("10:0:1"), ConfigError);
  CHECK_THROWS_AS(parse_distances("0:10:0"), ConfigError);
  CHECK_THROWS_AS(parse_distances("-5"), ConfigError);
  CHECK_THROWS_AS(parse_distances(""), ConfigError);
}

TEST_CASE("rate command") {
  RunConfig cfg;
  std::ostringstream out;
  CHECK(cmd_rate(cfg, out, std::nullopt) == kExitOk);
  CHECK(out.str().starts_with("distance_km = 10\nstatus = ok\n"));
  CHECK(out.str().find("R = 7.244071386") != std::string::npos);

  cfg.distances = {0.0, 10.0};
  CHECK_THROWS_AS(cmd_rate(cfg, out, std::nullopt), ConfigError);

  RunConfig bad;
  bad.sources.delta2 = 0.5;
  bad.sources.mu_y = 0.15;
  CHECK_THROWS_AS(cmd_rate(bad, out, std::nullopt), ConfigError);
}

TEST_CASE("scan output") {
  RunConfig cfg;
  cfg.distances = {20.0, 0.0, 10.0, 10.0};
  std::string const csv = scan_csv(cfg);
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line.starts_with("# mdiqkd 0.1.0 config_hash="));
  CHECK(line.ends_with(" seed=1"));
  std::getline(lines, line);
  CHECK(line == "distance_km,mode,R,H_star,s11_L,e11_ph_U");
  std::vector<double> distances, rates;
  while (std::getline(lines, line)) {
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    distances.push_back(std::stod(cell));
    std::getline(row, cell, ',');
    CHECK(cell == "fixed");
    std::getline(row, cell, ',');
    rates.push_back(std::stod(cell));
  }
  CHECK(distances == std::vector<double>{0.0, 10.0, 20.0});
  CHECK(rates[0] >= rates[1]);
  CHECK(rates[1] >= rates[2]);
  CHECK(csv == scan_csv(cfg));

  // A single-distance scan agrees with the rate command.
  RunConfig single;
  std::string const one = scan_csv(single);
  CHECK(one.find("\n10,fixed,7.244071386") != std::string::npos);
}

TEST_CASE("model validation command") {
  RunConfig cfg;
  cfg.mc_trials = 400'000;
  std::vector<ValidationPoint> const grid{{0.5, 0.0}, {0.4, 10.0}};
  std::ostringstream ok_out;
  CHECK(cmd_validate_model(cfg, ok_out, 1.0, grid) == kExitOk);
  CHECK(ok_out.str().find("model validation passed") != std::string::npos);

  // Dark counts inflated in the analytic path only must be detected.
  std::ostringstream bad_out;
  CHECK(cmd_validate_model(cfg, bad_out, 3000.0, grid) == kExitValidationFailed);
  CHECK(bad_out.str().find("FAIL") != std::string::npos);

  cfg.mc_trials = 0;
  CHECK_THROWS_AS(cmd_validate_model(cfg, ok_out, 1.0, grid), ConfigError);
}
