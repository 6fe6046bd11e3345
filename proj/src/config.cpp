#include "mdiqkd/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "mdiqkd/errors.hpp"

namespace mdiqkd {

ProtocolPoint RunConfig::point() const {
  return {sources.mu_x, sources.mu_y, sources.mu_z,
          sources.p_x,  sources.p_y,  sources.p_z};
}

OptimizationProblem RunConfig::problem() const {
  return {channel, sources.delta1, sources.delta2, statistics, minimizer};
}

namespace {

// Shortest text that reads back as the same double.
std::string shortest(double value) {
  char buf[32];
  auto const res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string trim(std::string const& s) {
  auto const first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  auto const last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(std::string const& text) {
  double value = 0.0;
  auto const* end = text.data() + text.size();
  auto const [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ConfigError("'" + text + "' is not a finite number");
  }
  return value;
}

std::uint64_t to_uint(std::string const& text) {
  std::uint64_t value = 0;
  auto const* end = text.data() + text.size();
  auto const [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec == std::errc() && ptr == end) return value;
  // Accept integral values written in scientific notation (1e7).
  double const d = to_double(text);
  if (d < 0.0 || d != std::floor(d) || d > 1.8e19) {
    throw ConfigError("'" + text + "' is not a non-negative integer");
  }
  return static_cast<std::uint64_t>(d);
}

bool to_bool(std::string const& text) {
  if (text == "on" || text == "true" || text == "1") return true;
  if (text == "off" || text == "false" || text == "0") return false;
  throw ConfigError("'" + text + "' is not on/off");
}

using Setter = std::function<void(RunConfig&, std::string const&)>;

struct Key {
  char const* name;
  Setter set;
  char const* doc;
};

Setter bounded(std::function<double&(RunConfig&)> field, double lo, double hi,
               bool lo_open, bool hi_open) {
  return [=](RunConfig& cfg, std::string const& text) {
    double const v = to_double(text);
    bool const ok = (lo_open ? v > lo : v >= lo) && (hi_open ? v < hi : v <= hi);
    if (!ok) {
      std::ostringstream os;
      os << "must lie in " << (lo_open ? '(' : '[') << lo << ", " << hi
         << (hi_open ? ')' : ']');
      throw ConfigError(os.str());
    }
    field(cfg) = v;
  };
}

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Key> const& keys() {
  static std::vector<Key> const table = {
      {"e0", bounded([](RunConfig& c) -> double& { return c.channel.e0; }, 0, 1, false, false),
       "error rate of vacuum-triggered counts"},
      {"e_d", bounded([](RunConfig& c) -> double& { return c.channel.e_d; }, 0, 1, false, false),
       "misalignment error probability"},
      {"p_d", bounded([](RunConfig& c) -> double& { return c.channel.p_d; }, 0, 1, false, false),
       "dark count probability per detector per gate"},
      {"eta_d", bounded([](RunConfig& c) -> double& { return c.channel.eta_d; }, 0, 1, false, false),
       "detector efficiency"},
      {"alpha_f", bounded([](RunConfig& c) -> double& { return c.channel.alpha_f; }, 0, kInf, false, true),
       "fiber loss in dB/km"},
      {"f", bounded([](RunConfig& c) -> double& { return c.channel.f; }, 0, kInf, false, true),
       "error-correction inefficiency"},
      {"xi", bounded([](RunConfig& c) -> double& { return c.channel.xi; }, 0, 1, true, true),
       "Chernoff failure probability per estimate"},
      {"N_t", bounded([](RunConfig& c) -> double& { return c.channel.n_total; }, 1, kInf, false, true),
       "total emitted pulse pairs"},
      {"mu_x", bounded([](RunConfig& c) -> double& { return c.sources.mu_x; }, 0, kInf, true, true),
       "weaker decoy intensity"},
      {"mu_y", bounded([](RunConfig& c) -> double& { return c.sources.mu_y; }, 0, kInf, true, true),
       "stronger decoy intensity"},
      {"mu_z", bounded([](RunConfig& c) -> double& { return c.sources.mu_z; }, 0, kInf, true, true),
       "signal intensity"},
      {"delta1", bounded([](RunConfig& c) -> double& { return c.sources.delta1; }, 0, kInf, false, true),
       "vacuum source emits intensity in [0, delta1]"},
      {"delta2", bounded([](RunConfig& c) -> double& { return c.sources.delta2; }, 0, 1, false, true),
       "relative intensity fluctuation of x, y, z"},
      {"p_v", bounded([](RunConfig& c) -> double& { return c.sources.p_v; }, 0, 1, true, true),
       "probability of the vacuum source"},
      {"p_x", bounded([](RunConfig& c) -> double& { return c.sources.p_x; }, 0, 1, true, true),
       "probability of source x"},
      {"p_y", bounded([](RunConfig& c) -> double& { return c.sources.p_y; }, 0, 1, true, true),
       "probability of source y"},
      {"p_z", bounded([](RunConfig& c) -> double& { return c.sources.p_z; }, 0, 1, true, true),
       "probability of the signal source"},
      {"statistics",
       [](RunConfig& c, std::string const& t) {
         if (t == "finite") c.statistics = StatisticsMode::finite;
         else if (t == "asymptotic") c.statistics = StatisticsMode::asymptotic;
         else throw ConfigError("must be finite or asymptotic");
       },
       "finite (Chernoff) or asymptotic (infinite data)"},
      {"h_grid",
       [](RunConfig& c, std::string const& t) {
         auto const n = to_uint(t);
         if (n < 2 || n > 100'000'000) throw ConfigError("must lie in [2, 1e8]");
         c.minimizer.grid_points = static_cast<int>(n);
       },
       "points of the uniform H grid"},
      {"distances",
       [](RunConfig& c, std::string const& t) { c.distances = parse_distances(t); },
       "km; A:B:STEP or comma list"},
      {"optimize", [](RunConfig& c, std::string const& t) { c.optimize = to_bool(t); },
       "on/off: optimize parameters at each distance"},
      {"restarts",
       [](RunConfig& c, std::string const& t) {
         auto const n = to_uint(t);
         if (n < 1 || n > 10'000) throw ConfigError("must lie in [1, 10000]");
         c.optimizer.restarts = static_cast<int>(n);
       },
       "optimizer local searches"},
      {"budget",
       [](RunConfig& c, std::string const& t) {
         auto const n = to_uint(t);
         if (n < 1 || n > 100'000'000) throw ConfigError("must lie in [1, 1e8]");
         c.optimizer.budget = static_cast<int>(n);
       },
       "optimizer evaluations per distance"},
      {"seed", [](RunConfig& c, std::string const& t) { c.seed = to_uint(t); },
       "seed for optimizer and Monte Carlo"},
      {"mc_trials",
       [](RunConfig& c, std::string const& t) {
         auto const n = to_uint(t);
         if (n < 1) throw ConfigError("must be >= 1");
         c.mc_trials = n;
       },
       "Monte-Carlo trials per validation point"},
  };
  return table;
}

void check_cross_fields(RunConfig const& cfg,
                        std::map<std::string, int> const& lines) {
  auto where = [&](std::initializer_list<char const*> fields) {
    std::string out;
    for (char const* f : fields) {
      auto it = lines.find(f);
      out += (out.empty() ? "" : ", ") + std::string(f);
      if (it != lines.end()) out += " (line " + std::to_string(it->second) + ")";
    }
    return out;
  };
  auto const& s = cfg.sources;
  if (!(s.mu_x < s.mu_y)) {
    throw ConfigError("config " + where({"mu_x", "mu_y"}) +
                      ": mu_x must be < mu_y (decoy conditions)");
  }
  double const total = s.p_v + s.p_x + s.p_y + s.p_z;
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "config " << where({"p_v", "p_x", "p_y", "p_z"})
       << ": probabilities must sum to 1 (got " << total << ")";
    throw ConfigError(os.str());
  }
  cfg.channel.validate();
  cfg.ensemble().validate();
}

}  // namespace

std::vector<double> parse_distances(std::string const& text) {
  std::vector<double> out;
  std::string const t = trim(text);
  if (t.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::stringstream ss(t);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(to_double(trim(p)));
    if (parts.size() != 3) throw ConfigError("distance range must be A:B:STEP");
    double const a = parts[0], b = parts[1], step = parts[2];
    if (!(step > 0.0) || b < a) throw ConfigError("distance range needs A <= B, STEP > 0");
    auto const n = static_cast<long>(std::floor((b - a) / step + 1e-9));
    if (n > 1'000'000) throw ConfigError("distance range too long");
    for (long i = 0; i <= n; ++i) out.push_back(a + step * i);
  } else {
    std::stringstream ss(t);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(to_double(trim(p)));
  }
  if (out.empty()) throw ConfigError("empty distance list");
  for (double d : out) {
    if (d < 0.0) throw ConfigError("distances must be >= 0");
  }
  return out;
}

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::map<std::string, int> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto const eq = line.find('=');
    auto const prefix = "config line " + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(prefix + ": expected key = value");
    std::string const key = trim(line.substr(0, eq));
    std::string const value = trim(line.substr(eq + 1));
    auto const& table = keys();
    auto it = std::find_if(table.begin(), table.end(),
                           [&](Key const& k) { return key == k.name; });
    if (it == table.end()) throw ConfigError(prefix + ": unknown key '" + key + "'");
    if (seen.contains(key)) {
      throw ConfigError(prefix + ": duplicate key '" + key + "' (first on line " +
                        std::to_string(seen[key]) + ")");
    }
    seen[key] = line_no;
    try {
      it->set(cfg, value);
    } catch (ConfigError const& e) {
      throw ConfigError(prefix + ", key '" + key + "': " + e.what());
    }
  }
  check_cross_fields(cfg, seen);
  return cfg;
}

RunConfig load_config(std::string const& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  auto const& c = channel;
  auto const& s = sources;
  os << "e0 = " << shortest(c.e0) << "\ne_d = " << shortest(c.e_d) << "\np_d = " << shortest(c.p_d)
     << "\neta_d = " << shortest(c.eta_d) << "\nalpha_f = " << shortest(c.alpha_f)
     << "\nf = " << shortest(c.f) << "\nxi = " << shortest(c.xi) << "\nN_t = " << shortest(c.n_total)
     << "\nmu_x = " << shortest(s.mu_x) << "\nmu_y = " << shortest(s.mu_y) << "\nmu_z = " << shortest(s.mu_z)
     << "\ndelta1 = " << shortest(s.delta1) << "\ndelta2 = " << shortest(s.delta2)
     << "\np_v = " << shortest(s.p_v) << "\np_x = " << shortest(s.p_x) << "\np_y = " << shortest(s.p_y)
     << "\np_z = " << shortest(s.p_z) << "\nstatistics = "
     << (statistics == StatisticsMode::finite ? "finite" : "asymptotic")
     << "\nh_grid = " << minimizer.grid_points << "\ndistances = ";
  for (std::size_t i = 0; i < distances.size(); ++i) {
    os << (i ? "," : "") << shortest(distances[i]);
  }
  os << "\noptimize = " << (optimize ? "on" : "off")
     << "\nrestarts = " << optimizer.restarts << "\nbudget = " << optimizer.budget
     << "\nseed = " << seed << "\nmc_trials = " << mc_trials << '\n';
  return os.str();
}

std::uint64_t RunConfig::hash() const {
  // FNV-1a, stable across platforms.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string default_config_text() {
  std::ostringstream os;
  std::istringstream canon(RunConfig{}.canonical());
  auto const& table = keys();
  for (std::string line; std::getline(canon, line);) {
    std::string const key = trim(line.substr(0, line.find('=')));
    auto it = std::find_if(table.begin(), table.end(),
                           [&](Key const& k) { return key == k.name; });
    os << line;
    if (it != table.end()) os << "  # " << it->doc;
    os << '\n';
  }
  return os.str();
}

}  // namespace mdiqkd
