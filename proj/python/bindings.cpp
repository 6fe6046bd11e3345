#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mdiqkd/commands.hpp"
#include "mdiqkd/config.hpp"
#include "mdiqkd/errors.hpp"
#include "mdiqkd/keyrate_core.hpp"
#include "mdiqkd/optimizer.hpp"
#include "mdiqkd/stat_bounds.hpp"

namespace py = pybind11;
using namespace mdiqkd;

namespace {

Basis basis_of(std::string const& name) {
  if (name.size() != 1) throw ConfigError("basis must be 'X', 'Z' or 'M'");
  return basis_from_name(name[0]);
}

py::dict report_dict(KeyRateReport const& r) {
  py::dict d;
  d["status"] = to_string(r.status);
  d["reason"] = r.reason;
  d["R"] = r.rate;
  d["R_raw_min"] = r.raw_min;
  d["H_L"] = r.h_lower;
  d["H_U"] = r.h_upper;
  d["H_star"] = r.h_star;
  d["s11_L"] = r.s11_lower;
  d["e11_ph_U"] = r.e11_upper;
  d["S_zz"] = r.s_zz;
  d["E_zz"] = r.e_zz;
  d["chernoff_invocations"] = r.chernoff_invocations;
  return d;
}

RunConfig config_from_text(std::string const& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Finite-key rate of four-intensity decoy-state MDI-QKD";
  m.attr("__version__") = kVersion;
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  py::class_<SideSources>(m, "SideSources")
      .def(py::init<>())
      .def_readwrite("mu_x", &SideSources::mu_x)
      .def_readwrite("mu_y", &SideSources::mu_y)
      .def_readwrite("mu_z", &SideSources::mu_z)
      .def_readwrite("delta1", &SideSources::delta1)
      .def_readwrite("delta2", &SideSources::delta2)
      .def_readwrite("p_v", &SideSources::p_v)
      .def_readwrite("p_x", &SideSources::p_x)
      .def_readwrite("p_y", &SideSources::p_y)
      .def_readwrite("p_z", &SideSources::p_z)
      .def("validate", [](SideSources const& s) { s.validate(); });

  py::class_<ChannelParams>(m, "ChannelParams")
      .def(py::init<>())
      .def_readwrite("e0", &ChannelParams::e0)
      .def_readwrite("e_d", &ChannelParams::e_d)
      .def_readwrite("p_d", &ChannelParams::p_d)
      .def_readwrite("eta_d", &ChannelParams::eta_d)
      .def_readwrite("alpha_f", &ChannelParams::alpha_f)
      .def_readwrite("f", &ChannelParams::f)
      .def_readwrite("xi", &ChannelParams::xi)
      .def_readwrite("N_t", &ChannelParams::n_total)
      .def_readwrite("distance_km", &ChannelParams::distance_km);

  py::class_<ProtocolPoint>(m, "ProtocolPoint")
      .def(py::init<>())
      .def_readwrite("mu_x", &ProtocolPoint::mu_x)
      .def_readwrite("mu_y", &ProtocolPoint::mu_y)
      .def_readwrite("mu_z", &ProtocolPoint::mu_z)
      .def_readwrite("p_x", &ProtocolPoint::p_x)
      .def_readwrite("p_y", &ProtocolPoint::p_y)
      .def_readwrite("p_z", &ProtocolPoint::p_z)
      .def_property_readonly("p_v", &ProtocolPoint::p_v);

  m.def("chernoff_lower", [](double x, double xi) {
    ChernoffConfig cfg;
    cfg.xi = xi;
    return chernoff_lower(x, cfg);
  }, py::arg("count"), py::arg("xi") = 1e-7);
  m.def("chernoff_upper", [](double x, double xi) {
    ChernoffConfig cfg;
    cfg.xi = xi;
    return chernoff_upper(x, cfg);
  }, py::arg("count"), py::arg("xi") = 1e-7);

  m.def("pair_yield", [](double mu_a, double mu_b, std::string const& basis,
                         ChannelParams const& params) {
    Gain const g = pair_yield(mu_a, mu_b, basis_of(basis), params);
    return py::make_tuple(g.q, g.eq);
  }, py::arg("mu_a"), py::arg("mu_b"), py::arg("basis"), py::arg("channel"),
     "Analytic (Q, EQ) of a pulse pair.");

  m.def("monte_carlo_yield", [](double mu_a, double mu_b, std::string const& basis,
                                ChannelParams const& params, std::uint64_t trials,
                                std::uint64_t seed) {
    McEstimate mc;
    {
      py::gil_scoped_release release;
      mc = monte_carlo_yield(mu_a, mu_b, basis_of(basis), params, trials, seed);
    }
    return py::make_tuple(mc.q, mc.eq);
  }, py::arg("mu_a"), py::arg("mu_b"), py::arg("basis"), py::arg("channel"),
     py::arg("trials"), py::arg("seed"), "Photon-level Monte Carlo (Q, EQ).");

  m.def("secure_key_rate", [](SideSources const& sources, ChannelParams const& channel,
                              bool asymptotic) {
    AnalysisInputs in = make_analysis_inputs(SourceEnsemble::symmetric(sources), channel);
    in.statistics = asymptotic ? StatisticsMode::asymptotic : StatisticsMode::finite;
    return report_dict(secure_key_rate(in));
  }, py::arg("sources"), py::arg("channel"), py::arg("asymptotic") = false,
     "Key rate per pulse pair with simulated observables at channel.distance_km.");

  m.def("optimize", [](ChannelParams const& channel, double delta1, double delta2,
                       std::uint64_t seed, int restarts, int budget) {
    OptimizationProblem problem;
    problem.channel = channel;
    problem.delta1 = delta1;
    problem.delta2 = delta2;
    OptimizerConfig cfg;
    cfg.restarts = restarts;
    cfg.budget = budget;
    OptimizationResult res;
    {
      py::gil_scoped_release release;
      res = optimize(problem, seed, cfg, {ProtocolPoint{}});
    }
    return py::make_tuple(res.best, res.rate);
  }, py::arg("channel"), py::arg("delta1") = 1e-6, py::arg("delta2") = 0.0,
     py::arg("seed") = 1, py::arg("restarts") = 8, py::arg("budget") = 4000,
     "Optimized protocol point and its rate.");

  m.def("default_config_text", &default_config_text);
  m.def("config_hash", [](std::string const& text) {
    return config_from_text(text).hash();
  }, py::arg("config_text"));
  m.def("scan_csv", [](std::string const& text) {
    RunConfig const cfg = config_from_text(text);
    py::gil_scoped_release release;
    return scan_csv(cfg);
  }, py::arg("config_text"), "Scan CSV for a `key = value` config text.");
}
