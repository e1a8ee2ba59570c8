#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "aoc/bounds.hpp"
#include "aoc/report.hpp"
#include "aoc/scenario.hpp"
#include "aoc/sim.hpp"

namespace py = pybind11;
using namespace aoc;

PYBIND11_MODULE(_core, m) {
  m.doc() = "age-of-information bounds from min-plus network calculus";

  py::register_exception<ScenarioError>(m, "ScenarioError");

  py::class_<PeriodicSource>(m, "PeriodicSource")
      .def(py::init<double, double, double>(), py::arg("l_kb"), py::arg("w_ms"),
           py::arg("phase_ms") = 0.0)
      .def_readonly("l", &PeriodicSource::l)
      .def_readonly("w", &PeriodicSource::w)
      .def_readonly("phase", &PeriodicSource::phase);

  py::class_<PoissonSource>(m, "PoissonSource")
      .def(py::init<double, double>(), py::arg("l_kb"), py::arg("w_ms"))
      .def_readonly("l", &PoissonSource::l)
      .def_readonly("w", &PoissonSource::w);

  py::class_<MarkovOnOff>(m, "MarkovOnOff")
      .def(py::init<double, double, double>(), py::arg("lambda_per_ms"), py::arg("mu_per_ms"),
           py::arg("c_kb_ms"))
      .def_property_readonly("p_on", &MarkovOnOff::p_on)
      .def_property_readonly("gamma", &MarkovOnOff::gamma)
      .def_property_readonly("beta", &MarkovOnOff::beta)
      .def_readonly("c", &MarkovOnOff::c);
  m.def("markov_from_stats", &markov_from_stats, py::arg("p_on"), py::arg("gamma_kb_ms"),
        py::arg("beta_ms"), "invert (p_on, mean rate, mean cycle) into chain rates");

  py::class_<BoundParams>(m, "BoundParams")
      .def_readonly("theta", &BoundParams::theta)
      .def_readonly("r", &BoundParams::r)
      .def_readonly("tau0", &BoundParams::tau0)
      .def_readonly("b", &BoundParams::b);

  py::class_<BoundResult>(m, "BoundResult")
      .def_readonly("feasible", &BoundResult::feasible)
      .def_readonly("delta_eps", &BoundResult::delta_eps)
      .def_readonly("v_eps", &BoundResult::v_eps)
      .def_readonly("params", &BoundResult::params)
      .def_readonly("congestion_ms", &BoundResult::congestion_ms)
      .def_readonly("idle_ms", &BoundResult::idle_ms)
      .def_readonly("latency_ms", &BoundResult::latency_ms)
      .def_readonly("eps_over", &BoundResult::eps_over)
      .def_readonly("eps_under", &BoundResult::eps_under)
      .def("__repr__", [](const BoundResult& r) {
        return "BoundResult(feasible=" + std::string(r.feasible ? "True" : "False") +
               ", delta_eps=" + fmt_num(r.delta_eps) + ", v_eps=" + fmt_num(r.v_eps) + ")";
      });

  m.def(
      "bound_periodic",
      [](const PeriodicSource& src, const MarkovOnOff& ch, double eps) {
        return optimize_periodic_bound(src, markov_mgf_envelope(ch), eps);
      },
      py::arg("source"), py::arg("channel"), py::arg("epsilon"),
      "statistical AoI/delay bound for a periodic source over a Markov on-off channel");
  m.def(
      "bound_priority",
      [](const PeriodicSource& src, const MarkovOnOff& ch, int m_flows, double eps) {
        return priority_aoi_bound(src, markov_mgf_envelope(ch), m_flows, eps);
      },
      py::arg("source"), py::arg("channel"), py::arg("m"), py::arg("epsilon"),
      "bound for the lowest-priority flow under m iid higher-priority copies");
  m.def("bound_poisson", &optimize_random_arrivals_bound, py::arg("source"), py::arg("c_kb_ms"),
        py::arg("t0_ms"), py::arg("epsilon"),
        "statistical AoI/delay bound for a Poisson source over a rate-c server");
  m.def("bound_deterministic", &deterministic_periodic_bound, py::arg("source"),
        py::arg("rate_kb_ms"), py::arg("latency_ms"), py::arg("eta") = 0.0,
        "worst-case closed form over a latency-rate server");

  py::class_<QuantileRun>(m, "QuantileRun")
      .def_readonly("peaks", &QuantileRun::peaks)
      .def_readonly("delays", &QuantileRun::delays)
      .def_readonly("informative", &QuantileRun::informative)
      .def_readonly("total", &QuantileRun::total)
      .def_readonly("horizon_used", &QuantileRun::horizon_used);

  m.def(
      "simulate_periodic_markov",
      [](const PeriodicSource& src, const MarkovOnOff& ch, std::uint64_t target,
         std::uint64_t seed, double error_p, int error_run_cap) {
        return run_periodic_markov_fcfs(src, ch, target, seed, {error_p, error_run_cap});
      },
      py::arg("source"), py::arg("channel"), py::arg("target_informative"), py::arg("seed"),
      py::arg("error_p") = 0.0, py::arg("error_run_cap") = 0,
      "streaming FCFS simulation; returns peak-AoI and delay samples");

  m.def("empirical_quantile", &empirical_quantile, py::arg("values"), py::arg("q"),
        "nearest-rank-upper empirical quantile");
  m.def("quantile_reliable", &quantile_reliable, py::arg("n"), py::arg("q"));

  m.def(
      "preset_files",
      [](const std::string& name, bool deterministic) {
        RunOptions opt;
        opt.deterministic = deterministic;
        py::dict files;
        for (const auto& [fname, content] : run_preset(name, opt).files)
          files[py::str(fname)] = py::bytes(content);
        return files;
      },
      py::arg("name"), py::arg("deterministic") = true,
      "run a built-in preset and return its output files as a dict");
}
