#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mcarsense/errors.hpp"
#include "mcarsense/io.hpp"
#include "mcarsense/sensitivity.hpp"
#include "mcarsense/simulation.hpp"

namespace py = pybind11;
using namespace mcarsense;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

RunConfig config_from(const std::string& json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text.empty() ? "{}" : json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(e.what());
  }
  return parse_run_config(doc);
}

ObservedDataset dataset_from(const std::vector<double>& x, const std::vector<int>& r) {
  if (x.size() != r.size()) throw DataError("x and r must have the same length");
  std::vector<Record> recs(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) recs[i] = {x[i], r[i]};
  return ObservedDataset(std::move(recs));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian sensitivity analysis for outcomes missing not at random";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<BoundaryError>(m, "BoundaryError", PyExc_ValueError);
  py::register_exception<MixingError>(m, "MixingError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("normalize_config", [](const std::string& cfg) { return to_json(config_from(cfg)).dump(); },
        py::arg("config_json") = "{}", "Validate a run configuration and return it with defaults filled in.");

  m.def(
      "scenario_constants",
      [](const std::string& cfg) {
        const RunConfig rc = config_from(cfg);
        const double c = compute_c(rc.fit.scenario);
        py::dict d;
        d["c"] = c;
        d["eta"] = true_eta(rc.fit.scenario, c);
        d["truth"] = true_functional(rc.fit.scenario, rc.fit.g);
        d["efficiency_bound"] = efficiency_bound_truth(rc.fit.scenario, c, rc.fit.g);
        return d;
      },
      py::arg("config_json") = "{}");

  m.def(
      "generate_dataset",
      [](std::size_t n, std::uint64_t seed, const std::string& cfg) {
        const RunConfig rc = config_from(cfg);
        RngStream rng(seed, 0);
        const ObservedDataset data = generate_dataset(rc.fit.scenario, n, rng);
        std::vector<double> x;
        std::vector<int> r;
        for (const auto& rec : data.records()) {
          x.push_back(rec.x);
          r.push_back(rec.r);
        }
        return py::make_tuple(to_array(x), py::array_t<int>(r.size(), r.data()));
      },
      py::arg("n"), py::arg("seed") = 1, py::arg("config_json") = "{}");

  m.def(
      "fit",
      [](const std::vector<double>& x, const std::vector<int>& r, std::uint64_t seed, const std::string& cfg) {
        const RunConfig rc = config_from(cfg);
        const ObservedDataset data = dataset_from(x, r);
        PosteriorDraws d;
        {
          py::gil_scoped_release release;
          RngStream rng(seed, 0);
          d = fit_dataset(rc.fit, data, rng);
        }
        py::dict out;
        out["engine"] = d.engine;
        out["functional"] = to_array(d.functional);
        out["alpha"] = to_array(d.alpha);
        out["eta"] = to_array(d.eta);
        out["acceptance_rate"] = d.acceptance_rate;
        out["summary"] = summarize_draws(d, rc.level).dump();
        return out;
      },
      py::arg("x"), py::arg("r"), py::arg("seed") = 1, py::arg("config_json") = "{}");

  m.def(
      "propensity_curve",
      [](double eta, double alpha, double c, const std::vector<double>& y) {
        return to_array(propensity_curve(eta, SensitivitySpec{alpha, c}, y));
      },
      py::arg("eta"), py::arg("alpha"), py::arg("c"), py::arg("y_grid"));

  m.def(
      "credible_interval",
      [](const std::vector<double>& draws, double level) {
        const Interval ci = credible_interval(draws, level);
        return py::make_tuple(ci.lower, ci.upper);
      },
      py::arg("draws"), py::arg("level") = 0.90);

  m.def(
      "run_coverage",
      [](const std::string& cfg) {
        const RunConfig rc = config_from(cfg);
        CoverageOptions opt;
        opt.ns = rc.ns;
        opt.reps = rc.reps;
        opt.base_seed = rc.seed;
        opt.level = rc.level;
        opt.threads = rc.threads;
        CoverageReport rep;
        {
          py::gil_scoped_release release;
          rep = run_coverage(rc.fit, opt);
        }
        return to_json(rep).dump();
      },
      py::arg("config_json"));

  m.def("dataset_csv", [](const std::vector<double>& x, const std::vector<int>& r) {
    return format_dataset_csv(dataset_from(x, r));
  });
}
