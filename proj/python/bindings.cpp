#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "libmlab/config.hpp"
#include "libmlab/errors.hpp"
#include "libmlab/expr.hpp"
#include "libmlab/harness.hpp"
#include "libmlab/model.hpp"

namespace py = pybind11;
using namespace libmlab;

namespace {

using Rows = std::vector<std::vector<double>>;

Rows to_rows(const Mat2& m) { return {{m.a11, m.a12}, {m.a21, m.a22}}; }

Mat2 from_rows(const Rows& r) {
  if (r.size() != 2 || r[0].size() != 2 || r[1].size() != 2)
    throw InvalidArgument("expected a 2x2 nested list");
  return {r[0][0], r[0][1], r[1][0], r[1][1]};
}

ExperimentConfig config_from(const std::string& text) {
  return parse_config(nlohmann::json::parse(text.empty() ? "{}" : text));
}

py::dict fields_dict(const std::vector<double>& times, const std::vector<double>& grid,
                     const std::vector<DensityField>& f) {
  Rows r1, r2;
  for (const auto& s : f) {
    r1.push_back(s.rho1);
    r2.push_back(s.rho2);
  }
  py::dict d;
  d["t"] = times;
  d["x"] = grid;
  d["rho1"] = r1;
  d["rho2"] = r2;
  return d;
}

}  // namespace

PYBIND11_MODULE(_libmlab, m) {
  m.doc() = "Two-species locally interacting Brownian motions: closed forms, PDE and particles";
  m.attr("__version__") = version_string;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DegenerateDenominator>(m, "DegenerateDenominator", PyExc_ArithmeticError);
  py::register_exception<ConstraintViolation>(m, "ConstraintViolation", PyExc_ValueError);
  py::register_exception<SimulationAbort>(m, "SimulationAbort", PyExc_RuntimeError);

  m.def("diffusion_matrix",
        [](double rho1, double rho2, double s1, double s2, double lambda) {
          return to_rows(diffusion_matrix({rho1, rho2}, {s1, s2, lambda, 1}));
        },
        py::arg("rho1"), py::arg("rho2"), py::arg("sigma1_sq"), py::arg("sigma2_sq"),
        py::arg("lam"));
  m.def("two_color_matrix",
        [](double rho1, double rho2, double lambda) {
          return to_rows(two_color_matrix({rho1, rho2}, lambda));
        },
        py::arg("rho1"), py::arg("rho2"), py::arg("lam"));
  m.def("ms_ternary_matrix",
        [](double u1, double u2, double d12, double d13, double d23) {
          return to_rows(ms_ternary_matrix(u1, u2, {d12, d13, d23}));
        },
        py::arg("u1"), py::arg("u2"), py::arg("d12"), py::arg("d13"), py::arg("d23"));
  m.def("is_normally_elliptic",
        [](const Rows& r) { return is_normally_elliptic(from_rows(r)); });

  m.def("eval_expr",
        [](const std::string& text, const std::vector<double>& xs) {
          const auto e = expr::parse(text);
          std::vector<double> out;
          out.reserve(xs.size());
          for (double x : xs) out.push_back(e.eval(x));
          return out;
        },
        py::arg("text"), py::arg("xs"));

  m.def("canonical_config",
        [](const std::string& text) { return canonical_text(config_from(text)); },
        py::arg("config_json") = "");

  m.def("solve",
        [](const std::string& text) {
          const auto cfg = config_from(text);
          Trajectory tr;
          {
            py::gil_scoped_release release;
            tr = run_pde(cfg);
          }
          return fields_dict(cfg.snapshot_times(), Grid1D{cfg.pde.cells}.centers(),
                             tr.snapshots);
        },
        py::arg("config_json") = "");

  m.def("ensemble_mean",
        [](const std::string& text, std::uint64_t seed, int threads) {
          const auto cfg = config_from(text);
          Ensemble e;
          {
            py::gil_scoped_release release;
            e = run_ensemble(cfg, cfg.model.n, seed, threads);
          }
          std::vector<DensityField> mean;
          for (std::size_t s = 0; s < e.times.size(); ++s) {
            DensityField f(std::vector<double>(e.grid.size()), std::vector<double>(e.grid.size()));
            for (const auto& r : e.replicas)
              for (std::size_t i = 0; i < e.grid.size(); ++i) {
                f.rho1[i] += r.fields[s].rho1[i] / e.replicas.size();
                f.rho2[i] += r.fields[s].rho2[i] / e.replicas.size();
              }
            mean.push_back(std::move(f));
          }
          return fields_dict(e.times, e.grid, mean);
        },
        py::arg("config_json") = "", py::arg("seed") = 1, py::arg("threads") = 1);
}
