#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cofactor_lab/chain.hpp"
#include "cofactor_lab/dynamics.hpp"
#include "cofactor_lab/report.hpp"
#include "cofactor_lab/separation.hpp"
#include "cofactor_lab/spec_io.hpp"

namespace py = pybind11;
using namespace coflab;

namespace {

Bindings dict_to_bindings(const py::dict& d) {
  Bindings b;
  for (auto item : d) b.set(py::cast<std::string>(item.first), py::cast<double>(item.second));
  return b;
}

py::list mat_to_list(const MatD& m) {
  py::list rows;
  for (int i = 0; i < m.rows(); ++i) {
    py::list row;
    for (int j = 0; j < m.cols(); ++j) row.append(m(i, j));
    rows.append(row);
  }
  return rows;
}

MatD list_to_mat(const std::vector<std::vector<double>>& rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r > 0 ? static_cast<int>(rows[0].size()) : 0;
  MatD m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rows[i][j];
  return m;
}

py::dict run_to_dict(const RunResult& res) {
  py::dict out;
  out["report"] = py::module_::import("json").attr("loads")(res.report.dump());
  out["csv"] = res.csv;
  out["exit_code"] = res.exit_code;
  return out;
}

RunOptions options_from_kwargs(std::optional<std::uint64_t> seed, std::optional<int> points,
                               std::optional<double> t_end) {
  RunOptions o;
  o.seed = seed;
  o.points = points;
  o.t_end = t_end;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "cofactor-lab core: driven cofactor systems, integral families, separation";

  py::register_exception<SpecError>(mod, "SpecError");
  py::register_exception<ExprError>(mod, "ExprError");

  // expression layer
  mod.def("eval_expr", [](const std::string& text, const py::dict& bindings) {
    return parse_expr(text).eval(dict_to_bindings(bindings));
  });
  mod.def("diff_expr", [](const std::string& text, const std::string& var) {
    return parse_expr(text).diff(var).str();
  });
  mod.def("parse_expr", [](const std::string& text) { return parse_expr(text).str(); });

  // numeric helpers
  mod.def("cofactor", [](const std::vector<std::vector<double>>& m) {
    return mat_to_list(adjugate(list_to_mat(m)));
  });

  py::class_<SystemSpec>(mod, "SystemSpec")
      .def_readonly("m", &SystemSpec::m)
      .def_readonly("n", &SystemSpec::n)
      .def_readonly("coords", &SystemSpec::coords)
      .def("adapted", &SystemSpec::metric_block_adapted);

  mod.def("load_spec", &load_spec_file, py::arg("path"));
  mod.def("load_spec_json", &load_spec_json, py::arg("text"));

  mod.def(
      "verify",
      [](const SystemSpec& spec, std::optional<std::uint64_t> seed, std::optional<int> points) {
        return run_to_dict(run_verify(spec, options_from_kwargs(seed, points, std::nullopt)));
      },
      py::arg("spec"), py::arg("seed") = std::nullopt, py::arg("points") = std::nullopt);
  mod.def(
      "integrate",
      [](const SystemSpec& spec, std::optional<std::uint64_t> seed, std::optional<double> t_end) {
        return run_to_dict(run_integrate(spec, options_from_kwargs(seed, std::nullopt, t_end)));
      },
      py::arg("spec"), py::arg("seed") = std::nullopt, py::arg("t_end") = std::nullopt);
  mod.def(
      "separate",
      [](const SystemSpec& spec, std::optional<std::uint64_t> seed, std::optional<double> t_end) {
        return run_to_dict(run_separate(spec, options_from_kwargs(seed, std::nullopt, t_end)));
      },
      py::arg("spec"), py::arg("seed") = std::nullopt, py::arg("t_end") = std::nullopt);

  // pointwise operations
  mod.def("sckt_residual", [](const SystemSpec& spec, const std::vector<double>& q) {
    ScktPointResult r = sckt_residual(spec.g, spec.j, spec.bind(q));
    py::dict d;
    d["residual"] = r.residual;
    d["alpha"] = r.alpha;
    return d;
  });
  mod.def("nijenhuis_norm", [](const SystemSpec& spec, const std::vector<double>& q) {
    return nijenhuis_norm(spec.j, spec.bind(q));
  });
  mod.def("jbar", [](const SystemSpec& spec, const std::vector<double>& q) {
    CofactorChain chain(spec);
    return mat_to_list(chain.jbar_at(q));
  });
  mod.def("delta_coeffs", [](const SystemSpec& spec, const std::vector<double>& q) {
    CofactorChain chain(spec);
    return chain.delta_at(q);
  });
  mod.def("eigenfunctions", [](const SystemSpec& spec, const std::vector<double>& q) {
    CofactorChain chain(spec);
    return eigen_at(spec, chain, q).u;
  });
  mod.def("jacobi_endomorphism",
          [](const SystemSpec& spec, const std::vector<double>& q, const std::vector<double>& v) {
            return mat_to_list(jacobi_endomorphism(spec, q, v));
          });
  mod.def("integral_values", [](const SystemSpec& spec, const std::vector<double>& q,
                                const std::vector<double>& p) {
    CofactorChain chain(spec);
    IntegralFamily family(spec, chain);
    std::vector<double> out;
    for (int i = 1; i <= family.count(); ++i) out.push_back(family.value(i, PhasePoint{q, p}));
    return out;
  });
}
