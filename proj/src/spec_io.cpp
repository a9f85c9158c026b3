#include "cofactor_lab/spec_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace coflab {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw SpecError("spec error at " + where + ": " + what);
}

Expr parse_at(const json& j, const std::string& where) {
  if (!j.is_string()) {
    if (j.is_number()) return Expr::constant(j.get<double>());
    fail(where, "expected an expression string");
  }
  try {
    return parse_expr(j.get<std::string>());
  } catch (const ParseError& e) {
    fail(where, e.what());
  }
}

ExprMatrix parse_matrix(const json& j, int rows, int cols, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    fail(where, "expected " + std::to_string(rows) + " rows");
  ExprMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols)
      fail(where + "[" + std::to_string(r) + "]", "expected " + std::to_string(cols) + " entries");
    for (int c = 0; c < cols; ++c)
      m(r, c) = parse_at(j[r][c], where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  }
  return m;
}

VecD parse_vecd(const json& j, int len, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != len)
    fail(where, "expected " + std::to_string(len) + " numbers");
  VecD v(len);
  for (int i = 0; i < len; ++i) {
    if (!j[i].is_number()) fail(where, "entry " + std::to_string(i) + " is not a number");
    v[i] = j[i].get<double>();
  }
  return v;
}

}  // namespace

SystemSpec load_spec_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("spec is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SpecError("spec root must be an object");

  SystemSpec spec;
  if (!doc.contains("dims") || !doc["dims"].contains("m") || !doc["dims"].contains("n"))
    fail("dims", "need dims.m and dims.n");
  spec.m = doc["dims"]["m"].get<int>();
  spec.n = doc["dims"]["n"].get<int>();
  if (spec.m < 1 || spec.n < 1) fail("dims", "m and n must be positive");
  const int nn = spec.dim();

  if (!doc.contains("coords")) fail("coords", "missing");
  for (const auto& c : doc["coords"]) spec.coords.push_back(c.get<std::string>());
  if (static_cast<int>(spec.coords.size()) != nn)
    fail("coords", "expected m+n = " + std::to_string(nn) + " names");

  if (doc.contains("params")) {
    for (auto it = doc["params"].begin(); it != doc["params"].end(); ++it) {
      if (!it.value().is_number()) fail("params." + it.key(), "not a number");
      spec.params.set(it.key(), it.value().get<double>());
    }
  }

  if (!doc.contains("metric")) fail("metric", "missing");
  ExprMatrix gm = parse_matrix(doc["metric"], nn, nn, "metric");
  spec.g = MetricField(gm, spec.coords);

  if (!doc.contains("J")) fail("J", "missing");
  ExprMatrix jm = parse_matrix(doc["J"], nn, nn, "J");
  const bool covariant = doc.value("covariant_J", false);
  if (covariant) {
    if (nn > 4) fail("covariant_J", "symbolic conversion limited to dimension 4");
    jm = expr_inverse(gm) * jm;  // J^a_b = g^{ac} J_{cb}
  }
  spec.j = TensorField11(jm, spec.coords);

  if (!doc.contains("base_point")) fail("base_point", "missing");
  spec.base_point = parse_vecd(doc["base_point"], nn, "base_point");
  if (!doc.contains("sample_box") || !doc["sample_box"].contains("lo") ||
      !doc["sample_box"].contains("hi"))
    fail("sample_box", "need lo and hi arrays");
  spec.box_lo = parse_vecd(doc["sample_box"]["lo"], nn, "sample_box.lo");
  spec.box_hi = parse_vecd(doc["sample_box"]["hi"], nn, "sample_box.hi");
  for (int i = 0; i < nn; ++i)
    if (!(spec.box_lo[i] < spec.box_hi[i])) fail("sample_box", "lo must be below hi");

  spec.seed = doc.value("seed", static_cast<std::uint64_t>(1));
  spec.default_points = doc.value("points", 100);

  // forces: either a full N-vector, or driving_forces + potential
  if (doc.contains("forces")) {
    if (static_cast<int>(doc["forces"].size()) != nn) fail("forces", "expected m+n entries");
    for (int i = 0; i < nn; ++i)
      spec.mu.push_back(parse_at(doc["forces"][i], "forces[" + std::to_string(i) + "]"));
    if (doc.contains("potential"))
      spec.potential = parse_at(doc["potential"], "potential");
  } else if (doc.contains("potential") && doc.contains("driving_forces")) {
    if (static_cast<int>(doc["driving_forces"].size()) != spec.m)
      fail("driving_forces", "expected m entries");
    Expr v = parse_at(doc["potential"], "potential");
    spec.potential = v;
    for (int i = 0; i < spec.m; ++i)
      spec.mu.push_back(parse_at(doc["driving_forces"][i], "driving_forces[" + std::to_string(i) + "]"));
    for (int a = 0; a < spec.n; ++a)
      spec.mu.push_back(Expr::constant(0.0) - v.diff(spec.coords[spec.m + a]));
  } else {
    fail("forces", "need either 'forces' or 'potential' + 'driving_forces'");
  }

  if (doc.contains("integration")) {
    const auto& I = doc["integration"];
    const std::string method = I.value("method", std::string("rk4"));
    if (method == "rk4") spec.integration.method = IntegrationControl::Method::RK4;
    else if (method == "rk45") spec.integration.method = IntegrationControl::Method::RK45;
    else fail("integration.method", "expected 'rk4' or 'rk45'");
    spec.integration.dt = I.value("dt", 1e-3);
    spec.integration.rtol = I.value("rtol", 1e-8);
    spec.integration.t_end = I.value("t_end", 10.0);
    spec.integration.output_stride = I.value("output_stride", 10);
    if (spec.integration.dt <= 0.0) fail("integration.dt", "must be positive");
    if (spec.integration.output_stride < 1) fail("integration.output_stride", "must be >= 1");
  }

  if (doc.contains("initial_state"))
    spec.initial_state = parse_vecd(doc["initial_state"], 2 * nn, "initial_state");

  if (doc.contains("K_basis")) {
    const auto& kb = doc["K_basis"];
    if (!kb.is_array() || kb.empty()) fail("K_basis", "expected a list of vectors");
    MatD basis(nn, static_cast<int>(kb.size()));
    for (int c = 0; c < static_cast<int>(kb.size()); ++c) {
      VecD col = parse_vecd(kb[c], nn, "K_basis[" + std::to_string(c) + "]");
      for (int r = 0; r < nn; ++r) basis(r, c) = col[r];
    }
    spec.k_basis = basis;
  }

  if (doc.contains("path_waypoints")) {
    for (std::size_t k = 0; k < doc["path_waypoints"].size(); ++k)
      spec.waypoints.push_back(
          parse_vecd(doc["path_waypoints"][k], nn, "path_waypoints[" + std::to_string(k) + "]"));
  }

  // sanity: all expressions evaluate at the base point, and J is g-symmetric
  // over a few seeded sample points
  Bindings b0 = spec.bind(spec.base_point);
  for (int i = 0; i < nn; ++i) {
    try {
      spec.mu[i].eval(b0);
    } catch (const EvalError& e) {
      fail("forces[" + std::to_string(i) + "]", e.what());
    }
  }
  auto pts = spec.sample_points(7, spec.seed);
  double sym = spec.j.g_symmetry_residual(spec.g, spec.bind_all(pts));
  double scale = 1.0;
  for (const auto& q : pts) scale = std::max(scale, spec.j.eval(spec.bind(q)).max_abs());
  if (sym > 1e-8 * scale)
    throw SpecError("J is not g-symmetric (residual " + std::to_string(sym) + ")");
  return spec;
}

SystemSpec load_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open spec file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_spec_json(ss.str());
}

}  // namespace coflab
