#include "cofactor_lab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "cofactor_lab/dynamics.hpp"
#include "cofactor_lab/numerics.hpp"
#include "cofactor_lab/separation.hpp"

namespace coflab {

OrderedJson check_entry(double value, double tolerance, bool pass) {
  OrderedJson j;
  j["value"] = value;
  j["tolerance"] = tolerance;
  j["pass"] = pass;
  return j;
}

OrderedJson check_entry_le(double value, double tolerance) {
  return check_entry(value, tolerance, value <= tolerance);
}

std::string format_csv_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

constexpr double kScktTol = 1e-10;
constexpr double kNijenhuisTol = 1e-9;
constexpr double kClosednessTol = 1e-9;
constexpr double kInvarianceTol = 1e-12;
constexpr double kChainIdentityTol = 1e-8;
constexpr double kDriftTol = 1e-6;

struct Effective {
  std::uint64_t seed;
  int points;
  double t_end;
  IntegrationControl control;
};

Effective effective(const SystemSpec& spec, const RunOptions& opts) {
  Effective e;
  e.seed = opts.seed.value_or(spec.seed);
  e.points = opts.points.value_or(spec.default_points);
  e.control = spec.integration;
  if (opts.dt) {
    e.control.dt = *opts.dt;
    e.control.method = IntegrationControl::Method::RK4;
  }
  if (opts.rtol) {
    e.control.rtol = *opts.rtol;
    e.control.method = IntegrationControl::Method::RK45;
  }
  e.t_end = opts.t_end.value_or(e.control.t_end);
  return e;
}

bool collect(OrderedJson& section, const char* key, const OrderedJson& entry, bool& all_pass) {
  section[key] = entry;
  const bool p = entry.at("pass").get<bool>();
  if (!p) all_pass = false;
  return p;
}

OrderedJson matrix_json(const MatD& m) {
  OrderedJson rows = OrderedJson::array();
  for (int i = 0; i < m.rows(); ++i) {
    OrderedJson row = OrderedJson::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

PhasePoint phase_from_state(const VecD& state, int nn) {
  return PhasePoint{VecD(state.begin(), state.begin() + nn),
                    VecD(state.begin() + nn, state.end())};
}

std::vector<PhasePoint> sample_phase_points(const SystemSpec& spec, int count,
                                            std::uint64_t seed) {
  auto qs = spec.sample_points(count, seed);
  SampleRng rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<PhasePoint> out;
  out.reserve(qs.size());
  for (const auto& q : qs) {
    VecD p(spec.dim());
    for (int i = 0; i < spec.dim(); ++i) p[i] = rng.uniform(-2.0, 2.0);
    out.push_back({q, p});
  }
  return out;
}

}  // namespace

RunResult run_verify(const SystemSpec& spec, const RunOptions& opts) {
  Effective eff = effective(spec, opts);
  auto qs = spec.sample_points(eff.points, eff.seed);
  auto pts = spec.bind_all(qs);

  RunResult result;
  OrderedJson& rep = result.report;
  rep["tool"] = "cofactor-lab";
  rep["command"] = "verify";
  rep["seed"] = eff.seed;
  rep["points"] = eff.points;
  const bool adapted = spec.metric_block_adapted();
  rep["adapted"] = adapted;
  bool all_pass = true;

  // scKt section
  {
    OrderedJson sec;
    ScktReport sr = sckt_report(spec.g, spec.j, pts);
    collect(sec, "residual", check_entry_le(sr.max_residual, kScktTol), all_pass);
    collect(sec, "nijenhuis", check_entry_le(sr.max_nijenhuis, kNijenhuisTol), all_pass);
    OrderedJson alpha = OrderedJson::array();
    for (double a : sr.alpha_sample) alpha.push_back(a);
    sec["alpha_sample"] = alpha;
    OrderedJson worst;
    for (const auto& [k, v] : sr.worst_point.items())
      if (std::find(spec.coords.begin(), spec.coords.end(), k) != spec.coords.end())
        worst[k] = v;
    sec["worst_point"] = worst;
    rep["sections"]["sckt"] = sec;
  }

  // D_J mu closedness
  {
    OrderedJson sec;
    const double r = dj_mu_closedness(spec.g, spec.j, spec.mu, pts);
    collect(sec, "closedness", check_entry_le(r, kClosednessTol), all_pass);
    rep["sections"]["dj_mu"] = sec;
  }

  // Jacobi endomorphism / K invariance (when a candidate K is declared)
  if (spec.k_basis) {
    OrderedJson sec;
    SampleRng vrng(eff.seed + 23);
    std::vector<MatD> phis;
    MatD phi0;
    double constant_dev = 0.0;
    for (const auto& q : qs) {
      VecD v(spec.dim());
      for (int i = 0; i < spec.dim(); ++i) v[i] = vrng.uniform(-1.0, 1.0);
      MatD phi = jacobi_endomorphism(spec, q, v);
      if (phis.empty()) phi0 = phi;
      constant_dev = std::max(constant_dev, (phi - phi0).max_abs());
      phis.push_back(std::move(phi));
    }
    sec["phi_sample"] = matrix_json(phi0);
    sec["phi_constant_deviation"] = constant_dev;
    const double inv = invariant_distribution_check(phis, *spec.k_basis);
    collect(sec, "invariance", check_entry_le(inv, kInvarianceTol), all_pass);
    rep["sections"]["phi_k"] = sec;
  }

  // Definition-2 structure checks need adapted coordinates
  if (adapted) {
    OrderedJson sec;
    StructureReport sr = verify_driven_structure(spec, qs);
    OrderedJson checks;
    for (const auto& c : sr.checks) {
      const bool bigger = c.name == "coupling_witness";
      OrderedJson e = check_entry(c.value, c.tolerance, c.pass);
      if (bigger) e["direction"] = "above";
      checks[c.name] = e;
      if (!c.pass) all_pass = false;
    }
    sec["checks"] = checks;
    if (!sr.coupling_witness_point.empty()) {
      OrderedJson w = OrderedJson::array();
      for (double v : sr.coupling_witness_point) w.push_back(v);
      sec["coupling_witness_point"] = w;
    }
    sec["pass"] = sr.all_pass;
    rep["sections"]["structure"] = sec;

    // chain identities; the block dependence pattern gates the section
    OrderedJson chain_sec;
    CofactorChain chain(spec);
    try {
      validate_block_dependence(chain.split(), pts);
      chain_sec["dependence_pattern"] = check_entry(0.0, 1e-9, true);
      ChainIdentityResiduals worst;
      double worst_rel = -1.0;
      OrderedJson delta_sample = OrderedJson::array();
      std::vector<ChainIdentityResiduals> rs(qs.size());
      std::vector<VecD> deltas(qs.size());
      parallel_for(static_cast<int>(qs.size()), [&](int k) {
        ChainBlocks cb = chain.blocks_at(qs[k]);
        rs[k] = chain_identity_residuals(cb);
        deltas[k] = cb.delta;
      });
      for (std::size_t k = 0; k < qs.size(); ++k) {
        if (rs[k].max_rel() > worst_rel) {
          worst_rel = rs[k].max_rel();
          worst = rs[k];
        }
      }
      for (double dv : deltas[0]) delta_sample.push_back(dv);
      chain_sec["delta_sample"] = delta_sample;
      collect(chain_sec, "id12", check_entry_le(worst.id12 / worst.scale, kChainIdentityTol),
              all_pass);
      collect(chain_sec, "id3", check_entry_le(worst.id3 / worst.scale, kChainIdentityTol),
              all_pass);
      collect(chain_sec, "id4", check_entry_le(worst.id4 / worst.scale, kChainIdentityTol),
              all_pass);
      collect(chain_sec, "jbar_commutes",
              check_entry_le(worst.commute / worst.scale, kChainIdentityTol), all_pass);
      collect(chain_sec, "recursion",
              check_entry_le(worst.recursion / worst.scale, kChainIdentityTol), all_pass);
      collect(chain_sec, "cayley_hamilton",
              check_entry_le(worst.cayley / worst.scale, kChainIdentityTol), all_pass);
      collect(chain_sec, "det_factorization",
              check_entry_le(worst.det_fact / worst.scale, kChainIdentityTol), all_pass);
      collect(chain_sec, "reassembly",
              check_entry_le(worst.reassembly / worst.scale, kChainIdentityTol), all_pass);
    } catch (const DependenceError& e) {
      chain_sec["dependence_pattern"] = check_entry(1.0, 1e-9, false);
      chain_sec["dependence_message"] = e.what();
      all_pass = false;
    }
    rep["sections"]["chain"] = chain_sec;
  } else {
    rep["sections"]["structure"] = {{"skipped", "coordinates are not adapted (metric not "
                                                "block-diagonal); supply an adapted fixture"}};
  }

  rep["pass"] = all_pass;
  result.exit_code = all_pass ? kExitPass : kExitCheckFailure;
  return result;
}

RunResult run_integrate(const SystemSpec& spec, const RunOptions& opts) {
  Effective eff = effective(spec, opts);
  RunResult result;
  OrderedJson& rep = result.report;
  rep["tool"] = "cofactor-lab";
  rep["command"] = "integrate";
  rep["seed"] = eff.seed;

  if (!spec.initial_state) throw SpecError("integrate requires initial_state in the spec file");
  const int nn = spec.dim();
  PhasePoint z0 = phase_from_state(*spec.initial_state, nn);

  CofactorChain chain(spec);
  IntegralFamily family(spec, chain);
  const int count = family.count();

  std::ostringstream csv;
  csv << "t";
  for (int i = 1; i <= nn; ++i) csv << ",q" << i;
  for (int i = 1; i <= nn; ++i) csv << ",p" << i;
  for (int i = 1; i <= count; ++i) csv << ",H_" << i;
  csv << "\n";

  rep["t_end"] = eff.t_end;
  if (eff.t_end <= 0.0) {
    rep["steps"] = 0;
    rep["aborted"] = false;
    rep["drift"] = OrderedJson::array();
    rep["pass"] = true;
    result.csv = csv.str();
    result.exit_code = kExitPass;
    return result;
  }

  Trajectory traj = integrate(spec, z0, eff.t_end, eff.control, &family);
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    csv << format_csv_value(traj.t[k]);
    for (int i = 0; i < nn; ++i) csv << "," << format_csv_value(traj.z[k].q[i]);
    for (int i = 0; i < nn; ++i) csv << "," << format_csv_value(traj.z[k].p[i]);
    for (int i = 0; i < count; ++i) csv << "," << format_csv_value(traj.integrals[k][i]);
    csv << "\n";
  }
  result.csv = csv.str();

  rep["method"] = eff.control.method == IntegrationControl::Method::RK4 ? "rk4" : "rk45";
  rep["dt"] = eff.control.dt;
  rep["steps"] = traj.steps;
  rep["aborted"] = traj.aborted;
  if (traj.aborted) rep["abort_time"] = traj.abort_time;
  bool all_pass = !traj.aborted;
  OrderedJson drift = OrderedJson::array();
  for (int i = 0; i < count; ++i) {
    OrderedJson d;
    d["integral"] = "H_" + std::to_string(i + 1);
    d["max_relative_drift"] = check_entry_le(traj.max_drift[i], kDriftTol);
    if (traj.max_drift[i] > kDriftTol) all_pass = false;
    drift.push_back(d);
  }
  rep["drift"] = drift;
  rep["pass"] = all_pass;
  result.exit_code = traj.aborted ? kExitNumericAbort : (all_pass ? kExitPass : kExitCheckFailure);
  return result;
}

RunResult run_separate(const SystemSpec& spec, const RunOptions& opts) {
  Effective eff = effective(spec, opts);
  RunResult result;
  OrderedJson& rep = result.report;
  rep["tool"] = "cofactor-lab";
  rep["command"] = "separate";
  rep["seed"] = eff.seed;
  rep["probe_grid"] = opts.probe_grid_label;

  if (!spec.initial_state) throw SpecError("separate requires initial_state in the spec file");
  if (!spec.metric_block_adapted())
    throw SpecError("separate requires adapted coordinates (block metric)");

  auto qs = spec.sample_points(std::min(eff.points, 25), eff.seed);

  // the driven-structure gate: refuse on failure, pointing at verify
  StructureReport sr = verify_driven_structure(spec, qs);
  if (!sr.all_pass) {
    rep["structure_gate"] = false;
    rep["failure"] = "driven-structure condition '" + sr.failure +
                     "' failed; run `cofactor-lab verify` for the full report";
    rep["pass"] = false;
    result.exit_code = kExitCheckFailure;
    return result;
  }
  rep["structure_gate"] = true;

  CofactorChain chain(spec);
  IntegralFamily family(spec, chain);
  const int nn = spec.dim(), m = spec.m, n = spec.n;
  PhasePoint z0 = phase_from_state(*spec.initial_state, nn);
  Trajectory traj = integrate(spec, z0, eff.t_end, eff.control, &family);
  if (traj.aborted) {
    rep["aborted"] = true;
    rep["abort_time"] = traj.abort_time;
    rep["pass"] = false;
    result.exit_code = kExitNumericAbort;
    return result;
  }

  bool all_pass = true;

  // eigen data at the initial point
  {
    OrderedJson sec;
    EigenData e = eigen_at(spec, chain, z0.q);
    OrderedJson uj = OrderedJson::array();
    for (double v : e.u) uj.push_back(v);
    sec["u_at_initial"] = uj;
    if (spec.n > 1) sec["min_gap"] = e.min_gap;
    sec["jacobian_cond"] = e.jacobian_cond;
    double efr = 0.0, apr = 0.0, sdr = 0.0;
    for (const auto& q : qs) {
      efr = std::max(efr, eigenform_residual(spec, chain, q));
      apr = std::max(apr, driving_eigen_residual(spec, chain, q));
      sdr = std::max(sdr, sigma_delta_residual(spec, chain, q));
    }
    collect(sec, "eigenform_residual", check_entry_le(efr, 1e-6), all_pass);
    collect(sec, "driving_eigen_residual", check_entry_le(apr, 1e-6), all_pass);
    collect(sec, "sigma_delta_residual", check_entry_le(sdr, 1e-8), all_pass);
    rep["sections"]["eigen"] = sec;
  }

  // transformed-Hamiltonian gradient match at seeded phase points
  {
    OrderedJson sec;
    auto zs = sample_phase_points(spec, std::min(eff.points, 20), eff.seed + 5);
    double worst = 0.0;
    for (const auto& z : zs) {
      ChainBlocks cb = chain.blocks_at(z.q);
      VecD pt = to_tilde(cb, z.p);
      worst = std::max(worst, tilde_h_match_residual(spec, chain, family, z.q, pt));
    }
    collect(sec, "gradient_match", check_entry_le(worst, 1e-6), all_pass);
    rep["sections"]["tilde_h_match"] = sec;
  }

  // time-independence certificate on the probe grid
  {
    OrderedJson sec;
    TimeIndependenceReport tr = time_independence_certificate(
        spec, chain, family, traj, opts.probe_rows, opts.probe_cols);
    sec["probes"] = tr.probes;
    sec["times"] = tr.times;
    sec["skipped"] = tr.skipped;
    sec["scale"] = tr.scale;
    collect(sec, "max_variation", check_entry(tr.max_variation, 1e-6 * tr.scale, tr.pass),
            all_pass);
    rep["sections"]["time_independence"] = sec;
  }

  // Stackel certificate at sample points
  {
    OrderedJson sec;
    StackelReport st = stackel_certificate(spec, chain, qs);
    collect(sec, "jbar_sckt", check_entry_le(st.sckt_jbar_residual, 1e-6), all_pass);
    collect(sec, "admissible_potential", check_entry_le(st.admissible_residual, 1e-6),
            all_pass);
    collect(sec, "metric_diagonal_in_u", check_entry_le(st.metric_offdiag_residual, 1e-7),
            all_pass);
    sec["pass"] = st.pass;
    if (!st.pass) sec["failure"] = st.failure;
    rep["sections"]["stackel"] = sec;
  }

  // (u, s) trajectory CSV
  {
    std::ostringstream csv;
    csv << "t";
    for (int a = 1; a <= n; ++a) csv << ",u" << a;
    for (int a = 1; a <= n; ++a) csv << ",s" << a;
    for (int i = 1; i <= n; ++i) csv << ",H_" << i;
    csv << "\n";
    VecD prev_u;
    for (std::size_t k = 0; k < traj.z.size(); ++k) {
      const PhasePoint& z = traj.z[k];
      ChainBlocks cb = chain.blocks_at(z.q);
      VecD pt = to_tilde(cb, z.p);
      EigenData e = eigen_at(spec, chain, z.q, prev_u.empty() ? nullptr : &prev_u);
      prev_u = e.u;
      UsPoint us = to_us(e, VecD(pt.begin() + m, pt.end()));
      csv << format_csv_value(traj.t[k]);
      for (int a = 0; a < n; ++a) csv << "," << format_csv_value(us.u[a]);
      for (int a = 0; a < n; ++a) csv << "," << format_csv_value(us.s[a]);
      for (int i = 0; i < n; ++i) csv << "," << format_csv_value(traj.integrals[k][i]);
      csv << "\n";
    }
    result.csv = csv.str();
  }

  rep["pass"] = all_pass;
  result.exit_code = all_pass ? kExitPass : kExitCheckFailure;
  return result;
}

}  // namespace coflab
