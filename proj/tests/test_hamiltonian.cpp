#include <cmath>

#include <doctest.h>

#include "cofactor_lab/dynamics.hpp"
#include "cofactor_lab/numerics.hpp"
#include "cofactor_lab/separation.hpp"
#include "support.hpp"

using namespace coflab;
using coflab::testing::ex1_spec;
using coflab::testing::ex1_oscillatory;
using coflab::testing::ex2_adapted;

namespace {

ScalarField coordinate_field(int idx, int nn) {
  ScalarField f;
  f.value = [idx](const PhasePoint& z) { return z.q[idx]; };
  f.gradient = [idx, nn](const PhasePoint&, VecD& dq, VecD& dp) {
    dq.assign(nn, 0.0);
    dp.assign(nn, 0.0);
    dq[idx] = 1.0;
  };
  return f;
}

ScalarField momentum_field(int idx, int nn) {
  ScalarField f;
  f.value = [idx](const PhasePoint& z) { return z.p[idx]; };
  f.gradient = [idx, nn](const PhasePoint&, VecD& dq, VecD& dp) {
    dq.assign(nn, 0.0);
    dp.assign(nn, 0.0);
    dp[idx] = 1.0;
  };
  return f;
}

TensorField11 identity_tensor() {
  ExprMatrix m(2, 2);
  m(0, 0) = Expr::constant(1);
  m(0, 1) = Expr::constant(0);
  m(1, 0) = Expr::constant(0);
  m(1, 1) = Expr::constant(1);
  return TensorField11(m, {"y", "x"});
}

std::vector<PhasePoint> random_phase(const SystemSpec& spec, int count, std::uint64_t seed) {
  auto qs = spec.sample_points(count, seed);
  SampleRng rng(seed * 3 + 1);
  std::vector<PhasePoint> out;
  for (const auto& q : qs) {
    VecD p(spec.dim());
    for (int i = 0; i < spec.dim(); ++i) p[i] = rng.uniform(-2.0, 2.0);
    out.push_back({q, p});
  }
  return out;
}

}  // namespace

TEST_CASE("bracket_j: canonical pairs at J = I") {
  TensorField11 id = identity_tensor();
  PhasePoint z{{0.3, -0.7}, {1.1, 0.4}};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const double qp = bracket_j(coordinate_field(a, 2), momentum_field(b, 2), id, {}, z);
      CHECK(qp == doctest::Approx(a == b ? 1.0 : 0.0));
      const double qq = bracket_j(coordinate_field(a, 2), coordinate_field(b, 2), id, {}, z);
      CHECK(qq == 0.0);
    }
}

TEST_CASE("bracket_j: antisymmetry and {f,f} = 0 for a position-dependent J") {
  SystemSpec s1 = ex1_spec();
  CofactorChain chain(s1);
  IntegralFamily family(s1, chain);
  for (const auto& z : random_phase(s1, 10, 41)) {
    ScalarField h1 = family.field(1);
    ScalarField h2 = family.field(2);
    CHECK(std::abs(bracket_j(h1, h1, s1.j, s1.params, z)) <= 1e-12);
    const double ab = bracket_j(h1, h2, s1.j, s1.params, z);
    const double ba = bracket_j(h2, h1, s1.j, s1.params, z);
    CHECK(std::abs(ab + ba) <= 1e-12 * (1.0 + std::abs(ab)));
  }
}

TEST_CASE("bracket_j: bilinearity") {
  SystemSpec s1 = ex1_spec();
  CofactorChain chain(s1);
  IntegralFamily family(s1, chain);
  ScalarField f = family.field(1);
  ScalarField g = family.field(2);
  // combo = 2.5 f + g with exact gradients
  ScalarField combo;
  combo.value = [f, g](const PhasePoint& z) { return 2.5 * f.value(z) + g.value(z); };
  combo.gradient = [f, g](const PhasePoint& z, VecD& dq, VecD& dp) {
    VecD fq, fp, gq, gp;
    f.gradient(z, fq, fp);
    g.gradient(z, gq, gp);
    dq.resize(fq.size());
    dp.resize(fp.size());
    for (std::size_t i = 0; i < fq.size(); ++i) {
      dq[i] = 2.5 * fq[i] + gq[i];
      dp[i] = 2.5 * fp[i] + gp[i];
    }
  };
  ScalarField probe;
  probe.value = [](const PhasePoint& z) { return z.q[0] * z.p[1]; };
  probe.gradient = [](const PhasePoint& z, VecD& dq, VecD& dp) {
    dq = {z.p[1], 0.0};
    dp = {0.0, z.q[0]};
  };
  for (const auto& z : random_phase(s1, 10, 40)) {
    const double lhs = bracket_j(combo, probe, s1.j, s1.params, z);
    const double rhs = 2.5 * bracket_j(f, probe, s1.j, s1.params, z) +
                       bracket_j(g, probe, s1.j, s1.params, z);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(rhs)));
  }
}

TEST_CASE("bracket_canonical_driven: driven pair, inert driving coordinates") {
  PhasePoint z{{0.5, 1.5}, {0.2, -0.8}};
  const double xp = bracket_canonical_driven(coordinate_field(1, 2), momentum_field(1, 2), 1, z);
  CHECK(xp == 1.0);
  // driving coordinate against anything vanishes
  CHECK(bracket_canonical_driven(coordinate_field(0, 2), momentum_field(0, 2), 1, z) == 0.0);
  CHECK(bracket_canonical_driven(coordinate_field(0, 2), momentum_field(1, 2), 1, z) == 0.0);
}

TEST_CASE("build_family: fixture integral values") {
  SystemSpec s1 = ex1_spec();  // a = 1, c1 = 1, c2 = -1
  CofactorChain chain(s1);
  IntegralFamily family(s1, chain);
  REQUIRE(family.count() == 2);
  SampleRng rng(42);
  for (int rep = 0; rep < 20; ++rep) {
    PhasePoint z{{rng.uniform(-2, 2), rng.uniform(-2, 2)},
                 {rng.uniform(-2, 2), rng.uniform(-2, 2)}};
    const double y = z.q[0], x = z.q[1], py = z.p[0], px = z.p[1];
    const double h2 = 0.5 * py * py + 0.5 * (-1.0) * y * y;
    CHECK(family.value(2, z) == doctest::Approx(h2).epsilon(1e-10));
    const double w = 0.5 * 1 * 5 * x * x + 1 * (1 + 2) * x * y * y + 0.5 * std::pow(y, 4);
    const double h1 = 0.5 * 5 * px * px + 2 * y * px * py - 2 * x * py * py + w;
    CHECK(family.value(1, z) == doctest::Approx(h1).epsilon(1e-9));
  }
}

TEST_CASE("build_family: zero forces and J = I collapse to kinetic energies") {
  SystemSpec s = load_spec_json(R"({
    "dims": {"m": 1, "n": 1},
    "coords": ["y", "x"],
    "metric": [["1","0"],["0","1"]],
    "J": [["1","0"],["0","1"]],
    "forces": ["0", "0"],
    "base_point": [0, 0],
    "sample_box": {"lo": [-1, -1], "hi": [1, 1]},
    "seed": 6
  })");
  CofactorChain chain(s);
  IntegralFamily family(s, chain);
  PhasePoint z{{0.4, -0.9}, {1.3, 0.7}};
  // A_(1) = cof I = I, A_(2) has only the driving block cof J1 = 1
  CHECK(family.value(1, z) == doctest::Approx(0.5 * (1.3 * 1.3 + 0.7 * 0.7)));
  CHECK(family.value(2, z) == doctest::Approx(0.5 * 1.3 * 1.3));
}

TEST_CASE("family gradients agree with finite differences") {
  SystemSpec s1 = ex1_spec();
  CofactorChain chain(s1);
  IntegralFamily family(s1, chain);
  for (const auto& z : random_phase(s1, 5, 43)) {
    for (int i = 1; i <= 2; ++i) {
      VecD dq, dp;
      family.gradient(i, z, dq, dp);
      ScalarField fd = make_fd_field([&family, i](const PhasePoint& w) {
        return family.value(i, w);
      });
      VecD dq2, dp2;
      fd.gradient(z, dq2, dp2);
      for (int k = 0; k < 2; ++k) {
        CHECK(std::abs(dq[k] - dq2[k]) <= 1e-7 * (1.0 + std::abs(dq2[k])));
        CHECK(std::abs(dp[k] - dp2[k]) <= 1e-7 * (1.0 + std::abs(dp2[k])));
      }
    }
  }
}

TEST_CASE("tilde-momentum form of the integrals matches the direct evaluation") {
  // the mixed-momentum terms cancel in the tilde variables; this is a pure
  // block-algebra identity, so it also holds on a non-Killing synthetic J
  const char* synthetic = R"({
    "dims": {"m": 1, "n": 2},
    "coords": ["y", "x1", "x2"],
    "metric": [["1","0","0"],["0","1","0"],["0","0","1"]],
    "J": [["2","y*x2","y*x1"],["y*x2","3","0"],["y*x1","0","5"]],
    "forces": ["0", "0", "0"],
    "base_point": [0, 0, 0],
    "sample_box": {"lo": [-0.5, -0.5, -0.5], "hi": [0.5, 0.5, 0.5]},
    "seed": 13
  })";
  for (const SystemSpec& spec : {ex1_spec(), load_spec_json(synthetic)}) {
    CofactorChain chain(spec);
    IntegralFamily family(spec, chain);
    SampleRng rng(49);
    for (const auto& q : spec.sample_points(8, 49)) {
      VecD pt(spec.dim());
      for (auto& v : pt) v = rng.uniform(-2.0, 2.0);
      ChainBlocks cb = chain.blocks_at(q);
      PhasePoint z{q, from_tilde(cb, pt)};
      for (int i = 1; i <= family.count(); ++i) {
        const double direct = family.value(i, z);
        const double tilde = family.value_tilde(i, q, pt);
        CHECK(std::abs(direct - tilde) <= 1e-10 * (1.0 + std::abs(direct)));
      }
    }
  }
}

TEST_CASE("raising consistency: quadratic part of H_(1) equals direct cofactor route") {
  SystemSpec s1 = ex1_spec();
  CofactorChain chain(s1);
  IntegralFamily family(s1, chain);
  for (const auto& z : random_phase(s1, 10, 44)) {
    MatD au = family.a_upper(1, z.q);
    MatD direct = adjugate(s1.j.eval(s1.bind(z.q)));  // Euclidean metric: indices free
    double via_chain = 0.0, via_cof = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        via_chain += au(a, b) * z.p[a] * z.p[b];
        via_cof += direct(a, b) * z.p[a] * z.p[b];
      }
    CHECK(std::abs(via_chain - via_cof) <= 1e-10 * (1.0 + std::abs(via_cof)));
  }
}

TEST_CASE("involutivity of the family under both brackets (exact and FD gradients)") {
  for (const SystemSpec& spec : {ex1_spec(), ex1_oscillatory(), ex2_adapted()}) {
    CofactorChain chain(spec);
    IntegralFamily family(spec, chain);
    const int count = family.count();
    double worst = 0.0;
    for (const auto& z : random_phase(spec, 20, 45)) {
      double scale = 1.0;
      for (int i = 1; i <= count; ++i) scale = std::max(scale, std::abs(family.value(i, z)));
      for (int i = 1; i <= count; ++i)
        for (int l = i + 1; l <= count; ++l) {
          const double bj =
              bracket_j(family.field(i), family.field(l), spec.j, spec.params, z);
          const double bp =
              bracket_canonical_driven(family.field(i), family.field(l), spec.m, z);
          worst = std::max(worst, std::max(std::abs(bj), std::abs(bp)) / scale);
        }
    }
    CAPTURE(spec.coords[0]);
    CHECK(worst <= 1e-8);
  }

  // independent oracle: centered-difference gradients, looser tolerance
  SystemSpec s1 = ex1_spec();
  CofactorChain chain(s1);
  IntegralFamily family(s1, chain);
  double worst_fd = 0.0;
  for (const auto& z : random_phase(s1, 5, 46)) {
    ScalarField f1 = make_fd_field([&](const PhasePoint& w) { return family.value(1, w); });
    ScalarField f2 = make_fd_field([&](const PhasePoint& w) { return family.value(2, w); });
    double scale = std::max({1.0, std::abs(family.value(1, z)), std::abs(family.value(2, z))});
    worst_fd = std::max(worst_fd, std::abs(bracket_j(f1, f2, s1.j, s1.params, z)) / scale);
    worst_fd =
        std::max(worst_fd, std::abs(bracket_canonical_driven(f1, f2, s1.m, z)) / scale);
  }
  CHECK(worst_fd <= 1e-6);
}

TEST_CASE("quasi-hamiltonian recursion residual") {
  SystemSpec s1 = ex1_spec();
  CofactorChain chain(s1);
  IntegralFamily family(s1, chain);
  double worst = 0.0;
  for (const auto& z : random_phase(s1, 15, 47)) {
    double scale = 1.0;
    for (int i = 1; i <= 2; ++i) scale = std::max(scale, std::abs(family.value(i, z)));
    worst = std::max(worst, quasi_ham_residual(s1, family, z) / scale);
  }
  CHECK(worst <= 1e-7);

  // free flat system with J = I reduces to canonical Hamilton equations
  SystemSpec s0 = load_spec_json(R"({
    "dims": {"m": 1, "n": 1},
    "coords": ["y", "x"],
    "metric": [["1","0"],["0","1"]],
    "J": [["1","0"],["0","1"]],
    "forces": ["0", "0"],
    "base_point": [0, 0],
    "sample_box": {"lo": [-1, -1], "hi": [1, 1]},
    "seed": 7
  })");
  CofactorChain chain0(s0);
  IntegralFamily family0(s0, chain0);
  PhasePoint z{{0.2, 0.8}, {-0.4, 1.1}};
  CHECK(quasi_ham_residual(s0, family0, z) <= 1e-12);
}

TEST_CASE("quasi-hamiltonian residual detects a perturbed potential (negative control)") {
  SystemSpec s1 = ex1_spec();
  CofactorChain chain(s1);
  IntegralFamily family(s1, chain);
  PhasePoint z{{1.0, 2.0}, {0.3, -0.7}};

  // hand-build the recursion residual with W_(1) shifted by +x^2
  ScalarField h1 = family.field(1);
  ScalarField perturbed;
  perturbed.value = [h1](const PhasePoint& w) { return h1.value(w) + w.q[1] * w.q[1]; };
  perturbed.gradient = [h1](const PhasePoint& w, VecD& dq, VecD& dp) {
    h1.gradient(w, dq, dp);
    dq[1] += 2.0 * w.q[1];
  };
  VecD gh = gamma_hat(s1, z);
  VecD deltas = chain.delta_at(z.q);
  VecD rhs = pj_field(perturbed, s1.j, s1.params, z);
  double resid = 0.0;
  for (std::size_t k = 0; k < gh.size(); ++k)
    resid = std::max(resid, std::abs(deltas[0] * gh[k] - rhs[k]));
  CHECK(resid > 1e-3);
}

TEST_CASE("P_P2 of the top integral vanishes structurally") {
  SystemSpec s1 = ex1_spec();
  CofactorChain chain(s1);
  IntegralFamily family(s1, chain);
  for (const auto& z : random_phase(s1, 10, 48)) {
    VecD top = pp2_field(family.field(2), s1.m, s1.n, z);
    CHECK(max_abs(top) == 0.0);
  }
}

TEST_CASE("darboux residual: torsion-free vs torsionful") {
  SystemSpec s1 = ex1_spec();
  PhasePoint z{{0.8, 1.3}, {0.6, -0.9}};
  CHECK(darboux_residual(s1.j, s1.params, z) <= 1e-8);

  // constant J: every derivative term vanishes identically
  ExprMatrix cm(2, 2);
  cm(0, 0) = Expr::constant(2);
  cm(0, 1) = Expr::constant(1);
  cm(1, 0) = Expr::constant(1);
  cm(1, 1) = Expr::constant(3);
  TensorField11 constj(cm, {"y", "x"});
  CHECK(darboux_residual(constj, {}, z) == 0.0);

  // invertible torsionful control (adding a constant multiple of the
  // identity leaves the torsion unchanged)
  ExprMatrix tm(2, 2);
  tm(0, 0) = Expr::constant(2);
  tm(0, 1) = parse_expr("y");
  tm(1, 0) = parse_expr("x");
  tm(1, 1) = Expr::constant(2);
  TensorField11 tors(tm, {"y", "x"});
  CHECK(nijenhuis_norm(tors, s1.bind({0.8, 1.3})) > 0.1);
  CHECK(darboux_residual(tors, {}, z) > 1e-3);
}
