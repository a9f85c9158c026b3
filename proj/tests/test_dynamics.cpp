#include <cmath>

#include <doctest.h>

#include "cofactor_lab/dynamics.hpp"
#include "cofactor_lab/numerics.hpp"
#include "support.hpp"

using namespace coflab;
using coflab::testing::ex1_spec;
using coflab::testing::ex1_oscillatory;
using coflab::testing::ex2_adapted;
using coflab::testing::ex2_spec;

TEST_CASE("gamma_hat: fixture equations of motion") {
  SystemSpec s1 = ex1_spec();  // a = 1, c1 = 1, c2 = -1, flat metric
  PhasePoint z{{1.0, 2.0}, {0.3, -0.7}};
  VecD v = gamma_hat(s1, z);
  CHECK(v[0] == doctest::Approx(0.3));                      // ydot = p_y
  CHECK(v[1] == doctest::Approx(-0.7));                     // xdot = p_x
  CHECK(v[2] == doctest::Approx(1.0));                      // p_y dot = -c2 y
  CHECK(v[3] == doctest::Approx(-(2.0 + 1.0)));             // p_x dot = -c1 x - a y^2
}

TEST_CASE("gamma_hat: driving block ignores the driven phase variables") {
  SystemSpec s1 = ex1_spec();
  SampleRng rng(51);
  for (int rep = 0; rep < 10; ++rep) {
    const double y = rng.uniform(-2, 2), py = rng.uniform(-2, 2);
    PhasePoint a{{y, rng.uniform(-2, 2)}, {py, rng.uniform(-2, 2)}};
    PhasePoint b{{y, rng.uniform(-2, 2)}, {py, rng.uniform(-2, 2)}};
    VecD va = gamma_hat(s1, a), vb = gamma_hat(s1, b);
    CHECK(va[0] == vb[0]);
    CHECK(va[2] == vb[2]);
  }
}

TEST_CASE("integrate: free flat motion is straight") {
  SystemSpec s = load_spec_json(R"({
    "dims": {"m": 1, "n": 1},
    "coords": ["y", "x"],
    "metric": [["1","0"],["0","1"]],
    "J": [["1","0"],["0","1"]],
    "forces": ["0", "0"],
    "base_point": [0, 0],
    "sample_box": {"lo": [-1, -1], "hi": [1, 1]},
    "seed": 8
  })");
  IntegrationControl ctl;
  ctl.dt = 1e-3;
  ctl.output_stride = 100;
  PhasePoint z0{{0.1, -0.2}, {0.5, 1.5}};
  Trajectory tr = integrate(s, z0, 2.0, ctl);
  REQUIRE(!tr.z.empty());
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    CHECK(tr.z[k].q[0] == doctest::Approx(0.1 + 0.5 * tr.t[k]).epsilon(1e-12));
    CHECK(tr.z[k].q[1] == doctest::Approx(-0.2 + 1.5 * tr.t[k]).epsilon(1e-12));
    CHECK(tr.z[k].p[0] == doctest::Approx(0.5));
    CHECK(tr.z[k].p[1] == doctest::Approx(1.5));
  }
}

TEST_CASE("integrate: curved-metric free motion conserves the kinetic Hamiltonian") {
  // this pins the sign of the Christoffel term in the momentum equations
  SystemSpec s = load_spec_json(R"({
    "dims": {"m": 1, "n": 1},
    "coords": ["y", "x"],
    "metric": [["1","0"],["0","y^2"]],
    "J": [["1","0"],["0","1"]],
    "forces": ["0", "0"],
    "base_point": [1, 0],
    "sample_box": {"lo": [0.5, -1], "hi": [2, 1]},
    "seed": 9
  })");
  IntegrationControl ctl;
  ctl.dt = 1e-3;
  ctl.output_stride = 50;
  PhasePoint z0{{1.0, 0.3}, {0.2, 0.9}};
  Trajectory tr = integrate(s, z0, 2.0, ctl);
  auto kinetic = [&](const PhasePoint& z) {
    MatD ginv = s.g.inverse_at(s.bind(z.q));
    double h = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) h += 0.5 * ginv(a, b) * z.p[a] * z.p[b];
    return h;
  };
  const double h0 = kinetic(z0);
  for (const auto& z : tr.z)
    CHECK(std::abs(kinetic(z) - h0) <= 1e-8 * std::max(1.0, std::abs(h0)));
}

TEST_CASE("integrate: conservation of the family on both parameter regimes") {
  // oscillatory driving over the long horizon
  SystemSpec osc = ex1_oscillatory();
  CofactorChain chain_osc(osc);
  IntegralFamily fam_osc(osc, chain_osc);
  PhasePoint z0{{1.0, 0.5}, {0.2, -0.3}};
  Trajectory tr = integrate(osc, z0, 20.0, osc.integration, &fam_osc);
  REQUIRE(!tr.aborted);
  CHECK(tr.max_drift[0] <= 1e-6);
  CHECK(tr.max_drift[1] <= 1e-6);

  // hyperbolic driving over a short horizon
  SystemSpec hyp = ex1_spec();
  CofactorChain chain_hyp(hyp);
  IntegralFamily fam_hyp(hyp, chain_hyp);
  Trajectory tr2 = integrate(hyp, z0, 3.0, hyp.integration, &fam_hyp);
  REQUIRE(!tr2.aborted);
  CHECK(tr2.max_drift[0] <= 1e-6);
  CHECK(tr2.max_drift[1] <= 1e-6);
}

TEST_CASE("integrate: rk45 matches rk4 on the oscillatory fixture") {
  SystemSpec osc = ex1_oscillatory();
  PhasePoint z0{{1.0, 0.5}, {0.2, -0.3}};
  IntegrationControl rk45;
  rk45.method = IntegrationControl::Method::RK45;
  rk45.rtol = 1e-10;
  rk45.dt = 1e-2;  // initial trial step
  rk45.output_stride = 1000000;  // final state only
  Trajectory a = integrate(osc, z0, 5.0, rk45);
  IntegrationControl rk4;
  rk4.dt = 1e-4;
  rk4.output_stride = 1000000;
  Trajectory b = integrate(osc, z0, 5.0, rk4);
  REQUIRE(!a.z.empty());
  REQUIRE(!b.z.empty());
  for (int i = 0; i < 2; ++i) {
    CHECK(a.z.back().q[i] == doctest::Approx(b.z.back().q[i]).epsilon(1e-6));
    CHECK(a.z.back().p[i] == doctest::Approx(b.z.back().p[i]).epsilon(1e-6));
  }
}

TEST_CASE("integrate: time reversibility") {
  SystemSpec osc = ex1_oscillatory();
  IntegrationControl ctl;
  ctl.dt = 1e-3;
  ctl.output_stride = 1000000;
  PhasePoint z0{{1.0, 0.5}, {0.2, -0.3}};
  Trajectory fwd = integrate(osc, z0, 4.0, ctl);
  PhasePoint mid = fwd.z.back();
  mid.p[0] = -mid.p[0];
  mid.p[1] = -mid.p[1];
  Trajectory back = integrate(osc, mid, 4.0, ctl);
  PhasePoint end = back.z.back();
  CHECK(std::abs(end.q[0] - z0.q[0]) <= 1e-7);
  CHECK(std::abs(end.q[1] - z0.q[1]) <= 1e-7);
  CHECK(std::abs(-end.p[0] - z0.p[0]) <= 1e-7);
  CHECK(std::abs(-end.p[1] - z0.p[1]) <= 1e-7);
}

TEST_CASE("integrate: blow-up guard aborts with the last good time") {
  SystemSpec hyp = ex1_spec();  // c2 = -1: exponential driving growth
  IntegrationControl ctl;
  ctl.dt = 1e-3;
  ctl.output_stride = 100;
  PhasePoint z0{{1.0, 0.5}, {0.2, -0.3}};
  Trajectory tr = integrate(hyp, z0, 60.0, ctl);
  CHECK(tr.aborted);
  CHECK(tr.abort_time > 0.0);
  CHECK(tr.abort_time < 60.0);
}

TEST_CASE("jacobi endomorphism: fixture matrices") {
  // original-coordinate fixture: constant matrix at any point and velocity
  SystemSpec s2 = ex2_spec();
  SampleRng rng(52);
  for (int rep = 0; rep < 10; ++rep) {
    VecD q{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    VecD v{rng.uniform(-2, 2), rng.uniform(-2, 2)};
    MatD phi = jacobi_endomorphism(s2, q, v);
    CHECK(phi(0, 0) == -5.0);
    CHECK(phi(0, 1) == 4.0);
    CHECK(phi(1, 0) == -1.0);
    CHECK(phi(1, 1) == 0.0);
  }

  // first fixture in (y, x) ordering: [[c2, 0], [2 a y, c1]]
  SystemSpec s1 = ex1_spec();
  MatD phi1 = jacobi_endomorphism(s1, {1.5, -0.4}, {0.0, 0.0});
  CHECK(phi1(0, 0) == doctest::Approx(-1.0));
  CHECK(phi1(0, 1) == doctest::Approx(0.0));
  CHECK(phi1(1, 0) == doctest::Approx(2.0 * 1.5));
  CHECK(phi1(1, 1) == doctest::Approx(1.0));

  // free particle
  SystemSpec s0 = load_spec_json(R"({
    "dims": {"m": 1, "n": 1},
    "coords": ["y", "x"],
    "metric": [["1","0"],["0","1"]],
    "J": [["1","0"],["0","1"]],
    "forces": ["0", "0"],
    "base_point": [0, 0],
    "sample_box": {"lo": [-1, -1], "hi": [1, 1]},
    "seed": 10
  })");
  CHECK(jacobi_endomorphism(s0, {0.3, 0.4}, {1.0, -1.0}).max_abs() == 0.0);
}

TEST_CASE("invariant distribution check: eigenspace vs non-eigenspace") {
  SystemSpec s2 = ex2_spec();
  std::vector<MatD> phis{jacobi_endomorphism(s2, {0.7, -0.3}, {0.0, 0.0})};
  MatD good(2, 1);
  good(0, 0) = 1.0;
  good(1, 0) = 1.0;
  CHECK(invariant_distribution_check(phis, good) <= 1e-12);

  MatD full = MatD::identity(2);
  CHECK(invariant_distribution_check(phis, full) <= 1e-12);

  MatD bad(2, 1);
  bad(0, 0) = 1.0;
  bad(1, 0) = 0.0;
  CHECK(invariant_distribution_check(phis, bad) > 0.5);
}

TEST_CASE("verify_driven_structure: fixtures and the decoupled negative control") {
  SystemSpec s1 = ex1_spec();
  StructureReport rep = verify_driven_structure(s1, s1.sample_points(40, 53));
  CHECK(rep.all_pass);
  CHECK(rep.coupling_witness_value > 1e-6);

  SystemSpec adapted = ex2_adapted();
  StructureReport rep2 = verify_driven_structure(adapted, adapted.sample_points(40, 54));
  CHECK(rep2.all_pass);

  // a = 0 removes the coupling: condition (4) fails
  SystemSpec dec = load_spec_json(R"({
    "dims": {"m": 1, "n": 1},
    "coords": ["y", "x"],
    "params": {"a": 0.0, "c1": 1.0, "c2": -1.0},
    "metric": [["1","0"],["0","1"]],
    "J": [["c1 - 4*c2","-2*a*y"],["-2*a*y","-4*a*x - 1"]],
    "driving_forces": ["-c2*y"],
    "potential": "a*y^2*x + c1*x^2/2",
    "base_point": [0, 0],
    "sample_box": {"lo": [-2, -2], "hi": [2, 2]},
    "seed": 11
  })");
  StructureReport rep3 = verify_driven_structure(dec, dec.sample_points(40, 55));
  CHECK(!rep3.all_pass);
  CHECK(rep3.failure == "coupling_witness");
}
