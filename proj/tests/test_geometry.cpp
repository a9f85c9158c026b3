#include <cmath>

#include <doctest.h>

#include "cofactor_lab/geometry.hpp"
#include "cofactor_lab/numerics.hpp"
#include "support.hpp"

using namespace coflab;
using coflab::testing::ex1_spec;
using coflab::testing::ex2_spec;

namespace {

ExprMatrix mat2(const char* a, const char* b, const char* c, const char* d) {
  ExprMatrix m(2, 2);
  m(0, 0) = parse_expr(a);
  m(0, 1) = parse_expr(b);
  m(1, 0) = parse_expr(c);
  m(1, 1) = parse_expr(d);
  return m;
}

Bindings at(double q1, double q2) {
  Bindings b;
  b.set("q1", q1);
  b.set("q2", q2);
  return b;
}

}  // namespace

TEST_CASE("christoffel: constant metrics have vanishing symbols") {
  MetricField g(mat2("1", "-1", "-1", "10"), {"q1", "q2"});
  Tensor3 gamma = christoffel(g, at(0.3, -0.8));
  for (const auto& m : gamma) CHECK(m.max_abs() == 0.0);
}

TEST_CASE("christoffel: diag(1, q1^2) and metric compatibility") {
  MetricField g(mat2("1", "0", "0", "q1^2"), {"q1", "q2"});
  Bindings p0 = at(2.0, 0.4);
  Tensor3 gamma0 = christoffel(g, p0);
  CHECK(gamma0[0](1, 1) == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(gamma0[1](0, 1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(gamma0[1](1, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(gamma0[0](0, 0) == 0.0);
  CHECK(gamma0[0](0, 1) == 0.0);

  // lower-index symmetry and covariant constancy of g at random points:
  // d_c g_ab = Gamma^s_{ac} g_sb + Gamma^s_{bc} g_as
  for (const auto& q : sample_box({0.5, -2}, {2.5, 2}, 20, 77)) {
    Bindings p = at(q[0], q[1]);
    Tensor3 gamma = christoffel(g, p);
    Tensor3 dg = g.d_eval(p);
    MatD gm = g.eval(p);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) {
          CHECK(gamma[a](b, c) == gamma[a](c, b));
          double rhs = 0.0;
          for (int s = 0; s < 2; ++s)
            rhs += gamma[s](a, c) * gm(s, b) + gamma[s](b, c) * gm(a, s);
          CHECK(std::abs(dg[c](a, b) - rhs) <= 1e-9);
        }
  }
}

TEST_CASE("christoffel: singular metric is an error") {
  MetricField g(mat2("1", "0", "0", "q1"), {"q1", "q2"});
  Bindings p = at(-1.0, 0.0);  // not positive definite here
  CHECK_THROWS_AS(g.inverse_at(p), GeometryError);
}

TEST_CASE("sckt residual: worked fixtures and the identity tensor") {
  // fixture 2: constant metric with a linear covariant Killing tensor
  SystemSpec s2 = ex2_spec();
  auto pts = s2.bind_all(s2.sample_points(25, 5));
  ScktReport rep = sckt_report(s2.g, s2.j, pts);
  CHECK(rep.max_residual <= 1e-12);
  CHECK(rep.max_nijenhuis <= 1e-12);
  CHECK(rep.alpha_sample[0] == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(rep.alpha_sample[1] == doctest::Approx(4.0).epsilon(1e-13));

  // fixture 1: Euclidean metric
  SystemSpec s1 = ex1_spec();
  auto pts1 = s1.bind_all(s1.sample_points(25, 6));
  ScktReport rep1 = sckt_report(s1.g, s1.j, pts1);
  CHECK(rep1.max_residual <= 1e-12);
  CHECK(rep1.max_nijenhuis <= 1e-12);

  // J = identity on a flat metric: residual and alpha vanish
  MetricField g(mat2("1", "0", "0", "1"), {"q1", "q2"});
  TensorField11 id(mat2("1", "0", "0", "1"), {"q1", "q2"});
  ScktPointResult r = sckt_residual(g, id, at(0.7, -0.2));
  CHECK(r.residual == 0.0);
  CHECK(r.alpha[0] == 0.0);
  CHECK(r.alpha[1] == 0.0);
}

TEST_CASE("sckt residual is invariant under constant metric rescaling") {
  SystemSpec s1 = ex1_spec();
  MetricField g2(mat2("2", "0", "0", "2"), {"y", "x"});
  auto pts = s1.bind_all(s1.sample_points(10, 7));
  ScktReport a = sckt_report(s1.g, s1.j, pts);
  ScktReport b = sckt_report(g2, s1.j, pts);
  CHECK(a.max_residual <= 1e-12);
  CHECK(b.max_residual <= 1e-12);
}

TEST_CASE("nijenhuis torsion: zero for the fixtures, nonzero control") {
  TensorField11 id(mat2("1", "0", "0", "1"), {"q1", "q2"});
  CHECK(nijenhuis_norm(id, at(1.0, 2.0)) == 0.0);

  SystemSpec s1 = ex1_spec();
  for (const auto& q : s1.sample_points(10, 8))
    CHECK(nijenhuis_norm(s1.j, s1.bind(q)) <= 1e-12);

  // genuinely torsionful control: components N^1_{12} = q1, N^2_{12} = -q2
  TensorField11 tors(mat2("0", "q1", "q2", "0"), {"q1", "q2"});
  CHECK(nijenhuis_norm(tors, at(1.5, 0.5)) == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("dJ(det J) = det J d(tr J) for torsion-free J") {
  SystemSpec s1 = ex1_spec();
  ExprMatrix j = s1.j.components();
  Expr detj = expr_det(j);
  double worst = 0.0;
  for (const auto& q : s1.sample_points(20, 9)) {
    Bindings b = s1.bind(q);
    MatD jm = s1.j.eval(b);
    VecD alpha = s1.j.alpha_at(b);
    const double dj = detj.eval(b);
    double scale = std::max(1.0, std::abs(dj));
    for (int be = 0; be < 2; ++be) {
      // (d_J f)_beta = J^sigma_beta d_sigma f
      double lhs = 0.0;
      for (int sig = 0; sig < 2; ++sig)
        lhs += jm(sig, be) * detj.diff(s1.coords[sig]).eval(b);
      const double rhs = dj * alpha[be];
      worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("cofactor: fixture value and numeric identity") {
  SystemSpec s1 = ex1_spec();
  Bindings b = s1.bind({1.0, 2.0});
  MatD a = cofactor(s1.j.eval(b));
  CHECK(a(0, 0) == doctest::Approx(-8.0).epsilon(1e-15));
  CHECK(a(0, 1) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(a(1, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(a(1, 1) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(cofactor(MatD::identity(3)).max_abs() == 1.0);
}

TEST_CASE("dj_mu closedness: both fixtures and an exact form") {
  SystemSpec s1 = ex1_spec();
  CHECK(dj_mu_closedness(s1.g, s1.j, s1.mu, s1.bind_all(s1.sample_points(100, s1.seed))) <=
        1e-9);

  SystemSpec s2 = ex2_spec();
  CHECK(dj_mu_closedness(s2.g, s2.j, s2.mu, s2.bind_all(s2.sample_points(100, s2.seed))) <=
        1e-9);

  // mu = dW with A = I is closed by construction
  TensorField11 id(mat2("1", "0", "0", "1"), {"q1", "q2"});
  MetricField g(mat2("1", "0", "0", "1"), {"q1", "q2"});
  Expr w = parse_expr("q1^2*q2 + sin(q2)");
  std::vector<Expr> mu = {w.diff("q1"), w.diff("q2")};
  std::vector<Bindings> pts;
  for (const auto& q : sample_box({-2, -2}, {2, 2}, 30, 10)) pts.push_back(at(q[0], q[1]));
  CHECK(dj_mu_closedness(g, id, mu, pts) <= 1e-10);
}

TEST_CASE("one-form closedness FD flags a non-closed form") {
  auto omega = [](const VecD& q) { return VecD{-q[1], q[0]}; };  // d(omega) = 2 dx^dy
  CHECK(one_form_closedness_fd(omega, {{0.3, 0.4}}) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("symbolic adjugate matches the numeric one") {
  SystemSpec s1 = ex1_spec();
  ExprMatrix adj = expr_adjugate(s1.j.components());
  for (const auto& q : s1.sample_points(10, 11)) {
    Bindings b = s1.bind(q);
    MatD sym = adj.eval(b);
    MatD num = adjugate(s1.j.eval(b));
    CHECK((sym - num).max_abs() <= 1e-12);
  }
}
