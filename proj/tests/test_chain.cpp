#include <cmath>

#include <doctest.h>

#include "cofactor_lab/chain.hpp"
#include "cofactor_lab/numerics.hpp"
#include "support.hpp"

using namespace coflab;
using coflab::testing::ex1_spec;

namespace {

MatD random_symmetric(SampleRng& rng, int n) {
  MatD m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m(i, j) = m(j, i) = rng.uniform(-2.0, 2.0);
  return m;
}

// a 3-dof system with m = 2 used to exercise the multi-driving-dof paths;
// the chain algebra needs no Killing property, only symmetry and an
// invertible J1 block
SystemSpec synthetic_m2() {
  return load_spec_json(R"({
    "dims": {"m": 2, "n": 1},
    "coords": ["y1", "y2", "x"],
    "metric": [["1","0","0"],["0","1","0"],["0","0","1"]],
    "J": [["5 + y1","1","y2 + x"],["1","4 + y2","y1*x"],["y2 + x","y1*x","3 + x^2"]],
    "forces": ["0", "0", "0"],
    "base_point": [0, 0, 0],
    "sample_box": {"lo": [-0.5, -0.5, -0.5], "hi": [0.5, 0.5, 0.5]},
    "seed": 3
  })");
}

const char* kZeroForceSpec = R"({
    "dims": {"m": 1, "n": 1},
    "coords": ["y", "x"],
    "metric": [["1","0"],["0","1"]],
    "J": [["3","0"],["0","2 + x"]],
    "forces": ["0", "0"],
    "base_point": [0, 0],
    "sample_box": {"lo": [-1, -1], "hi": [1, 1]},
    "seed": 5
  })";

}  // namespace

TEST_CASE("block_split: fixture blocks and dependence validation") {
  SystemSpec s1 = ex1_spec();
  BlockSplit sp = block_split(s1.j, 1, 1);
  Bindings b = s1.bind({1.0, 2.0});
  CHECK(sp.j1(0, 0).eval(b) == doctest::Approx(5.0));
  CHECK(sp.j12(0, 0).eval(b) == doctest::Approx(-2.0));
  CHECK(sp.j21(0, 0).eval(b) == doctest::Approx(-2.0));
  CHECK(sp.j2(0, 0).eval(b) == doctest::Approx(-8.0));
  CHECK_NOTHROW(validate_block_dependence(sp, s1.bind_all(s1.sample_points(20, 4))));

  // J1 depending on a driven coordinate violates the pattern
  ExprMatrix bad_m(2, 2);
  bad_m(0, 0) = parse_expr("x");
  bad_m(0, 1) = Expr::constant(0);
  bad_m(1, 0) = Expr::constant(0);
  bad_m(1, 1) = Expr::constant(1);
  TensorField11 bad(bad_m, {"y", "x"});
  BlockSplit spb = block_split(bad, 1, 1);
  std::vector<Bindings> pts;
  Bindings p;
  p.set("y", 0.3);
  p.set("x", 0.8);
  pts.push_back(p);
  CHECK_THROWS_AS(validate_block_dependence(spb, pts), DependenceError);
}

TEST_CASE("jbar: fixture value, trivial split, determinant factorization") {
  SystemSpec s1 = ex1_spec();
  CofactorChain chain(s1);
  MatD jb = chain.jbar_at({1.0, 2.0});
  CHECK(jb(0, 0) == doctest::Approx(-8.8).epsilon(1e-14));

  // J12 = 0 gives jbar = J2
  SampleRng rng(21);
  for (int rep = 0; rep < 5; ++rep) {
    MatD j = random_symmetric(rng, 4);
    for (int i = 0; i < 2; ++i)
      for (int a = 2; a < 4; ++a) j(i, a) = j(a, i) = 0.0;
    if (cond_1(j.block(0, 0, 2, 2)) > 1e6) continue;
    ChainBlocks cb = chain_blocks_of_matrix(j, 2, 2);
    CHECK((cb.jbar - j.block(2, 2, 2, 2)).max_abs() == 0.0);
  }

  // det J = det J1 det Jbar on random symmetric 5x5
  for (int rep = 0; rep < 30; ++rep) {
    MatD j = random_symmetric(rng, 5);
    if (cond_1(j.block(0, 0, 3, 3)) > 1e6) continue;
    ChainBlocks cb = chain_blocks_of_matrix(j, 3, 2);
    const double lhs = det(j);
    const double rhs = cb.det_j1 * det(cb.jbar);
    const double scale = std::pow(std::max(1.0, j.max_abs()), 5);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * scale);
  }
}

TEST_CASE("delta coefficients: fixture values, identity, cross-check") {
  SystemSpec s1 = ex1_spec();
  CofactorChain chain(s1);
  VecD d = chain.delta_at({1.0, 2.0});
  REQUIRE(d.size() == 2);
  CHECK(d[0] == doctest::Approx(-44.0).epsilon(1e-13));  // det J
  CHECK(d[1] == doctest::Approx(5.0).epsilon(1e-14));    // det J1

  // J = I: Delta_(i) = binomial(n, i-1)
  ChainBlocks cb = chain_blocks_of_matrix(MatD::identity(5), 2, 3);
  const double binom[] = {1, 3, 3, 1};
  for (int i = 0; i < 4; ++i) CHECK(cb.delta[i] == doctest::Approx(binom[i]).epsilon(1e-13));

  // the interpolation cross-check runs inside the chain computation
  SampleRng rng(22);
  for (int rep = 0; rep < 30; ++rep) {
    MatD j = random_symmetric(rng, 5);
    if (cond_1(j.block(0, 0, 3, 3)) > 1e6) continue;
    CHECK_NOTHROW(chain_blocks_of_matrix(j, 3, 2));
  }
}

TEST_CASE("a_chain: fixture boundary blocks and block-diagonal degeneration") {
  SystemSpec s1 = ex1_spec();
  CofactorChain chain(s1);
  ChainBlocks cb = chain.blocks_at({1.0, 2.0});
  // A_(2): A1 = cof J1 = [1], all other blocks zero (n = 1)
  CHECK(cb.a1[1](0, 0) == doctest::Approx(1.0));
  CHECK(cb.a12[1].max_abs() == 0.0);
  CHECK(cb.a21[1].max_abs() == 0.0);
  CHECK(cb.a2[1].max_abs() == 0.0);
  // A_(1) = cof J
  MatD a1 = cb.assembled(1);
  CHECK(a1(0, 0) == doctest::Approx(-8.0).epsilon(1e-13));
  CHECK(a1(0, 1) == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(a1(1, 0) == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(a1(1, 1) == doctest::Approx(5.0).epsilon(1e-13));

  // block-diagonal J keeps every off-diagonal chain block zero
  SampleRng rng(23);
  MatD j = random_symmetric(rng, 4);
  for (int i = 0; i < 2; ++i)
    for (int a = 2; a < 4; ++a) j(i, a) = j(a, i) = 0.0;
  ChainBlocks cbd = chain_blocks_of_matrix(j, 2, 2);
  for (int i = 1; i <= 3; ++i) {
    CHECK(cbd.a12[i - 1].max_abs() == 0.0);
    CHECK(cbd.a21[i - 1].max_abs() == 0.0);
  }
}

TEST_CASE("block identity suite on random symmetric 5x5 matrices") {
  SampleRng rng(24);
  int tested = 0;
  while (tested < 200) {
    MatD j = random_symmetric(rng, 5);
    if (cond_1(j.block(0, 0, 3, 3)) > 1e6) continue;
    ChainBlocks cb = chain_blocks_of_matrix(j, 3, 2);
    ChainIdentityResiduals r = chain_identity_residuals(cb);
    CAPTURE(tested);
    CHECK(r.max_rel() <= 1e-8);
    ++tested;
  }
}

TEST_CASE("near-singular J1 is a hard error") {
  MatD j(2, 2);
  j(0, 0) = 1e-14;
  j(0, 1) = j(1, 0) = 1.0;
  j(1, 1) = 2.0;
  CHECK_THROWS_AS(chain_blocks_of_matrix(j, 1, 1), ChainError);
}

TEST_CASE("potential reconstruction: fixture value, zero form, path independence") {
  SystemSpec s1 = ex1_spec();
  CofactorChain chain(s1);
  CHECK(chain.closedness_residual(1, s1.sample_points(5, 31)) <= 1e-6);
  CHECK(chain.w(1, {1.0, 2.0}) == doctest::Approx(16.5).epsilon(1e-10));
  CHECK(chain.w(1, s1.base_point) == doctest::Approx(0.0));

  // zero force form integrates to zero
  SystemSpec s0 = load_spec_json(kZeroForceSpec);
  CofactorChain chain0(s0);
  CHECK(chain0.w(1, {0.7, -0.4}) == doctest::Approx(0.0));

  // polygonal path through waypoints agrees with the straight segment
  auto omega = [&](const VecD& q) { return chain.grad_w(1, q); };
  const double direct = line_integral(omega, {0.0, 0.0}, {1.0, 2.0});
  const double dogleg =
      line_integral(omega, {0.0, 0.0}, {1.0, 2.0}, {{-1.0, 0.5}, {0.5, 1.5}});
  CHECK(std::abs(direct - dogleg) <= 1e-9);
}

TEST_CASE("grad_w matches finite differences of the line integral") {
  SystemSpec s1 = ex1_spec();
  CofactorChain chain(s1);
  for (const auto& q : s1.sample_points(5, 32)) {
    VecD exact = chain.grad_w(1, q);
    for (int g = 0; g < 2; ++g) {
      const double h = fd_step(q[g]);
      VecD qp = q, qm = q;
      qp[g] += h;
      qm[g] -= h;
      const double fd = (chain.w(1, qp) - chain.w(1, qm)) / (2.0 * h);
      CHECK(std::abs(exact[g] - fd) <= 1e-7 * (1.0 + std::abs(fd)));
    }
  }
}

TEST_CASE("mu_bar2: identity residual on the fixture and degenerate cases") {
  SystemSpec s1 = ex1_spec();
  CofactorChain chain(s1);
  auto mb = chain.mu_bar2({1.0, 2.0});
  CHECK(mb.residual <= 1e-7);
  // d2 W_(n) with n = 1: -(det J1) mu_x - J12 dW1/dy
  ChainBlocks cb = chain.blocks_at({1.0, 2.0});
  VecD muv = chain.mu_at({1.0, 2.0});
  VecD dw1 = chain.grad_w(2, {1.0, 2.0});
  const double expect = -(cb.det_j1 * muv[1] + cb.j12(0, 0) * dw1[0]);
  CHECK(mb.mu_bar2[0] == doctest::Approx(expect).epsilon(1e-9));

  // mu = 0 gives mu_bar2 = 0
  SystemSpec s0 = load_spec_json(kZeroForceSpec);
  CofactorChain chain0(s0);
  auto mb0 = chain0.mu_bar2({0.3, 0.4});
  CHECK(std::abs(mb0.mu_bar2[0]) <= 1e-12);
}

TEST_CASE("chain derivatives agree with finite differences (m = 1 and m = 2)") {
  for (const SystemSpec& spec : {ex1_spec(), synthetic_m2()}) {
    CofactorChain chain(spec);
    const int nn = spec.dim();
    for (const auto& q : spec.sample_points(4, 33)) {
      ChainBlocks cb = chain.blocks_at(q);
      for (int g = 0; g < nn; ++g) {
        ChainBlocksDeriv d = chain.derivative_at(q, g, cb);
        const double h = fd_step(q[g]);
        VecD qp = q, qm = q;
        qp[g] += h;
        qm[g] -= h;
        ChainBlocks cp = chain.blocks_at(qp);
        ChainBlocks cm = chain.blocks_at(qm);
        for (int i = 1; i <= chain.n() + 1; ++i) {
          MatD fd = (1.0 / (2.0 * h)) * (cp.assembled(i) - cm.assembled(i));
          MatD diff = d.assembled(i) - fd;
          CHECK(diff.max_abs() <= 1e-6 * std::max(1.0, fd.max_abs()));
          const double fdd = (cp.delta[i - 1] - cm.delta[i - 1]) / (2.0 * h);
          CHECK(std::abs(d.ddelta[i - 1] - fdd) <= 1e-6 * std::max(1.0, std::abs(fdd)));
        }
      }
    }
  }
}
