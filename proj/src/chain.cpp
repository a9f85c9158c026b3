#include "cofactor_lab/chain.hpp"

#include <algorithm>
#include <cmath>

#include "cofactor_lab/numerics.hpp"

namespace coflab {

namespace {

constexpr double kDeltaCrossTol = 1e-8;
constexpr double kJ1CondLimit = 1e10;
constexpr double kClosednessTol = 1e-6;

MatD vandermonde_solve_coeffs(const std::vector<double>& nodes, const MatD& samples) {
  // samples(k, j): value at node k of function j; returns coefficients(i, j)
  const int n = static_cast<int>(nodes.size());
  MatD v(n, n);
  for (int i = 0; i < n; ++i) {
    double p = 1.0;
    for (int jx = 0; jx < n; ++jx) {
      v(i, jx) = p;
      p *= nodes[i];
    }
  }
  return lu_solve(lu_factor(v), samples);
}

}  // namespace

MatD ChainBlocks::assembled(int i) const {
  const int nn = m + n;
  MatD f(nn, nn);
  f.set_block(0, 0, a1[i - 1]);
  f.set_block(0, m, a12[i - 1]);
  f.set_block(m, 0, a21[i - 1]);
  f.set_block(m, m, a2[i - 1]);
  return f;
}

MatD ChainBlocksDeriv::assembled(int i) const {
  const int m = da1[i - 1].rows();
  const int n = da2[i - 1].rows();
  MatD f(m + n, m + n);
  f.set_block(0, 0, da1[i - 1]);
  f.set_block(0, m, da12[i - 1]);
  f.set_block(m, 0, da21[i - 1]);
  f.set_block(m, m, da2[i - 1]);
  return f;
}

BlockSplit block_split(const TensorField11& j, int m, int n) {
  if (j.dim() != m + n) throw ChainError("block split dimensions do not match tensor");
  BlockSplit s;
  s.m = m;
  s.n = n;
  s.coords = j.coords();
  const ExprMatrix& full = j.components();
  s.j1 = full.block(0, 0, m, m);
  s.j12 = full.block(0, m, m, n);
  s.j21 = full.block(m, 0, n, m);
  s.j2 = full.block(m, m, n, n);
  for (const auto& c : s.coords) {
    s.dj1.push_back(s.j1.diff(c));
    s.dj12.push_back(s.j12.diff(c));
    s.dj21.push_back(s.j21.diff(c));
    s.dj2.push_back(s.j2.diff(c));
  }
  return s;
}

void validate_block_dependence(const BlockSplit& s, const std::vector<Bindings>& pts,
                               double tol) {
  const int m = s.m, n = s.n;
  auto max_at = [&](const ExprMatrix& e) {
    double worst = 0.0;
    for (const auto& p : pts)
      for (int i = 0; i < e.rows(); ++i)
        for (int jx = 0; jx < e.cols(); ++jx)
          worst = std::max(worst, std::abs(e(i, jx).eval(p)));
    return worst;
  };
  for (int a = 0; a < n; ++a) {
    if (max_at(s.dj1[m + a]) > tol)
      throw DependenceError("block J1 depends on driven coordinate " + s.coords[m + a]);
  }
  for (int i = 0; i < m; ++i) {
    if (max_at(s.dj2[i]) > tol)
      throw DependenceError("block J2 depends on driving coordinate " + s.coords[i]);
  }
  // d J^i_a / d x^b symmetric in (a, b)
  for (const auto& p : pts) {
    for (int i = 0; i < m; ++i)
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
          const double lhs = s.dj12[m + b](i, a).eval(p);
          const double rhs = s.dj12[m + a](i, b).eval(p);
          if (std::abs(lhs - rhs) > tol)
            throw DependenceError("d J12 / dx not symmetric in the driven indices (row " +
                                  std::to_string(i) + ")");
        }
    for (int a = 0; a < n; ++a)
      for (int i = 0; i < m; ++i)
        for (int k = i + 1; k < m; ++k) {
          const double lhs = s.dj21[k](a, i).eval(p);
          const double rhs = s.dj21[i](a, k).eval(p);
          if (std::abs(lhs - rhs) > tol)
            throw DependenceError("d J21 / dy not symmetric in the driving indices (row " +
                                  std::to_string(a) + ")");
        }
  }
}

namespace {

ChainBlocks chain_from_values(const MatD& j1, const MatD& j12, const MatD& j21, const MatD& j2) {
  const int m = j1.rows(), n = j2.rows();
  ChainBlocks cb;
  cb.m = m;
  cb.n = n;
  cb.j1 = j1;
  cb.j12 = j12;
  cb.j21 = j21;
  cb.j2 = j2;
  LU f1 = lu_factor(j1);
  if (f1.singular) throw ChainError("J1 is singular");
  cb.det_j1 = lu_det(f1);
  cb.j1inv = lu_solve(f1, MatD::identity(m));
  // conditioning of J1 measured against the scale of the whole tensor, so a
  // uniformly rescaled problem does not trip the guard but a degenerate
  // driving block inside an order-one J does
  const double jscale =
      std::max({j1.max_abs(), j12.max_abs(), j21.max_abs(), j2.max_abs(), 1e-300});
  cb.j1_cond = cb.j1inv.max_abs() * jscale * m;
  if (!(cb.j1_cond < kJ1CondLimit))
    throw ChainError("J1 is singular or near-singular (condition estimate " +
                     std::to_string(cb.j1_cond) + ")");
  cb.jbar = j2 - j21 * cb.j1inv * j12;

  // Delta route 1: det J1 x charpoly of Jbar
  VecD coeffs = det_plus_eps_coeffs(cb.jbar);  // det(Jbar + eps I) = sum c_k eps^k
  cb.delta.assign(n + 1, 0.0);
  for (int k = 0; k <= n; ++k) cb.delta[k] = cb.det_j1 * coeffs[k];

  // Delta route 2 (cross-check): Lagrange interpolation of det(J + eps P2)
  const int nn = m + n;
  MatD full(nn, nn);
  full.set_block(0, 0, j1);
  full.set_block(0, m, j12);
  full.set_block(m, 0, j21);
  full.set_block(m, m, j2);
  std::vector<double> nodes(n + 1);
  MatD samples(n + 1, 1);
  for (int k = 0; k <= n; ++k) {
    nodes[k] = static_cast<double>(k);
    MatD jp = full;
    for (int a = 0; a < n; ++a) jp(m + a, m + a) += nodes[k];
    samples(k, 0) = det(jp);
  }
  MatD interp = vandermonde_solve_coeffs(nodes, samples);
  double scale = 0.0;
  for (int k = 0; k <= n; ++k) scale = std::max(scale, std::abs(cb.delta[k]));
  for (int k = 0; k <= n; ++k) {
    if (std::abs(interp(k, 0) - cb.delta[k]) > kDeltaCrossTol * std::max(1.0, scale))
      throw ChainError("Delta coefficient cross-check failed: interpolation " +
                       std::to_string(interp(k, 0)) + " vs charpoly route " +
                       std::to_string(cb.delta[k]) + " for Delta_(" + std::to_string(k + 1) +
                       ")");
  }

  // Blocks: boundary i = n+1, then the closed form for i = 1..n.
  cb.a1.assign(n + 1, MatD());
  cb.a12.assign(n + 1, MatD());
  cb.a21.assign(n + 1, MatD());
  cb.a2.assign(n + 1, MatD());
  cb.a1[n] = adjugate(j1);
  cb.a12[n] = MatD(m, n);
  cb.a21[n] = MatD(n, m);
  cb.a2[n] = MatD(n, n);
  for (int i = 1; i <= n; ++i) {
    MatD a2i = cb.delta[i] * MatD::identity(n);  // Delta_(i+1)
    MatD jb_pow = MatD::identity(n);
    for (int jx = 1; jx <= n - i; ++jx) {
      jb_pow = jb_pow * cb.jbar;
      const double sign = (jx % 2 == 0) ? 1.0 : -1.0;
      a2i += sign * cb.delta[jx + i] * jb_pow;
    }
    cb.a2[i - 1] = a2i;
    cb.a12[i - 1] = -1.0 * (cb.j1inv * j12 * a2i);
    cb.a21[i - 1] = -1.0 * (a2i * j21 * cb.j1inv);
    cb.a1[i - 1] = cb.delta[i - 1] * cb.j1inv + cb.j1inv * j12 * a2i * j21 * cb.j1inv;
  }
  return cb;
}

}  // namespace

ChainBlocks chain_blocks_of_matrix(const MatD& j, int m, int n) {
  return chain_from_values(j.block(0, 0, m, m), j.block(0, m, m, n), j.block(m, 0, n, m),
                           j.block(m, m, n, n));
}

CofactorChain::CofactorChain(const SystemSpec& spec)
    : spec_(spec), split_(block_split(spec.j, spec.m, spec.n)) {}

ChainBlocks CofactorChain::blocks_at(const VecD& q) const {
  Bindings b = spec_.bind(q);
  return chain_from_values(split_.j1.eval(b), split_.j12.eval(b), split_.j21.eval(b),
                           split_.j2.eval(b));
}

ChainBlocksDeriv CofactorChain::derivative_at(const VecD& q, int gamma,
                                              const ChainBlocks& cb) const {
  Bindings b = spec_.bind(q);
  const int m = split_.m, n = split_.n;
  ChainBlocksDeriv d;
  d.dj1 = split_.dj1[gamma].eval(b);
  d.dj12 = split_.dj12[gamma].eval(b);
  d.dj21 = split_.dj21[gamma].eval(b);
  d.dj2 = split_.dj2[gamma].eval(b);
  d.dj1inv = -1.0 * (cb.j1inv * d.dj1 * cb.j1inv);
  d.djbar = d.dj2 - d.dj21 * cb.j1inv * cb.j12 - cb.j21 * d.dj1inv * cb.j12 -
            cb.j21 * cb.j1inv * d.dj12;

  // d Delta_(i) = tr(A_(i) dJ): Jacobi's formula applied per epsilon power.
  const int nn = m + n;
  MatD dfull(nn, nn);
  dfull.set_block(0, 0, d.dj1);
  dfull.set_block(0, m, d.dj12);
  dfull.set_block(m, 0, d.dj21);
  dfull.set_block(m, m, d.dj2);
  d.ddelta.assign(n + 1, 0.0);
  for (int i = 1; i <= n + 1; ++i) {
    MatD prod = cb.assembled(i) * dfull;
    double tr = 0.0;
    for (int k = 0; k < nn; ++k) tr += prod(k, k);
    d.ddelta[i - 1] = tr;
  }
  d.ddet_j1 = d.ddelta[n];

  // powers of jbar and their derivatives
  std::vector<MatD> pows{MatD::identity(n)};
  std::vector<MatD> dpows{MatD(n, n)};
  for (int jx = 1; jx <= n; ++jx) {
    dpows.push_back(dpows[jx - 1] * cb.jbar + pows[jx - 1] * d.djbar);
    pows.push_back(pows[jx - 1] * cb.jbar);
  }

  d.da1.assign(n + 1, MatD());
  d.da12.assign(n + 1, MatD());
  d.da21.assign(n + 1, MatD());
  d.da2.assign(n + 1, MatD());
  // i = n+1: A1 = adj(J1) = det(J1) J1inv
  d.da1[n] = d.ddet_j1 * cb.j1inv + cb.det_j1 * d.dj1inv;
  d.da12[n] = MatD(m, n);
  d.da21[n] = MatD(n, m);
  d.da2[n] = MatD(n, n);
  for (int i = 1; i <= n; ++i) {
    MatD da2i = d.ddelta[i] * MatD::identity(n);
    for (int jx = 1; jx <= n - i; ++jx) {
      const double sign = (jx % 2 == 0) ? 1.0 : -1.0;
      da2i += sign * (d.ddelta[jx + i] * pows[jx] + cb.delta[jx + i] * dpows[jx]);
    }
    d.da2[i - 1] = da2i;
    const MatD& a2i = cb.a2[i - 1];
    d.da12[i - 1] = -1.0 * (d.dj1inv * cb.j12 * a2i + cb.j1inv * d.dj12 * a2i +
                            cb.j1inv * cb.j12 * da2i);
    d.da21[i - 1] = -1.0 * (da2i * cb.j21 * cb.j1inv + a2i * d.dj21 * cb.j1inv +
                            a2i * cb.j21 * d.dj1inv);
    d.da1[i - 1] = d.ddelta[i - 1] * cb.j1inv + cb.delta[i - 1] * d.dj1inv +
                   d.dj1inv * cb.j12 * a2i * cb.j21 * cb.j1inv +
                   cb.j1inv * d.dj12 * a2i * cb.j21 * cb.j1inv +
                   cb.j1inv * cb.j12 * da2i * cb.j21 * cb.j1inv +
                   cb.j1inv * cb.j12 * a2i * d.dj21 * cb.j1inv +
                   cb.j1inv * cb.j12 * a2i * cb.j21 * d.dj1inv;
  }
  return d;
}

MatD CofactorChain::jbar_at(const VecD& q) const { return blocks_at(q).jbar; }

VecD CofactorChain::delta_at(const VecD& q) const { return blocks_at(q).delta; }

VecD CofactorChain::mu_at(const VecD& q) const {
  Bindings b = spec_.bind(q);
  VecD out(spec_.dim());
  for (int i = 0; i < spec_.dim(); ++i) out[i] = spec_.mu[i].eval(b);
  return out;
}

VecD CofactorChain::grad_w(int i, const VecD& q) const {
  ChainBlocks cb = blocks_at(q);
  MatD a = cb.assembled(i);
  VecD muv = mu_at(q);
  const int nn = spec_.dim();
  VecD out(nn, 0.0);
  for (int al = 0; al < nn; ++al)
    for (int be = 0; be < nn; ++be) out[al] -= a(be, al) * muv[be];
  return out;
}

double CofactorChain::w(int i, const VecD& q) const {
  auto omega = [&](const VecD& qq) { return grad_w(i, qq); };
  return line_integral(omega, spec_.base_point, q, spec_.waypoints);
}

CofactorChain::MuBar2 CofactorChain::mu_bar2(const VecD& q) const {
  const int m = split_.m, n = split_.n;
  ChainBlocks cb = blocks_at(q);
  VecD muv = mu_at(q);
  VecD dwn = grad_w(n, q);  // = d W_(n), exact route
  MuBar2 out;
  out.mu_bar2.assign(n, 0.0);
  for (int a = 0; a < n; ++a) out.mu_bar2[a] = dwn[m + a];

  // Independent route: FD of the line-integral W_(n), then the identity
  // (det J1) mu_2 + J12(d1 W^1) = -d2 W_(n).
  VecD dw1 = grad_w(n + 1, q);  // d W^1 (y components)
  double residual = 0.0;
  for (int a = 0; a < n; ++a) {
    const double h = fd_step(q[m + a]);
    VecD qp = q, qm = q;
    qp[m + a] += h;
    qm[m + a] -= h;
    const double d2wn_fd = (w(n, qp) - w(n, qm)) / (2.0 * h);
    double lhs = cb.det_j1 * muv[m + a];
    for (int i = 0; i < m; ++i) lhs += cb.j12(i, a) * dw1[i];
    residual = std::max(residual, std::abs(lhs + d2wn_fd));
  }
  out.residual = residual;
  if (residual > 1e-7 * std::max(1.0, max_abs(out.mu_bar2)))
    throw ChainError("mu_bar2 identity residual " + std::to_string(residual) +
                     " exceeds tolerance");
  return out;
}

double ChainIdentityResiduals::max_rel() const {
  double worst = 0.0;
  for (double v : {id12, id3, id4, commute, recursion, cayley, det_fact, reassembly})
    worst = std::max(worst, v / scale);
  return worst;
}

ChainIdentityResiduals chain_identity_residuals(const ChainBlocks& cb) {
  const int m = cb.m, n = cb.n, nn = m + n;
  ChainIdentityResiduals r;
  MatD full(nn, nn);
  full.set_block(0, 0, cb.j1);
  full.set_block(0, m, cb.j12);
  full.set_block(m, 0, cb.j21);
  full.set_block(m, m, cb.j2);

  double scale = 1.0;
  for (int i = 1; i <= n + 1; ++i) scale = std::max(scale, cb.assembled(i).max_abs());
  scale *= std::max(1.0, full.max_abs());
  r.scale = scale;

  for (int i = 1; i <= n + 1; ++i) {
    const MatD& a1 = cb.a1[i - 1];
    const MatD& a12 = cb.a12[i - 1];
    const MatD& a21 = cb.a21[i - 1];
    const MatD& a2 = cb.a2[i - 1];
    r.id12 = std::max(r.id12, (cb.j1 * a12 + cb.j12 * a2).max_abs());
    r.id12 = std::max(r.id12, (a21 * cb.j1 + a2 * cb.j21).max_abs());
    r.id3 = std::max(r.id3, (cb.j21 * a12 + cb.j2 * a2 - a21 * cb.j12 - a2 * cb.j2).max_abs());
    r.id4 = std::max(r.id4, (cb.j1 * a1 + cb.j12 * a21 - a1 * cb.j1 - a12 * cb.j21).max_abs());
    r.commute = std::max(r.commute, (cb.jbar * a2 - a2 * cb.jbar).max_abs());
    if (i <= n)
      r.recursion = std::max(
          r.recursion,
          (a2 - (cb.delta[i] * MatD::identity(n) - cb.jbar * cb.a2[i])).max_abs());
  }
  {
    MatD ch = cb.delta[1] * MatD::identity(n);
    MatD pw = MatD::identity(n);
    for (int jx = 1; jx <= n - 1; ++jx) {
      pw = pw * cb.jbar;
      ch += ((jx % 2) ? -1.0 : 1.0) * cb.delta[jx + 1] * pw;
    }
    r.cayley = (cb.jbar * ch - cb.delta[0] * MatD::identity(n)).max_abs();
  }
  r.det_fact = std::abs(det(full) - cb.det_j1 * det(cb.jbar));
  for (double eps : {0.0, 0.5, 1.0, 2.0}) {
    MatD jp = full;
    for (int a = 0; a < n; ++a) jp(m + a, m + a) += eps;
    MatD direct = adjugate(jp);
    MatD sum(nn, nn);
    double ek = 1.0;
    for (int i = 1; i <= n + 1; ++i) {
      sum += ek * cb.assembled(i);
      ek *= eps;
    }
    r.reassembly = std::max(r.reassembly, (sum - direct).max_abs());
  }
  return r;
}

double CofactorChain::closedness_residual(int i, const std::vector<VecD>& pts) const {
  auto omega = [&](const VecD& qq) { return grad_w(i, qq); };
  const double r = one_form_closedness_fd(omega, pts);
  if (r > kClosednessTol)
    throw ChainError("refusing to integrate a non-closed form: closedness residual " +
                     std::to_string(r) + " for A_(" + std::to_string(i) + ") mu");
  return r;
}

}  // namespace coflab
