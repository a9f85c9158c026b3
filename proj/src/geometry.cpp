#include "cofactor_lab/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "cofactor_lab/numerics.hpp"

namespace coflab {

MatD ExprMatrix::eval(const Bindings& b) const {
  MatD m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).eval(b);
  return m;
}

ExprMatrix ExprMatrix::diff(const std::string& var) const {
  ExprMatrix d(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) d(i, j) = (*this)(i, j).diff(var);
  return d;
}

ExprMatrix ExprMatrix::block(int r0, int c0, int nr, int nc) const {
  ExprMatrix b(nr, nc);
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
  return b;
}

ExprMatrix operator*(const ExprMatrix& a, const ExprMatrix& b) {
  ExprMatrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      Expr s = Expr::constant(0.0);
      for (int k = 0; k < a.cols(); ++k) s = s + a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

ExprMatrix operator+(const ExprMatrix& a, const ExprMatrix& b) {
  ExprMatrix c(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) + b(i, j);
  return c;
}

ExprMatrix operator-(const ExprMatrix& a, const ExprMatrix& b) {
  ExprMatrix c(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
  return c;
}

Expr expr_det(const ExprMatrix& m) {
  const int n = m.rows();
  if (n == 1) return m(0, 0);
  if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  Expr d = Expr::constant(0.0);
  for (int j = 0; j < n; ++j) {
    ExprMatrix minor(n - 1, n - 1);
    for (int r = 1; r < n; ++r) {
      int mc = 0;
      for (int c = 0; c < n; ++c) {
        if (c == j) continue;
        minor(r - 1, mc++) = m(r, c);
      }
    }
    Expr term = m(0, j) * expr_det(minor);
    d = (j % 2 == 0) ? d + term : d - term;
  }
  return d;
}

ExprMatrix expr_adjugate(const ExprMatrix& m) {
  const int n = m.rows();
  if (n > 4) throw GeometryError("symbolic adjugate limited to 4x4");
  ExprMatrix a(n, n);
  if (n == 1) {
    a(0, 0) = Expr::constant(1.0);
    return a;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      ExprMatrix minor(n - 1, n - 1);
      int mr = 0;
      for (int r = 0; r < n; ++r) {
        if (r == j) continue;
        int mc = 0;
        for (int c = 0; c < n; ++c) {
          if (c == i) continue;
          minor(mr, mc++) = m(r, c);
        }
        ++mr;
      }
      Expr d = expr_det(minor);
      a(i, j) = ((i + j) % 2 == 0) ? d : Expr::constant(0.0) - d;
    }
  return a;
}

ExprMatrix expr_inverse(const ExprMatrix& m) {
  ExprMatrix adj = expr_adjugate(m);
  Expr d = expr_det(m);
  ExprMatrix inv(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) inv(i, j) = adj(i, j) / d;
  return inv;
}

// ---------------------------------------------------------------------------

MetricField::MetricField(ExprMatrix g, std::vector<std::string> coords)
    : g_(std::move(g)), coords_(std::move(coords)) {
  dg_.reserve(coords_.size());
  for (const auto& c : coords_) dg_.push_back(g_.diff(c));
}

MatD MetricField::inverse_at(const Bindings& p) const {
  MatD g = g_.eval(p);
  try {
    cholesky(g);
  } catch (const LinalgError&) {
    throw GeometryError("metric not positive definite at the queried point");
  }
  return inverse(g);
}

Tensor3 MetricField::d_eval(const Bindings& p) const {
  Tensor3 out;
  out.reserve(dg_.size());
  for (const auto& d : dg_) out.push_back(d.eval(p));
  return out;
}

TensorField11::TensorField11(ExprMatrix j, std::vector<std::string> coords)
    : j_(std::move(j)), coords_(std::move(coords)) {
  dj_.reserve(coords_.size());
  for (const auto& c : coords_) dj_.push_back(j_.diff(c));
  Expr tr = Expr::constant(0.0);
  for (int i = 0; i < j_.rows(); ++i) tr = tr + j_(i, i);
  alpha_.reserve(coords_.size());
  for (const auto& c : coords_) alpha_.push_back(tr.diff(c));
}

Tensor3 TensorField11::d_eval(const Bindings& p) const {
  Tensor3 out;
  out.reserve(dj_.size());
  for (const auto& d : dj_) out.push_back(d.eval(p));
  return out;
}

VecD TensorField11::alpha_at(const Bindings& p) const {
  VecD a(alpha_.size());
  for (std::size_t i = 0; i < alpha_.size(); ++i) a[i] = alpha_[i].eval(p);
  return a;
}

double TensorField11::g_symmetry_residual(const MetricField& g,
                                          const std::vector<Bindings>& pts) const {
  double worst = 0.0;
  for (const auto& p : pts) {
    MatD gj = g.eval(p) * eval(p);
    for (int i = 0; i < gj.rows(); ++i)
      for (int j = i + 1; j < gj.cols(); ++j)
        worst = std::max(worst, std::abs(gj(i, j) - gj(j, i)));
  }
  return worst;
}

// ---------------------------------------------------------------------------

Tensor3 christoffel(const MetricField& g, const Bindings& p) {
  const int n = g.dim();
  MatD ginv = g.inverse_at(p);
  Tensor3 dg = g.d_eval(p);
  Tensor3 gamma(n, MatD(n, n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        double s = 0.0;
        for (int sig = 0; sig < n; ++sig)
          s += ginv(a, sig) * (dg[c](sig, b) + dg[b](sig, c) - dg[sig](b, c));
        gamma[a](b, c) = 0.5 * s;
      }
  return gamma;
}

std::vector<Tensor3> christoffel_derivative(const MetricField& g, const Bindings& p) {
  const int n = g.dim();
  MatD gm = g.eval(p);
  MatD ginv = inverse(gm);
  Tensor3 dg = g.d_eval(p);

  // second derivatives d2g[de][ga](a,b) = d^2 g_ab / dq^de dq^ga
  std::vector<Tensor3> d2g(n, Tensor3(n));
  for (int de = 0; de < n; ++de) {
    ExprMatrix d1 = g.d_components(de);
    for (int ga = 0; ga < n; ++ga) d2g[de][ga] = d1.diff(g.coords()[ga]).eval(p);
  }
  // d(ginv)/dq^de = -ginv dg[de] ginv
  Tensor3 dginv(n);
  for (int de = 0; de < n; ++de) dginv[de] = -1.0 * (ginv * dg[de] * ginv);

  std::vector<Tensor3> out(n, Tensor3(n, MatD(n, n)));
  for (int de = 0; de < n; ++de)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) {
          double s = 0.0;
          for (int sig = 0; sig < n; ++sig) {
            s += dginv[de](a, sig) * (dg[c](sig, b) + dg[b](sig, c) - dg[sig](b, c));
            s += ginv(a, sig) *
                 (d2g[de][c](sig, b) + d2g[de][b](sig, c) - d2g[de][sig](b, c));
          }
          out[de][a](b, c) = 0.5 * s;
        }
  return out;
}

ScktPointResult sckt_residual(const MetricField& g, const TensorField11& j, const Bindings& p) {
  const int n = g.dim();
  MatD gm = g.eval(p);
  MatD ginv = g.inverse_at(p);
  MatD jm = j.eval(p);
  Tensor3 dj = j.d_eval(p);
  Tensor3 gamma = christoffel(g, p);
  VecD alpha = j.alpha_at(p);

  double worst = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        double cov = dj[c](a, b);
        for (int s = 0; s < n; ++s) cov += -jm(a, s) * gamma[s](b, c) + jm(s, b) * gamma[a](s, c);
        double rhs = 0.5 * alpha[b] * (a == c ? 1.0 : 0.0);
        double raised = 0.0;
        for (int s = 0; s < n; ++s) raised += alpha[s] * ginv(s, a);
        rhs += 0.5 * raised * gm(b, c);
        worst = std::max(worst, std::abs(cov - rhs));
      }
  return {worst, alpha};
}

ScktReport sckt_report(const MetricField& g, const TensorField11& j,
                       const std::vector<Bindings>& pts) {
  ScktReport rep;
  if (pts.empty()) return rep;
  const int count = static_cast<int>(pts.size());
  std::vector<double> residuals(count), torsions(count);
  std::vector<VecD> alphas(count);
  parallel_for(count, [&](int k) {
    ScktPointResult r = sckt_residual(g, j, pts[k]);
    residuals[k] = r.residual;
    alphas[k] = r.alpha;
    torsions[k] = nijenhuis_norm(j, pts[k]);
  });
  rep.alpha_sample = alphas[0];
  rep.worst_point = pts[0];
  for (int k = 0; k < count; ++k) {
    if (residuals[k] >= rep.max_residual) {
      rep.max_residual = residuals[k];
      rep.worst_point = pts[k];
    }
    rep.max_nijenhuis = std::max(rep.max_nijenhuis, torsions[k]);
  }
  return rep;
}

double nijenhuis_norm(const TensorField11& j, const Bindings& p) {
  const int n = j.dim();
  MatD jm = j.eval(p);
  Tensor3 dj = j.d_eval(p);
  double worst = 0.0;
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c)
      for (int d = 0; d < n; ++d) {
        double v = 0.0;
        for (int b = 0; b < n; ++b) {
          v += jm(a, b) * (dj[d](b, c) - dj[c](b, d));
          v += -jm(b, d) * dj[b](a, c) + jm(b, c) * dj[b](a, d);
        }
        worst = std::max(worst, std::abs(v));
      }
  return worst;
}

double dj_mu_closedness(const MetricField&, const TensorField11& j,
                        const std::vector<Expr>& mu, const std::vector<Bindings>& pts) {
  const int n = j.dim();
  if (n <= 4) {
    ExprMatrix adj = expr_adjugate(j.components());
    // (A mu)_alpha = A^beta_alpha mu_beta
    std::vector<Expr> amu(n, Expr::constant(0.0));
    for (int al = 0; al < n; ++al)
      for (int be = 0; be < n; ++be) amu[al] = amu[al] + adj(be, al) * mu[be];
    double worst = 0.0;
    for (int al = 0; al < n; ++al)
      for (int be = al + 1; be < n; ++be) {
        Expr anti = amu[al].diff(j.coords()[be]) - amu[be].diff(j.coords()[al]);
        for (const auto& p : pts) worst = std::max(worst, std::abs(anti.eval(p)));
      }
    return worst;
  }
  // FD route for larger systems
  std::vector<VecD> qs;
  Bindings extra;  // non-coordinate entries of the first point (parameters)
  if (!pts.empty()) {
    for (const auto& [k, v] : pts.front().items()) {
      if (std::find(j.coords().begin(), j.coords().end(), k) == j.coords().end())
        extra.set(k, v);
    }
  }
  for (const auto& p : pts) {
    VecD q(n);
    for (int i = 0; i < n; ++i) q[i] = p.get(j.coords()[i]);
    qs.push_back(q);
  }
  auto omega = [&](const VecD& q) {
    Bindings b = extra;
    for (int i = 0; i < n; ++i) b.set(j.coords()[i], q[i]);
    MatD a = adjugate(j.eval(b));
    VecD muv(n);
    for (int i = 0; i < n; ++i) muv[i] = mu[i].eval(b);
    VecD out(n, 0.0);
    for (int al = 0; al < n; ++al)
      for (int be = 0; be < n; ++be) out[al] += a(be, al) * muv[be];
    return out;
  };
  return one_form_closedness_fd(omega, qs);
}

double one_form_closedness_fd(const std::function<VecD(const VecD&)>& omega,
                              const std::vector<VecD>& pts, double h_base) {
  double worst = 0.0;
  for (const auto& q : pts) {
    const int n = static_cast<int>(q.size());
    // d omega[beta][alpha] = d_beta omega_alpha
    MatD dom(n, n);
    for (int be = 0; be < n; ++be) {
      const double h = h_base * (1.0 + std::abs(q[be]));
      VecD qp = q, qm = q;
      qp[be] += h;
      qm[be] -= h;
      VecD op = omega(qp), om = omega(qm);
      for (int al = 0; al < n; ++al) dom(be, al) = (op[al] - om[al]) / (2.0 * h);
    }
    for (int al = 0; al < n; ++al)
      for (int be = al + 1; be < n; ++be)
        worst = std::max(worst, std::abs(dom(be, al) - dom(al, be)));
  }
  return worst;
}

}  // namespace coflab
