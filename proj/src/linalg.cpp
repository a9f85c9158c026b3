#include "cofactor_lab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace coflab {

MatD MatD::identity(int n) {
  MatD m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

MatD MatD::transpose() const {
  MatD t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

MatD MatD::block(int r0, int c0, int nr, int nc) const {
  MatD b(nr, nc);
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
  return b;
}

void MatD::set_block(int r0, int c0, const MatD& sub) {
  for (int i = 0; i < sub.rows(); ++i)
    for (int j = 0; j < sub.cols(); ++j) (*this)(r0 + i, c0 + j) = sub(i, j);
}

double MatD::max_abs() const {
  double m = 0.0;
  for (double v : a_) m = std::max(m, std::abs(v));
  return m;
}

MatD& MatD::operator+=(const MatD& o) {
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
  return *this;
}
MatD& MatD::operator-=(const MatD& o) {
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
  return *this;
}
MatD& MatD::operator*=(double s) {
  for (double& v : a_) v *= s;
  return *this;
}

MatD operator+(MatD a, const MatD& b) { return a += b; }
MatD operator-(MatD a, const MatD& b) { return a -= b; }

MatD operator*(const MatD& a, const MatD& b) {
  MatD c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

MatD operator*(double s, MatD a) { return a *= s; }

VecD operator*(const MatD& a, const VecD& x) {
  VecD y(a.rows(), 0.0);
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
  return y;
}

double dot(const VecD& a, const VecD& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(const VecD& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

LU lu_factor(const MatD& m) {
  const int n = m.rows();
  LU f{m, std::vector<int>(n), 1.0, false};
  for (int i = 0; i < n; ++i) f.piv[i] = i;
  for (int k = 0; k < n; ++k) {
    int p = k;
    double best = std::abs(f.lu(k, k));
    for (int i = k + 1; i < n; ++i) {
      const double v = std::abs(f.lu(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best == 0.0) {
      f.singular = true;
      continue;
    }
    if (p != k) {
      for (int j = 0; j < n; ++j) std::swap(f.lu(p, j), f.lu(k, j));
      std::swap(f.piv[p], f.piv[k]);
      f.parity = -f.parity;
    }
    for (int i = k + 1; i < n; ++i) {
      const double mult = f.lu(i, k) / f.lu(k, k);
      f.lu(i, k) = mult;
      for (int j = k + 1; j < n; ++j) f.lu(i, j) -= mult * f.lu(k, j);
    }
  }
  return f;
}

double lu_det(const LU& f) {
  if (f.singular) return 0.0;
  double d = f.parity;
  for (int i = 0; i < f.lu.rows(); ++i) d *= f.lu(i, i);
  return d;
}

VecD lu_solve(const LU& f, const VecD& rhs) {
  if (f.singular) throw LinalgError("singular matrix in solve");
  const int n = f.lu.rows();
  VecD y(n);
  for (int i = 0; i < n; ++i) y[i] = rhs[f.piv[i]];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) y[i] -= f.lu(i, j) * y[j];
  for (int i = n - 1; i >= 0; --i) {
    for (int j = i + 1; j < n; ++j) y[i] -= f.lu(i, j) * y[j];
    y[i] /= f.lu(i, i);
  }
  return y;
}

MatD lu_solve(const LU& f, const MatD& rhs) {
  MatD x(rhs.rows(), rhs.cols());
  VecD col(rhs.rows());
  for (int j = 0; j < rhs.cols(); ++j) {
    for (int i = 0; i < rhs.rows(); ++i) col[i] = rhs(i, j);
    VecD sol = lu_solve(f, col);
    for (int i = 0; i < rhs.rows(); ++i) x(i, j) = sol[i];
  }
  return x;
}

double det(const MatD& m) { return lu_det(lu_factor(m)); }

MatD inverse(const MatD& m) { return lu_solve(lu_factor(m), MatD::identity(m.rows())); }

VecD solve(const MatD& m, const VecD& rhs) { return lu_solve(lu_factor(m), rhs); }

namespace {

double norm_1(const MatD& m) {
  double best = 0.0;
  for (int j = 0; j < m.cols(); ++j) {
    double s = 0.0;
    for (int i = 0; i < m.rows(); ++i) s += std::abs(m(i, j));
    best = std::max(best, s);
  }
  return best;
}

MatD adjugate_minors(const MatD& m) {
  const int n = m.rows();
  if (n == 1) {
    MatD a(1, 1);
    a(0, 0) = 1.0;  // adj of a 1x1 matrix is [1]: M * adj(M) = det(M) I
    return a;
  }
  MatD a(n, n);
  MatD minor(n - 1, n - 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      int mr = 0;
      for (int r = 0; r < n; ++r) {
        if (r == j) continue;  // adjugate is the transposed cofactor matrix
        int mc = 0;
        for (int c = 0; c < n; ++c) {
          if (c == i) continue;
          minor(mr, mc++) = m(r, c);
        }
        ++mr;
      }
      const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      a(i, j) = sign * det(minor);
    }
  }
  return a;
}

}  // namespace

double cond_1(const MatD& m) {
  LU f = lu_factor(m);
  if (f.singular) return std::numeric_limits<double>::infinity();
  return norm_1(m) * norm_1(lu_solve(f, MatD::identity(m.rows())));
}

MatD adjugate(const MatD& m) {
  const int n = m.rows();
  if (n <= 4) return adjugate_minors(m);
  if (cond_1(m) > 1e12) return adjugate_minors(m);
  LU f = lu_factor(m);
  const double d = lu_det(f);
  MatD inv = lu_solve(f, MatD::identity(n));
  // one refinement sweep on the inverse
  MatD r = MatD::identity(n) - m * inv;
  inv = inv + inv * r;
  return d * inv;
}

MatD cholesky(const MatD& m) {
  const int n = m.rows();
  MatD l(n, n);
  for (int j = 0; j < n; ++j) {
    double d = m(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d <= 0.0) throw LinalgError("matrix not positive definite");
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

VecD sym_eigenvalues(MatD m) {
  const int n = m.rows();
  if (n == 1) return {m(0, 0)};
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += m(p, q) * m(p, q);
    if (off < 1e-30 * std::max(1.0, m.max_abs() * m.max_abs())) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (m(p, q) == 0.0) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * m(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
      }
    }
  }
  VecD ev(n);
  for (int i = 0; i < n; ++i) ev[i] = m(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

VecD sym_generalized_eigenvalues(const MatD& a, const MatD& b) {
  const int n = a.rows();
  MatD l = cholesky(b);
  // C = L^-1 A L^-T by two triangular solves
  MatD c = a;
  // forward: solve L X = A  (column-wise)
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      double s = c(i, j);
      for (int k = 0; k < i; ++k) s -= l(i, k) * c(k, j);
      c(i, j) = s / l(i, i);
    }
  }
  // now solve X L^T = C  => rows against L
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = c(i, j);
      for (int k = 0; k < j; ++k) s -= c(i, k) * l(j, k);
      c(i, j) = s / l(j, j);
    }
  }
  // symmetrize against rounding before Jacobi
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (c(i, j) + c(j, i));
      c(i, j) = c(j, i) = v;
    }
  return sym_eigenvalues(c);
}

VecD det_plus_eps_coeffs(const MatD& m) {
  // Faddeev-LeVerrier: det(lambda I - M) = lambda^n + a1 lambda^{n-1} + ... + an,
  // then det(M + eps I) = (-1)^n det(-eps I - M) rearranged into powers of eps.
  const int n = m.rows();
  VecD a(n + 1, 0.0);
  a[0] = 1.0;
  MatD b = MatD::identity(n);
  for (int k = 1; k <= n; ++k) {
    b = m * b;
    double tr = 0.0;
    for (int i = 0; i < n; ++i) tr += b(i, i);
    a[k] = -tr / k;
    for (int i = 0; i < n; ++i) b(i, i) += a[k];
  }
  // p(lambda) = sum_{k=0..n} a[k] lambda^{n-k};  det(M + eps I) = (-1)^n p(-eps)
  VecD c(n + 1, 0.0);
  for (int k = 0; k <= n; ++k) {
    // term a[k] (-eps)^{n-k} * (-1)^n = a[k] (-1)^k eps^{n-k}
    c[n - k] = ((k % 2) ? -1.0 : 1.0) * a[k];
  }
  return c;
}

MatD matrix_power(const MatD& m, int k) {
  MatD r = MatD::identity(m.rows());
  for (int i = 0; i < k; ++i) r = r * m;
  return r;
}

}  // namespace coflab
