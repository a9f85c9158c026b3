#pragma once

#include <stdexcept>
#include <vector>

namespace coflab {

class LinalgError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

using VecD = std::vector<double>;

/// Row-major dense matrix, sized for configuration-space dimensions
/// (a handful of rows/columns, not thousands).
class MatD {
public:
  MatD() = default;
  MatD(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, fill) {}
  static MatD identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }

  MatD transpose() const;
  MatD block(int r0, int c0, int nr, int nc) const;
  void set_block(int r0, int c0, const MatD& sub);
  double max_abs() const;

  MatD& operator+=(const MatD& o);
  MatD& operator-=(const MatD& o);
  MatD& operator*=(double s);

private:
  int rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

MatD operator+(MatD a, const MatD& b);
MatD operator-(MatD a, const MatD& b);
MatD operator*(const MatD& a, const MatD& b);
MatD operator*(double s, MatD a);
VecD operator*(const MatD& a, const VecD& x);

double dot(const VecD& a, const VecD& b);
double max_abs(const VecD& v);

/// LU decomposition with partial pivoting.
struct LU {
  MatD lu;
  std::vector<int> piv;
  double parity = 1.0;
  bool singular = false;
};

LU lu_factor(const MatD& m);
double lu_det(const LU& f);
VecD lu_solve(const LU& f, const VecD& rhs);  // throws LinalgError if singular
MatD lu_solve(const LU& f, const MatD& rhs);

double det(const MatD& m);
MatD inverse(const MatD& m);  // throws if singular
VecD solve(const MatD& m, const VecD& rhs);

/// 1-norm condition estimate via the explicit inverse (fine at these sizes).
/// Returns +inf when the matrix does not factor.
double cond_1(const MatD& m);

/// Adjugate: adj(M) M = M adj(M) = det(M) I. Exact signed-minor expansion for
/// n <= 4; det*inverse with a refinement sweep above that, falling back to
/// minors when the matrix is too ill-conditioned for the inverse route.
MatD adjugate(const MatD& m);

/// Cholesky factor L (lower) of a symmetric positive-definite matrix.
/// Throws LinalgError when the matrix is not positive definite.
MatD cholesky(const MatD& m);

/// Eigenvalues (ascending) of a symmetric matrix by cyclic Jacobi rotations.
VecD sym_eigenvalues(MatD m);

/// Eigenvalues of the pencil (A, B) with A symmetric, B s.p.d., via the
/// Cholesky reduction L^-1 A L^-T. Ascending order.
VecD sym_generalized_eigenvalues(const MatD& a, const MatD& b);

/// Coefficients c[0..n] with det(M + eps I) = sum_k c[k] eps^k, via the
/// Faddeev-LeVerrier recursion (c[n] = 1, c[0] = det M).
VecD det_plus_eps_coeffs(const MatD& m);

MatD matrix_power(const MatD& m, int k);

}  // namespace coflab
