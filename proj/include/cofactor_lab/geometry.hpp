#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cofactor_lab/expr.hpp"
#include "cofactor_lab/linalg.hpp"

namespace coflab {

class GeometryError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Matrix of expressions; row = upper index, column = lower index throughout.
class ExprMatrix {
public:
  ExprMatrix() = default;
  ExprMatrix(int rows, int cols)
      : rows_(rows), cols_(cols), e_(static_cast<std::size_t>(rows) * cols) {}
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Expr& operator()(int i, int j) { return e_[static_cast<std::size_t>(i) * cols_ + j]; }
  const Expr& operator()(int i, int j) const {
    return e_[static_cast<std::size_t>(i) * cols_ + j];
  }
  MatD eval(const Bindings& b) const;
  ExprMatrix diff(const std::string& var) const;
  ExprMatrix block(int r0, int c0, int nr, int nc) const;

private:
  int rows_ = 0, cols_ = 0;
  std::vector<Expr> e_;
};

ExprMatrix operator*(const ExprMatrix& a, const ExprMatrix& b);
ExprMatrix operator+(const ExprMatrix& a, const ExprMatrix& b);
ExprMatrix operator-(const ExprMatrix& a, const ExprMatrix& b);

Expr expr_det(const ExprMatrix& m);           // cofactor expansion, small N
ExprMatrix expr_adjugate(const ExprMatrix& m);  // n <= 4
/// Inverse of a symbolic matrix as adj/det; intended for metric blocks, n <= 4.
ExprMatrix expr_inverse(const ExprMatrix& m);

using Tensor3 = std::vector<MatD>;  // T[alpha](beta, gamma)

/// Riemannian metric given by symbolic components; derivative trees are
/// prepared once at construction.
class MetricField {
public:
  MetricField() = default;
  MetricField(ExprMatrix g, std::vector<std::string> coords);

  int dim() const { return static_cast<int>(coords_.size()); }
  const std::vector<std::string>& coords() const { return coords_; }
  const ExprMatrix& components() const { return g_; }
  const ExprMatrix& d_components(int gamma) const { return dg_[gamma]; }

  MatD eval(const Bindings& p) const { return g_.eval(p); }
  /// Inverse at a point; checks positive-definiteness via Cholesky first.
  MatD inverse_at(const Bindings& p) const;
  Tensor3 d_eval(const Bindings& p) const;  // dg[gamma](a,b) = d g_ab / d q^gamma

private:
  ExprMatrix g_;
  std::vector<std::string> coords_;
  std::vector<ExprMatrix> dg_;
};

/// Type (1,1) tensor field with symbolic components J^alpha_beta.
class TensorField11 {
public:
  TensorField11() = default;
  TensorField11(ExprMatrix j, std::vector<std::string> coords);

  int dim() const { return static_cast<int>(coords_.size()); }
  const std::vector<std::string>& coords() const { return coords_; }
  const ExprMatrix& components() const { return j_; }
  const ExprMatrix& d_components(int gamma) const { return dj_[gamma]; }
  const std::vector<Expr>& alpha() const { return alpha_; }  // d(tr J), symbolic

  MatD eval(const Bindings& p) const { return j_.eval(p); }
  Tensor3 d_eval(const Bindings& p) const;  // dJ[gamma](a,b) = d J^a_b / d q^gamma
  VecD alpha_at(const Bindings& p) const;

  /// Max asymmetry of g.J at the points; used to enforce g-symmetry.
  double g_symmetry_residual(const MetricField& g, const std::vector<Bindings>& pts) const;

private:
  ExprMatrix j_;
  std::vector<std::string> coords_;
  std::vector<ExprMatrix> dj_;
  std::vector<Expr> alpha_;
};

/// Levi-Civita connection coefficients Gamma^alpha_{beta gamma} at a point.
Tensor3 christoffel(const MetricField& g, const Bindings& p);

/// Derivative of the Christoffel symbols, d Gamma^a_{bc} / d q^delta.
std::vector<Tensor3> christoffel_derivative(const MetricField& g, const Bindings& p);

struct ScktPointResult {
  double residual;  // max-norm over all index triples
  VecD alpha;       // d(tr J) at the point
};

/// Residual of the special-conformal-Killing condition for J against g.
ScktPointResult sckt_residual(const MetricField& g, const TensorField11& j, const Bindings& p);

struct ScktReport {
  double max_residual = 0.0;
  double max_nijenhuis = 0.0;
  VecD alpha_sample;       // alpha at the first point
  Bindings worst_point;    // where max_residual was attained
};

ScktReport sckt_report(const MetricField& g, const TensorField11& j,
                       const std::vector<Bindings>& pts);

/// Max-abs component of the Nijenhuis torsion of J at a point.
double nijenhuis_norm(const TensorField11& j, const Bindings& p);

/// Numeric cofactor tensor (adjugate): M cof(M) = det(M) I.
inline MatD cofactor(const MatD& m) { return adjugate(m); }

/// Closedness residual of the 1-form (cof J) mu: max over points and index
/// pairs of |d_beta (A mu)_alpha - d_alpha (A mu)_beta|. Exact symbolic
/// derivatives for dim <= 4, finite differences above.
double dj_mu_closedness(const MetricField& g, const TensorField11& j,
                        const std::vector<Expr>& mu, const std::vector<Bindings>& pts);

/// FD-based closedness residual for a pointwise 1-form evaluator.
double one_form_closedness_fd(const std::function<VecD(const VecD&)>& omega,
                              const std::vector<VecD>& pts, double h_base = 1e-6);

}  // namespace coflab
