#pragma once

#include <functional>
#include <optional>

#include "cofactor_lab/system_spec.hpp"

namespace coflab {

class ChainError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Dependence-pattern violation in the block split (which block and which
/// derivative failed is part of the message).
class DependenceError : public ChainError {
public:
  using ChainError::ChainError;
};

/// Symbolic blocks of J under the driving/driven split.
struct BlockSplit {
  int m = 0, n = 0;
  std::vector<std::string> coords;  // y's then x's
  ExprMatrix j1, j12, j21, j2;
  // per-coordinate derivative trees of each block
  std::vector<ExprMatrix> dj1, dj12, dj21, dj2;
};

BlockSplit block_split(const TensorField11& j, int m, int n);

/// Checks the block dependence pattern at the given points:
/// J1 = J1(y), J2 = J2(x), d J^i_a / d x^b and d J^a_i / d y^k symmetric.
/// Throws DependenceError naming the offending block otherwise.
void validate_block_dependence(const BlockSplit& s, const std::vector<Bindings>& pts,
                               double tol = 1e-9);

/// Everything the recursion produces at one configuration point.
struct ChainBlocks {
  int m = 0, n = 0;
  MatD j1, j12, j21, j2;
  MatD j1inv;
  MatD jbar;            // J2 - J21 J1^-1 J12
  double det_j1 = 0.0;
  double j1_cond = 0.0;
  VecD delta;           // delta[i-1] = Delta_(i), i = 1..n+1
  std::vector<MatD> a1, a12, a21, a2;  // blocks of A_(i), index i-1
  MatD assembled(int i) const;         // full N x N A_(i)
};

/// Per-direction derivatives of the chain data (exact, from symbolic dJ).
struct ChainBlocksDeriv {
  MatD dj1, dj12, dj21, dj2, dj1inv, djbar;
  double ddet_j1 = 0.0;
  VecD ddelta;
  std::vector<MatD> da1, da12, da21, da2;
  MatD assembled(int i) const;
};

/// Computed family of quadratic-integral ingredients for one system.
class CofactorChain {
public:
  explicit CofactorChain(const SystemSpec& spec);

  const SystemSpec& spec() const { return spec_; }
  const BlockSplit& split() const { return split_; }

  /// Chain blocks at q. Verifies the Delta cross-check (interpolated
  /// det(J + eps P2) against det J1 x charpoly of Jbar) and the J1
  /// conditioning guard; throws ChainError on failure.
  ChainBlocks blocks_at(const VecD& q) const;
  ChainBlocksDeriv derivative_at(const VecD& q, int gamma, const ChainBlocks& base) const;

  MatD jbar_at(const VecD& q) const;
  VecD delta_at(const VecD& q) const;  // Delta_(1) .. Delta_(n+1)

  VecD mu_at(const VecD& q) const;  // force components Q_alpha
  /// -(A_(i) mu)_alpha = dW_(i), exact.
  VecD grad_w(int i, const VecD& q) const;
  /// W_(i)(q) with gauge W_(i)(base) = 0, by line integration of -A_(i)mu.
  double w(int i, const VecD& q) const;
  /// Driving potential W^1(y) = W_(n+1) restricted to the driving slice.
  double w1(const VecD& q) const { return w(n() + 1, q); }

  /// Modified driven force mu_bar_2 = d2 W_(n) plus the residual of the
  /// defining identity (det J1) mu_2 + J12(d1 W^1) = -d2 W_(n), where the
  /// d2 W_(n) on the right is recomputed by finite differences of the
  /// line-integral W_(n) as an independent route.
  struct MuBar2 {
    VecD mu_bar2;
    double residual;
  };
  MuBar2 mu_bar2(const VecD& q) const;

  /// Closedness guard used before any potential reconstruction.
  double closedness_residual(int i, const std::vector<VecD>& pts) const;

  int m() const { return split_.m; }
  int n() const { return split_.n; }

private:
  SystemSpec spec_;
  BlockSplit split_;
};

/// Chain blocks for a constant matrix (no fields involved); exposed for the
/// random-matrix identity suite.
ChainBlocks chain_blocks_of_matrix(const MatD& j, int m, int n);

/// Residuals of the block identities the chain must satisfy at a point.
/// Pure linear algebra: they hold for arbitrary symmetric J with invertible
/// J1 block, independent of any Killing property.
struct ChainIdentityResiduals {
  double id12 = 0.0;        // J1 A12 + J12 A2 = 0 and A21 J1 + A2 J21 = 0
  double id3 = 0.0;         // J21 A12 + J2 A2 = A21 J12 + A2 J2
  double id4 = 0.0;         // J1 A1 + J12 A21 = A1 J1 + A12 J21
  double commute = 0.0;     // Jbar A_(i)2 = A_(i)2 Jbar
  double recursion = 0.0;   // A_(i)2 = Delta_(i+1) I - Jbar A_(i+1)2
  double cayley = 0.0;      // Jbar [Delta_(2) I + sum (-1)^j Delta_(j+2) Jbar^j] = Delta_(1) I
  double det_fact = 0.0;    // det J = det J1 det Jbar
  double reassembly = 0.0;  // sum A_(i) eps^{i-1} = adj(J + eps P2) at probe eps
  double scale = 1.0;       // normalization used for the relative residuals
  double max_rel() const;
};

ChainIdentityResiduals chain_identity_residuals(const ChainBlocks& cb);

}  // namespace coflab
