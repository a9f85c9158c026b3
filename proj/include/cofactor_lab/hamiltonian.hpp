#pragma once

#include "cofactor_lab/chain.hpp"

namespace coflab {

struct PhasePoint {
  VecD q;  // (y..., x...)
  VecD p;  // conjugate momenta, same order
};

/// Scalar function on phase space together with its gradient. The family
/// integrals carry exact gradients; make_fd_field wraps a plain evaluator
/// with 5-point central differences for use as an independent oracle.
struct ScalarField {
  std::function<double(const PhasePoint&)> value;
  std::function<void(const PhasePoint&, VecD&, VecD&)> gradient;  // (dq, dp)
};

ScalarField make_fd_field(std::function<double(const PhasePoint&)> f, double h_base = 1e-5);

/// The family H_(1)..H_(n+1), built from the chain:
/// H_(i)(q,p) = 1/2 A_(i)^{ab}(q) p_a p_b + W_(i)(q).
class IntegralFamily {
public:
  IntegralFamily(const SystemSpec& spec, const CofactorChain& chain);

  int count() const { return chain_->n() + 1; }  // integrals H_(1)..H_(n+1)
  double value(int i, const PhasePoint& z) const;
  void gradient(int i, const PhasePoint& z, VecD& dq, VecD& dp) const;
  ScalarField field(int i) const;

  /// A_(i) with the second index raised by g: A_(i)^{alpha beta}.
  MatD a_upper(int i, const VecD& q) const;
  /// Driving constant E^1 captured from a phase point (= H_(n+1)).
  double e1(const PhasePoint& z) const { return value(count(), z); }

  /// The same integral in the tilde momenta, where the mixed terms drop out:
  /// H_(i) = 1/2 A_(i)^{ab} pt_a pt_b + 1/2 Delta_(i) J1^{kl} pt_k pt_l + W_(i)
  /// for i <= n, and 1/2 det(J1) J1^{kl} pt_k pt_l + W^1 for i = n+1.
  double value_tilde(int i, const VecD& q, const VecD& ptilde) const;

  const CofactorChain& chain() const { return *chain_; }

private:
  const SystemSpec* spec_;
  const CofactorChain* chain_;
};

/// {f,g}_J at z for the Poisson structure lifted from J. Convention pinned
/// by {q^a, p_b} = +delta^a_b at J = I and by the quasi-Hamiltonian
/// representation below (Hamilton fields are X_F = {., F}).
double bracket_j(const ScalarField& f, const ScalarField& g, const TensorField11& j,
                 const Bindings& params, const PhasePoint& z);

/// Canonical bracket in the driven variables (x^a, p_a) only.
double bracket_canonical_driven(const ScalarField& f, const ScalarField& g, int m,
                                const PhasePoint& z);

/// Vector field P_J(dF) at z (2N components, q then p).
VecD pj_field(const ScalarField& f, const TensorField11& j, const Bindings& params,
              const PhasePoint& z);
/// Vector field P_{P2}(dF) at z.
VecD pp2_field(const ScalarField& f, int m, int n, const PhasePoint& z);

/// Max-norm residual of the recursion Delta_(i) Gamma-hat = P_J(dH_(i)) +
/// P_{P2}(dH_(i-1)) over all i, including the boundary cases.
double quasi_ham_residual(const SystemSpec& spec, const IntegralFamily& family,
                          const PhasePoint& z);

/// Residual of the Darboux-chart criterion for omega_J under p = J^T pcheck:
/// the q-q block of omega_J minus that of d(pcheck) ^ dq, max-abs at z.
/// Zero (to rounding) iff the Nijenhuis torsion of J vanishes.
double darboux_residual(const TensorField11& j, const Bindings& point_params,
                        const PhasePoint& z);

}  // namespace coflab
