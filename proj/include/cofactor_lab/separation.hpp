#pragma once

#include "cofactor_lab/dynamics.hpp"

namespace coflab {

class SeparationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Eigenfunctions of Jbar at a point: the n roots of det(J - lambda P2) = 0,
/// their gradients (finite differences of the root function) and the
/// driven-block Jacobian du/dx.
struct EigenData {
  VecD u;      // ascending (or matched to prev when given)
  MatD du;     // du(a, gamma): d u^a / d q^gamma over all N coordinates
  MatD dudx;   // n x n driven block of du
  double min_gap = 0.0;
  double jacobian_cond = 0.0;
  double pencil_residual = 0.0;  // max |det(J - u^a P2)|, cross-check
};

/// Throws SeparationError on repeated (gap below tolerance) eigenvalues.
/// When `prev` is given, roots are matched to it by nearest value instead of
/// sorted, keeping labels continuous along trajectories.
EigenData eigen_at(const SystemSpec& spec, const CofactorChain& chain, const VecD& q,
                   const VecD* prev = nullptr);

/// Max-norm of (J - u^a P2) du^a over a.
double eigenform_residual(const SystemSpec& spec, const CofactorChain& chain, const VecD& q);

/// psi^i(y, x) with J^i_a = d psi^i / d x^a, gauged psi^i = 0 at the base x.
VecD psi_potentials(const SystemSpec& spec, const CofactorChain& chain, const VecD& q);
/// d psi^i / d y^k by differentiating under the x-integral.
MatD psi_dy(const SystemSpec& spec, const CofactorChain& chain, const VecD& q);

/// Momentum transform p -> ptilde: p_i = J1^j_i pt_j, p_a = pt_a + J^i_a pt_i.
VecD to_tilde(const ChainBlocks& cb, const VecD& p);
VecD from_tilde(const ChainBlocks& cb, const VecD& ptilde);

/// Driven potential V(x; y): the declared expression, or the x-line integral
/// of -mu_2 gauged V = 0 at the base x.
double driven_potential(const SystemSpec& spec, const VecD& q);

/// Transformed driven Hamiltonian h-tilde(x, ptilde, t) = h + dF/dt assembled
/// termwise along the driving solution carried by (q, ptilde).
double tilde_h(const SystemSpec& spec, const CofactorChain& chain, const VecD& q,
               const VecD& ptilde);

/// Gradient-match residual of h-tilde against (det J1)^-1 H_(n) +
/// J^{ai} pt_a pt_i, which agree up to an additive function of time: both
/// sides are differentiated in (x^a, pt_a) by central differences.
double tilde_h_match_residual(const SystemSpec& spec, const CofactorChain& chain,
                       const IntegralFamily& family, const VecD& q, const VecD& ptilde);

struct UsPoint {
  VecD u, s;
};

/// (x, ptilde_driven) -> (u, s) with s = (du/dx)^-T ptilde_driven.
UsPoint to_us(const EigenData& eigen, const VecD& ptilde_driven);
/// Newton inversion of u(y, x) = u_target for x at fixed y.
VecD x_from_u(const SystemSpec& spec, const CofactorChain& chain, const VecD& y,
              const VecD& u_target, const VecD& x_seed, int max_iter = 50,
              double tol = 1e-12);

struct TimeIndependenceReport {
  double max_variation = 0.0;  // max over probes and integrals, scaled
  double scale = 1.0;
  int probes = 0;
  int times = 0;
  int skipped = 0;  // probe/time pairs whose chart inversion failed
  bool pass = false;
};

/// Pulls each H_(i) back through the time-t_k chart maps on a fixed (u, s)
/// probe grid and reports the maximal variation across times.
TimeIndependenceReport time_independence_certificate(const SystemSpec& spec,
                                                     const CofactorChain& chain,
                                                     const IntegralFamily& family,
                                                     const Trajectory& traj, int grid_u,
                                                     int grid_s, int time_samples = 10,
                                                     double tol = 1e-6);

struct StackelReport {
  double sckt_jbar_residual = 0.0;     // (1) Jbar is a scKt for g2
  double admissible_residual = 0.0;    // (2) cof(Jbar) mu_bar2 closed in x
  double metric_offdiag_residual = 0.0;  // (3) g2 diagonal in u coordinates
  bool pass = false;
  std::string failure;
};

StackelReport stackel_certificate(const SystemSpec& spec, const CofactorChain& chain,
                                  const std::vector<VecD>& pts);

/// Residual of J1 P1(du^a) + J21 P2(du^a) = 0 (FD gradients).
double driving_eigen_residual(const SystemSpec& spec, const CofactorChain& chain, const VecD& q);

/// Consistency of the elementary symmetric functions of u with the Delta
/// coefficients: Delta_(i+1) = det(J1) sigma_{n-i}(u), relative residual.
double sigma_delta_residual(const SystemSpec& spec, const CofactorChain& chain, const VecD& q);

}  // namespace coflab
