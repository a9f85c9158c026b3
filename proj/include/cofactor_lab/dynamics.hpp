#pragma once

#include "cofactor_lab/hamiltonian.hpp"

namespace coflab {

class DynamicsError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// State blow-up during integration; carries the last good time.
class BlowUpError : public DynamicsError {
public:
  BlowUpError(const std::string& msg, double t) : DynamicsError(msg), last_good_time(t) {}
  double last_good_time;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<PhasePoint> z;
  std::vector<std::vector<double>> integrals;  // integrals[k][i-1] = H_(i) at t[k]
  VecD max_drift;                              // per integral, relative
  std::size_t steps = 0;
  double max_error_estimate = 0.0;  // RK45 only
  bool aborted = false;
  double abort_time = 0.0;
};

/// Phase-space velocity of the equations of motion after the Legendre map:
/// qdot = g^-1 p, pdot_a = Gamma^c_{mu a} g^{mu d} p_c p_d + Q_a.
VecD gamma_hat(const SystemSpec& spec, const PhasePoint& z);

/// Second-order field f^alpha(q, v) = -Gamma^a_{bc} v^b v^c + (g^-1 Q)^a.
VecD second_order_field(const SystemSpec& spec, const VecD& q, const VecD& v);

Trajectory integrate(const SystemSpec& spec, const PhasePoint& z0, double t_end,
                     const IntegrationControl& control, const IntegralFamily* monitor = nullptr);

/// Jacobi endomorphism Phi^a_b = -df^a/dq^b - Gamma^a_c Gamma^c_b - Gamma(Gamma^a_b)
/// at (q, v), with the connection coefficients Gamma^a_b = Gamma^a_{bc} v^c.
MatD jacobi_endomorphism(const SystemSpec& spec, const VecD& q, const VecD& v);

/// Max distance of Phi k from span(K) over the sampled Phi matrices,
/// for each basis column k of K.
double invariant_distribution_check(const std::vector<MatD>& phi_samples, const MatD& k_basis);

struct StructureCheck {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct StructureReport {
  std::vector<StructureCheck> checks;
  VecD coupling_witness_point;  // a point where dQ_a/dy != 0
  double coupling_witness_value = 0.0;
  bool all_pass = true;
  std::string failure;  // name of the first failed condition
};

/// Definition-2 conditions in adapted coordinates, checked at sample points:
/// (1) driving decoupling df^i/dx = 0, (2) metric block structure,
/// (3) d mu(K,K) = 0 via dQ_a/dx^b antisymmetry, (4) a coupling witness
/// dQ_a/dy^i != 0, plus the optional potential consistency -dV/dx = Q_a.
StructureReport verify_driven_structure(const SystemSpec& spec, const std::vector<VecD>& pts);

}  // namespace coflab
