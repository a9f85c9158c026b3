#include "cofactor_lab/hamiltonian.hpp"

#include <algorithm>
#include <cmath>

#include "cofactor_lab/numerics.hpp"

namespace coflab {

ScalarField make_fd_field(std::function<double(const PhasePoint&)> f, double h_base) {
  ScalarField out;
  out.value = f;
  out.gradient = [f, h_base](const PhasePoint& z, VecD& dq, VecD& dp) {
    const int nn = static_cast<int>(z.q.size());
    dq.assign(nn, 0.0);
    dp.assign(nn, 0.0);
    for (int i = 0; i < nn; ++i) {
      const double h = fd_step(z.q[i], h_base);
      dq[i] = central_diff5(
          [&](double v) {
            PhasePoint w = z;
            w.q[i] = v;
            return f(w);
          },
          z.q[i], h);
      const double hp = fd_step(z.p[i], h_base);
      dp[i] = central_diff5(
          [&](double v) {
            PhasePoint w = z;
            w.p[i] = v;
            return f(w);
          },
          z.p[i], hp);
    }
  };
  return out;
}

IntegralFamily::IntegralFamily(const SystemSpec& spec, const CofactorChain& chain)
    : spec_(&spec), chain_(&chain) {}

MatD IntegralFamily::a_upper(int i, const VecD& q) const {
  Bindings b = spec_->bind(q);
  MatD ginv = spec_->g.inverse_at(b);
  return chain_->blocks_at(q).assembled(i) * ginv;
}

double IntegralFamily::value(int i, const PhasePoint& z) const {
  MatD au = a_upper(i, z.q);
  double quad = 0.0;
  const int nn = spec_->dim();
  for (int a = 0; a < nn; ++a)
    for (int bidx = 0; bidx < nn; ++bidx) quad += au(a, bidx) * z.p[a] * z.p[bidx];
  return 0.5 * quad + chain_->w(i, z.q);
}

void IntegralFamily::gradient(int i, const PhasePoint& z, VecD& dq, VecD& dp) const {
  const int nn = spec_->dim();
  Bindings b = spec_->bind(z.q);
  MatD ginv = spec_->g.inverse_at(b);
  Tensor3 dg = spec_->g.d_eval(b);
  ChainBlocks cb = chain_->blocks_at(z.q);
  MatD a = cb.assembled(i);
  MatD au = a * ginv;

  dp.assign(nn, 0.0);
  for (int al = 0; al < nn; ++al)
    for (int be = 0; be < nn; ++be) dp[al] += 0.5 * (au(al, be) + au(be, al)) * z.p[be];

  dq.assign(nn, 0.0);
  VecD dw = chain_->grad_w(i, z.q);
  for (int ga = 0; ga < nn; ++ga) {
    ChainBlocksDeriv d = chain_->derivative_at(z.q, ga, cb);
    // d(A g^-1) = dA g^-1 - A g^-1 dg g^-1
    MatD dau = d.assembled(i) * ginv - au * dg[ga] * ginv;
    double quad = 0.0;
    for (int al = 0; al < nn; ++al)
      for (int be = 0; be < nn; ++be) quad += dau(al, be) * z.p[al] * z.p[be];
    dq[ga] = 0.5 * quad + dw[ga];
  }
}

double IntegralFamily::value_tilde(int i, const VecD& q, const VecD& ptilde) const {
  const int m = spec_->m, n = spec_->n;
  Bindings b = spec_->bind(q);
  MatD g = spec_->g.eval(b);
  MatD g1inv = inverse(g.block(0, 0, m, m));
  ChainBlocks cb = chain_->blocks_at(q);
  MatD j1up = cb.j1 * g1inv;  // J1^{kl}

  double driving = 0.0;
  for (int k = 0; k < m; ++k)
    for (int l = 0; l < m; ++l) driving += j1up(k, l) * ptilde[k] * ptilde[l];
  if (i == n + 1) return 0.5 * cb.det_j1 * driving + chain_->w(n + 1, q);

  MatD g2inv = inverse(g.block(m, m, n, n));
  MatD a2up = cb.a2[i - 1] * g2inv;  // A_(i)^{ab}
  double driven = 0.0;
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c) driven += a2up(a, c) * ptilde[m + a] * ptilde[m + c];
  return 0.5 * driven + 0.5 * cb.delta[i - 1] * driving + chain_->w(i, q);
}

ScalarField IntegralFamily::field(int i) const {
  ScalarField f;
  f.value = [this, i](const PhasePoint& z) { return value(i, z); };
  f.gradient = [this, i](const PhasePoint& z, VecD& dq, VecD& dp) { gradient(i, z, dq, dp); };
  return f;
}

namespace {

struct JData {
  MatD j;
  Tensor3 dj;
};

JData j_at(const TensorField11& j, const Bindings& b) { return {j.eval(b), j.d_eval(b)}; }

Bindings bind_q(const TensorField11& j, const Bindings& params, const VecD& q) {
  Bindings b = params;
  for (int i = 0; i < j.dim(); ++i) b.set(j.coords()[i], q[i]);
  return b;
}

}  // namespace

double bracket_j(const ScalarField& f, const ScalarField& g, const TensorField11& j,
                 const Bindings& params, const PhasePoint& z) {
  const int nn = static_cast<int>(z.q.size());
  Bindings b = bind_q(j, params, z.q);
  JData jd = j_at(j, b);
  VecD fq, fp, gq, gp;
  f.gradient(z, fq, fp);
  g.gradient(z, gq, gp);
  double s = 0.0;
  for (int sig = 0; sig < nn; ++sig)
    for (int al = 0; al < nn; ++al) s += jd.j(sig, al) * (fq[sig] * gp[al] - gq[sig] * fp[al]);
  for (int ga = 0; ga < nn; ++ga)
    for (int ta = 0; ta < nn; ++ta)
      for (int nu = 0; nu < nn; ++nu) {
        const double c = jd.dj[nu](ga, ta) - jd.dj[ta](ga, nu);
        s += z.p[ga] * c * fp[ta] * gp[nu];
      }
  return s;
}

double bracket_canonical_driven(const ScalarField& f, const ScalarField& g, int m,
                                const PhasePoint& z) {
  const int nn = static_cast<int>(z.q.size());
  VecD fq, fp, gq, gp;
  f.gradient(z, fq, fp);
  g.gradient(z, gq, gp);
  double s = 0.0;
  for (int a = m; a < nn; ++a) s += fq[a] * gp[a] - fp[a] * gq[a];
  return s;
}

VecD pj_field(const ScalarField& f, const TensorField11& j, const Bindings& params,
              const PhasePoint& z) {
  const int nn = static_cast<int>(z.q.size());
  Bindings b = bind_q(j, params, z.q);
  JData jd = j_at(j, b);
  VecD fq, fp;
  f.gradient(z, fq, fp);
  VecD out(2 * nn, 0.0);
  for (int sig = 0; sig < nn; ++sig)
    for (int al = 0; al < nn; ++al) out[sig] += jd.j(sig, al) * fp[al];
  for (int ta = 0; ta < nn; ++ta) {
    double v = 0.0;
    for (int al = 0; al < nn; ++al) v -= jd.j(al, ta) * fq[al];
    for (int ga = 0; ga < nn; ++ga)
      for (int nu = 0; nu < nn; ++nu)
        v += z.p[ga] * (jd.dj[nu](ga, ta) - jd.dj[ta](ga, nu)) * fp[nu];
    out[nn + ta] = v;
  }
  return out;
}

VecD pp2_field(const ScalarField& f, int m, int n, const PhasePoint& z) {
  const int nn = m + n;
  VecD fq, fp;
  f.gradient(z, fq, fp);
  VecD out(2 * nn, 0.0);
  for (int a = m; a < nn; ++a) {
    out[a] = fp[a];
    out[nn + a] = -fq[a];
  }
  return out;
}

// Gamma-hat lives in dynamics.cpp; declared here to avoid a header cycle.
VecD gamma_hat(const SystemSpec& spec, const PhasePoint& z);

double quasi_ham_residual(const SystemSpec& spec, const IntegralFamily& family,
                          const PhasePoint& z) {
  const int nn = spec.dim();
  const int count = family.count();
  VecD gh = gamma_hat(spec, z);
  VecD deltas = family.chain().delta_at(z.q);

  double worst = 0.0;
  for (int i = 1; i <= count; ++i) {
    VecD rhs = pj_field(family.field(i), spec.j, spec.params, z);
    if (i > 1) {
      VecD extra = pp2_field(family.field(i - 1), spec.m, spec.n, z);
      for (int k = 0; k < 2 * nn; ++k) rhs[k] += extra[k];
    }
    for (int k = 0; k < 2 * nn; ++k)
      worst = std::max(worst, std::abs(deltas[i - 1] * gh[k] - rhs[k]));
  }
  // boundary: P_{P2}(dH_(n+1)) must vanish identically
  VecD top = pp2_field(family.field(count), spec.m, spec.n, z);
  worst = std::max(worst, max_abs(top));
  return worst;
}

double darboux_residual(const TensorField11& j, const Bindings& point_params,
                        const PhasePoint& z) {
  const int nn = static_cast<int>(z.q.size());
  Bindings b = point_params;
  for (int i = 0; i < nn; ++i) b.set(j.coords()[i], z.q[i]);
  MatD jm = j.eval(b);
  Tensor3 dj = j.d_eval(b);
  LU f = lu_factor(jm);
  if (f.singular) throw GeometryError("singular J in darboux_residual");
  MatD jinv = lu_solve(f, MatD::identity(nn));
  // pcheck_beta = (J^-1)^alpha_beta p_alpha
  VecD pcheck(nn, 0.0);
  for (int be = 0; be < nn; ++be)
    for (int al = 0; al < nn; ++al) pcheck[be] += jinv(al, be) * z.p[al];

  // q-q coefficient of omega_J (factor 1/2 convention):
  //   O1_{s,r} = -p_g C^g_{ab} (J^-1)^b_s (J^-1)^a_r
  MatD o1(nn, nn);
  for (int s = 0; s < nn; ++s)
    for (int r = 0; r < nn; ++r) {
      double v = 0.0;
      for (int g = 0; g < nn; ++g)
        for (int a = 0; a < nn; ++a)
          for (int bb = 0; bb < nn; ++bb) {
            const double c = dj[bb](g, a) - dj[a](g, bb);
            v -= z.p[g] * c * jinv(bb, s) * jinv(a, r);
          }
      o1(s, r) = v;
    }
  // q-q coefficient of d(pcheck) ^ dq through p = J^T pcheck:
  //   O2_{s,r} = p_al (d_s (J^-1)^al_r - d_r (J^-1)^al_s),  dJ^-1 = -J^-1 dJ J^-1
  Tensor3 djinv(nn);
  for (int g = 0; g < nn; ++g) djinv[g] = -1.0 * (jinv * dj[g] * jinv);
  MatD o2(nn, nn);
  for (int s = 0; s < nn; ++s)
    for (int r = 0; r < nn; ++r) {
      double v = 0.0;
      for (int al = 0; al < nn; ++al) v += z.p[al] * (djinv[s](al, r) - djinv[r](al, s));
      o2(s, r) = v;
    }
  double worst = 0.0;
  for (int s = 0; s < nn; ++s)
    for (int r = 0; r < nn; ++r) worst = std::max(worst, std::abs(o1(s, r) - o2(s, r)));
  return worst;
}

}  // namespace coflab
