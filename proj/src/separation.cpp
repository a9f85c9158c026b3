#include "cofactor_lab/separation.hpp"

#include <algorithm>
#include <cmath>

#include "cofactor_lab/numerics.hpp"

namespace coflab {

namespace {

VecD eigenvalues_at(const SystemSpec& spec, const CofactorChain& chain, const VecD& q) {
  ChainBlocks cb = chain.blocks_at(q);
  Bindings b = spec.bind(q);
  MatD g2 = spec.g.eval(b).block(spec.m, spec.m, spec.n, spec.n);
  // Jbar is g2-symmetric; solve the pencil (g2 Jbar, g2).
  MatD a = g2 * cb.jbar;
  for (int i = 0; i < spec.n; ++i)
    for (int j = i + 1; j < spec.n; ++j) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = a(j, i) = v;
    }
  return sym_generalized_eigenvalues(a, g2);
}

VecD match_to_prev(VecD u, const VecD& prev) {
  const int n = static_cast<int>(u.size());
  VecD out(n);
  std::vector<bool> used(n, false);
  for (int a = 0; a < n; ++a) {
    int best = -1;
    double bd = 0.0;
    for (int k = 0; k < n; ++k) {
      if (used[k]) continue;
      const double d = std::abs(u[k] - prev[a]);
      if (best < 0 || d < bd) {
        best = k;
        bd = d;
      }
    }
    out[a] = u[best];
    used[best] = true;
  }
  return out;
}

}  // namespace

EigenData eigen_at(const SystemSpec& spec, const CofactorChain& chain, const VecD& q,
                   const VecD* prev) {
  const int m = spec.m, n = spec.n, nn = spec.dim();
  EigenData e;
  e.u = eigenvalues_at(spec, chain, q);
  if (prev) e.u = match_to_prev(e.u, *prev);

  double scale = 1.0;
  for (double v : e.u) scale = std::max(scale, std::abs(v));
  e.min_gap = std::numeric_limits<double>::infinity();
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      e.min_gap = std::min(e.min_gap, std::abs(e.u[a] - e.u[b]));
  if (n > 1 && e.min_gap < 1e-8 * scale)
    throw SeparationError("repeated eigenvalue (gap " + std::to_string(e.min_gap) +
                          "); simple spectrum required");

  // cross-check against det(J - u^a P2)
  Bindings b = spec.bind(q);
  MatD jm = spec.j.eval(b);
  double pres = 0.0;
  for (int a = 0; a < n; ++a) {
    MatD shifted = jm;
    for (int k = 0; k < n; ++k) shifted(m + k, m + k) -= e.u[a];
    pres = std::max(pres, std::abs(det(shifted)));
  }
  e.pencil_residual = pres;
  double pscale = std::max(1.0, std::pow(jm.max_abs(), nn));
  if (pres > 1e-8 * pscale)
    throw SeparationError("eigenvalue cross-check det(J - u P2) = " + std::to_string(pres) +
                          " failed");

  // gradients by central differences of the (label-matched) root function
  e.du = MatD(n, nn);
  for (int ga = 0; ga < nn; ++ga) {
    const double h = fd_step(q[ga]);
    VecD qp = q, qm = q;
    qp[ga] += h;
    qm[ga] -= h;
    VecD up = match_to_prev(eigenvalues_at(spec, chain, qp), e.u);
    VecD um = match_to_prev(eigenvalues_at(spec, chain, qm), e.u);
    for (int a = 0; a < n; ++a) e.du(a, ga) = (up[a] - um[a]) / (2.0 * h);
  }
  e.dudx = e.du.block(0, m, n, n);
  e.jacobian_cond = cond_1(e.dudx);
  return e;
}

double eigenform_residual(const SystemSpec& spec, const CofactorChain& chain, const VecD& q) {
  const int m = spec.m, n = spec.n, nn = spec.dim();
  EigenData e = eigen_at(spec, chain, q);
  Bindings b = spec.bind(q);
  MatD jm = spec.j.eval(b);
  double worst = 0.0;
  for (int a = 0; a < n; ++a) {
    // [(J - u^a P2) du^a]_beta = du^a_gamma (J - u^a P2)^gamma_beta
    for (int be = 0; be < nn; ++be) {
      double v = 0.0;
      for (int ga = 0; ga < nn; ++ga) {
        double t = jm(ga, be);
        if (ga == be && ga >= m) t -= e.u[a];
        v += e.du(a, ga) * t;
      }
      worst = std::max(worst, std::abs(v));
    }
  }
  return worst;
}

VecD psi_potentials(const SystemSpec& spec, const CofactorChain& chain, const VecD& q) {
  const int m = spec.m, n = spec.n;
  const BlockSplit& s = chain.split();
  VecD out(m, 0.0);
  for (int i = 0; i < m; ++i) {
    auto omega = [&](const VecD& x) {
      VecD full = q;
      for (int a = 0; a < n; ++a) full[m + a] = x[a];
      Bindings b = spec.bind(full);
      VecD w(n);
      for (int a = 0; a < n; ++a) w[a] = s.j12(i, a).eval(b);
      return w;
    };
    VecD x0(n), x1(n);
    for (int a = 0; a < n; ++a) {
      x0[a] = spec.base_point[m + a];
      x1[a] = q[m + a];
    }
    out[i] = line_integral(omega, x0, x1);
  }
  return out;
}

MatD psi_dy(const SystemSpec& spec, const CofactorChain& chain, const VecD& q) {
  const int m = spec.m, n = spec.n;
  const BlockSplit& s = chain.split();
  MatD out(m, m);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k) {
      auto omega = [&](const VecD& x) {
        VecD full = q;
        for (int a = 0; a < n; ++a) full[m + a] = x[a];
        Bindings b = spec.bind(full);
        VecD w(n);
        for (int a = 0; a < n; ++a) w[a] = s.dj12[k](i, a).eval(b);
        return w;
      };
      VecD x0(n), x1(n);
      for (int a = 0; a < n; ++a) {
        x0[a] = spec.base_point[m + a];
        x1[a] = q[m + a];
      }
      out(i, k) = line_integral(omega, x0, x1);
    }
  return out;
}

VecD to_tilde(const ChainBlocks& cb, const VecD& p) {
  const int m = cb.m, n = cb.n;
  // p_i = J1^j_i pt_j  =>  pt = J1^-T p_driving
  VecD pd(m);
  for (int i = 0; i < m; ++i) pd[i] = p[i];
  MatD j1t = cb.j1.transpose();
  VecD pt_driving = solve(j1t, pd);
  VecD out(m + n);
  for (int i = 0; i < m; ++i) out[i] = pt_driving[i];
  for (int a = 0; a < n; ++a) {
    double v = p[m + a];
    for (int i = 0; i < m; ++i) v -= cb.j12(i, a) * pt_driving[i];
    out[m + a] = v;
  }
  return out;
}

VecD from_tilde(const ChainBlocks& cb, const VecD& ptilde) {
  const int m = cb.m, n = cb.n;
  VecD out(m + n);
  for (int i = 0; i < m; ++i) {
    double v = 0.0;
    for (int j = 0; j < m; ++j) v += cb.j1(j, i) * ptilde[j];
    out[i] = v;
  }
  for (int a = 0; a < n; ++a) {
    double v = ptilde[m + a];
    for (int i = 0; i < m; ++i) v += cb.j12(i, a) * ptilde[i];
    out[m + a] = v;
  }
  return out;
}

double driven_potential(const SystemSpec& spec, const VecD& q) {
  if (spec.potential) return spec.potential->eval(spec.bind(q));
  const int m = spec.m, n = spec.n;
  auto omega = [&](const VecD& x) {
    VecD full = q;
    for (int a = 0; a < n; ++a) full[m + a] = x[a];
    Bindings b = spec.bind(full);
    VecD w(n);
    for (int a = 0; a < n; ++a) w[a] = -spec.mu[m + a].eval(b);
    return w;
  };
  VecD x0(n), x1(n);
  for (int a = 0; a < n; ++a) {
    x0[a] = spec.base_point[m + a];
    x1[a] = q[m + a];
  }
  return line_integral(omega, x0, x1);
}

namespace {

struct TildeParts {
  MatD g1, g2, g1inv, g2inv;
  Tensor3 gamma1;  // driving Christoffel, m x m x m
};

TildeParts tilde_parts(const SystemSpec& spec, const VecD& q) {
  const int m = spec.m, n = spec.n;
  Bindings b = spec.bind(q);
  MatD g = spec.g.eval(b);
  TildeParts tp;
  tp.g1 = g.block(0, 0, m, m);
  tp.g2 = g.block(m, m, n, n);
  tp.g1inv = inverse(tp.g1);
  tp.g2inv = inverse(tp.g2);
  Tensor3 full = christoffel(spec.g, b);
  tp.gamma1.assign(m, MatD(m, m));
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k)
      for (int l = 0; l < m; ++l) tp.gamma1[i](k, l) = full[i](k, l);
  return tp;
}

}  // namespace

double tilde_h(const SystemSpec& spec, const CofactorChain& chain, const VecD& q,
               const VecD& ptilde) {
  const int m = spec.m, n = spec.n;
  ChainBlocks cb = chain.blocks_at(q);
  TildeParts tp = tilde_parts(spec, q);

  VecD pt_i(m), pt_a(n);
  for (int i = 0; i < m; ++i) pt_i[i] = ptilde[i];
  for (int a = 0; a < n; ++a) pt_a[a] = ptilde[m + a];

  // h in the tilde momenta: 1/2 g^{ab} pt_a pt_b + J^{ai} pt_a pt_i
  //   + 1/2 J^{ai} J^j_a pt_i pt_j + V
  MatD jup = cb.j21 * tp.g1inv;  // J^{ai}
  double h = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b2 = 0; b2 < n; ++b2) h += 0.5 * tp.g2inv(a, b2) * pt_a[a] * pt_a[b2];
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < m; ++i) h += jup(a, i) * pt_a[a] * pt_i[i];
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      double c = 0.0;
      for (int a = 0; a < n; ++a) c += jup(a, i) * cb.j12(j, a);
      h += 0.5 * c * pt_i[i] * pt_i[j];
    }
  h += driven_potential(spec, q);

  // J1^{ij} and the driving-direction derivative data, computed once
  MatD j1up = cb.j1 * tp.g1inv;
  VecD psi = psi_potentials(spec, chain, q);
  MatD dpsi_dy = psi_dy(spec, chain, q);
  VecD dw1 = chain.grad_w(n + 1, q);  // dW^1/dy in the first m slots
  Bindings b = spec.bind(q);
  std::vector<ChainBlocksDeriv> dk;
  std::vector<MatD> dj1up;
  dk.reserve(m);
  for (int k = 0; k < m; ++k) {
    dk.push_back(chain.derivative_at(q, k, cb));
    MatD dg1 = spec.g.d_components(k).eval(b).block(0, 0, m, m);
    dj1up.push_back(dk[k].dj1 * tp.g1inv - j1up * dg1 * tp.g1inv);
  }

  double extra = 0.0;
  // + dpsi^i/dy^k J1^{kj} pt_i pt_j
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      double c = 0.0;
      for (int k = 0; k < m; ++k) c += dpsi_dy(i, k) * j1up(k, j);
      extra += c * pt_i[i] * pt_i[j];
    }
  // + J1^{jl} Gamma^i_{kl} psi^k pt_i pt_j
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      double c = 0.0;
      for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l) c += j1up(j, l) * tp.gamma1[i](k, l) * psi[k];
      extra += c * pt_i[i] * pt_i[j];
    }
  // - 1/2 (J1^{ij})_{|k} psi^k pt_i pt_j  (covariant derivative of the
  //   contravariant J1^{ij} against the driving connection)
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      double c = 0.0;
      for (int k = 0; k < m; ++k) {
        double cov = dj1up[k](i, j);
        for (int s = 0; s < m; ++s)
          cov += tp.gamma1[i](s, k) * j1up(s, j) + tp.gamma1[j](s, k) * j1up(i, s);
        c += cov * psi[k];
      }
      extra -= 0.5 * c * pt_i[i] * pt_i[j];
    }
  // - 1/2 (det J1)^-1 d(det J1)/dy^k psi^k J1^{ij} pt_i pt_j
  double ddet_psi = 0.0;
  for (int k = 0; k < m; ++k) ddet_psi += dk[k].ddet_j1 * psi[k];
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      extra -= 0.5 * (ddet_psi / cb.det_j1) * j1up(i, j) * pt_i[i] * pt_i[j];
  // - (det J1)^-1 psi^k dW^1/dy^k
  double wterm = 0.0;
  for (int k = 0; k < m; ++k) wterm += psi[k] * dw1[k];
  extra -= wterm / cb.det_j1;

  return h + extra;
}

double tilde_h_match_residual(const SystemSpec& spec, const CofactorChain& chain,
                       const IntegralFamily& family, const VecD& q, const VecD& ptilde) {
  const int m = spec.m, n = spec.n;
  auto lhs = [&](const VecD& qq, const VecD& pt) { return tilde_h(spec, chain, qq, pt); };
  auto rhs = [&](const VecD& qq, const VecD& pt) {
    ChainBlocks cb = chain.blocks_at(qq);
    TildeParts tp = tilde_parts(spec, qq);
    PhasePoint z{qq, from_tilde(cb, pt)};
    double v = family.value(n, z) / cb.det_j1;
    MatD jup = cb.j21 * tp.g1inv;
    for (int a = 0; a < n; ++a)
      for (int i = 0; i < m; ++i) v += jup(a, i) * pt[m + a] * pt[i];
    return v;
  };
  double worst = 0.0;
  for (int a = 0; a < n; ++a) {
    const double hx = fd_step(q[m + a]);
    auto dx = [&](auto&& f) {
      VecD qp = q, qm = q;
      qp[m + a] += hx;
      qm[m + a] -= hx;
      return (f(qp, ptilde) - f(qm, ptilde)) / (2.0 * hx);
    };
    worst = std::max(worst, std::abs(dx(lhs) - dx(rhs)));
    const double hp = fd_step(ptilde[m + a]);
    auto dp = [&](auto&& f) {
      VecD pp = ptilde, pm = ptilde;
      pp[m + a] += hp;
      pm[m + a] -= hp;
      return (f(q, pp) - f(q, pm)) / (2.0 * hp);
    };
    worst = std::max(worst, std::abs(dp(lhs) - dp(rhs)));
  }
  return worst;
}

UsPoint to_us(const EigenData& eigen, const VecD& ptilde_driven) {
  UsPoint out;
  out.u = eigen.u;
  out.s = solve(eigen.dudx.transpose(), ptilde_driven);
  return out;
}

VecD x_from_u(const SystemSpec& spec, const CofactorChain& chain, const VecD& y,
              const VecD& u_target, const VecD& x_seed, int max_iter, double tol) {
  const int m = spec.m, n = spec.n;
  VecD q(spec.dim());
  for (int i = 0; i < m; ++i) q[i] = y[i];
  for (int a = 0; a < n; ++a) q[m + a] = x_seed[a];

  double uscale = 1.0;
  for (double v : u_target) uscale = std::max(uscale, std::abs(v));
  auto residual_at = [&](const VecD& qq) {
    VecD u = match_to_prev(eigenvalues_at(spec, chain, qq), u_target);
    double r = 0.0;
    for (int a = 0; a < n; ++a) r = std::max(r, std::abs(u[a] - u_target[a]));
    return r;
  };

  for (int it = 0; it < max_iter; ++it) {
    EigenData e = eigen_at(spec, chain, q, &u_target);
    VecD r(n);
    double rmax = 0.0;
    for (int a = 0; a < n; ++a) {
      r[a] = e.u[a] - u_target[a];
      rmax = std::max(rmax, std::abs(r[a]));
    }
    if (rmax <= tol * uscale) {
      VecD x(n);
      for (int a = 0; a < n; ++a) x[a] = q[m + a];
      return x;
    }
    LU f = lu_factor(e.dudx);
    if (f.singular) throw SeparationError("singular du/dx Jacobian in chart inversion");
    VecD step = lu_solve(f, r);
    // damped Newton: halve until the residual decreases
    double lambda = 1.0;
    bool moved = false;
    for (int half = 0; half < 10; ++half) {
      VecD qt = q;
      for (int a = 0; a < n; ++a) qt[m + a] -= lambda * step[a];
      try {
        if (residual_at(qt) < rmax) {
          q = qt;
          moved = true;
          break;
        }
      } catch (const std::exception&) {
        // trial step left the valid region; shrink and retry
      }
      lambda *= 0.5;
    }
    if (!moved) throw SeparationError("Newton chart inversion stalled");
  }
  throw SeparationError("Newton chart inversion did not converge");
}

TimeIndependenceReport time_independence_certificate(const SystemSpec& spec,
                                                     const CofactorChain& chain,
                                                     const IntegralFamily& family,
                                                     const Trajectory& traj, int grid_u,
                                                     int grid_s, int time_samples, double tol) {
  const int m = spec.m, n = spec.n;
  TimeIndependenceReport rep;
  if (traj.z.size() < 2) throw SeparationError("trajectory too short for the certificate");

  // chart data along the selected times
  std::vector<std::size_t> picks;
  const int count = std::min<std::size_t>(time_samples, traj.z.size());
  for (int k = 0; k < count; ++k)
    picks.push_back(k * (traj.z.size() - 1) / std::max(1, count - 1));

  // (u, s) ranges observed along the trajectory
  VecD u_lo, u_hi, s_lo, s_hi;
  std::vector<VecD> pt_driving(picks.size());
  VecD prev_u;
  for (std::size_t kk = 0; kk < picks.size(); ++kk) {
    const PhasePoint& z = traj.z[picks[kk]];
    ChainBlocks cb = chain.blocks_at(z.q);
    VecD pt = to_tilde(cb, z.p);
    pt_driving[kk] = VecD(pt.begin(), pt.begin() + m);
    EigenData e = eigen_at(spec, chain, z.q, prev_u.empty() ? nullptr : &prev_u);
    prev_u = e.u;
    VecD ptd(pt.begin() + m, pt.end());
    UsPoint us = to_us(e, ptd);
    if (u_lo.empty()) {
      u_lo = u_hi = us.u;
      s_lo = s_hi = us.s;
    }
    for (int a = 0; a < n; ++a) {
      u_lo[a] = std::min(u_lo[a], us.u[a]);
      u_hi[a] = std::max(u_hi[a], us.u[a]);
      s_lo[a] = std::min(s_lo[a], us.s[a]);
      s_hi[a] = std::max(s_hi[a], us.s[a]);
    }
  }

  rep.times = static_cast<int>(picks.size());
  rep.probes = grid_u * grid_s;
  const int count_h = family.count();
  // values[probe][integral][time]
  std::vector<std::vector<std::vector<double>>> values(
      rep.probes, std::vector<std::vector<double>>(count_h));

  for (int r = 0; r < grid_u; ++r) {
    for (int c = 0; c < grid_s; ++c) {
      VecD u_probe(n), s_probe(n);
      for (int a = 0; a < n; ++a) {
        const double fu = (r + 1.0) / (grid_u + 1.0);
        const double fs = (c + 1.0) / (grid_s + 1.0);
        u_probe[a] = u_lo[a] + fu * (u_hi[a] - u_lo[a]);
        s_probe[a] = s_lo[a] + fs * (s_hi[a] - s_lo[a]);
      }
      const int probe = r * grid_s + c;
      for (std::size_t kk = 0; kk < picks.size(); ++kk) {
        const PhasePoint& zk = traj.z[picks[kk]];
        VecD y(zk.q.begin(), zk.q.begin() + m);
        VecD x_seed(zk.q.begin() + m, zk.q.end());
        try {
          VecD x = x_from_u(spec, chain, y, u_probe, x_seed);
          VecD q(spec.dim());
          for (int i = 0; i < m; ++i) q[i] = y[i];
          for (int a = 0; a < n; ++a) q[m + a] = x[a];
          EigenData e = eigen_at(spec, chain, q, &u_probe);
          // ptilde_b = s_a du^a/dx^b
          VecD ptd(n, 0.0);
          for (int b2 = 0; b2 < n; ++b2)
            for (int a = 0; a < n; ++a) ptd[b2] += s_probe[a] * e.dudx(a, b2);
          VecD pt(spec.dim());
          for (int i = 0; i < m; ++i) pt[i] = pt_driving[kk][i];
          for (int a = 0; a < n; ++a) pt[m + a] = ptd[a];
          ChainBlocks cb = chain.blocks_at(q);
          PhasePoint z{q, from_tilde(cb, pt)};
          for (int i = 1; i <= count_h; ++i)
            values[probe][i - 1].push_back(family.value(i, z));
        } catch (const std::exception&) {
          ++rep.skipped;
        }
      }
    }
  }

  double scale = 1.0;
  for (const auto& pv : values)
    for (const auto& hv : pv)
      for (double v : hv) scale = std::max(scale, std::abs(v));
  double worst = 0.0;
  for (const auto& pv : values)
    for (const auto& hv : pv) {
      if (hv.size() < 2) continue;
      const double lo = *std::min_element(hv.begin(), hv.end());
      const double hi = *std::max_element(hv.begin(), hv.end());
      worst = std::max(worst, hi - lo);
    }
  rep.max_variation = worst;
  rep.scale = scale;
  rep.pass = worst <= tol * scale;
  return rep;
}

StackelReport stackel_certificate(const SystemSpec& spec, const CofactorChain& chain,
                                  const std::vector<VecD>& pts) {
  const int m = spec.m, n = spec.n;
  StackelReport rep;

  for (const auto& q : pts) {
    Bindings b = spec.bind(q);
    ChainBlocks cb = chain.blocks_at(q);
    MatD g = spec.g.eval(b);
    MatD g2 = g.block(m, m, n, n);
    Tensor3 dg2(n);
    for (int a = 0; a < n; ++a)
      dg2[a] = spec.g.d_components(m + a).eval(b).block(m, m, n, n);

    // driven Christoffel from g2 (x-coordinates only)
    MatD g2inv = inverse(g2);
    Tensor3 gamma2(n, MatD(n, n));
    for (int a = 0; a < n; ++a)
      for (int b2 = 0; b2 < n; ++b2)
        for (int c = 0; c < n; ++c) {
          double s = 0.0;
          for (int sig = 0; sig < n; ++sig)
            s += g2inv(a, sig) * (dg2[c](sig, b2) + dg2[b2](sig, c) - dg2[sig](b2, c));
          gamma2[a](b2, c) = 0.5 * s;
        }

    // (1) scKt condition for Jbar w.r.t. g2 with
    // alpha-bar_c = alpha_c - J_{ci} (J1inv)^{ij} alpha_j
    VecD alpha = spec.j.alpha_at(b);
    MatD g1inv = inverse(g.block(0, 0, m, m));
    VecD a1(m);
    for (int i = 0; i < m; ++i) a1[i] = alpha[i];
    VecD t = cb.j1inv * (g1inv * a1);  // (J1inv)^{ij} alpha_j
    VecD abar(n);
    for (int c = 0; c < n; ++c) {
      double v = alpha[m + c];
      // J_{ci} = g2_{ca} J^a_i
      for (int a = 0; a < n; ++a)
        for (int i = 0; i < m; ++i) v -= g2(c, a) * cb.j21(a, i) * t[i];
      abar[c] = v;
    }
    // covariant components of Jbar and their x-derivatives (exact chain route)
    MatD jbar_cov = g2 * cb.jbar;
    for (int a = 0; a < n; ++a) {
      ChainBlocksDeriv d = chain.derivative_at(q, m + a, cb);
      MatD djbar_cov = dg2[a] * cb.jbar + g2 * d.djbar;
      for (int c = 0; c < n; ++c)
        for (int b2 = 0; b2 < n; ++b2) {
          double cov = djbar_cov(c, b2);
          for (int dd = 0; dd < n; ++dd)
            cov -= gamma2[dd](c, a) * jbar_cov(dd, b2) + gamma2[dd](b2, a) * jbar_cov(c, dd);
          const double rhs = 0.5 * (abar[c] * g2(b2, a) + abar[b2] * g2(c, a));
          rep.sckt_jbar_residual = std::max(rep.sckt_jbar_residual, std::abs(cov - rhs));
        }
    }

    // (2) cof(Jbar) mu_bar2 closed in x
    if (n > 1) {
      auto omega = [&](const VecD& x) {
        VecD full = q;
        for (int a = 0; a < n; ++a) full[m + a] = x[a];
        ChainBlocks cbx = chain.blocks_at(full);
        VecD dwn = chain.grad_w(n, full);
        VecD mb(n);
        for (int a = 0; a < n; ++a) mb[a] = dwn[m + a];
        MatD cof_jbar = adjugate(cbx.jbar);
        VecD w(n, 0.0);
        for (int a = 0; a < n; ++a)
          for (int b2 = 0; b2 < n; ++b2) w[a] += cof_jbar(b2, a) * mb[b2];
        return w;
      };
      VecD x(n);
      for (int a = 0; a < n; ++a) x[a] = q[m + a];
      rep.admissible_residual =
          std::max(rep.admissible_residual, one_form_closedness_fd(omega, {x}));
    }

    // (3) g2 pushed to u coordinates is diagonal
    if (n > 1) {
      EigenData e = eigen_at(spec, chain, q);
      MatD gu = e.dudx * g2inv * e.dudx.transpose();
      double diag_scale = 1.0;
      for (int a = 0; a < n; ++a) diag_scale = std::max(diag_scale, std::abs(gu(a, a)));
      for (int a = 0; a < n; ++a)
        for (int b2 = 0; b2 < n; ++b2)
          if (a != b2)
            rep.metric_offdiag_residual =
                std::max(rep.metric_offdiag_residual, std::abs(gu(a, b2)) / diag_scale);
    }
  }

  rep.pass = true;
  if (rep.sckt_jbar_residual > 1e-6) {
    rep.pass = false;
    rep.failure = "jbar_sckt";
  } else if (rep.admissible_residual > 1e-6) {
    rep.pass = false;
    rep.failure = "admissible_potential";
  } else if (rep.metric_offdiag_residual > 1e-7) {
    rep.pass = false;
    rep.failure = "metric_diagonal_in_u";
  }
  return rep;
}

double driving_eigen_residual(const SystemSpec& spec, const CofactorChain& chain,
                              const VecD& q) {
  const int m = spec.m, n = spec.n;
  EigenData e = eigen_at(spec, chain, q);
  Bindings b = spec.bind(q);
  MatD jm = spec.j.eval(b);
  double worst = 0.0;
  // (J^k_j du^a/dy^k + J^b_j du^a/dx^b) = 0 for each driving index j
  for (int a = 0; a < n; ++a)
    for (int j = 0; j < m; ++j) {
      double v = 0.0;
      for (int k = 0; k < m; ++k) v += jm(k, j) * e.du(a, k);
      for (int bx = 0; bx < n; ++bx) v += jm(m + bx, j) * e.du(a, m + bx);
      worst = std::max(worst, std::abs(v));
    }
  return worst;
}

double sigma_delta_residual(const SystemSpec& spec, const CofactorChain& chain, const VecD& q) {
  const int n = spec.n;
  ChainBlocks cb = chain.blocks_at(q);
  EigenData e = eigen_at(spec, chain, q);
  // elementary symmetric functions via the monic product expansion
  VecD sigma(n + 1, 0.0);
  sigma[0] = 1.0;
  for (int a = 0; a < n; ++a)
    for (int k = std::min(a + 1, n); k >= 1; --k) sigma[k] += e.u[a] * sigma[k - 1];
  double scale = 1.0;
  for (double d : cb.delta) scale = std::max(scale, std::abs(d));
  double worst = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double lhs = cb.delta[i];  // Delta_(i+1)
    const double rhs = cb.det_j1 * sigma[n - i];
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

}  // namespace coflab
