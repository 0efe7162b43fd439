#pragma once

#include <cmath>

#include "fermiflux/dynamics.hpp"
#include "fermiflux/model.hpp"

// Gauge-invariant nearest-neighbour chain of L sites with a left bath
// (index 0) attached to site 1 and a right bath (index L+1) attached to site L.
namespace fermiflux::chain {

struct ChainSpec {
  int L = 2;
  double theta0 = 1.0;
  double thetaL = 1.0;
  double beta0 = 1.0;
  double betaL = 0.0;
};

inline void require_valid_spec(const ChainSpec& s) {
  if (s.L < 1) throw MalformedInput("chain: L must be >= 1");
  if (!std::isfinite(s.theta0) || !std::isfinite(s.thetaL) || !std::isfinite(s.beta0) || !std::isfinite(s.betaL))
    throw MalformedInput("chain: parameters must be finite");
}

inline bool ergodic(const ChainSpec& s) { return s.theta0 != 0.0 && s.thetaL != 0.0; }

// One-particle hopping matrix D + Dᵗ.
inline MatR hopping(int L) {
  MatR t = MatR::Zero(L, L);
  for (int k = 0; k + 1 < L; ++k) t(k, k + 1) = t(k + 1, k) = 1.0;
  return t;
}

// Couplings as an L×2 matrix: column 0 for the left bath, column 1 for the right.
inline MatR small_coupling(const ChainSpec& s) {
  MatR th = MatR::Zero(s.L, 2);
  th(0, 0) = s.theta0;
  th(s.L - 1, 1) = s.thetaL;
  return th;
}

// ⟨c c*⟩ of a unit-energy mode at inverse temperature β.
inline double occupation(double beta) { return phasespace::fermi(beta); }

inline ThermalModel build(const ChainSpec& s) {
  require_valid_spec(s);
  const int L = s.L;
  const MatR T0 = hopping(L);
  MatC Tc = MatC::Zero(2 * L, 2 * L);
  Tc.topLeftCorner(L, L) = T0.cast<cplx>();
  Tc.bottomRightCorner(L, L) = -T0.cast<cplx>();
  MatC kc = MatC::Zero(2 * L, 2 * L);
  kc.diagonal().head(L).setOnes();
  kc.diagonal().tail(L).setConstant(-1.0);

  ThermalModel m;
  m.L_S = L;
  m.T_S = phasespace::to_majorana(Tc);
  m.kappa_S = phasespace::to_majorana(kc);
  MatC kb = MatC::Zero(2, 2);
  kb(0, 0) = 1.0;
  kb(1, 1) = -1.0;
  const MatC kb_f = phasespace::to_majorana(kb);
  const MatR th = small_coupling(s);
  const double betas[2] = {s.beta0, s.betaL};
  for (int b = 0; b < 2; ++b) {
    MatC tc = MatC::Zero(2 * L, 2);
    tc.col(0).head(L) = th.col(b).cast<cplx>();
    tc.col(1).tail(L) = -th.col(b).cast<cplx>();
    m.baths.push_back({betas[b], kb_f, phasespace::coupling_to_majorana(tc)});
  }
  // Clean rounding noise from the basis change so exact structure survives.
  auto clean = [](MatC& x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      double re = x.data()[i].real(), im = x.data()[i].imag();
      if (std::abs(re) < 1e-15) re = 0.0;
      if (std::abs(im) < 1e-15) im = 0.0;
      x.data()[i] = {re, im};
    }
  };
  clean(m.T_S);
  clean(m.kappa_S);
  for (auto& b : m.baths) {
    clean(b.kappa);
    clean(b.theta);
  }
  return m;
}

// Small covariance M⁰ = ⟨c_i c_j*⟩ solving the L×L Lyapunov equation
// G⁰M + MG⁰* + Θ⁰ diag(n₀, n_{L+1}) Θ⁰ᵗ = 0, G⁰ = -iT⁰ - ½Θ⁰Θ⁰ᵗ.
inline MatC small_stationary(const ChainSpec& s) {
  require_valid_spec(s);
  if (!ergodic(s)) throw NotErgodic("chain with a zero coupling is not ergodic");
  const MatC T0 = hopping(s.L).cast<cplx>();
  const MatC th = small_coupling(s).cast<cplx>();
  MatC nd = MatC::Zero(2, 2);
  nd(0, 0) = occupation(s.beta0);
  nd(1, 1) = occupation(s.betaL);
  const MatC G = -I * T0 - 0.5 * th * th.adjoint();
  return linalg::hermitian_part(dynamics::lyapunov(G, th * nd * th.adjoint()));
}

struct ClosedForm {
  double p0 = 0, pm = 0, pL = 0, j = 0, J = 0;
};

// Closed forms for the stationary small covariance: diagonal (p₀, p_m, …,
// p_m, p_{L+1}), off-diagonal ±ij, and the flux J = 2j into the left bath.
inline ClosedForm closed_form(const ChainSpec& sp) {
  if (sp.L < 2) throw MalformedInput("chain closed form needs L >= 2");
  if (!ergodic(sp)) throw NotErgodic("chain closed form needs nonzero couplings");
  const double a = sp.theta0 * sp.theta0, b = sp.thetaL * sp.thetaL;
  const double n0 = occupation(sp.beta0), nL = occupation(sp.betaL);
  const double s = 4.0 * (a + b) + a * b * (a + b);
  ClosedForm c;
  c.p0 = (a * (b * b + a * b + 4.0) * n0 + 4.0 * a * nL) / s;
  c.pm = (a * (b * b + 4.0) * n0 + b * (a * a + 4.0) * nL) / s;
  c.pL = (4.0 * b * n0 + a * (b * b + b * a + 4.0) * nL) / s;
  c.j = 2.0 / s * a * b * (n0 - nL);
  c.J = 2.0 * c.j;
  return c;
}

struct ClosedFormComparison {
  ClosedForm closed;
  double d_p0 = 0, d_pm = 0, d_pL = 0, d_j = 0, d_offdiag = 0;
  double max_discrepancy() const { return std::max({d_p0, d_pm, d_pL, d_j, d_offdiag}); }
};

// Compares the closed forms with the numeric small covariance, which is
// authoritative. d_offdiag measures entries beyond the first off-diagonal.
inline ClosedFormComparison compare_closed_form(const ChainSpec& s) {
  ClosedFormComparison c;
  c.closed = closed_form(s);
  const MatC M = small_stationary(s);
  const int L = s.L;
  c.d_p0 = std::abs(M(0, 0) - c.closed.p0);
  c.d_pL = std::abs(M(L - 1, L - 1) - c.closed.pL);
  for (int k = 1; k + 1 < L; ++k) c.d_pm = std::max(c.d_pm, std::abs(M(k, k) - c.closed.pm));
  for (int k = 0; k + 1 < L; ++k) {
    c.d_j = std::max(c.d_j, std::abs(M(k, k + 1) - I * c.closed.j));
    c.d_j = std::max(c.d_j, std::abs(M(k + 1, k) + I * c.closed.j));
  }
  for (int r = 0; r < L; ++r)
    for (int q = 0; q < L; ++q)
      if (std::abs(r - q) > 1) c.d_offdiag = std::max(c.d_offdiag, std::abs(M(r, q)));
  return c;
}

// Upper-left L×L block of the CA-basis covariance, i.e. ⟨c_i c_j*⟩.
inline MatC small_block(const MatC& M_majorana) {
  const MatC mc = phasespace::to_ca(M_majorana);
  const Eigen::Index L = mc.rows() / 2;
  return mc.topLeftCorner(L, L);
}

}  // namespace fermiflux::chain
