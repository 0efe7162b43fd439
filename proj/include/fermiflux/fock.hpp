#pragma once

#include <array>
#include <cmath>

#include "fermiflux/linalg.hpp"
#include "fermiflux/model.hpp"
#include "fermiflux/phasespace.hpp"

// Brute-force oracle on the 2^L-dimensional Fock space. Jordan–Wigner: site
// i is tensor factor i (factor 0 most significant) with parity strings on the
// factors before it; the local basis index 1 means occupied. Superoperators
// act on column-stacked operators and are stored in the Heisenberg picture;
// the Schrödinger generator is the adjoint matrix.
namespace fermiflux::fock {

inline constexpr int default_L_max = 6;

inline std::vector<MatC> majorana_matrices(int L, int L_max = default_L_max) {
  if (L < 1) throw MalformedInput("majorana_matrices: L must be >= 1");
  if (L > L_max)
    throw ResourceError("Fock space with L = " + std::to_string(L) + " exceeds the cap L_max = " +
                        std::to_string(L_max));
  MatC a = MatC::Zero(2, 2);
  a(0, 1) = 1.0;
  MatC z = MatC::Identity(2, 2);
  z(1, 1) = -1.0;
  const MatC id = MatC::Identity(2, 2);
  std::vector<MatC> g(2 * static_cast<std::size_t>(L));
  for (int i = 0; i < L; ++i) {
    MatC c = (i == 0) ? a : z;
    for (int k = 1; k < L; ++k) c = linalg::kron(c, k < i ? z : (k == i ? a : id));
    g[i] = c + c.adjoint();
    g[i + L] = -I * (c - c.adjoint());
  }
  return g;
}

inline int modes_of(const std::vector<MatC>& g) { return static_cast<int>(g.size() / 2); }

// dΓ(T) = ¼ Σ T^f_ij γ_i γ_j
inline MatC quadratic_operator(const MatC& tf, const std::vector<MatC>& g) {
  if (tf.rows() != static_cast<Eigen::Index>(g.size()) || tf.cols() != tf.rows())
    throw MalformedInput("quadratic_operator: dimension mismatch");
  const Eigen::Index d = g.front().rows();
  MatC out = MatC::Zero(d, d);
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) {
      const cplx t = tf(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (t != 0.0) out += 0.25 * t * g[i] * g[j];
    }
  return out;
}

inline MatC quadratic_operator(const MatC& tf) {
  return quadratic_operator(tf, majorana_matrices(static_cast<int>(tf.rows() / 2)));
}

// Majorana-basis covariance M_ij = ½ tr(ρ γ_i γ_j).
inline MatC covariance_of(const MatC& rho, const std::vector<MatC>& g) {
  const cplx tr = rho.trace();
  if (std::abs(tr - 1.0) > 1e-8) throw MalformedInput("covariance_of: state does not have unit trace");
  const auto n = static_cast<Eigen::Index>(g.size());
  MatC M(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const MatC rg = rho * g[i];
    for (Eigen::Index j = 0; j < n; ++j) M(i, j) = 0.5 * (rg.cwiseProduct(g[j].transpose())).sum();
  }
  return M;
}

struct QuasiFreeState {
  MatC density;
  MatC covariance;
};

// ρ ∝ exp(-dΓ(T)), T = -log(M⁻¹ - 1), spectrum of M clamped to [ε, 1-ε].
inline QuasiFreeState quasi_free_state(const MatC& M, const std::vector<MatC>& g, double eps = 1e-9) {
  const MatC T = linalg::hermitian_function(M, [eps](double p) {
    const double q = std::clamp(p, eps, 1.0 - eps);
    return -std::log(1.0 / q - 1.0);
  });
  const MatC H = quadratic_operator(T, g);
  // exp(-H) through the eigendecomposition, shifted for stability.
  Eigen::SelfAdjointEigenSolver<MatC> es(linalg::hermitian_part(H));
  const VecR w = es.eigenvalues();
  const double wmin = w.minCoeff();
  VecC ew(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) ew(k) = std::exp(-(w(k) - wmin));
  MatC rho = es.eigenvectors() * ew.asDiagonal() * es.eigenvectors().adjoint();
  rho = linalg::hermitian_part(MatC(rho / rho.trace()));
  return {rho, covariance_of(rho, g)};
}

struct WickCheck {
  cplx lhs;
  cplx rhs;
  double residual() const { return std::abs(lhs - rhs); }
};

// tr(ρ γ_a γ_b γ_c γ_d) against the pairing expansion
// ω_ab ω_cd - ω_ac ω_bd + ω_ad ω_bc with ω_xy = tr(ρ γ_x γ_y), each pair
// kept in its order of appearance.
inline WickCheck wick_check(const QuasiFreeState& s, const std::array<int, 4>& ix, const std::vector<MatC>& g) {
  auto w = [&](int x, int y) { return (s.density * g[x] * g[y]).trace(); };
  const auto [a, b, c, d] = ix;
  WickCheck r;
  r.lhs = (s.density * g[a] * g[b] * g[c] * g[d]).trace();
  r.rhs = w(a, b) * w(c, d) - w(a, c) * w(b, d) + w(a, d) * w(b, c);
  return r;
}

// Heisenberg superoperator A ↦ ½ Σ X_ij γ_i A γ_j.
inline MatC quadratic_dissipator(const MatC& X, const std::vector<MatC>& g) {
  const Eigen::Index d = g.front().rows();
  MatC S = MatC::Zero(d * d, d * d);
  std::vector<MatC> gt;
  for (const auto& x : g) gt.push_back(x.transpose());
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) {
      const cplx x = X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (std::abs(x) == 0.0) continue;
      S += (0.5 * x) * linalg::kron(gt[j], g[i]);
    }
  return S;
}

// Fock-space data of a thermal model: H = dΓ(T_S), K = dΓ(κ_S) and per bath
// the map Φ_i(A) = ½ Σ [Θ_i M_{β_i} Θ_i*]_jk γ_j A γ_k.
struct Realization {
  int L = 0;
  std::vector<MatC> gammas;
  MatC H;
  MatC K;
  std::vector<MatC> phi;
  std::vector<MatC> phi_one;
  std::vector<double> betas;

  Eigen::Index dim() const { return H.rows(); }
};

inline Realization realize(const ThermalModel& m, int L_max = default_L_max) {
  Realization r;
  r.L = m.L_S;
  r.gammas = majorana_matrices(m.L_S, L_max);
  r.H = quadratic_operator(m.T_S, r.gammas);
  r.K = quadratic_operator(m.kappa_S, r.gammas);
  const Eigen::Index d = r.H.rows();
  for (const auto& b : m.baths) {
    const MatC X = b.theta * phasespace::gibbs_covariance(b.kappa, b.beta) * b.theta.adjoint();
    r.phi.push_back(quadratic_dissipator(X, r.gammas));
    r.phi_one.push_back(linalg::unvec(r.phi.back() * linalg::vec(MatC::Identity(d, d))));
    r.betas.push_back(b.beta);
  }
  return r;
}

inline MatC commutator_part(const Realization& r) { return I * (linalg::spre(r.H) - linalg::spost(r.H)); }

// ℒ_i(A) = Φ_i(A) - ½{Φ_i(1), A}
inline MatC bath_generator(const Realization& r, std::size_t i) {
  return r.phi[i] - 0.5 * (linalg::spre(r.phi_one[i]) + linalg::spost(r.phi_one[i]));
}

inline MatC lindbladian(const Realization& r) {
  MatC Lh = commutator_part(r);
  for (std::size_t i = 0; i < r.phi.size(); ++i) Lh += bath_generator(r, i);
  return Lh;
}

// ℒ_α(A) = i[H, A] + Σ_i Φ_i(A e^{-α_i K}) e^{α_i K} - ½{Φ_i(1), A}
inline MatC deformed(const Realization& r, const std::vector<double>& alpha) {
  if (alpha.size() != r.phi.size()) throw MalformedInput("deformed: alpha length does not match bath count");
  MatC Lh = commutator_part(r);
  for (std::size_t i = 0; i < r.phi.size(); ++i) {
    Lh -= 0.5 * (linalg::spre(r.phi_one[i]) + linalg::spost(r.phi_one[i]));
    if (alpha[i] == 0.0) {
      Lh += r.phi[i];
      continue;
    }
    const MatC up = linalg::hermitian_function(r.K, [a = alpha[i]](double e) { return std::exp(a * e); });
    const MatC down = linalg::hermitian_function(r.K, [a = alpha[i]](double e) { return std::exp(-a * e); });
    Lh += linalg::spost(up) * r.phi[i] * linalg::spost(down);
  }
  return Lh;
}

inline MatC build_lindbladian(const ThermalModel& m, int L_max = default_L_max) {
  return lindbladian(realize(m, L_max));
}

inline MatC build_deformed(const ThermalModel& m, const std::vector<double>& alpha, int L_max = default_L_max) {
  return deformed(realize(m, L_max), alpha);
}

struct Dominant {
  cplx value;
  MatC density;  // eigenvector of the adjoint generator, normalised to trace 1
  double gap = 0.0;
};

// Dominant eigenpair of the Schrödinger-picture generator (adjoint of the
// Heisenberg matrix), from a full dense eigendecomposition.
inline Dominant dominant(const MatC& heisenberg) {
  Eigen::ComplexEigenSolver<MatC> es(heisenberg.adjoint());
  if (es.info() != Eigen::Success) throw NumericDegeneracy("dense eigendecomposition failed");
  const VecC& ev = es.eigenvalues();
  Eigen::Index k = 0;
  for (Eigen::Index q = 1; q < ev.size(); ++q)
    if (ev(q).real() > ev(k).real()) k = q;
  double second = -std::numeric_limits<double>::infinity();
  for (Eigen::Index q = 0; q < ev.size(); ++q)
    if (q != k) second = std::max(second, ev(q).real());
  Dominant d;
  d.value = ev(k);
  d.gap = ev(k).real() - second;
  MatC rho = linalg::unvec(es.eigenvectors().col(k));
  const cplx tr = rho.trace();
  if (std::abs(tr) < 1e-14) throw NumericDegeneracy("dominant eigenvector has zero trace");
  d.density = rho / tr;
  return d;
}

inline MatC stationary_state(const MatC& heisenberg) { return linalg::trace_one_null_state(heisenberg.adjoint()); }

// J_i = -tr(ρ ℒ_i(K_S)), energy entering bath i.
inline std::vector<double> fluxes(const Realization& r, const MatC& rho) {
  std::vector<double> J;
  for (std::size_t i = 0; i < r.phi.size(); ++i) {
    const MatC LK = linalg::unvec(bath_generator(r, i) * linalg::vec(r.K));
    J.push_back(-(rho * LK).trace().real());
  }
  return J;
}

inline MatC gibbs_state(const MatC& K, double beta) {
  Eigen::SelfAdjointEigenSolver<MatC> es(linalg::hermitian_part(K));
  const VecR w = es.eigenvalues();
  const double ref = beta >= 0 ? w.minCoeff() : w.maxCoeff();
  VecC ew(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) ew(k) = std::exp(-beta * (w(k) - ref));
  MatC rho = es.eigenvectors() * ew.asDiagonal() * es.eigenvectors().adjoint();
  return rho / rho.trace();
}

// max over matrix units A of ‖Φ*(Aσ)σ⁻¹ - Φ(A)‖, Φ given in the Heisenberg picture.
inline double check_detailed_balance(const MatC& phi, const MatC& sigma) {
  if (linalg::inverse_condition(sigma) < 1e-14) throw MalformedInput("detailed balance: singular reference state");
  const MatC sinv = sigma.inverse();
  const MatC lhs = linalg::spost(sinv) * phi.adjoint() * linalg::spost(sigma);
  return linalg::max_abs(MatC(lhs - phi));
}

struct DiscreteStep {
  MatC superop;                        // Heisenberg picture
  double conservation_residual = 0.0;  // ‖[U_τ, K_tot]‖
};

// One repeated-interaction step Λ_τ(A) = tr_B[(ρ_B ⊗ 1) U*(1 ⊗ A)U] with
// U = exp(-iτH_S - i√τ H_SB). Bath modes precede system modes in the
// Jordan–Wigner order, so B is the leading tensor factor.
inline DiscreteStep discrete_step(const ThermalModel& m, double tau, int L_max = default_L_max) {
  if (!(tau > 0)) throw MalformedInput("discrete_step: tau must be positive");
  int nB = 0;
  std::vector<int> offset;
  for (const auto& b : m.baths) {
    offset.push_back(nB);
    nB += static_cast<int>(b.modes());
  }
  const int Lt = nB + m.L_S;
  const auto g = majorana_matrices(Lt, L_max);
  auto sys = [&](Eigen::Index s) -> const MatC& {
    const int mode = nB + static_cast<int>(s % m.L_S), type = static_cast<int>(s / m.L_S);
    return g[mode + type * Lt];
  };
  auto bath = [&](std::size_t i, Eigen::Index b) -> const MatC& {
    const int LB = static_cast<int>(m.baths[i].modes());
    const int mode = offset[i] + static_cast<int>(b % LB), type = static_cast<int>(b / LB);
    return g[mode + type * Lt];
  };
  const Eigen::Index D = g.front().rows();
  const Eigen::Index dS = Eigen::Index{1} << m.L_S;
  const Eigen::Index dB = D / dS;

  MatC HS = MatC::Zero(D, D), HSB = MatC::Zero(D, D), KS = MatC::Zero(D, D), KB = MatC::Zero(D, D),
       betaKB = MatC::Zero(D, D);
  for (Eigen::Index i = 0; i < m.dim(); ++i)
    for (Eigen::Index j = 0; j < m.dim(); ++j) {
      if (m.T_S(i, j) != 0.0) HS += 0.25 * m.T_S(i, j) * sys(i) * sys(j);
      if (m.kappa_S(i, j) != 0.0) KS += 0.25 * m.kappa_S(i, j) * sys(i) * sys(j);
    }
  for (std::size_t b = 0; b < m.baths.size(); ++b) {
    const auto& bs = m.baths[b];
    MatC Kb = MatC::Zero(D, D);
    for (Eigen::Index i = 0; i < bs.kappa.rows(); ++i)
      for (Eigen::Index j = 0; j < bs.kappa.cols(); ++j)
        if (bs.kappa(i, j) != 0.0) Kb += 0.25 * bs.kappa(i, j) * bath(b, i) * bath(b, j);
    KB += Kb;
    betaKB += bs.beta * Kb;
    for (Eigen::Index i = 0; i < m.dim(); ++i)
      for (Eigen::Index j = 0; j < bs.theta.cols(); ++j)
        if (bs.theta(i, j) != 0.0) HSB += 0.5 * bs.theta(i, j) * sys(i) * bath(b, j);
  }
  const MatC U = linalg::expm(MatC(-I * tau * HS - I * std::sqrt(tau) * HSB));
  const MatC Ktot = KS + KB;

  // ρ_B ⊗ 1_S, normalised so that the bath factor has unit trace.
  MatC rhoB = gibbs_state(betaKB, 1.0) * static_cast<double>(dS);

  DiscreteStep out;
  out.conservation_residual = linalg::max_abs(MatC(U * Ktot - Ktot * U));
  out.superop = MatC::Zero(dS * dS, dS * dS);
  const MatC idB = MatC::Identity(dB, dB);
  const MatC Ud = U.adjoint();
  for (Eigen::Index col = 0; col < dS * dS; ++col) {
    MatC E = MatC::Zero(dS, dS);
    E(col % dS, col / dS) = 1.0;
    const MatC Y = rhoB * Ud * linalg::kron(idB, E) * U;
    MatC red = MatC::Zero(dS, dS);
    for (Eigen::Index b = 0; b < dB; ++b) red += Y.block(b * dS, b * dS, dS, dS);
    out.superop.col(col) = linalg::vec(red);
  }
  return out;
}

// S(ρ(t)) - S(ρ₀) + Σ_i β_i ∫₀ᵗ J_i(ρ(s)) ds with composite Simpson quadrature
// on `steps` intervals (rounded up to even).
inline double entropy_balance(const ThermalModel& m, const MatC& rho0, double t, int steps,
                              int L_max = default_L_max) {
  if (steps < 2) steps = 2;
  if (steps % 2) ++steps;
  const Realization r = realize(m, L_max);
  const MatC schr = lindbladian(r).adjoint();
  const double h = t / steps;
  const MatC P = linalg::expm(MatC(h * schr));
  std::vector<MatC> LK;
  for (std::size_t i = 0; i < r.phi.size(); ++i) LK.push_back(linalg::unvec(bath_generator(r, i) * linalg::vec(r.K)));
  auto rate = [&](const MatC& rho) {
    double s = 0.0;
    for (std::size_t i = 0; i < LK.size(); ++i) s += r.betas[i] * -(rho * LK[i]).trace().real();
    return s;
  };
  VecC v = linalg::vec(rho0);
  double integral = rate(rho0);
  for (int k = 1; k <= steps; ++k) {
    v = P * v;
    const double w = (k == steps) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    integral += w * rate(linalg::unvec(v));
  }
  integral *= h / 3.0;
  const MatC rhot = linalg::hermitian_part(linalg::unvec(v));
  return linalg::von_neumann_entropy(rhot) - linalg::von_neumann_entropy(rho0) + integral;
}

}  // namespace fermiflux::fock
