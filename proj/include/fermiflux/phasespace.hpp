#pragma once

#include <cmath>
#include <limits>

#include "fermiflux/linalg.hpp"
#include "fermiflux/types.hpp"

// Phase-space linear algebra. Matrices acting on the doubled one-particle
// space are carried either in the Majorana basis (canonical here) or in the
// creation/annihilation (CA) basis. Conventions:
//   γ_i = c_i + c_i*,  γ_{i+L} = -i(c_i - c_i*)
//   T^c = W T^f W*,   W = (1/√2) [[1, i], [1, -i]] blockwise
//   ξ is complex conjugation in the Majorana basis.
namespace fermiflux {

enum class Basis { Majorana, CreationAnnihilation };

struct PhaseSpaceMatrix {
  MatC m;
  Basis basis = Basis::Majorana;
};

namespace phasespace {

inline void require_even_square(const MatC& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() % 2 != 0 || m.rows() == 0)
    throw MalformedInput(std::string(what) + ": expected an even-dimensional square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

// Unitary W of dimension 2L mapping Majorana coordinates to CA coordinates.
inline MatC basis_unitary(Eigen::Index L) {
  MatC w = MatC::Zero(2 * L, 2 * L);
  const double s = 1.0 / std::sqrt(2.0);
  for (Eigen::Index k = 0; k < L; ++k) {
    w(k, k) = s;
    w(k, k + L) = I * s;
    w(k + L, k) = s;
    w(k + L, k + L) = -I * s;
  }
  return w;
}

inline MatC to_ca(const MatC& tf) {
  require_even_square(tf, "to_ca");
  const MatC w = basis_unitary(tf.rows() / 2);
  return w * tf * w.adjoint();
}

inline MatC to_majorana(const MatC& tc) {
  require_even_square(tc, "to_majorana");
  const MatC w = basis_unitary(tc.rows() / 2);
  return w.adjoint() * tc * w;
}

// Rectangular couplings Θ: 𝒴_B → 𝒴_S.
inline MatC coupling_to_ca(const MatC& theta_f) {
  if (theta_f.rows() % 2 || theta_f.cols() % 2) throw MalformedInput("coupling_to_ca: odd dimension");
  return basis_unitary(theta_f.rows() / 2) * theta_f * basis_unitary(theta_f.cols() / 2).adjoint();
}

inline MatC coupling_to_majorana(const MatC& theta_c) {
  if (theta_c.rows() % 2 || theta_c.cols() % 2) throw MalformedInput("coupling_to_majorana: odd dimension");
  return basis_unitary(theta_c.rows() / 2).adjoint() * theta_c * basis_unitary(theta_c.cols() / 2);
}

inline PhaseSpaceMatrix basis_convert(const PhaseSpaceMatrix& p, Basis target) {
  require_even_square(p.m, "basis_convert");
  if (p.basis == target) return p;
  if (target == Basis::CreationAnnihilation) return {to_ca(p.m), target};
  return {to_majorana(p.m), target};
}

// ξ-transpose M^T = ξ M* ξ. Plain transpose in the Majorana basis; in the
// CA basis [[A, B], [C, D]] ↦ [[Dᵗ, Bᵗ], [Cᵗ, Aᵗ]].
inline PhaseSpaceMatrix xi_transpose(const PhaseSpaceMatrix& p) {
  require_even_square(p.m, "xi_transpose");
  if (p.basis == Basis::Majorana) return {p.m.transpose(), p.basis};
  const Eigen::Index L = p.m.rows() / 2;
  MatC out(2 * L, 2 * L);
  out.topLeftCorner(L, L) = p.m.bottomRightCorner(L, L).transpose();
  out.topRightCorner(L, L) = p.m.topRightCorner(L, L).transpose();
  out.bottomLeftCorner(L, L) = p.m.bottomLeftCorner(L, L).transpose();
  out.bottomRightCorner(L, L) = p.m.topLeftCorner(L, L).transpose();
  return {out, p.basis};
}

// ξ M ξ for a linear M, i.e. entrywise conjugation in the Majorana basis.
inline PhaseSpaceMatrix xi_conjugate(const PhaseSpaceMatrix& p) {
  if (p.basis == Basis::Majorana) return {p.m.conjugate(), p.basis};
  const Eigen::Index L = p.m.rows() / 2;
  MatC s = MatC::Zero(2 * L, 2 * L);
  s.topRightCorner(L, L).setIdentity();
  s.bottomLeftCorner(L, L).setIdentity();
  return {s * p.m.conjugate() * s, p.basis};
}

// Distance of a Majorana matrix from the form iR, R real antisymmetric.
inline double generator_residual(const MatC& tf) {
  if (tf.rows() != tf.cols()) return std::numeric_limits<double>::infinity();
  return std::max(linalg::max_abs(MatC(tf - tf.adjoint())), linalg::max_abs(MatR(tf.real())));
}

// Distance of a Majorana coupling from the form iW, W real.
inline double coupling_residual(const MatC& theta_f) { return linalg::max_abs(MatR(theta_f.real())); }

struct CovarianceCheck {
  double hermiticity = 0.0;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  double xi_residual = 0.0;  // ‖M + M^T - 1‖
  bool ok(double tol) const {
    return hermiticity <= tol && min_eigenvalue >= -tol && max_eigenvalue <= 1.0 + tol && xi_residual <= tol;
  }
};

inline CovarianceCheck check_covariance(const MatC& mf) {
  CovarianceCheck c;
  c.hermiticity = linalg::max_abs(MatC(mf - mf.adjoint()));
  const VecR ev = linalg::hermitian_eigenvalues(mf);
  c.min_eigenvalue = ev.minCoeff();
  c.max_eigenvalue = ev.maxCoeff();
  c.xi_residual = linalg::max_abs(MatC(mf + mf.transpose() - MatC::Identity(mf.rows(), mf.cols())));
  return c;
}

// Logistic 1/(1 + e^{-x}) without overflow.
inline double fermi(double x) {
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  return 0.5 * (1.0 + std::tanh(0.5 * x));
}

// M_β = (1 + e^{-βκ})^{-1} in the Majorana basis.
inline MatC gibbs_covariance(const MatC& kappa_f, double beta) {
  return linalg::hermitian_function(kappa_f, [beta](double w) {
    if (w == 0.0) return 0.5;
    return fermi(beta * w);
  });
}

inline PhaseSpaceMatrix gibbs_covariance(const PhaseSpaceMatrix& kappa, double beta) {
  return {gibbs_covariance(kappa.m, beta), kappa.basis};
}

// e^{s κ} for self-adjoint κ.
inline MatC exp_generator(const MatC& kappa_f, double s) {
  return linalg::hermitian_function(kappa_f, [s](double w) { return std::exp(s * w); });
}

}  // namespace phasespace
}  // namespace fermiflux
