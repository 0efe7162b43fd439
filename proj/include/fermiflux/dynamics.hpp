#pragma once

#include <cmath>

#include "fermiflux/model.hpp"

namespace fermiflux::dynamics {

// Σ Θ_i Θ_i*
inline MatC coupling_gram(const ThermalModel& m) {
  MatC s = MatC::Zero(m.dim(), m.dim());
  for (const auto& b : m.baths) s += b.theta * b.theta.adjoint();
  return s;
}

// Σ Θ_i M_{β_i} Θ_i*, with M_{β_i} the Gibbs covariance of the bath.
inline MatC bath_source(const ThermalModel& m) {
  MatC s = MatC::Zero(m.dim(), m.dim());
  for (const auto& b : m.baths) s += b.theta * phasespace::gibbs_covariance(b.kappa, b.beta) * b.theta.adjoint();
  return s;
}

// G = -iT_S - ½ΘΘ*
inline MatC drift(const ThermalModel& m) { return -I * m.T_S - 0.5 * coupling_gram(m); }

struct KalmanResult {
  int rank = 0;
  bool is_full = false;
  MatR basis;  // real orthonormal basis of span{Θ, TΘ, T²Θ, ...}
};

// Block Krylov iteration on the real data R = Im T^f, W = Im Θ^f. The span of
// [W, RW, R²W, ...] is real because ξ commutes with both generators, so an
// orthonormal real basis of the Kalman space is also ξ-invariant.
inline KalmanResult kalman(const ThermalModel& m, double rel_tol = 1e-9) {
  const Eigen::Index n = m.dim();
  MatR R = m.T_S.imag();
  MatR W(n, 0);
  for (const auto& b : m.baths) {
    MatR w = b.theta.imag();
    MatR cat(n, W.cols() + w.cols());
    cat << W, w;
    W = cat;
  }
  KalmanResult out;
  out.basis = MatR(n, 0);
  const double wn = W.size() ? W.norm() : 0.0;
  if (wn == 0.0) return out;
  const double rn = R.norm();
  if (rn > 0.0) R /= rn;
  const double thresh = rel_tol * wn;

  MatR& Q = out.basis;
  MatR block = W;
  for (Eigen::Index step = 0; step <= n && block.cols() > 0; ++step) {
    MatR fresh(n, 0);
    for (Eigen::Index c = 0; c < block.cols(); ++c) {
      VecR v = block.col(c);
      for (int pass = 0; pass < 2; ++pass) {
        if (Q.cols()) v -= Q * (Q.transpose() * v);
        if (fresh.cols()) v -= fresh * (fresh.transpose() * v);
      }
      const double nv = v.norm();
      if (nv <= thresh || Q.cols() + fresh.cols() >= n) continue;
      fresh.conservativeResize(n, fresh.cols() + 1);
      fresh.col(fresh.cols() - 1) = v / nv;
    }
    if (fresh.cols() == 0) break;
    MatR nq(n, Q.cols() + fresh.cols());
    nq << Q, fresh;
    Q = nq;
    block = R * fresh * wn;
  }
  out.rank = static_cast<int>(Q.cols());
  out.is_full = out.rank == n;
  return out;
}

// Solves G M + M G* + Q = 0 by vectorisation.
inline MatC lyapunov(const MatC& G, const MatC& Q) {
  const Eigen::Index n = G.rows();
  const MatC id = MatC::Identity(n, n);
  const MatC K = linalg::kron(id, G) + linalg::kron(G.conjugate(), id);
  Eigen::PartialPivLU<MatC> lu(K);
  const VecC x = lu.solve(VecC(-linalg::vec(Q)));
  const MatC M = linalg::unvec(x);
  if (!M.allFinite()) throw NotErgodic("Lyapunov operator is singular");
  return M;
}

inline double lyapunov_residual(const MatC& G, const MatC& Q, const MatC& M) {
  return linalg::max_abs(MatC(G * M + M * G.adjoint() + Q));
}

inline MatC stationary_covariance(const ThermalModel& m) {
  const auto k = kalman(m);
  if (!k.is_full)
    throw NotErgodic("Kalman rank " + std::to_string(k.rank) + " < " + std::to_string(m.dim()) +
                     ": stationary covariance is not unique");
  const MatC G = drift(m);
  const MatC Q = bath_source(m);
  MatC M = linalg::hermitian_part(lyapunov(G, Q));
  const double res = lyapunov_residual(G, Q, M);
  const double scale = std::max(1.0, linalg::max_abs(G));
  if (res > 1e-10 * scale) throw NonConvergence("Lyapunov residual " + std::to_string(res) + " too large");
  return M;
}

// Affine covariance map M ↦ E M E* + S over a time step.
struct CovariancePropagator {
  MatC E;
  MatC S;

  MatC apply(const MatC& M) const { return E * M * E.adjoint() + S; }

  CovariancePropagator then(const CovariancePropagator& next) const {
    return {next.E * E, next.E * S * next.E.adjoint() + next.S};
  }
};

// Builds the propagator over time t. A short step h = t/2^k comes from the
// augmented exponential exp(h[[G, Q], [0, -G*]]); repeated squaring gives t.
inline CovariancePropagator propagator(const ThermalModel& m, double t) {
  const Eigen::Index n = m.dim();
  if (t < 0) throw MalformedInput("evolve: negative time");
  if (t == 0) return {MatC::Identity(n, n), MatC::Zero(n, n)};
  const MatC G = drift(m);
  const MatC Q = bath_source(m);
  const double gn = std::max(G.cwiseAbs().rowwise().sum().maxCoeff(), Q.cwiseAbs().rowwise().sum().maxCoeff());
  int k = 0;
  while (gn * t / std::ldexp(1.0, k) > 0.5 && k < 60) ++k;
  const double h = t / std::ldexp(1.0, k);
  MatC aug = MatC::Zero(2 * n, 2 * n);
  aug.topLeftCorner(n, n) = G;
  aug.topRightCorner(n, n) = Q;
  aug.bottomRightCorner(n, n) = -G.adjoint();
  const MatC F = linalg::expm(MatC(h * aug));
  CovariancePropagator p{F.topLeftCorner(n, n), F.topRightCorner(n, n) * F.topLeftCorner(n, n).adjoint()};
  p.S = linalg::hermitian_part(p.S);
  for (int j = 0; j < k; ++j) {
    p = p.then(p);
    p.S = linalg::hermitian_part(p.S);
  }
  return p;
}

inline MatC evolve(const MatC& M0, const ThermalModel& m, double t) {
  return linalg::hermitian_part(propagator(m, t).apply(M0));
}

}  // namespace fermiflux::dynamics
