#pragma once

#include <algorithm>
#include <numeric>
#include <optional>

#include "fermiflux/dynamics.hpp"
#include "fermiflux/model.hpp"

namespace fermiflux::thermal {

// J_i = ½ Tr(κ_S D_i(M_{β_i} - M)),  D_i(A) = ½{Θ_iΘ_i*, A}.
// Positive J_i is energy entering bath i.
inline std::vector<double> fluxes_from(const MatC& kappa, const std::vector<MatC>& grams,
                                       const std::vector<double>& betas, const MatC& M) {
  std::vector<double> J;
  J.reserve(grams.size());
  for (std::size_t i = 0; i < grams.size(); ++i) {
    const MatC diff = phasespace::gibbs_covariance(kappa, betas[i]) - M;
    const MatC D = 0.5 * (grams[i] * diff + diff * grams[i]);
    const cplx j = 0.5 * (kappa * D).trace();
    const double scale = std::max(1.0, linalg::max_abs(kappa) * linalg::max_abs(grams[i]) * kappa.rows());
    if (std::abs(j.imag()) > 1e-10 * scale)
      throw NonConvergence("flux has imaginary part " + std::to_string(j.imag()));
    J.push_back(j.real());
  }
  return J;
}

inline std::vector<double> fluxes(const ThermalModel& m, const MatC& M) {
  std::vector<MatC> grams;
  for (const auto& b : m.baths) grams.push_back(b.theta * b.theta.adjoint());
  return fluxes_from(m.kappa_S, grams, m.betas(), M);
}

inline double entropy_production(const std::vector<double>& J, const std::vector<double>& beta) {
  if (J.size() != beta.size()) throw MalformedInput("entropy_production: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < J.size(); ++i) s += beta[i] * J[i];
  return s;
}

// Stationary fluxes of a model whose Kalman space may be a proper subspace.
// Fluxes only see the dynamics on K(T_S, Θ), which is invariant under T_S and
// κ_S, so restricting there yields a unique answer even when the stationary
// covariance on the full space is not unique.
struct RestrictedFluxes {
  std::vector<double> J;
  int kalman_rank = 0;
  bool deficient = false;
};

inline RestrictedFluxes stationary_fluxes(const ThermalModel& m) {
  RestrictedFluxes out;
  const auto k = dynamics::kalman(m);
  out.kalman_rank = k.rank;
  out.deficient = !k.is_full;
  if (k.is_full) {
    out.J = fluxes(m, dynamics::stationary_covariance(m));
    return out;
  }
  if (k.rank == 0) {
    out.J.assign(m.n_baths(), 0.0);
    return out;
  }
  const MatC Q = k.basis.cast<cplx>();
  const MatC T = Q.adjoint() * m.T_S * Q;
  const MatC kap = Q.adjoint() * m.kappa_S * Q;
  std::vector<MatC> grams;
  MatC gram_sum = MatC::Zero(Q.cols(), Q.cols());
  MatC source = MatC::Zero(Q.cols(), Q.cols());
  for (const auto& b : m.baths) {
    const MatC th = Q.adjoint() * b.theta;
    grams.push_back(th * th.adjoint());
    gram_sum += grams.back();
    source += th * phasespace::gibbs_covariance(b.kappa, b.beta) * th.adjoint();
  }
  const MatC G = -I * T - 0.5 * gram_sum;
  const MatC Mr = linalg::hermitian_part(dynamics::lyapunov(G, source));
  out.J = fluxes_from(kap, grams, m.betas(), Mr);
  return out;
}

// Indices sorted by β ascending (hottest first), stable in the input order.
inline std::vector<std::size_t> hot_to_cold(const std::vector<double>& beta) {
  std::vector<std::size_t> idx(beta.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return beta[a] < beta[b]; });
  return idx;
}

struct NoFridgeResult {
  bool ok = true;
  std::optional<std::size_t> witness;  // sorted position of the first violated partial sum
  std::vector<double> partial_sums;    // Σ_{sorted ≤ k} J
  double worst = 0.0;                  // largest checked partial sum
};

// Hot baths can only lose energy in aggregate: after sorting by β ascending,
// every partial sum of J is ≤ 0. Within a block of equal β every ordering is
// checked, i.e. the preceding sum plus all positive fluxes of the block.
inline NoFridgeResult check_no_fridge(const std::vector<double>& J, const std::vector<double>& beta,
                                      double tol = 1e-9) {
  if (J.size() != beta.size()) throw MalformedInput("check_no_fridge: length mismatch");
  const auto idx = hot_to_cold(beta);
  NoFridgeResult r;
  double before = 0.0;
  std::size_t k = 0;
  r.worst = -std::numeric_limits<double>::infinity();
  while (k < idx.size()) {
    std::size_t e = k;
    double pos = 0.0, sum = 0.0;
    while (e < idx.size() && beta[idx[e]] == beta[idx[k]]) {
      pos += std::max(J[idx[e]], 0.0);
      sum += J[idx[e]];
      ++e;
    }
    const double worst_in_block = before + pos;
    r.worst = std::max(r.worst, worst_in_block);
    if (worst_in_block > tol && r.ok) {
      r.ok = false;
      r.witness = k;
    }
    double running = before;
    for (std::size_t q = k; q < e; ++q) {
      running += J[idx[q]];
      r.partial_sums.push_back(running);
    }
    before += sum;
    k = e;
  }
  if (idx.empty()) r.worst = 0.0;
  return r;
}

// Antisymmetric pairwise decomposition J_i = Σ_j J_ij with J_ij ≥ 0 whenever
// β_i ≥ β_j. Built by water-filling: demands of each bath are served by the
// nearest strictly hotter baths that still have energy to give.
inline MatR decompose_fluxes(const std::vector<double>& J, const std::vector<double>& beta, double tol = 1e-9) {
  const auto chk = check_no_fridge(J, beta, tol);
  if (!chk.ok) throw Infeasible("flux vector violates the no-fridge partial-sum condition");
  const double total = std::accumulate(J.begin(), J.end(), 0.0);
  if (std::abs(total) > tol) throw Infeasible("fluxes do not sum to zero");

  const std::size_t n = J.size();
  MatR D = MatR::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const auto idx = hot_to_cold(beta);
  struct Supply {
    std::size_t bath;
    double left;
  };
  std::vector<Supply> stack;
  auto route = [&](std::size_t to, std::size_t from, double x) {
    D(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from)) += x;
    D(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to)) -= x;
  };

  std::size_t k = 0;
  while (k < n) {
    std::size_t e = k;
    while (e < n && beta[idx[e]] == beta[idx[k]]) ++e;
    for (std::size_t q = k; q < e; ++q) {
      const std::size_t b = idx[q];
      double need = J[b];
      while (need > 0.0 && !stack.empty()) {
        Supply& s = stack.back();
        const double x = std::min(need, s.left);
        route(b, s.bath, x);
        s.left -= x;
        need -= x;
        if (s.left <= 0.0) stack.pop_back();
      }
      // Residual demand within tolerance: charge the hottest supplier seen.
      if (need > 0.0 && q > 0) {
        std::size_t src = idx[0];
        if (src != b) route(b, src, need);
      }
    }
    for (std::size_t q = k; q < e; ++q)
      if (J[idx[q]] < 0.0) stack.push_back({idx[q], -J[idx[q]]});
    k = e;
  }
  // Supplies left by a tiny nonzero total are returned to the coldest bath.
  for (const auto& s : stack)
    if (s.left > 0.0 && idx.back() != s.bath) route(idx.back(), s.bath, s.left);
  return D;
}

// Largest violation of the certificate conditions: D antisymmetric, row
// sums equal to J, and D_ij ≥ 0 whenever β_i > β_j (energy only flows from
// hotter to colder baths).
inline double decomposition_residual(const MatR& D, const std::vector<double>& J, const std::vector<double>& beta) {
  const auto n = static_cast<Eigen::Index>(J.size());
  if (D.rows() != n || D.cols() != n) return std::numeric_limits<double>::infinity();
  double r = linalg::max_abs(MatR(D + D.transpose()));
  for (Eigen::Index i = 0; i < n; ++i) {
    r = std::max(r, std::abs(D.row(i).sum() - J[static_cast<std::size_t>(i)]));
    for (Eigen::Index j = 0; j < n; ++j) {
      const double bi = beta[static_cast<std::size_t>(i)], bj = beta[static_cast<std::size_t>(j)];
      if (bi > bj) r = std::max(r, -D(i, j));
      if (bi == bj && i != j) r = std::max(r, std::abs(D(i, j)));
    }
  }
  return r;
}

}  // namespace fermiflux::thermal
