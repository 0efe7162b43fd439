#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "fermiflux/types.hpp"

namespace fermiflux::linalg {

inline double max_abs(const MatC& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }
inline double max_abs(const MatR& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline MatC hermitian_part(const MatC& m) { return 0.5 * (m + m.adjoint()); }

// f(H) for self-adjoint H through its eigendecomposition.
inline MatC hermitian_function(const MatC& h, const std::function<double(double)>& f) {
  Eigen::SelfAdjointEigenSolver<MatC> es(hermitian_part(h));
  VecR w = es.eigenvalues();
  VecC fw(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) fw(k) = f(w(k));
  return es.eigenvectors() * fw.asDiagonal() * es.eigenvectors().adjoint();
}

inline VecR hermitian_eigenvalues(const MatC& h) {
  Eigen::SelfAdjointEigenSolver<MatC> es(hermitian_part(h), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline MatC expm(const MatC& a) { return a.exp(); }

inline MatC kron(const MatC& a, const MatC& b) { return Eigen::kroneckerProduct(a, b).eval(); }

// Column-stacking vectorisation: vec(A X B) = (Bᵗ ⊗ A) vec(X).
inline VecC vec(const MatC& a) { return Eigen::Map<const VecC>(a.data(), a.size()); }

inline MatC unvec(const VecC& v) {
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (n * n != v.size()) throw MalformedInput("unvec: length is not a perfect square");
  return Eigen::Map<const MatC>(v.data(), n, n);
}

inline MatC spre(const MatC& a) { return kron(MatC::Identity(a.rows(), a.cols()), a); }
inline MatC spost(const MatC& a) { return kron(a.transpose(), MatC::Identity(a.rows(), a.cols())); }

// Smallest-to-largest singular values based rank with a relative cut.
template <typename Mat>
int numerical_rank(const Mat& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) > rel_tol * s(0)) ++r;
  return r;
}

inline double inverse_condition(const MatC& m) {
  Eigen::JacobiSVD<MatC> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0.0;
  return s(s.size() - 1) / s(0);
}

// Diagonal similarity D⁻¹ A D with power-of-two entries (Parlett–Reinsch),
// reducing the norm spread before an eigenvalue computation.
struct Balanced {
  MatC matrix;
  VecR scale;  // A = D · matrix · D⁻¹ with D = diag(scale)
};

inline Balanced balance(const MatC& a) {
  const Eigen::Index n = a.rows();
  Balanced out{a, VecR::Ones(n)};
  constexpr double radix = 2.0;
  bool converged = false;
  for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
    converged = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(out.matrix(j, i));
        r += std::abs(out.matrix(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix, f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= radix * radix;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= radix * radix;
      }
      if ((c + r) / f < 0.95 * s) {
        converged = false;
        out.scale(i) *= f;
        out.matrix.row(i) /= f;
        out.matrix.col(i) *= f;
      }
    }
  }
  return out;
}

// Complex Schur form A = U T U* reordered so that eigenvalues selected by
// `front` lead the diagonal. Adjacent swaps use a unitary 2×2 rotation
// built from the eigenvector of the local block.
struct OrderedSchur {
  MatC T;
  MatC U;
  int selected = 0;
};

inline OrderedSchur ordered_schur(const MatC& a, const std::function<bool(cplx)>& front) {
  Eigen::ComplexSchur<MatC> cs(a, true);
  if (cs.info() != Eigen::Success) throw NumericDegeneracy("complex Schur decomposition failed");
  OrderedSchur out{cs.matrixT(), cs.matrixU(), 0};
  MatC& T = out.T;
  MatC& U = out.U;
  const Eigen::Index n = T.rows();

  auto swap = [&](Eigen::Index k) {
    const cplx t11 = T(k, k), t22 = T(k + 1, k + 1), t12 = T(k, k + 1);
    cplx x = t12, y = t22 - t11;
    const double nrm = std::hypot(std::abs(x), std::abs(y));
    if (nrm == 0.0) return;
    x /= nrm;
    y /= nrm;
    // Columns of Gs are orthonormal; the first spans the eigenvector for t22.
    Eigen::Matrix2cd Gs;
    Gs << x, -std::conj(y), y, std::conj(x);
    const Eigen::Matrix2cd G = Gs.adjoint();
    T.middleRows(k, 2) = (G * T.middleRows(k, 2)).eval();
    T.middleCols(k, 2) = (T.middleCols(k, 2) * Gs).eval();
    U.middleCols(k, 2) = (U.middleCols(k, 2) * Gs).eval();
    T(k + 1, k) = 0.0;
    T(k, k) = t22;
    T(k + 1, k + 1) = t11;
  };

  // Stable bubble: move each selected eigenvalue forward past unselected ones.
  Eigen::Index head = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!front(T(j, j))) continue;
    for (Eigen::Index k = j; k > head; --k) swap(k - 1);
    ++head;
  }
  out.selected = static_cast<int>(head);
  return out;
}

// Normalised null vector of a (Schrödinger-picture) generator: solves
// L vec(ρ) = 0 together with tr ρ = 1 in the least-squares sense.
inline MatC trace_one_null_state(const MatC& gen) {
  const Eigen::Index d2 = gen.rows();
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(d2))));
  MatC aug(d2 + 1, d2);
  aug.topRows(d2) = gen;
  aug.row(d2).setZero();
  for (Eigen::Index k = 0; k < d; ++k) aug(d2, k * d + k) = 1.0;
  VecC rhs = VecC::Zero(d2 + 1);
  rhs(d2) = 1.0;
  VecC x = aug.colPivHouseholderQr().solve(rhs);
  MatC rho = unvec(x);
  return hermitian_part(rho);
}

inline double von_neumann_entropy(const MatC& rho) {
  VecR p = hermitian_eigenvalues(rho);
  double s = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k)
    if (p(k) > 1e-300) s -= p(k) * std::log(p(k));
  return s;
}

}  // namespace fermiflux::linalg
