#pragma once

#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <thread>

#include "fermiflux/dynamics.hpp"
#include "fermiflux/model.hpp"

// Large deviations of the energy exchanged with the baths. N_T^i counts the
// energy entering bath i, e(α) = lim T⁻¹ log E exp⟨α, N_T⟩ and
// I(ζ) = sup_α(⟨α, ζ⟩ - e(α)). With this orientation e'(0) = J and
// e(α - β) = e(-α).
namespace fermiflux::ldp {

// Per-model data reused by every evaluation of e(α).
class Context {
 public:
  explicit Context(ThermalModel m, Tolerances tol = {}, bool require_ergodic = true)
      : model_(std::move(m)), tol_(tol) {
    const Eigen::Index n = model_.dim();
    if (require_ergodic) {
      const auto k = dynamics::kalman(model_, tol_.kalman);
      if (!k.is_full)
        throw NotErgodic("e(alpha) needs a positivity-improving model (Kalman rank " + std::to_string(k.rank) +
                         " < " + std::to_string(n) + ")");
    }
    Eigen::SelfAdjointEigenSolver<MatC> es(linalg::hermitian_part(model_.kappa_S));
    kappa_vecs_ = es.eigenvectors();
    kappa_vals_ = es.eigenvalues();
    A_ = -I * model_.T_S;
    G_ = -I * model_.T_S;
    trace_term_ = 0.0;
    for (const auto& b : model_.baths) {
      gram_.push_back(b.theta * b.theta.adjoint());
      M_beta_.push_back(phasespace::gibbs_covariance(model_.kappa_S, b.beta));
      M_mbeta_.push_back(phasespace::gibbs_covariance(model_.kappa_S, -b.beta));
      A_ += (M_beta_.back() - 0.5 * MatC::Identity(n, n)) * gram_.back();
      G_ -= 0.5 * gram_.back();
      trace_term_ += 0.25 * gram_.back().trace().real();
    }
  }

  const ThermalModel& model() const { return model_; }
  const Tolerances& tolerances() const { return tol_; }
  std::size_t n_baths() const { return model_.baths.size(); }
  Eigen::Index dim() const { return model_.dim(); }
  const MatC& A() const { return A_; }
  const MatC& G() const { return G_; }
  const MatC& gram(std::size_t i) const { return gram_[i]; }
  const MatC& M_beta(std::size_t i) const { return M_beta_[i]; }
  const MatC& M_minus_beta(std::size_t i) const { return M_mbeta_[i]; }
  double trace_term() const { return trace_term_; }  // ¼ Σ tr Θ_iΘ_i*

  MatC exp_kappa(double s) const {
    VecC d(kappa_vals_.size());
    for (Eigen::Index k = 0; k < d.size(); ++k) d(k) = std::exp(s * kappa_vals_(k));
    return kappa_vecs_ * d.asDiagonal() * kappa_vecs_.adjoint();
  }

  void check_alpha(const std::vector<double>& alpha) const {
    if (alpha.size() != n_baths())
      throw MalformedInput("alpha has " + std::to_string(alpha.size()) + " entries, model has " +
                           std::to_string(n_baths()) + " baths");
    for (double a : alpha)
      if (!std::isfinite(a)) throw MalformedInput("alpha must be finite");
  }

 private:
  ThermalModel model_;
  Tolerances tol_;
  MatC kappa_vecs_;
  VecR kappa_vals_;
  std::vector<MatC> gram_, M_beta_, M_mbeta_;
  MatC A_, G_;
  double trace_term_ = 0.0;
};

struct DeformedBlocks {
  MatC A;        // -iT_S + Σ(M_{β_i} - ½)Θ_iΘ_i*
  MatC B_plus;   // Σ e^{α_iκ} M_{β_i} Θ_iΘ_i*
  MatC B_minus;  // Σ e^{-α_iκ} M_{-β_i} Θ_iΘ_i*
  MatC Q;        // Σ Θ_iΘ_i* M_{β_i}(e^{α_iκ} - 1)
  MatC G;        // G - Q
  MatC C;        // Q - Q^T

  // A = G_{α,β} + B_{α,β}
  double relation_A() const { return linalg::max_abs(MatC(A - G - B_plus)); }
  // C + B_{α,β} + G_{α,β} + G_{α,β}* = -B_{-α,-β}
  double relation_C() const { return linalg::max_abs(MatC(C + B_plus + G + G.adjoint() + B_minus)); }
};

inline DeformedBlocks deformed_blocks(const Context& ctx, const std::vector<double>& alpha) {
  ctx.check_alpha(alpha);
  const Eigen::Index n = ctx.dim();
  DeformedBlocks b;
  b.A = ctx.A();
  b.B_plus = MatC::Zero(n, n);
  b.B_minus = MatC::Zero(n, n);
  b.Q = MatC::Zero(n, n);
  for (std::size_t i = 0; i < ctx.n_baths(); ++i) {
    const MatC up = ctx.exp_kappa(alpha[i]);
    const MatC down = ctx.exp_kappa(-alpha[i]);
    b.B_plus += up * ctx.M_beta(i) * ctx.gram(i);
    b.B_minus += down * ctx.M_minus_beta(i) * ctx.gram(i);
    b.Q += ctx.gram(i) * ctx.M_beta(i) * (up - MatC::Identity(n, n));
  }
  b.G = ctx.G() - b.Q;
  b.C = b.Q - b.Q.transpose();
  return b;
}

inline MatC build_Z(const DeformedBlocks& b) {
  const Eigen::Index n = b.A.rows();
  MatC Z(2 * n, 2 * n);
  Z.topLeftCorner(n, n) = b.A;
  Z.topRightCorner(n, n) = b.B_plus;
  Z.bottomLeftCorner(n, n) = b.B_minus;
  Z.bottomRightCorner(n, n) = -b.A.adjoint();
  return Z;
}

struct DeformedSpectrum {
  MatC Z;
  VecC eigenvalues;
  int n_positive = 0;
  int n_band = 0;
  int n_negative = 0;
  double min_abs_real = 0.0;
  double symmetry_residual = 0.0;  // multiset distance under λ ↦ -λ̄
  cplx raw_e;                      // before discarding the imaginary part
  double e_alpha = 0.0;
};

inline double mirror_residual(const VecC& ev) {
  // Greedy matching of each λ with the closest -λ̄.
  std::vector<bool> used(static_cast<std::size_t>(ev.size()), false);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const cplx target = -std::conj(ev(i));
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index arg = -1;
    for (Eigen::Index j = 0; j < ev.size(); ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double d = std::abs(ev(j) - target);
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    if (arg >= 0) used[static_cast<std::size_t>(arg)] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

// Spectrum of Z_α and e(α) = ½ Σ_{Re λ > 0} λ - ¼ Σ tr Θ_iΘ_i*. Eigenvalues
// within the imaginary-axis band are a hard error.
inline DeformedSpectrum deformed_spectrum(const Context& ctx, const std::vector<double>& alpha,
                                          bool throw_on_band = true) {
  const DeformedBlocks b = deformed_blocks(ctx, alpha);
  DeformedSpectrum s;
  s.Z = build_Z(b);
  const auto bal = linalg::balance(s.Z);
  Eigen::ComplexEigenSolver<MatC> es(bal.matrix, false);
  if (es.info() != Eigen::Success) throw NumericDegeneracy("eigenvalues of Z_alpha did not converge");
  s.eigenvalues = es.eigenvalues();
  const double tau = ctx.tolerances().split;
  cplx sum = 0.0;
  double mag = 0.0;
  s.min_abs_real = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k) {
    const cplx l = s.eigenvalues(k);
    s.min_abs_real = std::min(s.min_abs_real, std::abs(l.real()));
    mag += std::abs(l);
    if (l.real() > tau) {
      ++s.n_positive;
      sum += l;
    } else if (l.real() < -tau) {
      ++s.n_negative;
    } else {
      ++s.n_band;
    }
  }
  s.symmetry_residual = mirror_residual(s.eigenvalues);
  s.raw_e = 0.5 * sum - ctx.trace_term();
  s.e_alpha = s.raw_e.real();
  if (throw_on_band && s.n_band > 0)
    throw NumericDegeneracy(std::to_string(s.n_band) + " eigenvalue(s) of Z_alpha within " + std::to_string(tau) +
                            " of the imaginary axis");
  if (throw_on_band && std::abs(s.raw_e.imag()) > 1e-8 * std::max(1.0, mag))
    throw NumericDegeneracy("e(alpha) has imaginary part " + std::to_string(s.raw_e.imag()));
  return s;
}

inline double e_alpha(const Context& ctx, const std::vector<double>& alpha) {
  return deformed_spectrum(ctx, alpha).e_alpha;
}

inline double e_alpha(const ThermalModel& m, const std::vector<double>& alpha) {
  return e_alpha(Context(m), alpha);
}

struct RiccatiSolution {
  MatC X;                           // maximal solution
  MatC M_alpha;                     // (1 + X)⁻¹
  double residual = 0.0;            // ‖XA + A*X + XB₊X - B₋‖
  double relative_residual = 0.0;   // residual divided by the data scale
  double hermiticity = 0.0;         // ‖X - X*‖ before symmetrisation
  double min_eigenvalue = 0.0;      // of X
  double involution_residual = 0.0; // ‖X^T X - 1‖, i.e. X^T = X⁻¹
  double e_trace = 0.0;             // ½ tr(A + X B₊) - ¼ Σ tr Θ_iΘ_i*
};

// X_max = V₂V₁⁻¹ from the invariant subspace of Z_α for Re λ > 0, taken from
// a reordered complex Schur form of the balanced matrix.
inline RiccatiSolution riccati_max(const Context& ctx, const std::vector<double>& alpha) {
  const DeformedBlocks b = deformed_blocks(ctx, alpha);
  const Eigen::Index n = ctx.dim();
  const MatC Z = build_Z(b);
  const auto bal = linalg::balance(Z);
  const double tau = ctx.tolerances().split;
  const auto sch = linalg::ordered_schur(bal.matrix, [tau](cplx l) { return l.real() > tau; });
  for (Eigen::Index k = 0; k < 2 * n; ++k)
    if (std::abs(sch.T(k, k).real()) <= tau) throw NumericDegeneracy("Z_alpha has eigenvalues on the imaginary axis");
  if (sch.selected != n)
    throw NumericDegeneracy("Z_alpha has " + std::to_string(sch.selected) + " eigenvalues with Re > 0, expected " +
                            std::to_string(n));
  MatC V = bal.scale.cast<cplx>().asDiagonal() * sch.U.leftCols(n);
  const MatC V1 = V.topRows(n), V2 = V.bottomRows(n);
  if (linalg::inverse_condition(V1) < 1e-13) throw NumericDegeneracy("singular V1 in the Riccati subspace");
  MatC X = V1.transpose().partialPivLu().solve(V2.transpose()).transpose();
  RiccatiSolution r;
  r.hermiticity = linalg::max_abs(MatC(X - X.adjoint()));
  X = linalg::hermitian_part(X);
  r.X = X;
  r.residual = linalg::max_abs(MatC(X * b.A + b.A.adjoint() * X + X * b.B_plus * X - b.B_minus));
  const double scale = std::max({1.0, linalg::max_abs(b.A), linalg::max_abs(b.B_plus), linalg::max_abs(b.B_minus)}) *
                       std::max(1.0, linalg::max_abs(X) * linalg::max_abs(X));
  r.relative_residual = r.residual / scale;
  r.min_eigenvalue = linalg::hermitian_eigenvalues(X).minCoeff();
  r.involution_residual = linalg::max_abs(MatC(X.transpose() * X - MatC::Identity(n, n)));
  r.M_alpha = linalg::hermitian_part(MatC((MatC::Identity(n, n) + X).inverse()));
  r.e_trace = (0.5 * (b.A + X * b.B_plus).trace()).real() - ctx.trace_term();
  return r;
}

// Dominant eigenvalue recovered from the quasi-free eigenvector covariance:
// λ = tr(Q^T M_α).
inline double eigenvalue_from_covariance(const DeformedBlocks& b, const MatC& M) {
  return (b.Q.transpose() * M).trace().real();
}

// ẽ(a) = e(a, 0) for a two-bath model; e(α₁, α₂) = ẽ(α₁ - α₂).
inline double e_tilde(const Context& ctx, double a) {
  if (ctx.n_baths() != 2) throw MalformedInput("e_tilde needs exactly two baths");
  return e_alpha(ctx, {a, 0.0});
}

struct RatePoint {
  double zeta = 0.0;
  double I = 0.0;
  double alpha_star = 0.0;
  bool converged = false;
  std::string note;
};

struct RateCurve {
  std::vector<RatePoint> points;
  bool all_converged() const {
    for (const auto& p : points)
      if (!p.converged) return false;
    return true;
  }
};

struct RateOptions {
  std::size_t chunk = 16;  // warm starts run within fixed chunks of the grid
  unsigned jobs = 1;
};

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = a;
    return g;
  }
  for (std::size_t k = 0; k < n; ++k) g[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  return g;
}

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
  bool at_bound = false;  // the objective still increases at |a| = a_max
  double edge = 0.0;
};

// Bracket the maximiser of a concave f by stepping away from `start` in the
// ascending direction with doubling steps, clipped to [-a_max, a_max].
template <typename F>
Bracket bracket_maximum(F&& f, double start, double a_max) {
  Bracket br;
  const double a = std::clamp(start, -a_max, a_max);
  const double fa = f(a);
  double b = std::clamp(a + 0.25, -a_max, a_max), fb = f(b);
  if (fb <= fa) {
    const double c = std::clamp(a - 0.25, -a_max, a_max), fc = f(c);
    if (fc <= fa) {
      br.lo = c;
      br.hi = b;
      return br;
    }
    b = c;
    fb = fc;
  }
  double prev = a;
  for (int it = 0; it < 200; ++it) {
    double c = b + 2.0 * (b - prev);
    const bool clipped = std::abs(c) >= a_max;
    if (clipped) c = std::copysign(a_max, c);
    const double fc = f(c);
    if (fc <= fb) {
      br.lo = std::min(prev, c);
      br.hi = std::max(prev, c);
      return br;
    }
    if (clipped) {
      br.at_bound = true;
      br.edge = c;
      return br;
    }
    prev = b;
    b = c;
    fb = fc;
  }
  throw NonConvergence("bracket expansion did not terminate");
}

// I(ζ) = sup_a (aζ - ẽ(a)). The objective is concave: bracket it, then run a
// golden-section search until the bracket is below tolerance.
inline RatePoint legendre_point(const Context& ctx, double zeta, double start = 0.0) {
  const auto& tol = ctx.tolerances();
  RatePoint p;
  p.zeta = zeta;
  auto f = [&](double a) { return a * zeta - e_tilde(ctx, a); };
  try {
    const Bracket br = bracket_maximum(f, start, tol.alpha_max);
    if (br.at_bound) {
      p.I = std::numeric_limits<double>::infinity();
      p.alpha_star = br.edge;
      p.converged = true;
      p.note = "supremum at |alpha| = alpha_max";
      return p;
    }
    double lo = br.lo, hi = br.hi;
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 400 && hi - lo > tol.golden; ++it) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + invphi * (hi - lo);
        f2 = f(x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - invphi * (hi - lo);
        f1 = f(x1);
      }
    }
    p.alpha_star = 0.5 * (lo + hi);
    p.I = std::max({f(p.alpha_star), f1, f2});
    p.converged = hi - lo <= tol.golden;
    if (!p.converged) {
      const double h = 1e-6;
      const double grad = (f(p.alpha_star + h) - f(p.alpha_star - h)) / (2 * h);
      p.converged = std::abs(grad) < tol.gradient;
      if (!p.converged) p.note = "golden-section search did not reach tolerance";
    }
    return p;
  } catch (const Error& e) {
    p.converged = false;
    p.I = std::numeric_limits<double>::quiet_NaN();
    p.note = e.what();
    return p;
  }
}

// Rate function on a grid. Points are processed in fixed chunks; inside a
// chunk each search starts from the maximiser of the previous point. Chunks
// are independent, so the result does not depend on the number of workers.
inline RateCurve rate_function(const Context& ctx, const std::vector<double>& zetas, RateOptions opt = {}) {
  if (ctx.n_baths() != 2) throw MalformedInput("rate_function optimises the two-bath reduction only");
  RateCurve curve;
  curve.points.resize(zetas.size());
  const std::size_t chunk = std::max<std::size_t>(1, opt.chunk);
  const std::size_t n_chunks = (zetas.size() + chunk - 1) / chunk;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < n_chunks; c = next++) {
      double start = 0.0;
      for (std::size_t k = c * chunk; k < std::min(zetas.size(), (c + 1) * chunk); ++k) {
        curve.points[k] = legendre_point(ctx, zetas[k], start);
        if (std::isfinite(curve.points[k].alpha_star)) start = curve.points[k].alpha_star;
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(opt.jobs, static_cast<unsigned>(n_chunks)));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return curve;
}

}  // namespace fermiflux::ldp
