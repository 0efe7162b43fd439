#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <thread>

#include "fermiflux/fock.hpp"
#include "fermiflux/model.hpp"
#include "fermiflux/rng.hpp"

// Quantum-jump unraveling of the thermal semigroup. Each jump transfers an
// energy quantum δ into one bath; between jumps the unnormalised state follows
// h ↦ exp(tℒ_G*)h with ℒ_G*(ρ) = -i[H, ρ] - ½{Φ(1), ρ}.
namespace fermiflux::unravel {

struct JumpChannel {
  std::size_t bath = 0;
  double delta = 0.0;
  MatC phi;  // Heisenberg picture; Σ_δ phi = Φ_i
};

// Energy quanta exchanged with a single-mode bath: {-ω, 0, +ω}.
inline double bath_quantum(const BathSpec& b) {
  if (b.modes() != 1)
    throw MalformedInput("jump channels are only supported for single-mode baths (bath has " +
                         std::to_string(b.modes()) + " modes)");
  return std::abs(linalg::hermitian_eigenvalues(b.kappa).maxCoeff());
}

inline bool coupled(const BathSpec& b) { return linalg::max_abs(b.theta) > 0.0; }

// Channels from bath energy projectors on the joint space (bath mode first):
// Φ*_{i,δ}(ρ) = Σ_E tr_B[P_{E+δ} H_SB (P_E ρ_B ⊗ ρ) H_SB].
inline std::vector<JumpChannel> channels_by_projection(const ThermalModel& m, int L_max = fock::default_L_max) {
  std::vector<JumpChannel> out;
  const int L = m.L_S, Lt = L + 1;
  for (std::size_t i = 0; i < m.baths.size(); ++i) {
    const auto& b = m.baths[i];
    const double w = bath_quantum(b);
    if (!coupled(b)) continue;
    const auto g = fock::majorana_matrices(Lt, L_max);
    auto sys = [&](Eigen::Index s) -> const MatC& { return g[1 + s % L + (s / L) * Lt]; };
    auto bth = [&](Eigen::Index k) -> const MatC& { return g[k * Lt]; };
    const Eigen::Index D = g.front().rows(), dS = D / 2;
    MatC HSB = MatC::Zero(D, D), KB = MatC::Zero(D, D);
    for (Eigen::Index r = 0; r < m.dim(); ++r)
      for (Eigen::Index c = 0; c < 2; ++c)
        if (b.theta(r, c) != 0.0) HSB += 0.5 * b.theta(r, c) * sys(r) * bth(c);
    for (Eigen::Index r = 0; r < 2; ++r)
      for (Eigen::Index c = 0; c < 2; ++c)
        if (b.kappa(r, c) != 0.0) KB += 0.25 * b.kappa(r, c) * bth(r) * bth(c);
    const MatC rhoB = fock::gibbs_state(KB, b.beta) * static_cast<double>(dS);
    Eigen::SelfAdjointEigenSolver<MatC> es(linalg::hermitian_part(KB));
    const VecR ev = es.eigenvalues();
    std::vector<double> levels;
    for (Eigen::Index k = 0; k < ev.size(); ++k)
      if (levels.empty() || std::abs(ev(k) - levels.back()) > 1e-9) levels.push_back(ev(k));
    std::vector<MatC> P;
    for (double e : levels) {
      MatC p = MatC::Zero(D, D);
      for (Eigen::Index k = 0; k < ev.size(); ++k)
        if (std::abs(ev(k) - e) <= 1e-9) p += es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
      P.push_back(p);
    }
    const std::vector<double> deltas = w > 1e-12 ? std::vector<double>{-w, 0.0, w} : std::vector<double>{0.0};
    const MatC idB = MatC::Identity(2, 2);
    for (double delta : deltas) {
      MatC schr = MatC::Zero(dS * dS, dS * dS);
      for (std::size_t from = 0; from < levels.size(); ++from)
        for (std::size_t to = 0; to < levels.size(); ++to) {
          if (std::abs(levels[to] - levels[from] - delta) > 1e-9) continue;
          const MatC left = P[to] * HSB * P[from] * rhoB;
          for (Eigen::Index col = 0; col < dS * dS; ++col) {
            MatC E = MatC::Zero(dS, dS);
            E(col % dS, col / dS) = 1.0;
            const MatC Y = left * linalg::kron(idB, E) * HSB;
            schr.col(col) += linalg::vec(MatC(Y.topLeftCorner(dS, dS) + Y.bottomRightCorner(dS, dS)));
          }
        }
      if (linalg::max_abs(schr) > 1e-13) out.push_back({i, delta, schr.adjoint()});
    }
  }
  return out;
}

// Channels from the counting deformation: spost(e^{αK}) Φ_i spost(e^{-αK}) =
// Σ_δ e^{αδ} Φ_{i,δ}, sampled at three α and solved as a Vandermonde system.
inline std::vector<JumpChannel> channels_by_interpolation(const ThermalModel& m, int L_max = fock::default_L_max) {
  const auto r = fock::realize(m, L_max);
  std::vector<JumpChannel> out;
  for (std::size_t i = 0; i < m.baths.size(); ++i) {
    const double w = bath_quantum(m.baths[i]);
    if (!coupled(m.baths[i])) continue;
    if (w <= 1e-12) {
      out.push_back({i, 0.0, r.phi[i]});
      continue;
    }
    const double alphas[3] = {-1.0 / w, 0.0, 1.0 / w};
    std::vector<MatC> samples;
    for (double a : alphas) {
      const MatC up = linalg::hermitian_function(r.K, [a](double e) { return std::exp(a * e); });
      const MatC down = linalg::hermitian_function(r.K, [a](double e) { return std::exp(-a * e); });
      samples.push_back(linalg::spost(up) * r.phi[i] * linalg::spost(down));
    }
    Eigen::Matrix3d V;
    for (int k = 0; k < 3; ++k)
      for (int p = 0; p < 3; ++p) V(k, p) = std::exp(alphas[k] * w * (p - 1));
    const Eigen::Matrix3d Vi = V.inverse();
    const double deltas[3] = {-w, 0.0, w};
    for (int p = 0; p < 3; ++p) {
      MatC c = Vi(p, 0) * samples[0] + Vi(p, 1) * samples[1] + Vi(p, 2) * samples[2];
      if (linalg::max_abs(c) > 1e-11) out.push_back({i, deltas[p], c});
    }
  }
  return out;
}

inline double channel_distance(const std::vector<JumpChannel>& a, const std::vector<JumpChannel>& b) {
  double worst = 0.0;
  auto find = [](const std::vector<JumpChannel>& v, std::size_t bath, double delta) -> const JumpChannel* {
    for (const auto& c : v)
      if (c.bath == bath && std::abs(c.delta - delta) < 1e-9) return &c;
    return nullptr;
  };
  for (const auto& c : a) {
    const auto* o = find(b, c.bath, c.delta);
    worst = std::max(worst, o ? linalg::max_abs(MatC(c.phi - o->phi)) : linalg::max_abs(c.phi));
  }
  for (const auto& c : b)
    if (!find(a, c.bath, c.delta)) worst = std::max(worst, linalg::max_abs(c.phi));
  return worst;
}

// Smallest eigenvalue of the Choi matrix Σ E_kl ⊗ Φ*(E_kl).
inline double choi_min_eigenvalue(const MatC& phi_heisenberg) {
  const MatC schr = phi_heisenberg.adjoint();
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(schr.rows()))));
  MatC choi = MatC::Zero(d * d, d * d);
  for (Eigen::Index col = 0; col < d * d; ++col) {
    const Eigen::Index k = col % d, l = col / d;
    choi.block(k * d, l * d, d, d) = linalg::unvec(schr.col(col));
  }
  return linalg::hermitian_eigenvalues(choi).minCoeff();
}

// Both extraction routes, cross-checked against each other.
inline std::vector<JumpChannel> extract_channels(const ThermalModel& m, int L_max = fock::default_L_max) {
  auto a = channels_by_projection(m, L_max);
  const auto b = channels_by_interpolation(m, L_max);
  const double d = channel_distance(a, b);
  if (d > 1e-9) throw NonConvergence("channel extraction routes disagree by " + std::to_string(d));
  return a;
}

struct Jump {
  double t = 0.0;
  std::size_t bath = 0;
  double delta = 0.0;
};

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  double T = 0.0;
  std::vector<Jump> jumps;
  std::vector<double> N;         // N_T^i = Σ_{l: i_l = i} δ_l
  double final_weight = 1.0;     // no-jump probability of the last segment
  std::size_t warnings = 0;      // renormalisations after trace underflow
  std::optional<MatC> final_state;
};

class Unraveler {
 public:
  explicit Unraveler(const ThermalModel& m, int L_max = fock::default_L_max)
      : n_baths_(m.baths.size()), real_(fock::realize(m, L_max)), channels_(extract_channels(m, L_max)) {
    d_ = real_.dim();
    MatC heis = fock::commutator_part(real_);
    for (const auto& p1 : real_.phi_one) heis -= 0.5 * (linalg::spre(p1) + linalg::spost(p1));
    gen_ = heis.adjoint();
    trace_row_ = VecC::Zero(d_ * d_);
    for (Eigen::Index k = 0; k < d_; ++k) trace_row_(k * d_ + k) = 1.0;
    for (const auto& c : channels_) {
      schr_.push_back(c.phi.adjoint());
      rows_.push_back((trace_row_.transpose() * schr_.back()).transpose());
    }
    Eigen::ComplexEigenSolver<MatC> es(gen_);
    diagonal_ = es.info() == Eigen::Success;
    if (diagonal_) {
      mu_ = es.eigenvalues();
      V_ = es.eigenvectors();
      Eigen::PartialPivLU<MatC> lu(V_);
      Vinv_ = lu.inverse();
      const double err = linalg::max_abs(MatC(V_ * mu_.asDiagonal() * Vinv_ - gen_));
      diagonal_ = Vinv_.allFinite() && err < 1e-9 * std::max(1.0, linalg::max_abs(gen_));
      if (diagonal_) weights_ = (trace_row_.transpose() * V_).transpose();
    }
  }

  const std::vector<JumpChannel>& channels() const { return channels_; }
  const fock::Realization& realization() const { return real_; }
  std::size_t n_baths() const { return n_baths_; }

  // Unnormalised state after time t without jumps.
  VecC propagate(const VecC& rho, double t) const {
    if (diagonal_) {
      VecC c = Vinv_ * rho;
      for (Eigen::Index k = 0; k < c.size(); ++k) c(k) *= std::exp(mu_(k) * t);
      return V_ * c;
    }
    return linalg::expm(MatC(t * gen_)) * rho;
  }

  TrajectoryRecord simulate(const MatC& rho0, double T, std::uint64_t seed, bool keep_state = false) const {
    if (!(T > 0)) throw MalformedInput("simulate: T must be positive");
    TrajectoryRecord rec;
    rec.seed = seed;
    rec.T = T;
    rec.N.assign(n_baths_, 0.0);
    rng::Philox gen(seed);
    VecC rho = linalg::vec(rho0);
    rho /= trace(rho);
    double now = 0.0;
    for (;;) {
      const double remaining = T - now;
      const double u = gen.uniform();
      Survival s(*this, rho);
      const double s_end = s(remaining);
      if (s_end >= u) {
        rec.final_weight = s_end;
        if (keep_state) {
          VecC h = propagate(rho, remaining);
          h /= trace(h);
          rec.final_state = linalg::hermitian_part(linalg::unvec(h));
        }
        break;
      }
      double lo = 0.0, hi = remaining;
      while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (s(mid) > u)
          lo = mid;
        else
          hi = mid;
      }
      const double dt = hi;
      VecC h = propagate(rho, dt);
      double total = 0.0;
      std::vector<double> w(channels_.size());
      for (std::size_t c = 0; c < channels_.size(); ++c) {
        w[c] = std::max(0.0, rows_[c].dot(h).real());
        total += w[c];
      }
      if (!(total > 0.0)) {
        // The sampled time sits where no channel carries weight; restart the
        // segment from the renormalised state.
        ++rec.warnings;
        rho = h / trace(h);
        now += dt;
        continue;
      }
      double x = gen.uniform() * total;
      std::size_t pick = 0;
      for (; pick + 1 < channels_.size(); ++pick) {
        if (x < w[pick]) break;
        x -= w[pick];
      }
      while (w[pick] == 0.0 && pick > 0) --pick;
      now += dt;
      const auto& ch = channels_[pick];
      rec.jumps.push_back({now, ch.bath, ch.delta});
      rec.N[ch.bath] += ch.delta;
      rho = schr_[pick] * h;
      const cplx tr = trace(rho);
      if (std::abs(tr) < 1e-300) {
        ++rec.warnings;
        rho = linalg::vec(rho0);
      }
      rho /= trace(rho);
    }
    return rec;
  }

 private:
  cplx trace(const VecC& v) const { return trace_row_.dot(v); }

  // s(t) = tr exp(tℒ_G*)ρ, evaluated from the spectral expansion.
  struct Survival {
    Survival(const Unraveler& u, const VecC& rho) : self(u), rho(rho) {
      if (u.diagonal_) coeff = u.weights_.cwiseProduct(u.Vinv_ * rho);
    }
    double operator()(double t) const {
      if (!self.diagonal_) return self.trace(self.propagate(rho, t)).real();
      cplx s = 0.0;
      for (Eigen::Index k = 0; k < coeff.size(); ++k) s += coeff(k) * std::exp(self.mu_(k) * t);
      return s.real();
    }
    const Unraveler& self;
    const VecC& rho;
    VecC coeff;
  };

  std::size_t n_baths_;
  fock::Realization real_;
  std::vector<JumpChannel> channels_;
  Eigen::Index d_ = 0;
  MatC gen_;
  VecC trace_row_;
  std::vector<MatC> schr_;
  std::vector<VecC> rows_;
  bool diagonal_ = false;
  VecC mu_;
  MatC V_, Vinv_;
  VecC weights_;
};

// Trajectory j uses seed base_seed + j; output is ordered by j.
inline std::vector<TrajectoryRecord> simulate_batch(const Unraveler& u, const MatC& rho0, double T,
                                                    std::uint64_t base_seed, std::size_t n, unsigned jobs = 1,
                                                    bool keep_state = false) {
  std::vector<TrajectoryRecord> out(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < n; j = next++) out[j] = u.simulate(rho0, T, base_seed + j, keep_state);
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, n))));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return out;
}

inline TrajectoryRecord simulate(const ThermalModel& m, const MatC& rho0, double T, std::uint64_t seed) {
  return Unraveler(m).simulate(rho0, T, seed);
}

struct FluxEstimate {
  std::vector<double> mean;    // mean N_T^i / T
  std::vector<double> stderr_;  // standard error of the mean
};

inline FluxEstimate mean_flux(const std::vector<TrajectoryRecord>& recs) {
  FluxEstimate f;
  if (recs.empty()) return f;
  const std::size_t nb = recs.front().N.size();
  const double n = static_cast<double>(recs.size());
  f.mean.assign(nb, 0.0);
  f.stderr_.assign(nb, 0.0);
  for (std::size_t i = 0; i < nb; ++i) {
    double s = 0.0, s2 = 0.0;
    for (const auto& r : recs) {
      const double x = r.N[i] / r.T;
      s += x;
      s2 += x * x;
    }
    f.mean[i] = s / n;
    const double var = recs.size() > 1 ? (s2 - s * s / n) / (n - 1.0) : 0.0;
    f.stderr_[i] = std::sqrt(std::max(var, 0.0) / n);
  }
  return f;
}

struct CgfEstimate {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double ess = 0.0;  // effective sample size of the weights e^{⟨α,N⟩}
  bool reliable = true;
};

// T⁻¹ log mean exp⟨α, N_T⟩ with a percentile bootstrap interval.
inline CgfEstimate empirical_cgf(const std::vector<TrajectoryRecord>& recs, const std::vector<double>& alpha,
                                 std::size_t bootstrap = 1000, double level = 0.99, std::uint64_t seed = 0x5eed) {
  if (recs.size() < 100) throw MalformedInput("empirical_cgf needs at least 100 trajectories");
  const double T = recs.front().T;
  const std::size_t n = recs.size();
  std::vector<double> x(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (recs[j].N.size() != alpha.size()) throw MalformedInput("empirical_cgf: alpha length mismatch");
    if (recs[j].T != T) throw MalformedInput("empirical_cgf: records have different horizons");
    double s = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) s += alpha[i] * recs[j].N[i];
    x[j] = s;
  }
  auto logmeanexp = [&](auto&& idx) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, x[idx(j)]);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::exp(x[idx(j)] - mx);
    return mx + std::log(s / static_cast<double>(n));
  };
  CgfEstimate c;
  c.estimate = logmeanexp([](std::size_t j) { return j; }) / T;
  {
    double mx = *std::max_element(x.begin(), x.end());
    double s = 0.0, s2 = 0.0;
    for (double v : x) {
      const double w = std::exp(v - mx);
      s += w;
      s2 += w * w;
    }
    c.ess = s * s / s2;
  }
  c.reliable = c.ess >= std::max(50.0, 0.01 * static_cast<double>(n));
  rng::Philox gen(seed);
  std::vector<double> boot(bootstrap);
  std::vector<std::size_t> pick(n);
  for (std::size_t b = 0; b < bootstrap; ++b) {
    for (auto& p : pick) p = std::min(n - 1, static_cast<std::size_t>(gen.uniform() * static_cast<double>(n)));
    boot[b] = logmeanexp([&](std::size_t j) { return pick[j]; }) / T;
  }
  std::sort(boot.begin(), boot.end());
  const double tail = 0.5 * (1.0 - level);
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(bootstrap - 1);
    const auto k = static_cast<std::size_t>(pos);
    const double f = pos - static_cast<double>(k);
    return k + 1 < bootstrap ? boot[k] * (1 - f) + boot[k + 1] * f : boot[k];
  };
  c.lo = q(tail);
  c.hi = q(1.0 - tail);
  return c;
}

// Kolmogorov–Smirnov p-value of samples against Exp(rate).
inline double ks_exponential_pvalue(std::vector<double> x, double rate) {
  if (x.empty()) return 1.0;
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double D = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double F = 1.0 - std::exp(-rate * x[k]);
    D = std::max({D, F - static_cast<double>(k) / n, static_cast<double>(k + 1) / n - F});
  }
  const double lam = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * D;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
  return std::clamp(p, 0.0, 1.0);
}

}  // namespace fermiflux::unravel
