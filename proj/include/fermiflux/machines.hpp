#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fermiflux/fock.hpp"
#include "fermiflux/linalg.hpp"
#include "fermiflux/types.hpp"

// Thermal machines on a generic finite-dimensional Hilbert space: depolarizing
// channels, the three-qubit fridge and synthesis of prescribed flux vectors.
// Generators are Heisenberg-picture superoperators on column-stacked operators.
namespace fermiflux::machines {

// Φ(A) = Σ_k L_k* A L_k, attached to one bath.
struct Dissipator {
  std::size_t bath = 0;
  std::vector<MatC> kraus;
};

struct GenericLindbladModel {
  Eigen::Index dim = 0;
  MatC H;
  MatC K;
  std::vector<double> beta;  // one entry per bath; baths without dissipators carry no flux
  std::vector<Dissipator> dissipators;
};

inline MatC cp_superop(const Dissipator& d, Eigen::Index dim) {
  MatC s = MatC::Zero(dim * dim, dim * dim);
  for (const auto& L : d.kraus) s += linalg::kron(L.transpose(), L.adjoint());
  return s;
}

inline MatC cp_one(const Dissipator& d, Eigen::Index dim) {
  MatC s = MatC::Zero(dim, dim);
  for (const auto& L : d.kraus) s += L.adjoint() * L;
  return s;
}

// ℒ_i restricted to bath i: Φ_i - ½{Φ_i(1), ·}
inline MatC bath_generator(const GenericLindbladModel& m, std::size_t bath) {
  const Eigen::Index n = m.dim * m.dim;
  MatC out = MatC::Zero(n, n);
  for (const auto& d : m.dissipators) {
    if (d.bath != bath) continue;
    const MatC one = cp_one(d, m.dim);
    out += cp_superop(d, m.dim) - 0.5 * (linalg::spre(one) + linalg::spost(one));
  }
  return out;
}

inline MatC lindbladian(const GenericLindbladModel& m) {
  MatC out = I * (linalg::spre(m.H) - linalg::spost(m.H));
  for (std::size_t i = 0; i < m.beta.size(); ++i) out += bath_generator(m, i);
  return out;
}

inline bool is_state(const MatC& s, double tol = 1e-10) {
  if (s.rows() != s.cols() || s.rows() == 0) return false;
  if (linalg::max_abs(MatC(s - s.adjoint())) > tol) return false;
  if (std::abs(s.trace() - 1.0) > tol) return false;
  return linalg::hermitian_eigenvalues(s).minCoeff() >= -tol;
}

// Kraus operators √(λ p_j)|v_j⟩⟨k| of ρ ↦ λ σ tr ρ, where σ = Σ p_j |v_j⟩⟨v_j|.
// Together with -½{Φ(1), ·} = -λ this gives ℒ*(ρ) = λ(σ tr ρ - ρ).
inline std::vector<MatC> depolarizing_kraus(const MatC& sigma, double lambda) {
  if (!is_state(sigma)) throw MalformedInput("depolarizing: sigma is not a density matrix");
  if (!(lambda > 0) || !std::isfinite(lambda)) throw MalformedInput("depolarizing: rate must be positive");
  Eigen::SelfAdjointEigenSolver<MatC> es(linalg::hermitian_part(sigma));
  const Eigen::Index d = sigma.rows();
  std::vector<MatC> out;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double p = std::max(0.0, es.eigenvalues()(j));
    if (p <= 0.0) continue;
    for (Eigen::Index k = 0; k < d; ++k) {
      MatC L = MatC::Zero(d, d);
      L.col(k) = std::sqrt(lambda * p) * es.eigenvectors().col(j);
      out.push_back(L);
    }
  }
  return out;
}

inline GenericLindbladModel depolarizing(const MatC& sigma, double lambda, const MatC& K, double beta) {
  GenericLindbladModel m;
  m.dim = sigma.rows();
  m.H = MatC::Zero(m.dim, m.dim);
  m.K = K;
  m.beta = {beta};
  m.dissipators.push_back({0, depolarizing_kraus(sigma, lambda)});
  return m;
}

// Operator on factor `site` of a register of qubits (factor 0 most significant).
inline MatC embed(const MatC& local, int site, int sites) {
  MatC out = MatC::Identity(1, 1);
  for (int k = 0; k < sites; ++k) out = linalg::kron(out, k == site ? local : MatC::Identity(local.rows(), local.rows()));
  return out;
}

inline double commutator_residual(const GenericLindbladModel& m) {
  return linalg::max_abs(MatC(m.H * m.K - m.K * m.H));
}

struct DetailedBalanceReport {
  std::vector<double> residual;  // per dissipator
  double commutator = 0.0;
  bool ok(double tol = 1e-8) const {
    return commutator <= 1e-10 && std::all_of(residual.begin(), residual.end(), [tol](double r) { return r <= tol; });
  }
};

inline DetailedBalanceReport check_model(const GenericLindbladModel& m) {
  DetailedBalanceReport r;
  r.commutator = commutator_residual(m);
  for (const auto& d : m.dissipators) {
    if (d.bath >= m.beta.size()) throw MalformedInput("dissipator refers to a missing bath");
    const MatC sigma = fock::gibbs_state(m.K, m.beta[d.bath]);
    r.residual.push_back(fock::check_detailed_balance(cp_superop(d, m.dim), sigma));
  }
  return r;
}

inline void require_valid(const GenericLindbladModel& m) {
  const auto r = check_model(m);
  if (!r.ok()) {
    std::vector<std::string> v;
    if (r.commutator > 1e-10) v.push_back("[H_S, K_S] = " + std::to_string(r.commutator));
    for (std::size_t k = 0; k < r.residual.size(); ++k)
      if (r.residual[k] > 1e-8) v.push_back("detailed balance residual of dissipator " + std::to_string(k) + " = " +
                                            std::to_string(r.residual[k]));
    throw InvalidModel("machine model violates thermal constraints", v);
  }
}

// Number of eigenvalues of the generator within tol of zero; 1 for a
// primitive semigroup.
inline int stationary_multiplicity(const GenericLindbladModel& m, double tol = 1e-9) {
  Eigen::ComplexEigenSolver<MatC> es(lindbladian(m), false);
  int n = 0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
    if (std::abs(es.eigenvalues()(k)) < tol) ++n;
  return n;
}

inline MatC stationary_state(const GenericLindbladModel& m) {
  return linalg::trace_one_null_state(lindbladian(m).adjoint());
}

// J_i = -tr(ρ ℒ_i(K)), energy entering bath i.
inline std::vector<double> fluxes(const GenericLindbladModel& m, const MatC& rho) {
  std::vector<double> J;
  const VecC k = linalg::vec(m.K);
  for (std::size_t i = 0; i < m.beta.size(); ++i)
    J.push_back(-(rho * linalg::unvec(bath_generator(m, i) * k)).trace().real());
  return J;
}

inline std::vector<double> fluxes(const GenericLindbladModel& m) { return fluxes(m, stationary_state(m)); }

// Thermal state of a qubit with energy operator E|1⟩⟨1|.
inline MatC qubit_gibbs(double E, double beta) {
  MatC s = MatC::Zero(2, 2);
  const double p1 = phasespace::fermi(beta * E);
  s(0, 0) = p1;
  s(1, 1) = 1.0 - p1;
  return s;
}

inline MatC qubit_number() {
  MatC n = MatC::Zero(2, 2);
  n(1, 1) = 1.0;
  return n;
}

struct TwoChannel {
  GenericLindbladModel model;
  MatC rho_closed;       // (λ₁σ₁ + λ₂σ₂)/(λ₁ + λ₂)
  double J1_closed = 0;  // λ₁λ₂/(λ₁+λ₂) tr(K(σ₂ - σ₁))
  MatC rho_numeric;
  std::vector<double> J_numeric;
};

// Two depolarizing channels on the same system driving towards σ₁ and σ₂.
inline TwoChannel two_channel_flux(const MatC& s1, const MatC& s2, double l1, double l2, const MatC& K,
                                   double beta1 = 0.0, double beta2 = 0.0) {
  TwoChannel t;
  auto& m = t.model;
  m.dim = s1.rows();
  if (s2.rows() != m.dim || K.rows() != m.dim) throw MalformedInput("two_channel_flux: dimension mismatch");
  m.H = MatC::Zero(m.dim, m.dim);
  m.K = K;
  m.beta = {beta1, beta2};
  m.dissipators = {{0, depolarizing_kraus(s1, l1)}, {1, depolarizing_kraus(s2, l2)}};
  t.rho_closed = (l1 * s1 + l2 * s2) / (l1 + l2);
  t.J1_closed = l1 * l2 / (l1 + l2) * (K * (s2 - s1)).trace().real();
  t.rho_numeric = stationary_state(m);
  t.J_numeric = fluxes(m, t.rho_numeric);
  return t;
}

struct FridgeParams {
  double E1 = 1.0;
  double E3 = 1.0;
  std::array<double, 3> beta{0.5, 1.0, 2.0};
  std::array<double, 3> lambda{1.0, 1.0, 1.0};
  double g = 1.0;
  double h = 1.0;
  double E2() const { return E1 + E3; }
};

// Three qubits with K = E₁n₁ + E₂n₂ + E₃n₃, E₂ = E₁ + E₃,
// H = hK + g(|010⟩⟨101| + |101⟩⟨010|) and per-qubit depolarizing baths
// driving qubit j towards its thermal state at β_j.
inline GenericLindbladModel fridge(const FridgeParams& p) {
  const std::array<double, 3> E{p.E1, p.E2(), p.E3};
  for (double e : E)
    if (e == 0.0 || !std::isfinite(e)) throw MalformedInput("fridge: energies must be finite and nonzero");
  if (p.g == 0.0 || p.h == 0.0) throw MalformedInput("fridge: g and h must be nonzero");
  GenericLindbladModel m;
  m.dim = 8;
  m.K = MatC::Zero(8, 8);
  for (int j = 0; j < 3; ++j) m.K += E[j] * embed(qubit_number(), j, 3);
  MatC swap = MatC::Zero(8, 8);
  swap(0b010, 0b101) = 1.0;
  swap(0b101, 0b010) = 1.0;
  m.H = p.h * m.K + p.g * swap;
  m.beta = {p.beta[0], p.beta[1], p.beta[2]};
  for (int j = 0; j < 3; ++j) {
    Dissipator d{static_cast<std::size_t>(j), {}};
    for (const auto& L : depolarizing_kraus(qubit_gibbs(E[j], p.beta[j]), p.lambda[j])) d.kraus.push_back(embed(L, j, 3));
    m.dissipators.push_back(std::move(d));
  }
  return m;
}

struct FridgeFluxes {
  std::vector<double> J;
  double alpha = 0.0;                  // J ≈ α(E₁, -E₂, E₃)
  double proportionality_residual = 0.0;
  double sum_beta_E = 0.0;             // β₁E₁ + β₂E₂ + β₃E₃
  double signed_beta_E = 0.0;          // β₁E₁ - β₂E₂ + β₃E₃ = (β₁-β₂)E₁ - (β₂-β₃)E₃
};

inline FridgeFluxes fridge_fluxes(const FridgeParams& p) {
  FridgeFluxes f;
  f.J = fluxes(fridge(p));
  const Eigen::Vector3d e(p.E1, -p.E2(), p.E3);
  const Eigen::Vector3d j(f.J[0], f.J[1], f.J[2]);
  f.alpha = e.dot(j) / e.squaredNorm();
  f.proportionality_residual = (j - f.alpha * e).cwiseAbs().maxCoeff();
  f.sum_beta_E = p.beta[0] * p.E1 + p.beta[1] * p.E2() + p.beta[2] * p.E3;
  f.signed_beta_E = p.beta[0] * p.E1 - p.beta[1] * p.E2() + p.beta[2] * p.E3;
  return f;
}

// Tensor composition of two models sharing the same bath list.
inline GenericLindbladModel compose_tensor(const GenericLindbladModel& a, const GenericLindbladModel& b) {
  if (a.beta != b.beta) throw MalformedInput("compose_tensor: bath temperatures differ");
  GenericLindbladModel m;
  m.dim = a.dim * b.dim;
  const MatC ia = MatC::Identity(a.dim, a.dim), ib = MatC::Identity(b.dim, b.dim);
  m.H = linalg::kron(a.H, ib) + linalg::kron(ia, b.H);
  m.K = linalg::kron(a.K, ib) + linalg::kron(ia, b.K);
  m.beta = a.beta;
  for (const auto& d : a.dissipators) {
    Dissipator e{d.bath, {}};
    for (const auto& L : d.kraus) e.kraus.push_back(linalg::kron(L, ib));
    m.dissipators.push_back(std::move(e));
  }
  for (const auto& d : b.dissipators) {
    Dissipator e{d.bath, {}};
    for (const auto& L : d.kraus) e.kraus.push_back(linalg::kron(ia, L));
    m.dissipators.push_back(std::move(e));
  }
  return m;
}

// Uniform rescaling of the generator by μ > 0; stationary state unchanged,
// fluxes multiplied by μ.
inline GenericLindbladModel scaled(GenericLindbladModel m, double mu) {
  m.H *= mu;
  for (auto& d : m.dissipators)
    for (auto& L : d.kraus) L *= std::sqrt(mu);
  return m;
}

// A synthesized machine: independent components whose fluxes add up.
struct Component {
  std::string kind;  // "pair" or "fridge"
  std::vector<std::size_t> baths;
  GenericLindbladModel model;
  std::vector<double> target;  // flux vector this component is meant to realise
};

struct Synthesis {
  std::vector<double> beta;
  std::vector<double> target;
  std::vector<Component> components;
  std::vector<double> achieved;
  double max_error = 0.0;
};

inline std::vector<double> total_fluxes(const std::vector<Component>& cs, std::size_t n) {
  std::vector<double> J(n, 0.0);
  for (const auto& c : cs) {
    const auto j = fluxes(c.model);
    for (std::size_t i = 0; i < n; ++i) J[i] += j[i];
  }
  return J;
}

namespace detail {

// Two depolarizing channels on a qubit with K = |1⟩⟨1|, equal rates λ:
// J_a = λ/2 (p_b - p_a) with p = (1 + e^β)⁻¹.
inline Component pair(const std::vector<double>& beta, std::size_t a, std::size_t b, double Ja) {
  const double pa = phasespace::fermi(-beta[a]), pb = phasespace::fermi(-beta[b]);
  if (std::abs(pb - pa) < 1e-14) throw Infeasible("synthesize: equal temperatures cannot carry a flux");
  const double lambda = 2.0 * Ja / (pb - pa);
  if (!(lambda > 0)) throw Infeasible("synthesize: pair flux runs from cold to hot");
  Component c;
  c.kind = "pair";
  c.baths = {a, b};
  auto& m = c.model;
  m.dim = 2;
  m.H = MatC::Zero(2, 2);
  m.K = qubit_number();
  m.beta = beta;
  m.dissipators = {{a, depolarizing_kraus(qubit_gibbs(1.0, beta[a]), lambda)},
                   {b, depolarizing_kraus(qubit_gibbs(1.0, beta[b]), lambda)}};
  c.target.assign(beta.size(), 0.0);
  c.target[a] = Ja;
  c.target[b] = -Ja;
  return c;
}

// Fridge on baths (a, b, c) realising J̃ = (j1, j2, j3) ∝ (E₁, -E₂, E₃).
inline Component fridge_component(const std::vector<double>& beta, std::array<std::size_t, 3> ix,
                                  const std::array<double, 3>& jt) {
  FridgeParams p;
  p.E1 = jt[0];
  p.E3 = jt[2];
  p.beta = {beta[ix[0]], beta[ix[1]], beta[ix[2]]};
  auto embed_baths = [&](const GenericLindbladModel& local) {
    GenericLindbladModel m = local;
    m.beta = beta;
    for (auto& d : m.dissipators) d.bath = ix[d.bath];
    return m;
  };
  const auto f = fridge_fluxes(p);
  if (!(f.alpha > 0)) throw NonConvergence("synthesize: fridge flux has the wrong orientation");
  // Fluxes are linear in μ; iterate the secant update on the largest component
  // to absorb rounding in the stationary solve.
  std::size_t lead = 0;
  for (std::size_t k = 1; k < 3; ++k)
    if (std::abs(jt[k]) > std::abs(jt[lead])) lead = k;
  double mu = 1.0 / f.alpha;
  GenericLindbladModel m = scaled(fridge(p), mu);
  for (int it = 0; it < 8; ++it) {
    const auto J = fluxes(m);
    const double err = J[lead] - jt[lead];
    if (std::abs(err) <= 1e-13 * std::max(1.0, std::abs(jt[lead]))) break;
    const double next = mu * jt[lead] / J[lead];
    m = scaled(fridge(p), next);
    mu = next;
  }
  Component c;
  c.kind = "fridge";
  c.baths = {ix[0], ix[1], ix[2]};
  c.model = embed_baths(m);
  c.target.assign(beta.size(), 0.0);
  for (int k = 0; k < 3; ++k) c.target[ix[k]] = jt[k];
  return c;
}

// Realise J̃ on three baths, falling back to a pair when one entry vanishes.
inline void realise_triple(const std::vector<double>& beta, std::array<std::size_t, 3> ix,
                           const std::array<double, 3>& jt, double scale, std::vector<Component>& out) {
  const double zero = 1e-12 * scale;
  std::vector<int> live;
  for (int k = 0; k < 3; ++k)
    if (std::abs(jt[k]) > zero) live.push_back(k);
  if (live.empty()) return;
  if (live.size() == 3) {
    out.push_back(fridge_component(beta, ix, jt));
    return;
  }
  if (live.size() != 2) throw Infeasible("synthesize: unbalanced flux component");
  out.push_back(pair(beta, ix[live[0]], ix[live[1]], jt[live[0]]));
}

inline void synthesize_sorted(const std::vector<double>& beta, std::vector<std::size_t> idx, std::vector<double> J,
                              double scale, std::vector<Component>& out) {
  const double zero = 1e-12 * scale;
  if (idx.size() == 2) {
    if (std::abs(J[0]) > zero) out.push_back(pair(beta, idx[0], idx[1], J[0]));
    return;
  }
  const double b1 = beta[idx[0]], b2 = beta[idx[1]], b3 = beta[idx[2]];
  double eps = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) eps += beta[idx[k]] * J[k];
  const std::array<double, 3> jt{J[0], (b1 - b3) / (b3 - b2) * J[0] - eps / (2.0 * (b3 - b2)),
                                 (b2 - b1) / (b3 - b2) * J[0] + eps / (2.0 * (b3 - b2))};
  realise_triple(beta, {idx[0], idx[1], idx[2]}, jt, scale, out);
  J[1] -= jt[1];
  J[2] -= jt[2];
  idx.erase(idx.begin());
  J.erase(J.begin());
  synthesize_sorted(beta, idx, J, scale, out);
}

}  // namespace detail

// Build a machine whose stationary fluxes equal J. Requires ΣJ = 0,
// Σβ_iJ_i > 0 and pairwise distinct temperatures.
inline Synthesis synthesize(const std::vector<double>& J, const std::vector<double>& beta, double tol = 1e-9) {
  if (J.size() != beta.size() || J.size() < 2) throw MalformedInput("synthesize: need matching J and beta, n >= 2");
  for (std::size_t i = 0; i < J.size(); ++i)
    if (!std::isfinite(J[i]) || !std::isfinite(beta[i])) throw MalformedInput("synthesize: non-finite input");
  double scale = 0.0, sum = 0.0, ent = 0.0;
  for (std::size_t i = 0; i < J.size(); ++i) {
    scale = std::max(scale, std::abs(J[i]));
    sum += J[i];
    ent += beta[i] * J[i];
  }
  if (std::abs(sum) > tol * std::max(1.0, scale)) throw Infeasible("synthesize: fluxes do not sum to zero");
  if (!(ent > tol * std::max(1.0, scale))) throw Infeasible("synthesize: entropy production sum beta_i J_i must be > 0");
  std::vector<std::size_t> idx(J.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return beta[a] < beta[b]; });
  for (std::size_t k = 1; k < idx.size(); ++k)
    if (!(beta[idx[k]] > beta[idx[k - 1]])) throw Infeasible("synthesize: temperatures must be pairwise distinct");
  std::vector<double> Js;
  for (auto i : idx) Js.push_back(J[i]);
  Synthesis s;
  s.beta = beta;
  s.target = J;
  detail::synthesize_sorted(beta, idx, Js, scale, s.components);
  s.achieved = total_fluxes(s.components, J.size());
  for (std::size_t i = 0; i < J.size(); ++i) s.max_error = std::max(s.max_error, std::abs(s.achieved[i] - J[i]));
  return s;
}

}  // namespace fermiflux::machines
