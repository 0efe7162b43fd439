#pragma once

#include <random>

#include "fermiflux/dynamics.hpp"
#include "fermiflux/model.hpp"
#include "fermiflux/rng.hpp"

// Random thermal quasi-free models. Modes are grouped into energy levels; the
// system generator only mixes modes within a level and every single-mode bath
// at frequency ω couples to the modes of the level with energy ω. A random
// real orthogonal change of the Majorana basis then hides the structure.
namespace fermiflux::random_models {

struct Options {
  int L_min = 1;
  int L_max = 3;
  int baths_min = 2;
  int baths_max = 2;
  double beta_min = 0.0;
  double beta_max = 3.0;
  bool deficient = false;  // add a level that no bath couples to
  bool rotate = true;
};

inline double uniform(rng::Philox& g, double a, double b) { return a + (b - a) * g.uniform(); }

inline int uniform_int(rng::Philox& g, int a, int b) {
  return a + std::min(b - a, static_cast<int>(g.uniform() * (b - a + 1)));
}

inline cplx gaussian_c(rng::Philox& g) {
  std::normal_distribution<double> n;
  return {n(g), n(g)};
}

// Haar-distributed real orthogonal matrix from a QR factorisation.
inline MatR random_orthogonal(rng::Philox& g, Eigen::Index n) {
  std::normal_distribution<double> nd;
  MatR a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = nd(g);
  Eigen::HouseholderQR<MatR> qr(a);
  MatR q = qr.householderQ();
  const MatR r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < n; ++k)
    if (r(k, k) < 0) q.col(k) *= -1.0;
  return q;
}

namespace detail {

inline ThermalModel draw(rng::Philox& g, const Options& o) {
  const int n_baths = uniform_int(g, o.baths_min, o.baths_max);
  const int extra = o.deficient ? 1 : 0;
  const int L = std::max(uniform_int(g, o.L_min, o.L_max), 1 + extra);
  const int n_levels = uniform_int(g, 1, std::min(L - extra, n_baths));
  const int total_levels = n_levels + extra;

  // Every level gets at least one mode; remaining modes are spread at random.
  std::vector<int> level_of_mode(static_cast<std::size_t>(L));
  for (int k = 0; k < L; ++k) level_of_mode[static_cast<std::size_t>(k)] = k < total_levels ? k : uniform_int(g, 0, total_levels - 1);
  std::vector<double> energy(static_cast<std::size_t>(total_levels));
  for (int l = 0; l < total_levels; ++l) energy[static_cast<std::size_t>(l)] = 0.5 * (l + 1) + uniform(g, 0.0, 0.4);

  MatC Tc = MatC::Zero(2 * L, 2 * L), kc = MatC::Zero(2 * L, 2 * L);
  for (int l = 0; l < total_levels; ++l) {
    std::vector<int> modes;
    for (int k = 0; k < L; ++k)
      if (level_of_mode[static_cast<std::size_t>(k)] == l) modes.push_back(k);
    const auto n = static_cast<Eigen::Index>(modes.size());
    MatC h(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) h(i, j) = gaussian_c(g);
    h = linalg::hermitian_part(h);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        Tc(modes[i], modes[j]) = h(i, j);
        Tc(L + modes[i], L + modes[j]) = -std::conj(h(i, j));
      }
    for (int k : modes) {
      kc(k, k) = energy[static_cast<std::size_t>(l)];
      kc(L + k, L + k) = -energy[static_cast<std::size_t>(l)];
    }
  }

  // Baths: the first n_levels baths cover the coupled levels, the rest land
  // on random coupled levels.
  ThermalModel m;
  m.L_S = L;
  const MatR O = o.rotate ? random_orthogonal(g, 2 * L) : MatR::Identity(2 * L, 2 * L);
  const MatC Oc = O.cast<cplx>();
  m.T_S = Oc * phasespace::to_majorana(Tc) * Oc.transpose();
  m.kappa_S = Oc * phasespace::to_majorana(kc) * Oc.transpose();
  for (int b = 0; b < n_baths; ++b) {
    const int l = b < n_levels ? b : uniform_int(g, 0, n_levels - 1);
    const double w = energy[static_cast<std::size_t>(l)];
    VecC v = VecC::Zero(L);
    for (int k = 0; k < L; ++k)
      if (level_of_mode[static_cast<std::size_t>(k)] == l) v(k) = gaussian_c(g) * 0.7;
    MatC th = MatC::Zero(2 * L, 2);
    th.col(0).head(L) = v;
    th.col(1).tail(L) = -v.conjugate();
    MatC kb = MatC::Zero(2, 2);
    kb(0, 0) = w;
    kb(1, 1) = -w;
    m.baths.push_back({uniform(g, o.beta_min, o.beta_max), phasespace::to_majorana(kb),
                       MatC(Oc * phasespace::coupling_to_majorana(th))});
  }
  // Remove rounding so that the purely imaginary Majorana form is exact.
  auto imag_only = [](MatC& x) { x = MatC(I * x.imag().cast<cplx>()); };
  imag_only(m.T_S);
  imag_only(m.kappa_S);
  for (auto& b : m.baths) {
    imag_only(b.kappa);
    imag_only(b.theta);
  }
  return m;
}

}  // namespace detail

// Draws a model with the requested Kalman property (full rank unless
// `deficient`), redrawing on the rare non-generic coupling.
inline ThermalModel random_model(std::uint64_t seed, const Options& o = {}) {
  rng::Philox g(seed, 0x7e57);
  for (int attempt = 0; attempt < 100; ++attempt) {
    ThermalModel m = detail::draw(g, o);
    const bool full = dynamics::kalman(m).is_full;
    if (full == o.deficient) continue;
    return m;
  }
  throw NonConvergence("random_model: no model with the requested Kalman property after 100 draws");
}

// Random counting parameters in [-a, a]^n.
inline std::vector<double> random_alpha(rng::Philox& g, std::size_t n, double a) {
  std::vector<double> out(n);
  for (auto& x : out) x = uniform(g, -a, a);
  return out;
}

}  // namespace fermiflux::random_models
