#pragma once

#include "fermiflux/dynamics.hpp"
#include "fermiflux/fock.hpp"
#include "fermiflux/ldp.hpp"
#include "fermiflux/random_models.hpp"
#include "fermiflux/thermal.hpp"
#include "json.hpp"

// Equivalence suite between the phase-space formalism and brute-force Fock
// space computations for small models.
namespace fermiflux::oracle {

struct Check {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
};

struct Report {
  std::vector<Check> checks;

  bool ok() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }

  const Check* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["ok"] = ok();
    j["checks"] = nlohmann::json::array();
    for (const auto& c : checks) {
      nlohmann::json e{{"name", c.name}, {"residual", c.residual}, {"tolerance", c.tolerance}, {"pass", c.pass}};
      if (!c.note.empty()) e["note"] = c.note;
      j["checks"].push_back(e);
    }
    return j;
  }
};

struct Options {
  std::size_t n_alpha = 10;
  double alpha_range = 1.0;
  std::uint64_t seed = 1;
  int L_max = 3;  // largest system accepted; the joint system+bath space uses the Fock cap
  double tau = 1e-6;  // repeated-interaction step
};

namespace detail {

inline void add(Report& r, std::string name, double residual, double tol, std::string note = {}) {
  const bool pass = std::isfinite(residual) && residual <= tol;
  r.checks.push_back({std::move(name), residual, tol, pass, std::move(note)});
}

inline void fail(Report& r, std::string name, double tol, std::string note) {
  r.checks.push_back({std::move(name), std::numeric_limits<double>::quiet_NaN(), tol, false, std::move(note)});
}

}  // namespace detail

inline Report run(const ThermalModel& m, const Options& o = {}) {
  using detail::add;
  Report rep;
  if (m.L_S > o.L_max)
    throw ResourceError("oracle: L_S = " + std::to_string(m.L_S) + " exceeds the Fock cap " + std::to_string(o.L_max));

  const auto val = thermal::validate(m);
  double worst = 0.0;
  std::string bad;
  for (const auto& it : val.items) {
    if (!it.ok && bad.empty()) bad = it.name;
    worst = std::max(worst, it.ok ? it.residual : std::max(it.residual, 1.0));
  }
  add(rep, "thermal_validation", worst, 1e-10, bad);
  for (const auto& it : val.items)
    if (!it.ok && it.name.find("dimensions") != std::string::npos) return rep;

  const auto r = fock::realize(m);
  const auto& g = r.gammas;

  {
    double car = 0.0;
    const Eigen::Index d = g.front().rows();
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < g.size(); ++j) {
        MatC ac = g[i] * g[j] + g[j] * g[i];
        if (i == j) ac -= 2.0 * MatC::Identity(d, d);
        car = std::max(car, linalg::max_abs(ac));
      }
    add(rep, "car", car, 1e-12);
  }

  for (std::size_t i = 0; i < m.baths.size(); ++i) {
    const MatC sigma = fock::gibbs_state(r.K, m.baths[i].beta);
    const double res = fock::check_detailed_balance(r.phi[i], sigma) / std::max(1.0, linalg::max_abs(r.phi[i]));
    add(rep, "detailed_balance[" + std::to_string(i) + "]", res, 1e-8);
  }

  {
    const auto step = fock::discrete_step(m, o.tau);
    const MatC Lh = fock::lindbladian(r);
    const Eigen::Index n = Lh.rows();
    const MatC fd = (step.superop - MatC::Identity(n, n)) / o.tau;
    const double res = linalg::max_abs(MatC(fd - Lh)) / std::max(1.0, linalg::max_abs(Lh));
    add(rep, "repeated_interaction_limit", res, 1e-4, "tau = " + std::to_string(o.tau));
    add(rep, "energy_conservation", step.conservation_residual, 1e-10);
  }

  const auto kal = dynamics::kalman(m);
  if (!kal.is_full) {
    detail::fail(rep, "ergodicity", 0.0,
                 "Kalman rank " + std::to_string(kal.rank) + " < " + std::to_string(m.dim()) +
                     "; stationary and deformed checks skipped");
    return rep;
  }

  const MatC Mlyap = dynamics::stationary_covariance(m);
  const MatC rho = fock::stationary_state(fock::lindbladian(r));
  add(rep, "stationary_covariance", linalg::max_abs(MatC(fock::covariance_of(rho, g) - Mlyap)), 1e-8);
  {
    const auto Jf = fock::fluxes(r, rho);
    const auto Jp = thermal::fluxes(m, Mlyap);
    double d = 0.0;
    for (std::size_t i = 0; i < Jf.size(); ++i) d = std::max(d, std::abs(Jf[i] - Jp[i]));
    add(rep, "fluxes", d, 1e-10);
  }
  {
    const auto qs = fock::quasi_free_state(Mlyap, g);
    add(rep, "covariance_roundtrip", linalg::max_abs(MatC(fock::covariance_of(qs.density, g) - Mlyap)), 1e-8);
    add(rep, "stationary_state_quasi_free", linalg::max_abs(MatC(qs.density - rho)), 1e-8);
    if (g.size() >= 4) {
      double w = 0.0;
      const int n = static_cast<int>(g.size());
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
          for (int c = b + 1; c < n; ++c)
            for (int d = c + 1; d < n; ++d) w = std::max(w, fock::wick_check(qs, {a, b, c, d}, g).residual());
      add(rep, "wick_four_point", w, 1e-10);
    }
  }

  const ldp::Context ctx(m);
  rng::Philox gen(o.seed, 0x0AC1E);
  double d_e = 0.0, d_trace = 0.0, d_cov = 0.0, d_lambda = 0.0, ric = 0.0, inv = 0.0, rel = 0.0, mirror = 0.0,
         min_x = std::numeric_limits<double>::infinity();
  try {
    for (std::size_t k = 0; k < o.n_alpha; ++k) {
      const auto alpha = random_models::random_alpha(gen, m.baths.size(), o.alpha_range);
      const auto blocks = ldp::deformed_blocks(ctx, alpha);
      rel = std::max({rel, blocks.relation_A(), blocks.relation_C()});
      const auto spec = ldp::deformed_spectrum(ctx, alpha);
      mirror = std::max(mirror, spec.symmetry_residual);
      const auto dom = fock::dominant(fock::deformed(r, alpha));
      d_e = std::max(d_e, std::abs(spec.e_alpha - dom.value.real()));
      const auto sol = ldp::riccati_max(ctx, alpha);
      d_trace = std::max(d_trace, std::abs(sol.e_trace - spec.e_alpha));
      d_cov = std::max(d_cov, linalg::max_abs(MatC(fock::covariance_of(dom.density, g) - sol.M_alpha)));
      d_lambda = std::max(d_lambda, std::abs(ldp::eigenvalue_from_covariance(blocks, sol.M_alpha) - spec.e_alpha));
      ric = std::max(ric, sol.relative_residual);
      inv = std::max(inv, sol.involution_residual);
      min_x = std::min(min_x, sol.min_eigenvalue);
    }
  } catch (const Error& e) {
    detail::fail(rep, "deformed_generator", 0.0, e.what());
    return rep;
  }
  add(rep, "block_relations", rel, 1e-10);
  add(rep, "z_spectrum_mirror_symmetry", mirror, 1e-8);
  add(rep, "e_alpha_spectral_vs_fock", d_e, 1e-8, std::to_string(o.n_alpha) + " random alpha");
  add(rep, "e_alpha_riccati_trace", d_trace, 1e-8);
  add(rep, "eigenvalue_from_covariance", d_lambda, 1e-8);
  add(rep, "riccati_covariance_vs_fock", d_cov, 1e-7);
  add(rep, "riccati_residual", ric, 1e-8);
  add(rep, "riccati_involution", inv, 1e-7);
  add(rep, "riccati_positive", min_x > 0 ? 0.0 : -min_x, 0.0);
  return rep;
}

}  // namespace fermiflux::oracle
