// Acceptance checks. `acceptance N` runs criterion N (1-9) and prints a single
// PASS/FAIL line; the exit status is 0 on PASS.
#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>

#include "fermiflux/fermiflux.hpp"

namespace ff = fermiflux;
using ff::MatC;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

const ff::random_models::Options small_models{.L_min = 1, .L_max = 3, .baths_min = 2, .baths_max = 3};

// 1. Chain flux for L = 2..10 against 0.4 (n0 - n_{L+1}).
void chain_flux(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const double expected = 0.4 * (ff::phasespace::fermi(1.0) - ff::phasespace::fermi(0.0));
  double worst = 0.0;
  for (int L = 2; L <= 10; ++L) {
    const auto J = ff::thermal::stationary_fluxes(ff::chain::build({.L = L})).J;
    worst = std::max({worst, std::abs(J[0] - expected), std::abs(J[1] + expected)});
  }
  const double t = seconds_since(t0);
  o.detail << "J = " << expected << ", max deviation " << worst << " over L=2..10, " << t << " s";
  o.require(worst < 1e-10, "deviation >= 1e-10");
  o.require(t < 1.0, "runtime >= 1 s");
}

// 2. Closed forms of the small covariance.
void chain_closed_forms(Outcome& o) {
  double worst = 0.0;
  for (int L = 2; L <= 10; ++L) worst = std::max(worst, ff::chain::compare_closed_form({.L = L}).max_discrepancy());
  o.detail << "max |closed form - Lyapunov| = " << worst << " over L=2..10 (p0, pm, pL, j, far off-diagonal)";
  o.require(worst < 1e-10, "closed-form discrepancy >= 1e-10");
}

// 3. Phase-space vs Fock equivalence at 10 random alpha per model.
void oracle_equivalence(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::pair<std::string, ff::ThermalModel>> models{{"chain L=2", ff::chain::build({})}};
  for (std::uint64_t seed : {1, 2, 3})
    models.emplace_back("random seed " + std::to_string(seed),
                        ff::random_models::random_model(seed, {.L_min = seed == 3 ? 3 : 1, .L_max = 3}));
  double de = 0.0, dm = 0.0;
  for (const auto& [name, m] : models) {
    const auto r = ff::oracle::run(m, {.n_alpha = 10, .seed = 1000 + static_cast<std::uint64_t>(m.L_S)});
    const auto* e = r.find("e_alpha_spectral_vs_fock");
    const auto* c = r.find("riccati_covariance_vs_fock");
    if (!e || !c) {
      o.require(false, name + ": deformed checks missing");
      continue;
    }
    de = std::max(de, e->residual);
    dm = std::max(dm, c->residual);
    for (const auto& ch : r.checks)
      if (!ch.pass) o.require(false, name + ": " + ch.name);
  }
  const double t = seconds_since(t0);
  o.detail << "4 models x 10 alpha: max |e_spectral - e_fock| = " << de << ", max |M_riccati - M_fock| = " << dm
           << ", " << t << " s";
  o.require(de < 1e-8, "e mismatch >= 1e-8");
  o.require(dm < 1e-7, "covariance mismatch >= 1e-7");
  o.require(t < 60.0, "runtime >= 1 min");
}

// 4. e(0) = 0, translation invariance and the fluctuation symmetry.
void symmetries(Outcome& o) {
  std::vector<ff::ThermalModel> models{ff::chain::build({})};
  for (std::uint64_t seed : {1, 2, 3}) models.push_back(ff::random_models::random_model(seed, small_models));
  double d0 = 0.0, dt = 0.0, ds = 0.0;
  ff::rng::Philox g(4);
  for (const auto& m : models) {
    const ff::ldp::Context ctx(m);
    const std::size_t n = m.baths.size();
    const auto beta = m.betas();
    d0 = std::max(d0, std::abs(ff::ldp::e_alpha(ctx, std::vector<double>(n, 0.0))));
    for (int k = 0; k < 20; ++k) {
      const auto a = ff::random_models::random_alpha(g, n, 1.0);
      const double lam = ff::random_models::uniform(g, -2.0, 2.0);
      std::vector<double> shift(n), gc(n), neg(n);
      for (std::size_t i = 0; i < n; ++i) {
        shift[i] = a[i] + lam;
        gc[i] = a[i] - beta[i];
        neg[i] = -a[i];
      }
      const double ea = ff::ldp::e_alpha(ctx, a);
      dt = std::max(dt, std::abs(ff::ldp::e_alpha(ctx, shift) - ea));
      ds = std::max(ds, std::abs(ff::ldp::e_alpha(ctx, gc) - ff::ldp::e_alpha(ctx, neg)));
    }
  }
  o.detail << "4 models x 20 (alpha, lambda): |e(0)| <= " << d0 << ", translation " << dt
           << ", e(alpha-beta) vs e(-alpha) " << ds;
  o.require(d0 < 1e-9 && dt < 1e-9 && ds < 1e-9, "symmetry residual >= 1e-9");
}

// 5. Rate curves for L = 2..10.
void rate_curves(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto zetas = ff::ldp::linspace(-0.1, 0.3, 200);
  const double J = 0.4 * (ff::phasespace::fermi(1.0) - ff::phasespace::fermi(0.0));
  // Mirror pairs inside the grid range; -zeta is evaluated directly.
  std::vector<double> mirror;
  for (double z : zetas)
    if (z > 0 && z <= 0.1) mirror.push_back(z);
  const ff::ldp::RateOptions opt{.chunk = 16, .jobs = workers()};

  double worst_zero = 0.0, worst_asym = 0.0, asym_sign = 0.0;
  bool converged = true, sign_consistent = true;
  std::vector<double> at_m05, at_025;
  for (int L = 2; L <= 10; ++L) {
    const ff::ldp::Context ctx(ff::chain::build({.L = L}));
    const auto curve = ff::ldp::rate_function(ctx, zetas, opt);
    converged = converged && curve.all_converged();
    const auto zero = ff::ldp::legendre_point(ctx, J);
    worst_zero = std::max(worst_zero, std::abs(zero.I));
    double min_I = std::numeric_limits<double>::infinity();
    for (const auto& p : curve.points) min_I = std::min(min_I, p.I);
    worst_zero = std::max(worst_zero, -min_I);
    for (double z : mirror) {
      const double d = ff::ldp::legendre_point(ctx, z).I - ff::ldp::legendre_point(ctx, -z).I;
      // Sign-robust: |I(z) - I(-z)| = z with one orientation for every point.
      const double s = d >= 0 ? 1.0 : -1.0;
      if (asym_sign == 0.0) asym_sign = s;
      sign_consistent = sign_consistent && s == asym_sign;
      worst_asym = std::max(worst_asym, std::abs(std::abs(d) - z));
    }
    at_m05.push_back(ff::ldp::legendre_point(ctx, -0.05).I);
    at_025.push_back(ff::ldp::legendre_point(ctx, 0.25).I);
  }
  bool ordered = true;
  std::ostringstream ord;
  for (std::size_t k = 1; k < at_m05.size(); ++k) {
    if (at_m05[k] > at_m05[k - 1] + 1e-12 || at_025[k] > at_025[k - 1] + 1e-12) ordered = false;
  }
  ord.precision(6);
  ord << "I_L(-0.05): L=2 " << at_m05.front() << ", L=10 " << at_m05.back() << "; I_L(0.25): L=2 " << at_025.front()
      << ", L=10 " << at_025.back();

  // beta = (10, 0) on the L = 2 chain.
  const ff::ldp::Context hot(ff::chain::build({.beta0 = 10.0}));
  double worst_hot = 0.0, hot_sign = 0.0;
  bool hot_consistent = true;
  for (double z : mirror) {
    const auto p = ff::ldp::legendre_point(hot, z), q = ff::ldp::legendre_point(hot, -z);
    converged = converged && p.converged && q.converged;
    const double d = p.I - q.I;
    const double s = d >= 0 ? 1.0 : -1.0;
    if (hot_sign == 0.0) hot_sign = s;
    hot_consistent = hot_consistent && s == hot_sign;
    worst_hot = std::max(worst_hot, std::abs(std::abs(d) - 10.0 * z));
  }
  const double t = seconds_since(t0);
  o.detail << "L=2..10, 200 points: min/zero residual " << worst_zero << ", | |I(z)-I(-z)| - z | <= " << worst_asym
           << " (orientation " << (asym_sign < 0 ? "-z" : "+z") << "), beta=(10,0): " << worst_hot
           << "; ordering in L: " << (ordered ? "holds" : "violated") << " (" << ord.str() << "); " << t << " s";
  o.require(converged, "Legendre search did not converge");
  o.require(worst_zero < 1e-6, "I does not vanish at the mean flux");
  o.require(worst_asym < 1e-4 && sign_consistent, "asymmetry beta=(1,0)");
  o.require(worst_hot < 1e-3 && hot_consistent, "asymmetry beta=(10,0)");
  o.require(ordered, "rate curves not non-increasing in L");
  o.require(t < 300.0, "runtime >= 5 min");
}

// 6. No-fridge property and pairwise certificates.
void no_fridge(Outcome& o) {
  double worst_sum = -std::numeric_limits<double>::infinity(), worst_cert = 0.0;
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto m = ff::random_models::random_model(seed, {.L_min = 1, .L_max = 4, .baths_min = 2, .baths_max = 4});
    const auto J = ff::thermal::stationary_fluxes(m).J;
    const auto chk = ff::thermal::check_no_fridge(J, m.betas());
    worst_sum = std::max(worst_sum, chk.worst);
    try {
      const ff::MatR D = ff::thermal::decompose_fluxes(J, m.betas());
      const double r = ff::thermal::decomposition_residual(D, J, m.betas());
      worst_cert = std::max(worst_cert, r);
      if (chk.ok && r < 1e-9) ++ok;
    } catch (const ff::Error& e) {
      o.require(false, "seed " + std::to_string(seed) + ": " + e.what());
    }
  }
  o.detail << ok << "/100 random models (2-4 baths): max sorted partial sum " << worst_sum
           << ", max certificate residual " << worst_cert;
  o.require(ok == 100 && worst_sum <= 1e-9, "partial sums or certificates");
}

// 7. Fridge proportionality and synthesis of 3-bath targets.
void machines(Outcome& o) {
  ff::rng::Philox g(7);
  double worst_prop = 0.0;
  for (int k = 0; k < 50; ++k) {
    ff::machines::FridgeParams p;
    p.E1 = ff::random_models::uniform(g, 0.2, 2.0);
    p.E3 = ff::random_models::uniform(g, 0.2, 2.0);
    for (auto& b : p.beta) b = ff::random_models::uniform(g, 0.0, 3.0);
    for (auto& l : p.lambda) l = ff::random_models::uniform(g, 0.2, 2.0);
    p.g = ff::random_models::uniform(g, 0.2, 2.0);
    p.h = ff::random_models::uniform(g, 0.5, 2.0);
    worst_prop = std::max(worst_prop, ff::machines::fridge_fluxes(p).proportionality_residual);
  }
  double worst_synth = 0.0;
  for (int k = 0; k < 10; ++k) {
    std::vector<double> beta(3), J(3);
    double ent = 0.0;
    do {
      for (auto& b : beta) b = ff::random_models::uniform(g, 0.0, 3.0);
      const double a = ff::random_models::uniform(g, -1.0, 1.0), b = ff::random_models::uniform(g, -1.0, 1.0);
      J = {a, b, -a - b};
      ent = beta[0] * J[0] + beta[1] * J[1] + beta[2] * J[2];
    } while (ent <= 1e-3 || std::abs(beta[0] - beta[1]) < 0.05 || std::abs(beta[1] - beta[2]) < 0.05 ||
             std::abs(beta[0] - beta[2]) < 0.05);
    try {
      worst_synth = std::max(worst_synth, ff::machines::synthesize(J, beta).max_error);
    } catch (const ff::Error& e) {
      o.require(false, std::string("synthesize: ") + e.what());
    }
  }
  o.detail << "fridge sweep 50 points: max proportionality residual " << worst_prop
           << "; 10 synthesized 3-bath targets: max error " << worst_synth;
  o.require(worst_prop < 1e-9, "fridge proportionality");
  o.require(worst_synth < 1e-6, "synthesis error");
}

// 8. Monte Carlo unravelling of the L = 2 chain.
void monte_carlo(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto m = ff::chain::build({});
  const ff::unravel::Unraveler u(m);
  const MatC rho = ff::fock::stationary_state(ff::fock::lindbladian(u.realization()));
  const auto recs = ff::unravel::simulate_batch(u, rho, 50.0, 1, 10000, workers());
  const auto est = ff::unravel::mean_flux(recs);
  const auto J = ff::thermal::stationary_fluxes(m).J;
  double worst_z = 0.0;
  for (std::size_t i = 0; i < J.size(); ++i) worst_z = std::max(worst_z, std::abs(est.mean[i] - J[i]) / est.stderr_[i]);
  o.detail.precision(6);
  o.detail << "10^4 trajectories, T=50: max |mean N/T - J|/stderr = " << worst_z;
  o.require(worst_z < 3.0, "mean flux outside 3 standard errors");
  for (double a : {0.1, -0.1}) {
    const auto c = ff::unravel::empirical_cgf(recs, {a, 0.0});
    const double e = ff::ldp::e_alpha(m, {a, 0.0});
    const bool in = c.lo <= e && e <= c.hi;
    o.detail << "; alpha=(" << a << ",0): e=" << e << " CI99=[" << c.lo << "," << c.hi << "]";
    o.require(in, "e outside the bootstrap interval at alpha_0=" + std::to_string(a));
  }
  // The sign of the derivative of e at 0 against the empirical mean fixes the convention.
  const double h = 1e-5;
  const double slope = (ff::ldp::e_alpha(m, {h, 0.0}) - ff::ldp::e_alpha(m, {-h, 0.0})) / (2 * h);
  o.detail << "; de/dalpha_0(0) = " << slope << " vs mean N_0/T = " << est.mean[0];
  o.require(std::abs(slope - J[0]) < 1e-8, "e'(0) != +J");
  const double t = seconds_since(t0);
  o.detail << "; " << t << " s";
  o.require(t < 300.0, "runtime >= 5 min");
}

// 9. Structural invariants.
void invariants(Outcome& o) {
  double car = 0.0;
  for (int L = 1; L <= 6; ++L) {
    const auto gm = ff::fock::majorana_matrices(L);
    const auto d = gm.front().rows();
    for (std::size_t i = 0; i < gm.size(); ++i)
      for (std::size_t j = 0; j < gm.size(); ++j) {
        MatC ac = gm[i] * gm[j] + gm[j] * gm[i];
        if (i == j) ac -= 2.0 * MatC::Identity(d, d);
        car = std::max(car, ff::linalg::max_abs(ac));
      }
  }

  double wick = 0.0, round = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto m = ff::random_models::random_model(seed, {.L_min = 2, .L_max = 3});
    const auto gm = ff::fock::majorana_matrices(m.L_S);
    const MatC M = ff::dynamics::stationary_covariance(m);
    const auto qs = ff::fock::quasi_free_state(M, gm);
    round = std::max(round, ff::linalg::max_abs(MatC(ff::fock::covariance_of(qs.density, gm) - M)));
    const MatC back = ff::phasespace::to_majorana(ff::phasespace::to_ca(M));
    round = std::max(round, ff::linalg::max_abs(MatC(back - M)));
    const int n = static_cast<int>(gm.size());
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) wick = std::max(wick, ff::fock::wick_check(qs, {a, b, c, d}, gm).residual());
  }

  int agree = 0, deficient = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto opt = small_models;
    opt.deficient = seed % 3 == 0;
    const auto m = ff::random_models::random_model(seed, opt);
    const bool full = ff::dynamics::kalman(m).is_full;
    Eigen::ComplexEigenSolver<MatC> es(ff::dynamics::drift(m));
    const bool stable = es.eigenvalues().real().maxCoeff() < -1e-8;
    deficient += full ? 0 : 1;
    agree += full == stable ? 1 : 0;
  }

  double entropy = std::numeric_limits<double>::infinity();
  ff::rng::Philox g(99);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto m = ff::random_models::random_model(seed, {.L_min = 1, .L_max = 2, .baths_min = 2, .baths_max = 3});
    const auto d = static_cast<Eigen::Index>(1) << m.L_S;
    MatC A(d, d);
    for (Eigen::Index k = 0; k < A.size(); ++k) A.data()[k] = ff::random_models::gaussian_c(g);
    MatC rho0 = A * A.adjoint();
    rho0 /= rho0.trace();
    entropy = std::min(entropy, ff::fock::entropy_balance(m, rho0, ff::random_models::uniform(g, 0.5, 5.0), 400));
  }

  o.detail << "CAR " << car << ", Wick " << wick << ", round trips " << round << ", Kalman<=>stability " << agree
           << "/100 (" << deficient << " deficient), min entropy balance " << entropy << " over 20 evolutions";
  o.require(car < 1e-14, "CAR");
  o.require(wick < 1e-10, "Wick");
  o.require(round < 1e-8, "round trip");
  o.require(agree == 100, "Kalman vs stability");
  o.require(entropy >= -1e-8, "entropy balance");
}

const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
    {"chain flux", chain_flux},
    {"chain closed forms", chain_closed_forms},
    {"oracle equivalence", oracle_equivalence},
    {"symmetries of e", symmetries},
    {"rate curves", rate_curves},
    {"no-fridge property", no_fridge},
    {"fridge and synthesis", machines},
    {"Monte Carlo consistency", monte_carlo},
    {"structural invariants", invariants},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  if (argc > 1) {
    for (int k = 1; k < argc; ++k) which.push_back(std::atoi(argv[k]));
  } else {
    which.resize(criteria.size());
    std::iota(which.begin(), which.end(), 1);
  }
  bool all = true;
  for (int n : which) {
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion %d\n", n);
      return 2;
    }
    Outcome o;
    o.detail.precision(3);
    try {
      criteria[n - 1].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    std::printf("criterion %d (%s): %s  %s\n", n, criteria[n - 1].first.c_str(), o.pass ? "PASS" : "FAIL",
                o.detail.str().c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
