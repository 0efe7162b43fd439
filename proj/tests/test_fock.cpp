#include <gtest/gtest.h>

#include "fermiflux/chain.hpp"
#include "fermiflux/fock.hpp"
#include "fermiflux/random_models.hpp"
#include "fermiflux/thermal.hpp"

namespace ff = fermiflux;
using ff::MatC;

TEST(Majoranas, CanonicalAnticommutation) {
  for (int L = 1; L <= 3; ++L) {
    const auto g = ff::fock::majorana_matrices(L);
    const auto d = g.front().rows();
    ASSERT_EQ(static_cast<int>(g.size()), 2 * L);
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_LT(ff::linalg::max_abs(MatC(g[i] - g[i].adjoint())), 1e-15);
      for (std::size_t j = 0; j < g.size(); ++j) {
        MatC ac = g[i] * g[j] + g[j] * g[i];
        if (i == j) ac -= 2.0 * MatC::Identity(d, d);
        EXPECT_LT(ff::linalg::max_abs(ac), 1e-15);
      }
    }
  }
}

TEST(Majoranas, ResourceCapIsEnforced) {
  EXPECT_THROW(ff::fock::majorana_matrices(4, 3), ff::ResourceError);
}

TEST(QuadraticOperator, GibbsStateReproducesGibbsCovariance) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto m = ff::random_models::random_model(seed);
    const auto g = ff::fock::majorana_matrices(m.L_S);
    const MatC K = ff::fock::quadratic_operator(m.kappa_S, g);
    EXPECT_LT(ff::linalg::max_abs(MatC(K - K.adjoint())), 1e-13);
    for (double beta : {0.3, 2.0}) {
      const MatC rho = ff::fock::gibbs_state(K, beta);
      const MatC M = ff::fock::covariance_of(rho, g);
      EXPECT_LT(ff::linalg::max_abs(MatC(M - ff::phasespace::gibbs_covariance(m.kappa_S, beta))), 1e-12);
    }
  }
}

TEST(QuasiFree, CovarianceRoundTripAndWick) {
  const auto m = ff::random_models::random_model(11, {.L_min = 2, .L_max = 2});
  const auto g = ff::fock::majorana_matrices(m.L_S);
  const MatC M = ff::dynamics::stationary_covariance(m);
  const auto qs = ff::fock::quasi_free_state(M, g);
  EXPECT_NEAR(qs.density.trace().real(), 1.0, 1e-12);
  EXPECT_GT(ff::linalg::hermitian_eigenvalues(qs.density).minCoeff(), -1e-12);
  EXPECT_LT(ff::linalg::max_abs(MatC(ff::fock::covariance_of(qs.density, g) - M)), 1e-10);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) EXPECT_LT(ff::fock::wick_check(qs, {a, b, c, d}, g).residual(), 1e-10);
}

TEST(Lindbladian, UnitalInHeisenbergPictureAndDetailedBalanced) {
  const auto m = ff::chain::build({});
  const auto r = ff::fock::realize(m);
  const MatC Lh = ff::fock::lindbladian(r);
  const auto one = ff::linalg::vec(MatC::Identity(r.dim(), r.dim()));
  EXPECT_LT((Lh * one).cwiseAbs().maxCoeff(), 1e-13);
  for (std::size_t i = 0; i < r.phi.size(); ++i) {
    const MatC sigma = ff::fock::gibbs_state(r.K, m.baths[i].beta);
    EXPECT_LT(ff::fock::check_detailed_balance(r.phi[i], sigma), 1e-12);
  }
}

TEST(Lindbladian, StationaryFluxesMatchPhaseSpace) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto m = ff::random_models::random_model(seed, {.L_max = 2, .baths_max = 3});
    const auto r = ff::fock::realize(m);
    const MatC rho = ff::fock::stationary_state(ff::fock::lindbladian(r));
    const auto Jf = ff::fock::fluxes(r, rho);
    const auto Jp = ff::thermal::fluxes(m, ff::dynamics::stationary_covariance(m));
    for (std::size_t i = 0; i < Jf.size(); ++i) EXPECT_NEAR(Jf[i], Jp[i], 1e-10);
  }
}

TEST(Lindbladian, ChainFluxFromFockSpace) {
  const auto m = ff::chain::build({});
  const auto r = ff::fock::realize(m);
  const auto J = ff::fock::fluxes(r, ff::fock::stationary_state(ff::fock::lindbladian(r)));
  EXPECT_NEAR(J[0], 0.092423431452, 1e-11);
  EXPECT_NEAR(J[1], -0.092423431452, 1e-11);
}

TEST(DeformedGenerator, ReducesToLindbladianAtZero) {
  const auto r = ff::fock::realize(ff::chain::build({}));
  EXPECT_LT(ff::linalg::max_abs(MatC(ff::fock::deformed(r, {0.0, 0.0}) - ff::fock::lindbladian(r))), 1e-14);
  const auto d = ff::fock::dominant(ff::fock::deformed(r, {0.0, 0.0}));
  EXPECT_NEAR(d.value.real(), 0.0, 1e-12);
  EXPECT_GT(d.gap, 0.0);
}

TEST(RepeatedInteraction, StepConservesTotalEnergy) {
  const auto m = ff::chain::build({});
  const auto s = ff::fock::discrete_step(m, 0.1);
  EXPECT_LT(s.conservation_residual, 1e-12);
  // Trace preservation of the reduced step.
  const auto d = static_cast<Eigen::Index>(std::sqrt(static_cast<double>(s.superop.rows())));
  const MatC rho = MatC::Identity(d, d) / static_cast<double>(d);
  const MatC out = ff::linalg::unvec(s.superop * ff::linalg::vec(rho));
  EXPECT_NEAR(out.trace().real(), 1.0, 1e-12);
}

TEST(EntropyBalance, NonNegativeAlongEvolution) {
  const auto m = ff::chain::build({});
  const auto r = ff::fock::realize(m);
  const Eigen::Index d = r.dim();
  MatC rho0 = MatC::Zero(d, d);
  rho0(0, 0) = 1.0;
  for (double t : {0.5, 2.0, 5.0}) EXPECT_GE(ff::fock::entropy_balance(m, rho0, t, 200), -1e-8);
}
