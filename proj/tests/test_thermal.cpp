#include <gtest/gtest.h>

#include <numeric>

#include "fermiflux/chain.hpp"
#include "fermiflux/random_models.hpp"
#include "fermiflux/thermal.hpp"

namespace ff = fermiflux;
using ff::MatC;

TEST(Validation, ChainIsValid) {
  const auto r = ff::thermal::validate(ff::chain::build({.L = 4}));
  EXPECT_TRUE(r.ok());
  EXPECT_NO_THROW(ff::thermal::require_valid(ff::chain::build({})));
}

TEST(Validation, BrokenIntertwiningIsReported) {
  auto m = ff::chain::build({});
  m.baths[1].kappa *= 2.0;
  const auto r = ff::thermal::validate(m);
  EXPECT_FALSE(r.ok());
  try {
    ff::thermal::require_valid(m);
    FAIL() << "expected InvalidModel";
  } catch (const ff::InvalidModel& e) {
    ASSERT_FALSE(e.violations.empty());
    EXPECT_NE(e.violations.front().find("bath 1"), std::string::npos);
    EXPECT_EQ(static_cast<int>(e.code()), 2);
  }
}

TEST(Validation, RealPartInGeneratorIsRejected) {
  auto m = ff::chain::build({});
  m.T_S(0, 1) += 0.1;
  m.T_S(1, 0) += 0.1;
  EXPECT_FALSE(ff::thermal::validate(m).ok());
}

TEST(Fluxes, ConserveEnergyAndProduceEntropy) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto m = ff::random_models::random_model(seed, {.baths_min = 2, .baths_max = 4});
    const auto J = ff::thermal::stationary_fluxes(m).J;
    EXPECT_NEAR(std::accumulate(J.begin(), J.end(), 0.0), 0.0, 1e-12);
    EXPECT_GE(ff::thermal::entropy_production(J, m.betas()), -1e-12) << "seed " << seed;
  }
}

TEST(Fluxes, VanishAtEqualTemperature) {
  auto m = ff::chain::build({.L = 3, .beta0 = 0.4, .betaL = 0.4});
  for (double j : ff::thermal::stationary_fluxes(m).J) EXPECT_NEAR(j, 0.0, 1e-14);
}

TEST(Fluxes, DeficientModelUsesKalmanSubspace) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto m = ff::random_models::random_model(seed, {.deficient = true});
    const auto r = ff::thermal::stationary_fluxes(m);
    EXPECT_TRUE(r.deficient);
    EXPECT_LT(r.kalman_rank, m.dim());
    EXPECT_NEAR(std::accumulate(r.J.begin(), r.J.end(), 0.0), 0.0, 1e-12);
    EXPECT_GE(ff::thermal::entropy_production(r.J, m.betas()), -1e-12);
    EXPECT_TRUE(ff::thermal::check_no_fridge(r.J, m.betas()).ok);
  }
}

TEST(NoFridge, HoldsForRandomModels) {
  for (std::uint64_t seed = 100; seed < 160; ++seed) {
    const auto m = ff::random_models::random_model(seed, {.baths_min = 2, .baths_max = 4});
    const auto J = ff::thermal::stationary_fluxes(m).J;
    const auto chk = ff::thermal::check_no_fridge(J, m.betas());
    EXPECT_TRUE(chk.ok) << "seed " << seed;
    const ff::MatR D = ff::thermal::decompose_fluxes(J, m.betas());
    EXPECT_LT(ff::thermal::decomposition_residual(D, J, m.betas()), 1e-9) << "seed " << seed;
  }
}

TEST(NoFridge, DetectsRefrigeration) {
  const std::vector<double> beta{1.0, 2.0, 3.0};
  const std::vector<double> J{1.0, -2.0, 1.0};
  const auto chk = ff::thermal::check_no_fridge(J, beta);
  EXPECT_FALSE(chk.ok);
  ASSERT_TRUE(chk.witness.has_value());
  EXPECT_EQ(*chk.witness, 0u);
  EXPECT_THROW(ff::thermal::decompose_fluxes(J, beta), ff::Infeasible);
}

TEST(NoFridge, TiedTemperaturesCannotExchange) {
  EXPECT_FALSE(ff::thermal::check_no_fridge({0.5, -0.5}, {1.0, 1.0}).ok);
  EXPECT_TRUE(ff::thermal::check_no_fridge({0.0, 0.0}, {1.0, 1.0}).ok);
  // Inside a tied block the order of the baths must not matter.
  // Listed order gives partial sums -0.2, -0.7, -0.2, 0, yet the tied bath
  // receiving 0.5 can only be fed by the hottest bath, which gives 0.2.
  EXPECT_FALSE(ff::thermal::check_no_fridge({-0.2, -0.5, 0.5, 0.2}, {0.5, 1.0, 1.0, 2.0}).ok);
  EXPECT_TRUE(ff::thermal::check_no_fridge({-0.2, -0.5, 0.5, 0.2}, {0.5, 1.0, 1.5, 2.0}).ok);
}

TEST(NoFridge, DecompositionCertificate) {
  const std::vector<double> beta{0.5, 1.0, 1.0, 2.0, 3.0};
  const std::vector<double> J{-2.0, -0.5, 0.0, 1.0, 1.5};
  const ff::MatR D = ff::thermal::decompose_fluxes(J, beta);
  EXPECT_LT(ff::thermal::decomposition_residual(D, J, beta), 1e-14);
  EXPECT_EQ(D(1, 2), 0.0);
}

TEST(NoFridge, HotToColdOrderIsStable) {
  const auto idx = ff::thermal::hot_to_cold({2.0, 0.5, 2.0, 1.0});
  EXPECT_EQ(idx, (std::vector<std::size_t>{1, 3, 0, 2}));
}
