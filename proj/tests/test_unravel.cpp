#include <gtest/gtest.h>

#include "fermiflux/chain.hpp"
#include "fermiflux/ldp.hpp"
#include "fermiflux/thermal.hpp"
#include "fermiflux/unravel.hpp"

namespace ff = fermiflux;
using ff::MatC;

namespace {

MatC stationary_density(const ff::unravel::Unraveler& u) {
  return ff::fock::stationary_state(ff::fock::lindbladian(u.realization()));
}

}  // namespace

TEST(JumpChannels, TwoQuantaPerChainBath) {
  const auto m = ff::chain::build({});
  const auto ch = ff::unravel::extract_channels(m);
  ASSERT_EQ(ch.size(), 4u);
  for (std::size_t b = 0; b < 2; ++b) {
    std::vector<double> deltas;
    for (const auto& c : ch)
      if (c.bath == b) deltas.push_back(c.delta);
    std::sort(deltas.begin(), deltas.end());
    ASSERT_EQ(deltas.size(), 2u);
    EXPECT_NEAR(deltas[0], -1.0, 1e-12);
    EXPECT_NEAR(deltas[1], 1.0, 1e-12);
  }
}

TEST(JumpChannels, SumToBathDissipatorAndAreCompletelyPositive) {
  const auto m = ff::chain::build({.L = 2, .theta0 = 0.8, .thetaL = 1.3, .beta0 = 2.0, .betaL = 0.5});
  const auto r = ff::fock::realize(m);
  const auto ch = ff::unravel::extract_channels(m);
  for (std::size_t b = 0; b < 2; ++b) {
    MatC sum = MatC::Zero(r.phi[b].rows(), r.phi[b].cols());
    for (const auto& c : ch)
      if (c.bath == b) sum += c.phi;
    EXPECT_LT(ff::linalg::max_abs(MatC(sum - r.phi[b])), 1e-12);
  }
  for (const auto& c : ch) EXPECT_GT(ff::unravel::choi_min_eigenvalue(c.phi), -1e-12);
}

TEST(JumpChannels, ProjectionAndInterpolationAgree) {
  const auto m = ff::chain::build({.L = 3, .beta0 = 0.3, .betaL = 1.7});
  EXPECT_LT(ff::unravel::channel_distance(ff::unravel::channels_by_projection(m),
                                          ff::unravel::channels_by_interpolation(m)),
            1e-10);
}

TEST(JumpChannels, UncoupledBathHasNoChannels) {
  const auto ch = ff::unravel::extract_channels(ff::chain::build({.theta0 = 0.0}));
  for (const auto& c : ch) EXPECT_EQ(c.bath, 1u);
  EXPECT_TRUE(ff::unravel::extract_channels(ff::chain::build({.theta0 = 0.0, .thetaL = 0.0})).empty());
}

TEST(JumpChannels, MultiModeBathIsRejected) {
  ff::BathSpec b;
  b.kappa = MatC::Zero(4, 4);
  b.theta = MatC::Zero(2, 4);
  EXPECT_THROW(ff::unravel::bath_quantum(b), ff::MalformedInput);
}

TEST(Trajectories, DeterministicPerSeedAndAcrossWorkers) {
  const ff::unravel::Unraveler u(ff::chain::build({}));
  const MatC rho = stationary_density(u);
  const auto a = u.simulate(rho, 20.0, 17);
  const auto b = u.simulate(rho, 20.0, 17);
  ASSERT_EQ(a.jumps.size(), b.jumps.size());
  for (std::size_t k = 0; k < a.jumps.size(); ++k) {
    EXPECT_EQ(a.jumps[k].t, b.jumps[k].t);
    EXPECT_EQ(a.jumps[k].bath, b.jumps[k].bath);
  }
  const auto s1 = ff::unravel::simulate_batch(u, rho, 5.0, 100, 40, 1);
  const auto s3 = ff::unravel::simulate_batch(u, rho, 5.0, 100, 40, 3);
  for (std::size_t j = 0; j < s1.size(); ++j) {
    EXPECT_EQ(s1[j].seed, 100 + j);
    EXPECT_EQ(s1[j].N, s3[j].N);
    EXPECT_EQ(s1[j].final_weight, s3[j].final_weight);
  }
}

TEST(Trajectories, CountsMatchJumpRecord) {
  const ff::unravel::Unraveler u(ff::chain::build({}));
  const auto rec = u.simulate(stationary_density(u), 30.0, 5, true);
  std::vector<double> N(2, 0.0);
  double last = 0.0;
  for (const auto& j : rec.jumps) {
    N[j.bath] += j.delta;
    EXPECT_GE(j.t, last);
    EXPECT_LE(j.t, 30.0);
    last = j.t;
  }
  EXPECT_EQ(N, rec.N);
  ASSERT_TRUE(rec.final_state.has_value());
  EXPECT_NEAR(rec.final_state->trace().real(), 1.0, 1e-10);
  EXPECT_GT(rec.final_weight, 0.0);
  EXPECT_LE(rec.final_weight, 1.0);
}

TEST(Trajectories, ClosedSystemNeverJumps) {
  const ff::unravel::Unraveler u(ff::chain::build({.theta0 = 0.0, .thetaL = 0.0}));
  const Eigen::Index d = u.realization().dim();
  const auto rec = u.simulate(MatC::Identity(d, d) / static_cast<double>(d), 50.0, 1);
  EXPECT_TRUE(rec.jumps.empty());
  EXPECT_EQ(rec.N, (std::vector<double>{0.0, 0.0}));
}

TEST(Trajectories, InfiniteTemperatureWaitingTimesAreExponential) {
  const ff::unravel::Unraveler u(ff::chain::build({.L = 1, .beta0 = 0.0, .betaL = 0.0}));
  const auto& r = u.realization();
  const Eigen::Index d = r.dim();
  double rate = 0.0;
  for (const auto& p : r.phi_one) {
    ASSERT_LT(ff::linalg::max_abs(MatC(p - p(0, 0) * MatC::Identity(d, d))), 1e-12);
    rate += p(0, 0).real();
  }
  ASSERT_GT(rate, 0.0);
  const MatC rho = MatC::Identity(d, d) / static_cast<double>(d);
  std::vector<double> first;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const auto rec = u.simulate(rho, 50.0, 1000 + s);
    ASSERT_FALSE(rec.jumps.empty());
    first.push_back(rec.jumps.front().t);
  }
  EXPECT_GT(ff::unravel::ks_exponential_pvalue(first, rate), 0.01);
  EXPECT_LT(ff::unravel::ks_exponential_pvalue(first, 2.0 * rate), 1e-6);
}

TEST(Trajectories, MeanFluxMatchesStationaryFlux) {
  const auto m = ff::chain::build({});
  const ff::unravel::Unraveler u(m);
  const auto recs = ff::unravel::simulate_batch(u, stationary_density(u), 20.0, 1, 2000, 2);
  const auto est = ff::unravel::mean_flux(recs);
  const auto J = ff::thermal::stationary_fluxes(m).J;
  for (std::size_t i = 0; i < 2; ++i) EXPECT_LT(std::abs(est.mean[i] - J[i]), 4.0 * est.stderr_[i]);
}

TEST(EmpiricalCgf, ZeroAtOriginAndBracketsExactValue) {
  const auto m = ff::chain::build({});
  const ff::unravel::Unraveler u(m);
  const auto recs = ff::unravel::simulate_batch(u, stationary_density(u), 20.0, 7, 2000, 2);
  const auto z = ff::unravel::empirical_cgf(recs, {0.0, 0.0});
  EXPECT_EQ(z.estimate, 0.0);
  const auto c = ff::unravel::empirical_cgf(recs, {0.1, 0.0});
  const double e = ff::ldp::e_alpha(m, {0.1, 0.0});
  EXPECT_LE(c.lo, c.estimate);
  EXPECT_GE(c.hi, c.estimate);
  EXPECT_NEAR(c.estimate, e, 5.0 * (c.hi - c.lo) + 2e-3);
  // Shifting alpha along (1, 1) does not change the estimate up to the
  // conserved total count.
  const auto sh = ff::unravel::empirical_cgf(recs, {0.1 + 0.5, 0.5});
  EXPECT_NEAR(sh.estimate, c.estimate, 0.06);
  std::vector<ff::unravel::TrajectoryRecord> few(recs.begin(), recs.begin() + 10);
  EXPECT_THROW(ff::unravel::empirical_cgf(few, {0.1, 0.0}), ff::MalformedInput);
}
