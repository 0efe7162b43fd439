#include <gtest/gtest.h>

#include <sstream>

#include "fermiflux/chain.hpp"
#include "fermiflux/csv.hpp"
#include "fermiflux/model_io.hpp"
#include "fermiflux/oracle.hpp"
#include "fermiflux/random_models.hpp"
#include "fermiflux/rng.hpp"

namespace ff = fermiflux;
using ff::MatC;

TEST(Philox, KnownAnswerVectors) {
  using ff::rng::philox4x32_10;
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}),
            (ff::rng::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (ff::rng::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (ff::rng::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, StreamsAreReproducibleAndDistinct) {
  ff::rng::Philox a(42), b(42), c(43), d(42, 1);
  for (int k = 0; k < 100; ++k) {
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
    EXPECT_NE(x, d());
  }
  ff::rng::Philox u(1);
  double mean = 0.0;
  for (int k = 0; k < 100000; ++k) {
    const double x = u.uniform();
    ASSERT_GT(x, 0.0);
    ASSERT_LT(x, 1.0);
    mean += x / 100000;
  }
  EXPECT_NEAR(mean, 0.5, 0.005);
}

TEST(ModelJson, ChainShorthand) {
  const auto m = ff::model_io::from_json(ff::model_io::parse(R"({"chain": {"L": 3, "beta0": 2}})"));
  EXPECT_EQ(m.L_S, 3);
  EXPECT_EQ(m.baths[0].beta, 2.0);
  EXPECT_EQ(m.baths[1].beta, 0.0);
}

TEST(ModelJson, RoundTripPreservesModel) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto m = ff::random_models::random_model(seed, {.baths_max = 3});
    const auto back = ff::model_io::from_json(ff::model_io::parse(ff::model_io::to_json(m).dump()));
    EXPECT_EQ(ff::csv::model_hash(m), ff::csv::model_hash(back));
  }
}

TEST(ModelJson, FlatMatricesAndComplexEntries) {
  const std::string text = R"({
    "L_S": 1,
    "T_S_im": {"rows": 2, "cols": 2, "data": [0, 0.5, -0.5, 0]},
    "kappa_S": [[0, [0, 1]], [[0, -1], 0]],
    "baths": [{"beta": 1, "kappa_im": [[0, 1], [-1, 0]], "theta_im": [[0.3, 0], [0, 0.3]]}]
  })";
  const auto m = ff::model_io::from_json(ff::model_io::parse(text));
  EXPECT_EQ(m.T_S(0, 1), ff::cplx(0.0, 0.5));
  EXPECT_EQ(m.kappa_S(0, 1), ff::cplx(0.0, 1.0));
  EXPECT_EQ(m.baths[0].theta(1, 1), ff::cplx(0.0, 0.3));
  EXPECT_TRUE(ff::thermal::validate(m).ok());
}

TEST(ModelJson, DiagnosticsNameTheOffendingField) {
  auto err = [](const std::string& text) -> std::string {
    try {
      ff::model_io::from_json(ff::model_io::parse(text));
    } catch (const ff::MalformedInput& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_NE(err("{").find("parse error"), std::string::npos);
  EXPECT_NE(err(R"({"L_S": 1, "T_S": [[0, 1], [1]], "kappa_S": [[0, 0], [0, 0]], "baths": []})").find("ragged"),
            std::string::npos);
  EXPECT_NE(err(R"({"L_S": 1, "T_S": [[0, 0], [0, 0]], "baths": []})").find("kappa_S"), std::string::npos);
  EXPECT_NE(err(R"({"L_S": 1, "T_S": [[0, 0], [0, 0]], "kappa_S": [[0, 0], [0, 0]],
                   "baths": [{"beta": "hot", "kappa": [[0, 0], [0, 0]], "theta": [[0, 0], [0, 0]]}]})")
                .find("baths[0].beta"),
            std::string::npos);
  EXPECT_NE(err(R"({"L_S": 2, "T_S": [[0, 0], [0, 0]], "kappa_S": [[0, 0], [0, 0]], "baths": []})").find("4x4"),
            std::string::npos);
  EXPECT_NE(err(R"({"chain": {"L": 0}})").find("L must be"), std::string::npos);
  EXPECT_THROW(ff::model_io::load("/nonexistent/model.json"), ff::MalformedInput);
}

TEST(Csv, NumbersRoundTripExactly) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.092423431452001853})
    EXPECT_EQ(std::stod(ff::csv::num(x)), x);
}

TEST(Csv, WriterChecksRowWidth) {
  std::ostringstream os;
  ff::csv::Writer w(os);
  w.meta("command", "test").header({"a", "b"}).row({"1", "2"});
  EXPECT_EQ(os.str(), "# command: test\na,b\n1,2\n");
  EXPECT_THROW(w.row({"1"}), std::logic_error);
}

TEST(Csv, ModelHashIsStableAndSensitive) {
  const auto a = ff::chain::build({});
  EXPECT_EQ(ff::csv::model_hash(a), ff::csv::model_hash(ff::chain::build({})));
  EXPECT_NE(ff::csv::model_hash(a), ff::csv::model_hash(ff::chain::build({.betaL = 0.1})));
  EXPECT_EQ(ff::csv::model_hash(a).rfind("fnv1a64:", 0), 0u);
}

TEST(Oracle, ChainAndRandomModelsPass) {
  EXPECT_TRUE(ff::oracle::run(ff::chain::build({})).ok());
  const auto r = ff::oracle::run(ff::random_models::random_model(8, {.L_max = 2}), {.n_alpha = 3});
  EXPECT_TRUE(r.ok()) << r.to_json().dump(1);
}

TEST(Oracle, CorruptedCouplingIsCaught) {
  auto m = ff::chain::build({});
  m.baths[1].kappa *= 2.0;
  const auto r = ff::oracle::run(m, {.n_alpha = 2});
  EXPECT_FALSE(r.ok());
  ASSERT_NE(r.find("thermal_validation"), nullptr);
  EXPECT_FALSE(r.find("thermal_validation")->pass);
}

TEST(Oracle, NonErgodicModelReportsFailure) {
  const auto r = ff::oracle::run(ff::chain::build({.theta0 = 0.0, .thetaL = 0.0}));
  ASSERT_NE(r.find("ergodicity"), nullptr);
  EXPECT_FALSE(r.find("ergodicity")->pass);
}

TEST(Oracle, LargeSystemIsRefused) {
  EXPECT_THROW(ff::oracle::run(ff::chain::build({.L = 5})), ff::ResourceError);
}
