#include "parametrix/experiments.hpp"

#include <doctest.h>

#include <cmath>

using namespace parametrix;

TEST_CASE("horizon regimes") {
  Regime shrinking;
  CHECK(shrinking.horizon(8) == doctest::Approx(0.5));
  CHECK(shrinking.discretization(64).h == doctest::Approx(0.25 / 64));
  Regime fixed{HorizonLaw::fixed_T, 0.0, 0.25};
  CHECK(fixed.horizon(100) == 0.25);
  Regime bad{HorizonLaw::shrinking_T, 1.0, 0.25};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(shrinking.horizon(1), std::invalid_argument);
}

TEST_CASE("evaluation window") {
  const auto pairs = window_pairs(make_vector({1.0}), 0.5, 6.0, 41);
  REQUIRE(pairs.size() == 41);
  CHECK(pairs.front().y(0) == doctest::Approx(-2.0));
  CHECK(pairs[20].y(0) == doctest::Approx(1.0));
  CHECK(pairs.back().y(0) == doctest::Approx(4.0));
  const auto planar = window_pairs(make_vector({0.0, 1.0}), 1.0, 2.0, 3);
  CHECK(planar[0].y(1) == 1.0);
  CHECK_THROWS_AS(window_pairs(make_vector({0.0}), 1.0, 1.0, 1), std::invalid_argument);
}

TEST_CASE("sqrt(n) stability") {
  RateReport r;
  r.points = {{8, 0, 0, 0, 1.0 / std::sqrt(8.0)}, {16, 0, 0, 0, 1.1 / std::sqrt(16.0)}, {32, 0, 0, 0, 1.2 / std::sqrt(32.0)}};
  CHECK(sqrt_n_scaled_stable(r, 0.15));
  CHECK_FALSE(sqrt_n_scaled_stable(r, 0.05));
}

TEST_CASE("frozen gap study") {
  ModelConfig cfg;
  cfg.family = "constant";
  const auto zero = run_frozen_gap_study(build_model(cfg), {8, 16, 32}, 0.25, make_vector({0.0}));
  for (const auto& p : zero.points) CHECK(p.constant < 1e-10);

  cfg.family = "sin1d";
  cfg.c = 0.5;
  cfg.e = 0.25;
  const auto mod = run_frozen_gap_study(build_model(cfg), {8, 16, 32}, 0.25, make_vector({0.0}));
  // Riemann sums of the covariance: the gap is O(h), the fitted constant O(h^{1/2}).
  CHECK(mod.points[1].constant / mod.points[0].constant == doctest::Approx(std::sqrt(0.5)).epsilon(0.05));
  CHECK(mod.trend < 0.0);
}

TEST_CASE("rate study on the constant model") {
  ModelConfig cfg;
  cfg.family = "constant";
  RateStudyConfig rc;
  rc.n_list = {4, 8, 16};
  const auto study = run_rate_study(build_model(cfg), rc);
  REQUIRE(study.samples.size() == 3);
  for (const auto& s : study.samples) {
    CHECK(s.point.weighted_error < 1e-8);
    CHECK(s.chain_mass == doctest::Approx(1.0).epsilon(1e-6));
  }
  rc.n_list = {4, 8};
  CHECK_THROWS_AS(run_rate_study(build_model(cfg), rc), std::invalid_argument);
}
