#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "gridres/error.hpp"
#include "gridres/metrics.hpp"
#include "gridres/rng.hpp"
#include "oracles.hpp"

using namespace gridres;

namespace {

constexpr double kExact = 1e-12;

VulnerabilityProfile profile(std::initializer_list<double> leading, double lambda = 1.0 / 3.0) {
  VulnerabilityProfile p;
  p.system_id = "s";
  p.lambda = lambda;
  std::copy(leading.begin(), leading.end(), p.factors.begin());
  return p;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("trapezoid examples") {
  CHECK(trapezoid_resilience(std::vector<double>{1.0, 1.0, 1.0}).value() == doctest::Approx(1.0).epsilon(kExact));
  CHECK(trapezoid_resilience(std::vector<double>{0.0, 0.0}).value() == 0.0);
  CHECK(std::abs(trapezoid_resilience(std::vector<double>{1.0, 0.5, 0.5, 1.0}).value() - 2.0 / 3.0) <= kExact);
}

TEST_CASE("trapezoid rejects short curves") {
  try {
    trapezoid_resilience(std::vector<double>{0.7});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_window);
  }
}

TEST_CASE("unweighted examples") {
  CHECK(unweighted_resilience(std::vector<double>{1.0, 1.0}).value() == 1.0);
  CHECK(std::abs(unweighted_resilience(std::vector<double>{0.8, 0.6, 0.7}).value() - 0.7) <= kExact);
  CHECK(unweighted_resilience(std::vector<double>{0.0}).value() == 0.0);
  CHECK_THROWS_AS(unweighted_resilience(std::vector<double>{}), Error);
}

TEST_CASE("weighted examples") {
  const ResilienceScore ru(0.81);
  CHECK(weighted_resilience(ru, profile({}), PlainSum{}).value() == 0.81);
  CHECK(std::abs(weighted_resilience(ru, profile({1.0, 1.0, 1.0}), PlainSum{}).value() - 0.6561) <= kExact);
  const double expected = std::pow(0.81, 1.0 + 0.85 / 3.0);
  CHECK(std::abs(weighted_resilience(ru, profile({0.25, 0.1}), ConcentrationPenalty{0.2, 3.0}).value() - expected) <=
        kExact);
  CHECK(expected == doctest::Approx(0.7630).epsilon(1e-4));
}

TEST_CASE("group emphasis weights the three vulnerable groups") {
  const auto g = vulnerable_group_emphasis();
  int fives = 0;
  for (double m : g.multipliers) fives += m == 5.0;
  CHECK(fives == 3);
  std::array<double, kFactorCount> ones{};
  ones.fill(1.0);
  CHECK(scheme_factor_sum(ones, g) == doctest::Approx(12.0 + 15.0));
}

TEST_CASE("spearman examples") {
  const PermutationOptions none{0, 0};
  CHECK(spearman_rho(std::vector<double>{1, 2, 3}, std::vector<double>{10, 20, 30}, none).rho == 1.0);
  CHECK(spearman_rho(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}, none).rho == -1.0);
  const double rho = spearman_rho(std::vector<double>{1, 2, 2, 4}, std::vector<double>{1, 3, 2, 4}, none).rho;
  CHECK(std::abs(rho - 3.0 / std::sqrt(10.0)) <= kExact);
  CHECK(std::abs(rho - oracle::spearman({1, 2, 2, 4}, {1, 3, 2, 4})) <= kExact);
}

TEST_CASE("spearman errors") {
  try {
    spearman_rho(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::length_mismatch);
  }
  try {
    spearman_rho(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::undefined_correlation);
  }
}

TEST_CASE("permutation p-value") {
  std::vector<double> x, y;
  RngStream rng(3, 1);
  for (int i = 0; i < 30; ++i) {
    x.push_back(i);
    y.push_back(i + rng.normal(0, 3));
  }
  const auto strong = spearman_rho(x, y, {2000, 11});
  CHECK(strong.p_value < 0.01);
  CHECK(strong.p_value >= 1.0 / 2001.0);
  const auto again = spearman_rho(x, y, {2000, 11});
  CHECK(again.p_value == strong.p_value);

  std::vector<double> noise;
  for (int i = 0; i < 30; ++i) noise.push_back(rng.uniform());
  CHECK(spearman_rho(x, noise, {2000, 11}).p_value > 0.001);
  CHECK(spearman_rho(x, y, {0, 0}).p_value == 1.0);
}

TEST_CASE("average ranks match the counting oracle") {
  RngStream rng(5, 5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v;
    const int n = static_cast<int>(rng.uniform_int(1, 12));
    for (int i = 0; i < n; ++i) v.push_back(static_cast<double>(rng.uniform_int(0, 4)));
    const auto got = average_ranks(v);
    CHECK(got == oracle::ranks(v));
  }
}

TEST_CASE("properties over randomized cases") {
  RngStream rng(2024, 7);
  for (int trial = 0; trial < 1000; ++trial) {
    const double c = rng.uniform();
    const std::size_t len = static_cast<std::size_t>(rng.uniform_int(2, 40));
    REQUIRE(trapezoid_resilience(std::vector<double>(len, c)).value() == c);

    const double ru = rng.uniform(1e-6, 1.0 - 1e-6);
    VulnerabilityProfile p;
    p.lambda = rng.uniform(0.05, 1.0);
    for (double& f : p.factors) f = rng.bernoulli(0.5) ? rng.uniform() : 0.0;
    const WeightScheme schemes[] = {PlainSum{}, vulnerable_group_emphasis(), ConcentrationPenalty{}};
    for (const auto& scheme : schemes) {
      const double s = scheme_factor_sum(p.factors, scheme);
      const double rw = weighted_resilience(ResilienceScore(ru), p, scheme).value();
      if (s > 0.0) {
        REQUIRE(rw < ru);
      } else {
        REQUIRE(rw == ru);
      }
      auto bumped = p;
      const auto k = static_cast<std::size_t>(rng.uniform_int(0, kFactorCount - 1));
      bumped.factors[k] += rng.uniform(0.0, 0.5);
      REQUIRE(weighted_resilience(ResilienceScore(ru), bumped, scheme).value() <= rw);
    }
    for (double edge : {0.0, 1.0}) {
      REQUIRE(weighted_resilience(ResilienceScore(edge), p, PlainSum{}).value() == edge);
    }

    std::vector<double> x, y;
    const int n = static_cast<int>(rng.uniform_int(3, 20));
    for (int i = 0; i < n; ++i) {
      x.push_back(rng.uniform());
      y.push_back(rng.uniform());
    }
    const double rho = spearman_rho(x, y, {0, 0}).rho;
    REQUIRE(std::abs(rho - oracle::spearman(x, y)) <= 1e-12);
    const double scale = rng.uniform(0.01, 100.0);
    std::vector<double> scaled = y;
    for (double& v : scaled) v *= scale;
    REQUIRE(spearman_rho(x, scaled, {0, 0}).rho == doctest::Approx(rho).epsilon(1e-12));

    std::vector<double> shuffled = x;
    rng.shuffle(std::span<double>(shuffled));
    REQUIRE(unweighted_resilience(shuffled).value() == doctest::Approx(unweighted_resilience(x).value()).epsilon(1e-14));
  }
}

TEST_CASE("score range is enforced") {
  CHECK_THROWS_AS(ResilienceScore(1.5), Error);
  CHECK_THROWS_AS(ResilienceScore(-0.1), Error);
  CHECK_THROWS_AS(ResilienceScore(std::nan("")), Error);
}

}  // TEST_SUITE
