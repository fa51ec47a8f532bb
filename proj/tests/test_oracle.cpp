// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "specdec/oracle.hpp"

using namespace specdec;

namespace {

constexpr double kEps = 1e-10;

ProbDist random_dist(Rng& rng, int n) {
  std::vector<double> logits(n);
  for (double& x : logits) x = rng.normal();
  return temperature_scale(logits, 1.0);
}

const ProbDist kPt = ProbDist::from_probs({0.5, 0.3, 0.2});
const ProbDist kPd = ProbDist::from_probs({0.6, 0.2, 0.2});

}  // namespace

TEST_CASE("matching distributions accept everything at any beta") {
  Rng rng(3);
  for (double beta : {0.0, 0.1, 0.5}) {
    const ProbDist d = random_dist(rng, 8);
    for (double a : exact_accept_prob(d, d, beta, kEps)) CHECK(a == 1.0);
    CHECK(tv_distance(exact_induced_distribution(d, d, beta, kEps), d) < 1e-14);
  }
}

TEST_CASE("worked example at beta = 0") {
  const auto accept = exact_accept_prob(kPt, kPd, 0.0, kEps);
  CHECK(accept[0] == doctest::Approx(0.5 / 0.6).epsilon(1e-12));
  CHECK(accept[1] == 1.0);
  CHECK(accept[2] == 1.0);
  const double rate = overall_accept_rate(kPd, accept);
  CHECK(rate == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(rate == doctest::Approx(1.0 - tv_distance(kPt, kPd)).epsilon(1e-12));
}

TEST_CASE("worked example at beta = 0.1") {
  // Tolerance = 0.1 * (1 - 0.5) = 0.05.
  const auto accept = exact_accept_prob(kPt, kPd, 0.1, kEps);
  CHECK(accept[0] == doctest::Approx(0.5 / 0.6 + 0.05).epsilon(1e-12));
  CHECK(accept[1] == 1.0);
  CHECK(accept[2] == 1.0);
  CHECK(overall_accept_rate(kPd, accept) == doctest::Approx(0.93).epsilon(1e-12));

  const ProbDist induced = exact_induced_distribution(kPt, kPd, 0.1, kEps);
  CHECK(induced[0] == doctest::Approx(0.53).epsilon(1e-12));
  CHECK(induced[1] == doctest::Approx(0.27).epsilon(1e-12));
  CHECK(induced[2] == doctest::Approx(0.20).epsilon(1e-12));
  double sum = 0.0;
  for (double p : induced.probs()) sum += p;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));

  const StepOracle oracle = make_step_oracle(kPt, kPd, 0.1, kEps);
  CHECK(oracle.bias_tv == doctest::Approx(0.03).epsilon(1e-12));
  CHECK(oracle.overall_accept_rate == doctest::Approx(0.93).epsilon(1e-12));
}

TEST_CASE("losslessness at beta = 0 over random pairs") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 30;
    const ProbDist p_t = random_dist(rng, n);
    const ProbDist p_d = random_dist(rng, n);
    const ProbDist induced = exact_induced_distribution(p_t, p_d, 0.0, kEps);
    for (std::size_t y = 0; y < p_t.size(); ++y) {
      CHECK(std::abs(induced[y] - p_t[y]) < 1e-12);
    }
    const StepOracle oracle = make_step_oracle(p_t, p_d, 0.0, kEps);
    CHECK(oracle.bias_tv < 1e-12);
  }
}

TEST_CASE("accept-rate identity: baseline rate is one minus TV") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const ProbDist p_t = random_dist(rng, 16);
    const ProbDist p_d = random_dist(rng, 16);
    const double rate = overall_accept_rate(p_d, exact_accept_prob(p_t, p_d, 0.0, kEps));
    CHECK(rate == doctest::Approx(1.0 - tv_distance(p_t, p_d)).epsilon(1e-12));
  }
}

TEST_CASE("expected accepted length") {
  CHECK(exact_expected_accepted_length(std::vector<double>(5, 1.0)) == 5.0);
  CHECK(exact_expected_accepted_length(std::vector<double>(5, 0.0)) == 0.0);
  CHECK(exact_expected_accepted_length(std::vector<double>(5, 0.9)) ==
        doctest::Approx(3.68559).epsilon(1e-12));
  CHECK(exact_expected_accepted_length({}) == 0.0);
}

TEST_CASE("overall accept rate is non-decreasing in beta") {
  Rng rng(13);
  const double betas[] = {0.0, 0.05, 0.1, 0.2};
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + trial % 16;
    const ProbDist p_t = random_dist(rng, n);
    const ProbDist p_d = random_dist(rng, n);
    double prev = -1.0;
    for (double beta : betas) {
      const double rate = overall_accept_rate(p_d, exact_accept_prob(p_t, p_d, beta, kEps));
      if (rate < prev) ++violations;
      prev = rate;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("grid oracle agrees with the closed form") {
  Rng rng(17);
  for (int pair = 0; pair < 10; ++pair) {
    const ProbDist p_t = random_dist(rng, 8);
    const ProbDist p_d = random_dist(rng, 8);
    for (double beta : {0.0, 0.1}) {
      const auto closed = exact_accept_prob(p_t, p_d, beta, kEps);
      const auto grid = grid_accept_prob(p_t, p_d, beta, kEps, 1e-6);
      for (std::size_t x = 0; x < closed.size(); ++x) {
        CHECK(std::abs(closed[x] - grid[x]) < 1e-5);
      }
      const ProbDist ic = exact_induced_distribution(p_t, p_d, beta, kEps);
      const ProbDist ig = grid_induced_distribution(p_t, p_d, beta, kEps, 1e-6);
      for (std::size_t y = 0; y < ic.size(); ++y) {
        CHECK(std::abs(ic[y] - ig[y]) < 1e-5);
      }
    }
  }
}

TEST_CASE("token_accept_prob handles the epsilon clamp") {
  CHECK(token_accept_prob(0.5, 0.6, 0.5, 0.0, kEps) == doctest::Approx(0.5 / 0.6).epsilon(1e-12));
  CHECK(token_accept_prob(0.3, 0.0, 0.9, 0.0, kEps) == 1.0);  // huge clamped ratio caps at 1
  CHECK(token_accept_prob(0.0, 0.2, 0.6, 0.1, kEps) == doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("monte carlo agreement on a fixed pair") {
  const std::uint64_t trials = 1'000'000;
  for (double beta : {0.0, 0.1}) {
    const StepOracle oracle = make_step_oracle(kPt, kPd, beta, kEps);
    const PolicyConfig cfg{beta, kEps, PolicyMode::Ears};
    const ProbDist residual = residual_distribution(kPt, kPd);
    Rng rng(19 + static_cast<std::uint64_t>(beta * 100));
    std::uint64_t accepted = 0;
    std::vector<std::uint64_t> counts(kPt.size(), 0);
    for (std::uint64_t t = 0; t < trials; ++t) {
      const std::size_t x = sample(kPd, rng);
      const StepTrace trace = verify_token(kPt[x], kPd[x], kPt, cfg, rng);
      if (trace.decision == Decision::Reject) {
        ++counts[sample(residual, rng)];
      } else {
        ++accepted;
        ++counts[x];
      }
    }
    const double n = static_cast<double>(trials);
    const double rate = static_cast<double>(accepted) / n;
    const double rate_sigma =
        std::sqrt(oracle.overall_accept_rate * (1.0 - oracle.overall_accept_rate) / n);
    CHECK(std::abs(rate - oracle.overall_accept_rate) <= 3.0 * rate_sigma);
    for (std::size_t y = 0; y < counts.size(); ++y) {
      const double mean = n * oracle.induced[y];
      const double sigma = std::sqrt(n * oracle.induced[y] * (1.0 - oracle.induced[y]));
      CHECK(std::abs(static_cast<double>(counts[y]) - mean) <= 3.0 * sigma + 1.0);
    }
  }
}

TEST_CASE("oracle shape and domain errors") {
  CHECK_THROWS_AS(exact_accept_prob(kPt, ProbDist::from_probs({0.5, 0.5}), 0.1, kEps),
                  ShapeError);
  CHECK_THROWS_AS(exact_accept_prob(kPt, kPd, -0.1, kEps), DomainError);
  CHECK_THROWS_AS(grid_accept_prob(kPt, kPd, 0.1, kEps, 0.0), DomainError);
}
