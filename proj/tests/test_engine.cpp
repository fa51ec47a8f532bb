// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "specdec/engine.hpp"

using namespace specdec;

namespace {

constexpr double kEps = 1e-10;

void check_stats_identities(const RunStats& s, int gamma) {
  CHECK(s.draft_tokens_examined() == s.primary_accepts + s.pardon_accepts + s.rejects);
  CHECK(s.draft_tokens_examined() <= s.draft_tokens_generated);
  CHECK(s.draft_tokens_generated == s.target_calls * static_cast<std::uint64_t>(gamma));
  std::uint64_t emitted_from_hist = 0;
  std::uint64_t steps_from_hist = 0;
  for (std::size_t len = 0; len < s.accepted_len_histogram.size(); ++len) {
    emitted_from_hist += s.accepted_len_histogram[len] * (len + 1);
    steps_from_hist += s.accepted_len_histogram[len];
  }
  CHECK(emitted_from_hist == s.tokens_emitted);
  CHECK(steps_from_hist == s.target_calls);
  // tokens per target call stays within [1, gamma + 1]
  CHECK(s.tokens_emitted >= s.target_calls);
  CHECK(s.tokens_emitted <= s.target_calls * static_cast<std::uint64_t>(gamma + 1));
}

void check_results_equal(const RunResult& a, const RunResult& b) {
  CHECK(a.tokens == b.tokens);
  CHECK(a.traces == b.traces);
  CHECK(a.stats.tokens_emitted == b.stats.tokens_emitted);
  CHECK(a.stats.target_calls == b.stats.target_calls);
  CHECK(a.stats.draft_tokens_generated == b.stats.draft_tokens_generated);
  CHECK(a.stats.primary_accepts == b.stats.primary_accepts);
  CHECK(a.stats.pardon_accepts == b.stats.pardon_accepts);
  CHECK(a.stats.rejects == b.stats.rejects);
  CHECK(a.stats.accepted_len_histogram == b.stats.accepted_len_histogram);
  CHECK(a.stats.sum_uncertainty == b.stats.sum_uncertainty);
  CHECK(a.stats.sum_entropy == b.stats.sum_entropy);
  CHECK(a.stats.sum_oracle_bias_tv == b.stats.sum_oracle_bias_tv);
  CHECK(a.stats.sum_oracle_accept_rate == b.stats.sum_oracle_accept_rate);
  CHECK(a.stats.oracle_expected_emitted == b.stats.oracle_expected_emitted);
}

}  // namespace

TEST_CASE("zero divergence accepts every draft token") {
  const ModelPair pair = make_coupled_pair(5, 16, 1, 0.0, 0.9);
  const PolicyConfig cfg{0.0, kEps, PolicyMode::Baseline};
  const int gamma = 5;
  const int n_tokens = 600;
  Rng rng(7);
  const RunResult res = run_speculative(pair, cfg, gamma, n_tokens, rng);

  const std::uint64_t steps = (n_tokens + gamma) / (gamma + 1);  // ceil
  CHECK(res.stats.target_calls == steps);
  CHECK(res.stats.tokens_emitted == steps * (gamma + 1));
  CHECK(res.stats.rejects == 0);
  CHECK(res.stats.pardon_accepts == 0);
  CHECK(res.stats.accepted_len_histogram[gamma] == steps);
  CHECK(res.tokens.size() == res.stats.tokens_emitted);
  check_stats_identities(res.stats, gamma);
}

TEST_CASE("same seed reproduces the token stream bitwise") {
  const ModelPair pair = make_coupled_pair(9, 32, 2, 0.5, 0.9);
  const PolicyConfig cfg{0.1, kEps, PolicyMode::Ears};
  Rng a(13), b(13);
  const RunResult ra = run_speculative(pair, cfg, 5, 500, a);
  const RunResult rb = run_speculative(pair, cfg, 5, 500, b);
  check_results_equal(ra, rb);
  CHECK(a.draws() == b.draws());
}

TEST_CASE("ears lengthens the mean accepted prefix and matches its oracle") {
  const ModelPair pair = make_coupled_pair(17, 64, 1, 0.5, 0.9);
  const int gamma = 5;
  const int n_tokens = 20000;

  Rng rng_base(21), rng_ears(21);
  const RunResult base =
      run_speculative(pair, PolicyConfig{0.0, kEps, PolicyMode::Baseline}, gamma, n_tokens,
                      rng_base);
  const RunResult ears =
      run_speculative(pair, PolicyConfig{0.1, kEps, PolicyMode::Ears}, gamma, n_tokens, rng_ears);
  check_stats_identities(base.stats, gamma);
  check_stats_identities(ears.stats, gamma);

  const double base_mean = static_cast<double>(base.stats.tokens_emitted) /
                           static_cast<double>(base.stats.target_calls);
  const double ears_mean = static_cast<double>(ears.stats.tokens_emitted) /
                           static_cast<double>(ears.stats.target_calls);
  CHECK(ears_mean > base_mean);
  CHECK(ears.stats.pardon_accepts > 0);

  // Emitted totals track the per-step conditional expectations; a crude
  // per-step variance bound of ((gamma+1)/2)^2 gives the 3-sigma band.
  for (const RunResult* res : {&base, &ears}) {
    const double sigma =
        0.5 * (gamma + 1) * std::sqrt(static_cast<double>(res->stats.target_calls));
    CHECK(std::abs(static_cast<double>(res->stats.tokens_emitted) -
                   res->stats.oracle_expected_emitted) <= 3.0 * sigma);
  }
}

TEST_CASE("ears with beta zero pardons nothing") {
  const ModelPair pair = make_coupled_pair(23, 32, 1, 0.8, 0.9);
  Rng rng(25);
  const RunResult res =
      run_speculative(pair, PolicyConfig{0.0, kEps, PolicyMode::Ears}, 4, 2000, rng);
  CHECK(res.stats.pardon_accepts == 0);
  CHECK(res.stats.rejects > 0);
}

TEST_CASE("batch of one equals the scalar path") {
  const ModelPair pair = make_coupled_pair(31, 32, 1, 0.5, 0.9);
  const PolicyConfig cfg{0.1, kEps, PolicyMode::Ears};
  const std::uint64_t seed = 99;
  Rng scalar_rng(seed);
  const RunResult scalar = run_speculative(pair, cfg, 5, 400, scalar_rng);
  const std::vector<PolicyConfig> configs{cfg};
  const std::vector<std::uint64_t> seeds{seed};
  const std::vector<RunResult> batch = run_batch(pair, configs, 5, 400, seeds);
  REQUIRE(batch.size() == 1);
  check_results_equal(batch[0], scalar);
}

TEST_CASE("batch of sixteen equals sixteen scalar runs lane for lane") {
  const ModelPair pair = make_coupled_pair(37, 64, 2, 0.5, 0.9);
  const PolicyConfig cfg{0.1, kEps, PolicyMode::Ears};
  const int gamma = 5;
  const int n_tokens = 300;
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t l = 0; l < 16; ++l) seeds.push_back(1000 + 17 * l);
  const std::vector<PolicyConfig> configs{cfg};
  const std::vector<RunResult> batch = run_batch(pair, configs, gamma, n_tokens, seeds);
  REQUIRE(batch.size() == 16);
  for (std::size_t l = 0; l < seeds.size(); ++l) {
    Rng rng(seeds[l]);
    const RunResult scalar = run_speculative(pair, cfg, gamma, n_tokens, rng);
    check_results_equal(batch[l], scalar);
  }
}

TEST_CASE("batch rejects mixed configs and duplicate seeds") {
  const ModelPair pair = make_coupled_pair(41, 16, 1, 0.5, 0.9);
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<PolicyConfig> mixed{PolicyConfig{0.1, kEps, PolicyMode::Ears},
                                  PolicyConfig{0.2, kEps, PolicyMode::Ears},
                                  PolicyConfig{0.1, kEps, PolicyMode::Ears}};
  CHECK_THROWS_AS(run_batch(pair, mixed, 5, 100, seeds), ConfigError);

  const std::vector<PolicyConfig> one{PolicyConfig{0.1, kEps, PolicyMode::Ears}};
  const std::vector<std::uint64_t> dup{1, 2, 1};
  CHECK_THROWS_AS(run_batch(pair, one, 5, 100, dup), ConfigError);
  CHECK_THROWS_AS(run_batch(pair, one, 5, 100, std::vector<std::uint64_t>{}), ConfigError);
}

TEST_CASE("throughput closed form under certain acceptance") {
  const ModelPair pair = make_coupled_pair(43, 16, 1, 0.0, 0.9);
  const PolicyConfig cfg{0.0, kEps, PolicyMode::Baseline};
  Rng rng(45);
  const RunResult res = run_speculative(pair, cfg, 5, 1200, rng);
  const CostModel cost{10.0, 1.0};
  // Every step emits gamma+1 = 6 tokens at cost 10 + 5 = 15.
  CHECK(throughput_estimate(res.stats, cost) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(oracle_throughput_estimate(res.stats, cost) == doctest::Approx(0.4).epsilon(1e-9));
}

TEST_CASE("gamma below one is rejected") {
  const ModelPair pair = make_coupled_pair(47, 16, 1, 0.5, 0.9);
  const PolicyConfig cfg{0.1, kEps, PolicyMode::Ears};
  Rng rng(1);
  CHECK_THROWS_AS(run_speculative(pair, cfg, 0, 100, rng), DomainError);
  CHECK_THROWS_AS(run_speculative(pair, cfg, 3, 0, rng), DomainError);
}

TEST_CASE("throughput estimator domain errors") {
  RunStats empty;
  const CostModel cost{10.0, 1.0};
  CHECK_THROWS_AS(throughput_estimate(empty, cost), DomainError);
  RunStats some;
  some.tokens_emitted = 10;
  some.target_calls = 2;
  some.draft_tokens_generated = 10;
  CHECK_THROWS_AS(throughput_estimate(some, CostModel{0.0, 1.0}), DomainError);
  CHECK_THROWS_AS(throughput_estimate(some, CostModel{1.0, -2.0}), DomainError);
}

TEST_CASE("throughput is monotone in emitted tokens at fixed cost") {
  RunStats lo, hi;
  lo.target_calls = hi.target_calls = 100;
  lo.draft_tokens_generated = hi.draft_tokens_generated = 500;
  lo.tokens_emitted = 300;
  hi.tokens_emitted = 450;
  const CostModel cost{10.0, 1.0};
  CHECK(throughput_estimate(hi, cost) > throughput_estimate(lo, cost));
}

TEST_CASE("gamma one keeps tokens per call in [1, 2]") {
  const ModelPair pair = make_coupled_pair(53, 16, 1, 0.8, 0.9);
  const PolicyConfig cfg{0.1, kEps, PolicyMode::Ears};
  Rng rng(55);
  const RunResult res = run_speculative(pair, cfg, 1, 2000, rng);
  check_stats_identities(res.stats, 1);
  const double per_call = static_cast<double>(res.stats.tokens_emitted) /
                          static_cast<double>(res.stats.target_calls);
  CHECK(per_call >= 1.0);
  CHECK(per_call <= 2.0);
}
