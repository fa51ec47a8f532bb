#pragma once

// SPDX-License-Identifier: Apache-2.0

/**
 * The full speculative-decoding loop: draft gamma tokens, verify them in one
 * parallel target pass, append the accepted prefix plus a correction or
 * bonus token, repeat until the requested token count is emitted.
 *
 * Two execution paths produce bit-identical results:
 *
 *   run_speculative  one lane, one Rng stream.
 *   run_batch        B lanes; the per-position decision runs as gathered
 *                    contiguous-array operations over all lanes still live
 *                    in the current step. Lanes that reach their token
 *                    budget go inactive and drop out of the gather.
 *
 * Equivalence holds because every lane owns its stream and the verifier
 * consumes exactly one uniform per decision and one per correction/bonus
 * sample, so scalar and batched execution see the same draw sequence.
 *
 * Throughput is modeled in abstract cost units (one target parallel pass =
 * c_target, one draft token = c_draft) rather than wall clock; the estimator
 * isolates the algorithmic effect of fewer target fallbacks.
 */

#include <cstdint>
#include <span>
#include <vector>

#include "specdec/models.hpp"
#include "specdec/verifier.hpp"

namespace specdec {

struct RunStats {
  std::uint64_t tokens_emitted = 0;
  std::uint64_t target_calls = 0;  // parallel verification passes
  std::uint64_t draft_tokens_generated = 0;
  std::uint64_t primary_accepts = 0;
  std::uint64_t pardon_accepts = 0;
  std::uint64_t rejects = 0;
  std::vector<std::uint64_t> accepted_len_histogram;  // counts per length 0..gamma

  // Analysis accumulators, one contribution per draft position. The oracle
  // expectation sums E[accepted_len | realized rows] + 1 per step, giving a
  // noise-free prediction of tokens_emitted for the same workload.
  double sum_uncertainty = 0.0;
  double sum_entropy = 0.0;
  double sum_oracle_bias_tv = 0.0;
  double sum_oracle_accept_rate = 0.0;
  double oracle_expected_emitted = 0.0;

  std::uint64_t draft_tokens_examined() const {
    return primary_accepts + pardon_accepts + rejects;
  }
};

struct CostModel {
  double c_target = 10.0;  // cost of one target parallel pass
  double c_draft = 1.0;    // cost of one draft token
};

struct RunResult {
  std::vector<std::int32_t> tokens;
  RunStats stats;
  std::vector<StepTrace> traces;  // one per examined draft position
};

/// One lane of speculative decoding until at least n_tokens are emitted.
RunResult run_speculative(const ModelPair& pair, const PolicyConfig& cfg, int gamma,
                          int n_tokens, Rng& rng);

/// B independent lanes with per-lane seeds, sharing one policy config
/// (passing several configs requires them all equal). Results are
/// bit-identical to running each lane through run_speculative alone.
std::vector<RunResult> run_batch(const ModelPair& pair, std::span<const PolicyConfig> configs,
                                 int gamma, int n_tokens, std::span<const std::uint64_t> seeds);

/// tokens_emitted / (target_calls * c_target + draft_tokens * c_draft).
double throughput_estimate(const RunStats& stats, const CostModel& cost);

/// Same ratio on the oracle-predicted token count.
double oracle_throughput_estimate(const RunStats& stats, const CostModel& cost);

}  // namespace specdec
