// SPDX-License-Identifier: Apache-2.0

#include "specdec/engine.hpp"

#include <algorithm>
#include <unordered_set>

#include "specdec/oracle.hpp"

namespace specdec {

namespace {

// Drafted tokens plus the target rows for positions 1..gamma+1, all built on
// the lane's current prefix. Drafting consumes exactly gamma uniform draws.
struct StepData {
  DraftProposal proposal;
  std::vector<ProbDist> target_rows;
};

StepData draft_step(const ModelPair& pair, std::vector<std::int32_t>& tokens, int gamma,
                    Rng& rng) {
  StepData step;
  step.proposal.tokens.reserve(gamma);
  step.proposal.draft_rows.reserve(gamma);
  step.proposal.token_probs_draft.reserve(gamma);
  step.target_rows.reserve(gamma + 1);

  const std::size_t base = tokens.size();
  for (int j = 0; j < gamma; ++j) {
    const Context ctx = make_context(tokens, pair.context_order());
    ProbDist row = pair.draft_dist(ctx);
    const auto tok = static_cast<std::int32_t>(sample(row, rng));
    step.proposal.tokens.push_back(tok);
    step.proposal.token_probs_draft.push_back(row[static_cast<std::size_t>(tok)]);
    step.proposal.draft_rows.push_back(std::move(row));
    tokens.push_back(tok);
  }
  // One parallel target pass: rows for every draft position plus the bonus.
  for (int i = 0; i <= gamma; ++i) {
    const Context ctx =
        make_context(std::span(tokens.data(), base + static_cast<std::size_t>(i)),
                     pair.context_order());
    step.target_rows.push_back(pair.target_dist(ctx));
  }
  return step;
}

void accumulate_step_stats(RunStats& stats, const StepData& step, const VerificationOutcome& out,
                           const PolicyConfig& cfg, int gamma) {
  stats.target_calls += 1;
  stats.draft_tokens_generated += static_cast<std::uint64_t>(gamma);
  for (const StepTrace& trace : out.traces) {
    switch (trace.decision) {
      case Decision::AcceptPrimary: ++stats.primary_accepts; break;
      case Decision::AcceptPardon: ++stats.pardon_accepts; break;
      case Decision::Reject: ++stats.rejects; break;
    }
  }
  stats.accepted_len_histogram[static_cast<std::size_t>(out.accepted_len)] += 1;
  stats.tokens_emitted += static_cast<std::uint64_t>(out.accepted_len) + 1;

  const double beta_eff = (cfg.mode == PolicyMode::Ears) ? cfg.beta : 0.0;
  std::vector<double> rates(gamma);
  for (int i = 0; i < gamma; ++i) {
    const ProbDist& target = step.target_rows[static_cast<std::size_t>(i)];
    stats.sum_uncertainty += uncertainty(target);
    stats.sum_entropy += entropy(target);
    const StepOracle oracle = make_step_oracle(
        target, step.proposal.draft_rows[static_cast<std::size_t>(i)], beta_eff, cfg.epsilon);
    stats.sum_oracle_bias_tv += oracle.bias_tv;
    stats.sum_oracle_accept_rate += oracle.overall_accept_rate;
    const auto tok = static_cast<std::size_t>(step.proposal.tokens[static_cast<std::size_t>(i)]);
    rates[static_cast<std::size_t>(i)] =
        token_accept_prob(target[tok], step.proposal.token_probs_draft[static_cast<std::size_t>(i)],
                          target.cached_max(), beta_eff, cfg.epsilon);
  }
  stats.oracle_expected_emitted += exact_expected_accepted_length(rates) + 1.0;
}

void finalize_step(RunResult& res, const StepData& step, VerificationOutcome&& out,
                   const PolicyConfig& cfg, int gamma, std::size_t base) {
  res.tokens.resize(base + static_cast<std::size_t>(out.accepted_len));
  res.tokens.push_back(out.correction_or_bonus);
  accumulate_step_stats(res.stats, step, out, cfg, gamma);
  res.traces.insert(res.traces.end(), out.traces.begin(), out.traces.end());
}

void validate_run_args(int gamma, int n_tokens) {
  if (gamma < 1) throw DomainError("gamma must be >= 1");
  if (n_tokens < 1) throw DomainError("n_tokens must be >= 1");
}

}  // namespace

RunResult run_speculative(const ModelPair& pair, const PolicyConfig& cfg, int gamma,
                          int n_tokens, Rng& rng) {
  validate_run_args(gamma, n_tokens);
  RunResult res;
  res.stats.accepted_len_histogram.assign(static_cast<std::size_t>(gamma) + 1, 0);
  while (res.stats.tokens_emitted < static_cast<std::uint64_t>(n_tokens)) {
    const std::size_t base = res.tokens.size();
    const StepData step = draft_step(pair, res.tokens, gamma, rng);
    VerificationOutcome out = verify_sequence(step.proposal, step.target_rows, cfg, rng);
    finalize_step(res, step, std::move(out), cfg, gamma, base);
  }
  return res;
}

std::vector<RunResult> run_batch(const ModelPair& pair, std::span<const PolicyConfig> configs,
                                 int gamma, int n_tokens, std::span<const std::uint64_t> seeds) {
  validate_run_args(gamma, n_tokens);
  const std::size_t n_lanes = seeds.size();
  if (n_lanes < 1) throw ConfigError("run_batch: need at least one lane");
  if (configs.empty()) throw ConfigError("run_batch: need a policy config");
  if (configs.size() != 1 && configs.size() != n_lanes) {
    throw ConfigError("run_batch: pass one config or one per lane");
  }
  for (const PolicyConfig& c : configs) {
    if (!(c == configs[0])) throw ConfigError("run_batch: one PolicyConfig per batch");
  }
  {
    std::unordered_set<std::uint64_t> unique(seeds.begin(), seeds.end());
    if (unique.size() != n_lanes) throw ConfigError("run_batch: per-lane seeds must be distinct");
  }
  const PolicyConfig cfg = configs[0];

  struct Lane {
    Rng rng;
    RunResult res;
    bool done = false;
    // per-step scratch
    StepData step;
    std::size_t base = 0;
    VerificationOutcome out;
    bool live = false;  // still being verified in the current step
  };
  std::vector<Lane> lanes;
  lanes.reserve(n_lanes);
  for (std::uint64_t seed : seeds) {
    lanes.push_back(Lane{Rng(seed), RunResult{}, false, StepData{}, 0, VerificationOutcome{},
                         false});
    lanes.back().res.stats.accepted_len_histogram.assign(static_cast<std::size_t>(gamma) + 1, 0);
  }

  // Gather buffers for the vectorized decision (one entry per live lane).
  std::vector<std::size_t> live_idx;
  std::vector<double> g_p_t, g_p_d, g_max_pt, g_u;

  for (;;) {
    std::vector<std::size_t> active;
    for (std::size_t l = 0; l < n_lanes; ++l) {
      if (!lanes[l].done) active.push_back(l);
    }
    if (active.empty()) break;

    for (std::size_t l : active) {
      Lane& lane = lanes[l];
      lane.base = lane.res.tokens.size();
      lane.step = draft_step(pair, lane.res.tokens, gamma, lane.rng);
      lane.out = VerificationOutcome{};
      lane.out.traces.reserve(gamma);
      lane.live = true;
    }

    live_idx = active;
    for (int i = 0; i < gamma && !live_idx.empty(); ++i) {
      // Gather the step's data for all live lanes into contiguous arrays.
      const std::size_t n_live = live_idx.size();
      g_p_t.resize(n_live);
      g_p_d.resize(n_live);
      g_max_pt.resize(n_live);
      g_u.resize(n_live);
      for (std::size_t k = 0; k < n_live; ++k) {
        Lane& lane = lanes[live_idx[k]];
        const auto pos = static_cast<std::size_t>(i);
        const auto tok = static_cast<std::size_t>(lane.step.proposal.tokens[pos]);
        g_p_t[k] = lane.step.target_rows[pos][tok];
        g_p_d[k] = lane.step.proposal.token_probs_draft[pos];
        g_max_pt[k] = lane.step.target_rows[pos].cached_max();
        g_u[k] = lane.rng.uniform();
      }

      std::vector<std::size_t> still_live;
      still_live.reserve(n_live);
      for (std::size_t k = 0; k < n_live; ++k) {
        const StepTrace trace = make_trace(g_p_t[k], g_p_d[k], g_max_pt[k], g_u[k], cfg);
        Lane& lane = lanes[live_idx[k]];
        lane.out.traces.push_back(trace);
        if (trace.decision == Decision::Reject) {
          const auto pos = static_cast<std::size_t>(i);
          lane.out.accepted_len = i;
          lane.out.used_residual = true;
          const ProbDist residual = residual_distribution(lane.step.target_rows[pos],
                                                          lane.step.proposal.draft_rows[pos]);
          lane.out.correction_or_bonus = static_cast<std::int32_t>(sample(residual, lane.rng));
          lane.live = false;
        } else {
          still_live.push_back(live_idx[k]);
        }
      }
      live_idx.swap(still_live);
    }

    for (std::size_t l : live_idx) {  // full acceptance: bonus token
      Lane& lane = lanes[l];
      lane.out.accepted_len = gamma;
      lane.out.used_residual = false;
      lane.out.correction_or_bonus = static_cast<std::int32_t>(
          sample(lane.step.target_rows[static_cast<std::size_t>(gamma)], lane.rng));
      lane.live = false;
    }

    for (std::size_t l : active) {
      Lane& lane = lanes[l];
      finalize_step(lane.res, lane.step, std::move(lane.out), cfg, gamma, lane.base);
      if (lane.res.stats.tokens_emitted >= static_cast<std::uint64_t>(n_tokens)) {
        lane.done = true;
      }
    }
  }

  std::vector<RunResult> results;
  results.reserve(n_lanes);
  for (Lane& lane : lanes) results.push_back(std::move(lane.res));
  return results;
}

double throughput_estimate(const RunStats& stats, const CostModel& cost) {
  if (!(cost.c_target > 0.0) || !(cost.c_draft > 0.0)) {
    throw DomainError("cost model entries must be > 0");
  }
  const double denom = static_cast<double>(stats.target_calls) * cost.c_target +
                       static_cast<double>(stats.draft_tokens_generated) * cost.c_draft;
  if (denom <= 0.0) throw DomainError("throughput_estimate: zero total cost");
  return static_cast<double>(stats.tokens_emitted) / denom;
}

double oracle_throughput_estimate(const RunStats& stats, const CostModel& cost) {
  if (!(cost.c_target > 0.0) || !(cost.c_draft > 0.0)) {
    throw DomainError("cost model entries must be > 0");
  }
  const double denom = static_cast<double>(stats.target_calls) * cost.c_target +
                       static_cast<double>(stats.draft_tokens_generated) * cost.c_draft;
  if (denom <= 0.0) throw DomainError("oracle_throughput_estimate: zero total cost");
  return stats.oracle_expected_emitted / denom;
}

}  // namespace specdec
