// SPDX-License-Identifier: Apache-2.0

#include "specdec/verifier.hpp"

#include <algorithm>

namespace specdec {

double acceptance_ratio(double p_t_token, double p_d_token, double epsilon) {
  return p_t_token / std::max(p_d_token, epsilon);
}

Decision decide(double ratio, double u, double tol) {
  if (ratio >= u) return Decision::AcceptPrimary;
  if (ratio >= std::max(u - tol, 0.0)) return Decision::AcceptPardon;
  return Decision::Reject;
}

StepTrace make_trace(double p_t_token, double p_d_token, double max_p_t, double u,
                     const PolicyConfig& cfg) {
  StepTrace trace;
  trace.ratio = acceptance_ratio(p_t_token, p_d_token, cfg.epsilon);
  trace.u = u;
  trace.uncertainty = 1.0 - max_p_t;
  trace.tolerance = (cfg.mode == PolicyMode::Ears) ? tolerance(cfg.beta, trace.uncertainty) : 0.0;
  trace.adjusted_threshold = std::max(trace.u - trace.tolerance, 0.0);
  trace.decision = decide(trace.ratio, trace.u, trace.tolerance);
  return trace;
}

StepTrace verify_token(double p_t_token, double p_d_token, const ProbDist& target,
                       const PolicyConfig& cfg, Rng& rng) {
  return make_trace(p_t_token, p_d_token, target.cached_max(), rng.uniform(), cfg);
}

ProbDist residual_distribution(const ProbDist& target, const ProbDist& draft) {
  if (target.size() != draft.size()) {
    throw ShapeError("residual_distribution: vocabulary sizes differ");
  }
  std::vector<double> residual(target.size());
  double mass = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    residual[i] = std::max(0.0, target[i] - draft[i]);
    mass += residual[i];
  }
  if (mass < 1e-12) return target;  // degenerate: distributions coincide
  double max_prob = 0.0;
  for (double& r : residual) {
    r /= mass;
    max_prob = std::max(max_prob, r);
  }
  return ProbDist(std::move(residual), max_prob);
}

VerificationOutcome verify_sequence(const DraftProposal& proposal,
                                    std::span<const ProbDist> target_rows,
                                    const PolicyConfig& cfg, Rng& rng) {
  const std::size_t gamma = proposal.tokens.size();
  if (proposal.draft_rows.size() != gamma || proposal.token_probs_draft.size() != gamma) {
    throw ShapeError("verify_sequence: proposal fields disagree on gamma");
  }
  if (target_rows.size() != gamma + 1) {
    throw ShapeError("verify_sequence: need gamma+1 target rows (bonus position included)");
  }

  VerificationOutcome out;
  out.traces.reserve(gamma);
  for (std::size_t i = 0; i < gamma; ++i) {
    const double p_t_token = target_rows[i][static_cast<std::size_t>(proposal.tokens[i])];
    const StepTrace trace =
        verify_token(p_t_token, proposal.token_probs_draft[i], target_rows[i], cfg, rng);
    out.traces.push_back(trace);
    if (trace.decision == Decision::Reject) {
      out.accepted_len = static_cast<int>(i);
      out.used_residual = true;
      const ProbDist residual = residual_distribution(target_rows[i], proposal.draft_rows[i]);
      out.correction_or_bonus = static_cast<std::int32_t>(sample(residual, rng));
      return out;
    }
  }
  out.accepted_len = static_cast<int>(gamma);
  out.used_residual = false;
  out.correction_or_bonus = static_cast<std::int32_t>(sample(target_rows[gamma], rng));
  return out;
}

}  // namespace specdec
