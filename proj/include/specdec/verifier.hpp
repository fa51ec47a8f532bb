#pragma once

// SPDX-License-Identifier: Apache-2.0

/**
 * Per-token accept/pardon/reject decisions for speculative decoding.
 *
 * Two policies share one decision kernel:
 *
 *   Baseline  accept x when R >= U, with R = P_t(x) / max(P_d(x), epsilon).
 *   Ears      adds a pardon path: when R < U, still accept if
 *             R >= max(U - tolerance, 0), tolerance = beta * (1 - max P_t).
 *
 * The threshold clamp means U <= tolerance accepts anything, including R = 0;
 * that is the intended behavior of a non-negative adjusted threshold. All
 * comparisons are closed (>=). Uncertainty reads the distribution's cached
 * max and never rescans the probability vector.
 *
 * On rejection the correction token is drawn from the residual distribution
 * norm(max(0, P_t - P_d)) under both policies, so the beta = 0 scheme is
 * exactly lossless and any output bias is attributable to the pardon path
 * alone.
 *
 * Draw accounting is strict: one uniform per verified position, one per
 * correction or bonus sample. The batch engine depends on this.
 */

#include <cstdint>
#include <span>
#include <vector>

#include "specdec/dist.hpp"

namespace specdec {

enum class PolicyMode { Baseline, Ears };

struct PolicyConfig {
  double beta = 0.1;       // base tolerance, >= 0
  double epsilon = 1e-10;  // division guard for P_d
  PolicyMode mode = PolicyMode::Ears;

  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

enum class Decision : std::uint8_t { AcceptPrimary, AcceptPardon, Reject };

/// Full record of one verification decision.
struct StepTrace {
  double ratio = 0.0;               // R = P_t(x) / max(P_d(x), epsilon)
  double u = 0.0;                   // uniform draw in [0, 1)
  double uncertainty = 0.0;         // 1 - max(P_t)
  double tolerance = 0.0;           // beta * uncertainty (0 under Baseline)
  double adjusted_threshold = 0.0;  // max(u - tolerance, 0)
  Decision decision = Decision::Reject;

  friend bool operator==(const StepTrace&, const StepTrace&) = default;
};

/// Gamma draft tokens with their per-position draft distributions.
struct DraftProposal {
  std::vector<std::int32_t> tokens;
  std::vector<ProbDist> draft_rows;
  std::vector<double> token_probs_draft;  // draft_rows[i][tokens[i]]
};

struct VerificationOutcome {
  int accepted_len = 0;  // index of first Reject, or gamma if none
  std::vector<StepTrace> traces;
  std::int32_t correction_or_bonus = 0;
  bool used_residual = false;  // true iff accepted_len < gamma
};

/// 1 - max(P_t), read from the cached max.
inline double uncertainty(const ProbDist& target) { return 1.0 - target.cached_max(); }

inline double tolerance(double beta, double uncert) { return beta * uncert; }

/// Clamped acceptance ratio; finite even for a zero draft probability.
double acceptance_ratio(double p_t_token, double p_d_token, double epsilon);

/// The three-way rule on precomputed quantities. Exposed so tests and the
/// grid oracle can drive it with chosen uniforms.
Decision decide(double ratio, double u, double tol);

/// Decision kernel on gathered scalars. The scalar path and the batch
/// engine both call this, which is what makes them bit-identical.
StepTrace make_trace(double p_t_token, double p_d_token, double max_p_t, double u,
                     const PolicyConfig& cfg);

/// Verify one draft token. Consumes exactly one uniform draw.
StepTrace verify_token(double p_t_token, double p_d_token, const ProbDist& target,
                       const PolicyConfig& cfg, Rng& rng);

/// norm(max(0, target - draft)); falls back to target when the residual mass
/// is below 1e-12.
ProbDist residual_distribution(const ProbDist& target, const ProbDist& draft);

/// Verify a gamma-token proposal against target rows for positions
/// 1..gamma+1 (the last row is the bonus position). On the first Reject the
/// correction token is sampled from the residual at that position; on full
/// acceptance a bonus token is sampled from the last row.
VerificationOutcome verify_sequence(const DraftProposal& proposal,
                                    std::span<const ProbDist> target_rows,
                                    const PolicyConfig& cfg, Rng& rng);

}  // namespace specdec
