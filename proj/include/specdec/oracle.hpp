#pragma once

// SPDX-License-Identifier: Apache-2.0

/**
 * Exact one-step analysis of the verification policies.
 *
 * Integrating the three-way decision rule over the uniform draw gives a
 * closed-form per-token acceptance probability
 *
 *   a(x) = min(1, R(x) + beta * (1 - max P_t)),   R under the epsilon clamp,
 *
 * and, combined with the residual fallback, the induced output law
 *
 *   induced(y) = P_d(y) a(y) + (1 - sum_x P_d(x) a(x)) * residual(y).
 *
 * At beta = 0 this reduces to the classical lossless scheme: induced == P_t
 * and the overall accept rate equals 1 - TV(P_t, P_d).
 *
 * The closed form is this module's own derivation, so a second, independent
 * route is provided: midpoint grid integration over U that evaluates the
 * decision rule itself at every grid node. Statistical tests treat the two
 * oracles plus Monte Carlo over the real verifier as three routes that must
 * agree.
 */

#include <span>
#include <vector>

#include "specdec/dist.hpp"
#include "specdec/verifier.hpp"

namespace specdec {

/// Acceptance probability for one realized token, given the cached max of
/// its target row. min(1, R + beta * (1 - max_p_t)).
double token_accept_prob(double p_t_token, double p_d_token, double max_p_t, double beta,
                         double epsilon);

/// Closed-form a(x) for every vocabulary entry.
std::vector<double> exact_accept_prob(const ProbDist& p_t, const ProbDist& p_d, double beta,
                                      double epsilon);

/// sum_x P_d(x) a(x).
double overall_accept_rate(const ProbDist& p_d, std::span<const double> accept_prob);

/// Output law of one draft-verify-correct step.
ProbDist exact_induced_distribution(const ProbDist& p_t, const ProbDist& p_d, double beta,
                                    double epsilon);

/// One-step ground truth bundle for a (P_t, P_d, beta) triple.
struct StepOracle {
  ProbDist p_t;
  ProbDist p_d;
  double beta = 0.0;
  double epsilon = 1e-10;
  std::vector<double> accept_prob_per_token;
  double overall_accept_rate = 0.0;
  ProbDist induced;
  double bias_tv = 0.0;  // TV(induced, p_t)
};

StepOracle make_step_oracle(const ProbDist& p_t, const ProbDist& p_d, double beta,
                            double epsilon = 1e-10);

/// E[accepted prefix length] = sum_{k=1..gamma} prod_{i<=k} rate_i for
/// independent per-position acceptance rates.
double exact_expected_accepted_length(std::span<const double> per_position_rates);

/// Second oracle: midpoint integration of the decision rule over U with the
/// given step (default 1e-6). Runs the same three-way comparison the
/// verifier uses at every grid node instead of the closed-form algebra.
std::vector<double> grid_accept_prob(const ProbDist& p_t, const ProbDist& p_d, double beta,
                                     double epsilon, double u_step = 1e-6);

ProbDist grid_induced_distribution(const ProbDist& p_t, const ProbDist& p_d, double beta,
                                   double epsilon, double u_step = 1e-6);

}  // namespace specdec
