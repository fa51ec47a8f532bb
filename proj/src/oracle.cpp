// SPDX-License-Identifier: Apache-2.0

#include "specdec/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace specdec {

double token_accept_prob(double p_t_token, double p_d_token, double max_p_t, double beta,
                         double epsilon) {
  const double ratio = acceptance_ratio(p_t_token, p_d_token, epsilon);
  const double tol = tolerance(beta, 1.0 - max_p_t);
  return std::min(1.0, ratio + tol);
}

std::vector<double> exact_accept_prob(const ProbDist& p_t, const ProbDist& p_d, double beta,
                                      double epsilon) {
  if (p_t.size() != p_d.size()) throw ShapeError("exact_accept_prob: vocabulary sizes differ");
  if (!(beta >= 0.0)) throw DomainError("beta must be >= 0");
  std::vector<double> accept(p_t.size());
  for (std::size_t x = 0; x < p_t.size(); ++x) {
    accept[x] = token_accept_prob(p_t[x], p_d[x], p_t.cached_max(), beta, epsilon);
  }
  return accept;
}

double overall_accept_rate(const ProbDist& p_d, std::span<const double> accept_prob) {
  double rate = 0.0;
  for (std::size_t x = 0; x < p_d.size(); ++x) rate += p_d[x] * accept_prob[x];
  return rate;
}

namespace {

ProbDist induced_from_accept(const ProbDist& p_t, const ProbDist& p_d,
                             std::span<const double> accept) {
  const ProbDist residual = residual_distribution(p_t, p_d);
  const double reject_mass = std::max(0.0, 1.0 - overall_accept_rate(p_d, accept));
  std::vector<double> induced(p_t.size());
  for (std::size_t y = 0; y < p_t.size(); ++y) {
    induced[y] = p_d[y] * accept[y] + reject_mass * residual[y];
  }
  return ProbDist::from_probs(std::move(induced));
}

}  // namespace

ProbDist exact_induced_distribution(const ProbDist& p_t, const ProbDist& p_d, double beta,
                                    double epsilon) {
  return induced_from_accept(p_t, p_d, exact_accept_prob(p_t, p_d, beta, epsilon));
}

StepOracle make_step_oracle(const ProbDist& p_t, const ProbDist& p_d, double beta,
                            double epsilon) {
  StepOracle oracle{p_t, p_d, beta, epsilon,
                    exact_accept_prob(p_t, p_d, beta, epsilon),
                    0.0,
                    exact_induced_distribution(p_t, p_d, beta, epsilon),
                    0.0};
  oracle.overall_accept_rate = overall_accept_rate(p_d, oracle.accept_prob_per_token);
  oracle.bias_tv = tv_distance(oracle.induced, p_t);
  return oracle;
}

double exact_expected_accepted_length(std::span<const double> per_position_rates) {
  double expected = 0.0;
  double prefix_prob = 1.0;
  for (double rate : per_position_rates) {
    prefix_prob *= rate;
    expected += prefix_prob;
  }
  return expected;
}

std::vector<double> grid_accept_prob(const ProbDist& p_t, const ProbDist& p_d, double beta,
                                     double epsilon, double u_step) {
  if (p_t.size() != p_d.size()) throw ShapeError("grid_accept_prob: vocabulary sizes differ");
  if (!(u_step > 0.0 && u_step <= 1.0)) throw DomainError("u_step must be in (0, 1]");
  const std::size_t n_nodes = static_cast<std::size_t>(std::llround(1.0 / u_step));
  const double tol = tolerance(beta, 1.0 - p_t.cached_max());

  std::vector<double> accept(p_t.size());
  for (std::size_t x = 0; x < p_t.size(); ++x) {
    const double ratio = acceptance_ratio(p_t[x], p_d[x], epsilon);
    std::size_t accepted = 0;
    for (std::size_t j = 0; j < n_nodes; ++j) {
      const double u = (static_cast<double>(j) + 0.5) / static_cast<double>(n_nodes);
      if (decide(ratio, u, tol) != Decision::Reject) ++accepted;
    }
    accept[x] = static_cast<double>(accepted) / static_cast<double>(n_nodes);
  }
  return accept;
}

ProbDist grid_induced_distribution(const ProbDist& p_t, const ProbDist& p_d, double beta,
                                   double epsilon, double u_step) {
  return induced_from_accept(p_t, p_d, grid_accept_prob(p_t, p_d, beta, epsilon, u_step));
}

}  // namespace specdec
