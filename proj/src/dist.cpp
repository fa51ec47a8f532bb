// SPDX-License-Identifier: Apache-2.0

#include "specdec/dist.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace specdec {

namespace {

double checked_sum_and_max(const std::vector<double>& probs, double& max_out) {
  double sum = 0.0;
  double max = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) {
      throw NormalizationError("probability entry negative or non-finite");
    }
    sum += p;
    max = std::max(max, p);
  }
  max_out = max;
  return sum;
}

}  // namespace

ProbDist ProbDist::from_probs(std::vector<double> probs) {
  if (probs.empty()) throw NormalizationError("empty probability vector");
  double max = 0.0;
  const double sum = checked_sum_and_max(probs, max);
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw NormalizationError("probabilities sum to " + std::to_string(sum) +
                             ", outside 1 +/- 1e-9");
  }
  return ProbDist(std::move(probs), max);
}

ProbDist normalize(const std::vector<double>& weights) {
  if (weights.empty()) throw NormalizationError("empty weight vector");
  double max = 0.0;
  const double sum = checked_sum_and_max(weights, max);
  if (sum <= 0.0) throw NormalizationError("weights sum to zero");
  if (std::abs(sum - 1.0) <= kSumTolerance) {
    return ProbDist(weights, max);  // already normalized: pass through bitwise
  }
  std::vector<double> probs(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) probs[i] = weights[i] / sum;
  return ProbDist(std::move(probs), max / sum);
}

ProbDist temperature_scale(const std::vector<double>& logits, double temperature) {
  if (logits.empty()) throw DomainError("empty logit vector");
  if (!(temperature > 0.0)) throw DomainError("temperature must be > 0");
  double max_logit = logits[0];
  for (double l : logits) {
    if (!std::isfinite(l)) throw DomainError("non-finite logit");
    max_logit = std::max(max_logit, l);
  }
  std::vector<double> probs(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp((logits[i] - max_logit) / temperature);
    sum += probs[i];
  }
  double max_prob = 0.0;
  for (double& p : probs) {
    p /= sum;
    max_prob = std::max(max_prob, p);
  }
  return ProbDist(std::move(probs), max_prob);
}

double tv_distance(const ProbDist& a, const ProbDist& b) {
  if (a.size() != b.size()) throw ShapeError("tv_distance: vocabulary sizes differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return 0.5 * acc;
}

double entropy(const ProbDist& d) {
  double h = 0.0;
  for (double p : d.probs()) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

std::size_t index_from_uniform(const ProbDist& d, double u) {
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double p = d[i];
    if (p > 0.0) last_positive = i;
    cum += p;
    if (u < cum) return i;
  }
  // u landed in the rounding tail past the accumulated sum.
  return last_positive;
}

std::size_t sample(const ProbDist& d, Rng& rng) {
  return index_from_uniform(d, rng.uniform());
}

}  // namespace specdec
