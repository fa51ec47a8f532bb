#pragma once

// SPDX-License-Identifier: Apache-2.0

/**
 * Finite categorical distributions over a token vocabulary.
 *
 * A ProbDist is immutable after construction and always carries a cached
 * maximum probability, so downstream uncertainty lookups never rescan the
 * vector. Construction rejects anything that is not a probability vector
 * within 1e-9 instead of silently renormalizing; upstream bugs surface here.
 */

#include <cstddef>
#include <vector>

#include "specdec/errors.hpp"
#include "specdec/rng.hpp"

namespace specdec {

class ProbDist {
 public:
  /// Validating constructor: entries in [0,1], finite, sum within 1e-9 of 1.
  static ProbDist from_probs(std::vector<double> probs);

  const std::vector<double>& probs() const { return probs_; }
  double cached_max() const { return cached_max_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

 private:
  friend ProbDist normalize(const std::vector<double>& weights);
  friend ProbDist temperature_scale(const std::vector<double>& logits, double temperature);
  friend ProbDist residual_distribution(const ProbDist& target, const ProbDist& draft);

  // Trusted path for values already known to form a distribution.
  ProbDist(std::vector<double> probs, double cached_max)
      : probs_(std::move(probs)), cached_max_(cached_max) {}

  std::vector<double> probs_;
  double cached_max_ = 0.0;
};

/// Sum tolerance accepted at construction.
inline constexpr double kSumTolerance = 1e-9;

/// Scale non-negative weights to a distribution. Weights already summing to 1
/// within the construction tolerance pass through unchanged, which makes
/// normalize(normalize(w).probs()) bitwise idempotent.
ProbDist normalize(const std::vector<double>& weights);

/// Softmax of logits/temperature with max-subtraction for stability.
ProbDist temperature_scale(const std::vector<double>& logits, double temperature);

/// Total variation distance, 0.5 * sum |a_i - b_i|, in [0, 1].
double tv_distance(const ProbDist& a, const ProbDist& b);

/// Shannon entropy in nats, with 0 * log 0 == 0.
double entropy(const ProbDist& d);

/// Inverse-CDF index for a given uniform value: token intervals are
/// left-closed, cumulative sums run in ascending index order.
std::size_t index_from_uniform(const ProbDist& d, double u);

/// Draw one token index. Consumes exactly one uniform draw.
std::size_t sample(const ProbDist& d, Rng& rng);

}  // namespace specdec
