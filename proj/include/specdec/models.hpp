#pragma once

// SPDX-License-Identifier: Apache-2.0

/**
 * Seedable synthetic target/draft model pairs.
 *
 * Both models are order-k Markov tables over a shared vocabulary: target
 * logits are seeded standard normals per (context row, token), draft logits
 * add a seeded normal perturbation scaled by the divergence knob. Queries
 * apply temperature softmax on the stored logit row, so the returned
 * distribution is the post-temperature sampling distribution and its cached
 * max responds to temperature directly.
 *
 * Context lookup is total: any token suffix hashes to exactly one table row;
 * collisions are permitted and harmless. ModelPair is immutable after
 * construction and safe to query concurrently.
 */

#include <cstdint>
#include <span>
#include <vector>

#include "specdec/dist.hpp"

namespace specdec {

/// Last-k token suffix identifying a model context.
struct Context {
  std::vector<std::int32_t> last_tokens;
};

/// Suffix of at most `order` trailing tokens.
Context make_context(std::span<const std::int32_t> sequence, int order);

class ModelPair {
 public:
  int vocab_size() const { return vocab_size_; }
  int context_order() const { return order_; }
  double divergence() const { return divergence_; }
  double temperature() const { return temperature_; }
  std::size_t context_rows() const { return rows_; }

  /// Table row for a context; total over all suffixes.
  std::size_t context_row(const Context& ctx) const;

  ProbDist target_dist(const Context& ctx) const;
  ProbDist draft_dist(const Context& ctx) const;

  /// Raw logit rows, exposed for diagnostics and tests.
  std::span<const double> target_logits_row(const Context& ctx) const;
  std::span<const double> draft_logits_row(const Context& ctx) const;

 private:
  friend ModelPair make_coupled_pair(std::uint64_t seed, int vocab_size, int order,
                                     double divergence, double temperature);
  ModelPair() = default;

  int vocab_size_ = 0;
  int order_ = 0;
  double divergence_ = 0.0;
  double temperature_ = 1.0;
  std::size_t rows_ = 0;
  std::vector<double> target_table_;  // rows_ x vocab_size_, row-major
  std::vector<double> draft_table_;
};

/// Build a coupled pair: draft logits = target logits + divergence * noise,
/// all drawn from streams split off the one seed.
ModelPair make_coupled_pair(std::uint64_t seed, int vocab_size, int order,
                            double divergence, double temperature);

}  // namespace specdec
