// SPDX-License-Identifier: Apache-2.0

#include "specdec/models.hpp"

#include <algorithm>

namespace specdec {

namespace {

// Fixed table height for order >= 1; order 0 collapses to a single row,
// which doubles as the fixed-distribution workload used by the oracle tests.
constexpr std::size_t kContextRows = 1024;

constexpr std::uint64_t kTargetStream = 0x746172676574ULL;  // "target"
constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;     // "noise"

}  // namespace

Context make_context(std::span<const std::int32_t> sequence, int order) {
  const std::size_t take = std::min<std::size_t>(sequence.size(), static_cast<std::size_t>(order));
  Context ctx;
  ctx.last_tokens.assign(sequence.end() - take, sequence.end());
  return ctx;
}

std::size_t ModelPair::context_row(const Context& ctx) const {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (std::int32_t tok : ctx.last_tokens) {
    h = detail::mix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(tok)) +
                           0x9e3779b97f4a7c15ULL));
  }
  return static_cast<std::size_t>(h % rows_);
}

std::span<const double> ModelPair::target_logits_row(const Context& ctx) const {
  const std::size_t row = context_row(ctx);
  return {target_table_.data() + row * vocab_size_, static_cast<std::size_t>(vocab_size_)};
}

std::span<const double> ModelPair::draft_logits_row(const Context& ctx) const {
  const std::size_t row = context_row(ctx);
  return {draft_table_.data() + row * vocab_size_, static_cast<std::size_t>(vocab_size_)};
}

ProbDist ModelPair::target_dist(const Context& ctx) const {
  const auto row = target_logits_row(ctx);
  return temperature_scale(std::vector<double>(row.begin(), row.end()), temperature_);
}

ProbDist ModelPair::draft_dist(const Context& ctx) const {
  const auto row = draft_logits_row(ctx);
  return temperature_scale(std::vector<double>(row.begin(), row.end()), temperature_);
}

ModelPair make_coupled_pair(std::uint64_t seed, int vocab_size, int order, double divergence,
                            double temperature) {
  if (vocab_size < 2) throw DomainError("vocab_size must be >= 2");
  if (order < 0) throw DomainError("context order must be >= 0");
  if (!(temperature > 0.0)) throw DomainError("temperature must be > 0");
  if (!(divergence >= 0.0)) throw DomainError("divergence must be >= 0");

  ModelPair pair;
  pair.vocab_size_ = vocab_size;
  pair.order_ = order;
  pair.divergence_ = divergence;
  pair.temperature_ = temperature;
  pair.rows_ = (order == 0) ? 1 : kContextRows;

  const std::size_t n = pair.rows_ * static_cast<std::size_t>(vocab_size);
  pair.target_table_.resize(n);
  pair.draft_table_.resize(n);

  Rng target_rng(seed, kTargetStream);
  Rng noise_rng(seed, kNoiseStream);
  for (std::size_t i = 0; i < n; ++i) {
    pair.target_table_[i] = target_rng.normal();
    pair.draft_table_[i] = pair.target_table_[i] + divergence * noise_rng.normal();
  }
  return pair;
}

}  // namespace specdec
