#pragma once

// SPDX-License-Identifier: Apache-2.0

/**
 * Experiment runner behind the CLI: config parsing with flag overrides,
 * baseline-vs-ears simulation reports, parameter sweeps, and the oracle
 * self-check suite.
 *
 * Reports are deterministic byte-for-byte given (config, seed): simulation
 * reports are JSON documents, sweeps are CSV with a fixed column schema,
 * both carrying a schema_version field. Every derived number in a report can
 * be recomputed from raw counters that appear next to it.
 */

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specdec/engine.hpp"

namespace specdec {

inline constexpr int kReportSchemaVersion = 1;

struct ExperimentConfig {
  std::uint64_t seed = 42;
  int vocab_size = 64;
  int order = 1;
  double divergence = 0.5;
  double temperature = 0.9;
  int gamma = 5;
  double beta = 0.1;
  double epsilon = 1e-10;
  int n_tokens = 10000;
  int batch_lanes = 1;
  double cost_target = 10.0;
  double cost_draft = 1.0;
  std::vector<std::string> policies = {"baseline", "ears"};
};

/// Flag values that win over the config file.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> beta;
  std::optional<int> gamma;
  std::optional<double> temperature;
  std::optional<int> lanes;
  std::optional<std::string> policy;  // baseline | ears | both
};

/// Parse a JSON config document. Unknown fields and out-of-range values are
/// ConfigErrors naming the offending field; syntax errors carry the parser's
/// position diagnostics.
ExperimentConfig parse_config_text(const std::string& json_text);

/// parse_config_text over a file, or defaults when path is empty.
ExperimentConfig load_config_file(const std::string& path);

void apply_overrides(ExperimentConfig& cfg, const ConfigOverrides& overrides);

/// Range/consistency validation (also run by the parser).
void validate_config(const ExperimentConfig& cfg);

/// Per-policy outcome of one workload, aggregated over lanes.
struct PolicyReport {
  std::string policy;
  RunStats stats;
  double accept_rate = 0.0;
  double accept_rate_oracle = 0.0;
  double mean_accepted_len = 0.0;
  double pardon_share = 0.0;
  double throughput = 0.0;
  double cost_per_token = 0.0;
  double oracle_throughput = 0.0;
  double mean_uncertainty = 0.0;
  double mean_entropy = 0.0;
  double bias_tv_oracle_mean = 0.0;
  double output_tv_empirical = 0.0;
};

/// Run one policy over the configured workload (all lanes of it).
PolicyReport run_policy(const ExperimentConfig& cfg, PolicyMode mode);

/// Baseline/ears comparison on identical seeds; returns the JSON report.
std::string run_simulate(const ExperimentConfig& cfg);

/// Axis sweep; returns the CSV table. Valid axes: beta, temperature, gamma,
/// divergence.
std::string run_sweep(const ExperimentConfig& cfg, const std::string& axis,
                      std::span<const double> grid);

/// Weighted mean TV between per-context empirical output frequencies and
/// the target distribution, over one or more emitted lane sequences.
double empirical_output_tv(const ModelPair& pair,
                           std::span<const std::vector<std::int32_t>> lane_tokens);

struct OracleCheckOptions {
  std::uint64_t seed = 42;
  int n_pairs = 100;
  int vocab_size = 16;
  std::uint64_t mc_trials = 1'000'000;
  int mc_pairs = 20;       // pairs given the Monte Carlo treatment
  int grid_pairs = 20;     // pairs checked against the grid oracle
  double grid_step = 1e-6;
};

struct OracleCheckResult {
  bool passed = false;
  std::string transcript;  // deterministic given options
};

/// Losslessness at beta=0, Monte Carlo agreement, beta monotonicity, and
/// grid-vs-closed-form agreement over seeded random pairs.
OracleCheckResult run_oracle_check(const OracleCheckOptions& options);

}  // namespace specdec
