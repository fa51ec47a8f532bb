// SPDX-License-Identifier: Apache-2.0

#include "specdec/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "specdec/oracle.hpp"

namespace specdec {

namespace {

using nlohmann::json;

// Fixed-width-enough decimal form; %.12g keeps CSV rows identical across
// reruns without printing 17-digit noise.
std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::uint64_t lane_seed(std::uint64_t seed, int lane) {
  return detail::mix64(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(lane + 1));
}

PolicyConfig policy_config(const ExperimentConfig& cfg, PolicyMode mode) {
  return PolicyConfig{cfg.beta, cfg.epsilon, mode};
}

void check_policy_names(const std::vector<std::string>& policies) {
  if (policies.empty()) throw ConfigError("config field 'policy': empty list");
  for (const auto& p : policies) {
    if (p != "baseline" && p != "ears") {
      throw ConfigError("config field 'policy': unknown policy '" + p + "'");
    }
  }
}

}  // namespace

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.vocab_size < 2) throw ConfigError("config field 'vocab_size': must be >= 2");
  if (cfg.order < 0) throw ConfigError("config field 'order': must be >= 0");
  if (!(cfg.divergence >= 0.0)) throw ConfigError("config field 'divergence': must be >= 0");
  if (!(cfg.temperature > 0.0)) throw ConfigError("config field 'temperature': must be > 0");
  if (cfg.gamma < 1) throw ConfigError("config field 'gamma': must be >= 1");
  if (!(cfg.beta >= 0.0)) throw ConfigError("config field 'beta': must be >= 0");
  if (!(cfg.epsilon > 0.0)) throw ConfigError("config field 'epsilon': must be > 0");
  if (cfg.n_tokens < 1) throw ConfigError("config field 'n_tokens': must be >= 1");
  if (cfg.batch_lanes < 1) throw ConfigError("config field 'batch_lanes': must be >= 1");
  if (!(cfg.cost_target > 0.0)) throw ConfigError("config field 'cost_target': must be > 0");
  if (!(cfg.cost_draft > 0.0)) throw ConfigError("config field 'cost_draft': must be > 0");
  check_policy_names(cfg.policies);
}

ExperimentConfig parse_config_text(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be a JSON object");

  static const std::map<std::string, int> known = {
      {"schema_version", 0}, {"seed", 0},       {"vocab_size", 0}, {"order", 0},
      {"divergence", 0},     {"temperature", 0}, {"gamma", 0},      {"beta", 0},
      {"epsilon", 0},        {"n_tokens", 0},    {"batch_lanes", 0}, {"cost_target", 0},
      {"cost_draft", 0},     {"policy", 0}};
  for (const auto& [key, value] : doc.items()) {
    (void)value;
    if (!known.count(key)) throw ConfigError("unknown config field '" + key + "'");
  }

  ExperimentConfig cfg;
  auto get_int = [&doc](const char* field, int lo, int hi) {
    const auto value = doc[field].get<std::int64_t>();
    if (value < lo || value > hi) {
      throw ConfigError(std::string("config field '") + field + "': out of range");
    }
    return static_cast<int>(value);
  };
  try {
    if (doc.contains("schema_version") &&
        doc["schema_version"].get<std::int64_t>() != kReportSchemaVersion) {
      throw ConfigError("config field 'schema_version': unsupported version");
    }
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("vocab_size")) cfg.vocab_size = get_int("vocab_size", 2, 1 << 20);
    if (doc.contains("order")) cfg.order = get_int("order", 0, 64);
    if (doc.contains("divergence")) cfg.divergence = doc["divergence"].get<double>();
    if (doc.contains("temperature")) cfg.temperature = doc["temperature"].get<double>();
    if (doc.contains("gamma")) cfg.gamma = get_int("gamma", 1, 1 << 16);
    if (doc.contains("beta")) cfg.beta = doc["beta"].get<double>();
    if (doc.contains("epsilon")) cfg.epsilon = doc["epsilon"].get<double>();
    if (doc.contains("n_tokens")) cfg.n_tokens = get_int("n_tokens", 1, 1 << 30);
    if (doc.contains("batch_lanes")) cfg.batch_lanes = get_int("batch_lanes", 1, 1 << 16);
    if (doc.contains("cost_target")) cfg.cost_target = doc["cost_target"].get<double>();
    if (doc.contains("cost_draft")) cfg.cost_draft = doc["cost_draft"].get<double>();
    if (doc.contains("policy")) {
      cfg.policies.clear();
      if (doc["policy"].is_string()) {
        cfg.policies.push_back(doc["policy"].get<std::string>());
      } else {
        for (const auto& p : doc["policy"]) cfg.policies.push_back(p.get<std::string>());
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field type error: ") + e.what());
  }
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  if (path.empty()) {
    ExperimentConfig cfg;
    validate_config(cfg);
    return cfg;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void apply_overrides(ExperimentConfig& cfg, const ConfigOverrides& overrides) {
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.beta) cfg.beta = *overrides.beta;
  if (overrides.gamma) cfg.gamma = *overrides.gamma;
  if (overrides.temperature) cfg.temperature = *overrides.temperature;
  if (overrides.lanes) cfg.batch_lanes = *overrides.lanes;
  if (overrides.policy) {
    if (*overrides.policy == "both") {
      cfg.policies = {"baseline", "ears"};
    } else {
      cfg.policies = {*overrides.policy};
    }
  }
  validate_config(cfg);
}

double empirical_output_tv(const ModelPair& pair,
                           std::span<const std::vector<std::int32_t>> lane_tokens) {
  // Every emitted token is a draw at its own true-prefix context, so the
  // sequences alone reconstruct the per-row output frequencies.
  std::map<std::size_t, std::vector<double>> counts;
  std::map<std::size_t, ProbDist> targets;
  std::uint64_t total = 0;
  std::vector<std::int32_t> prefix;
  for (const auto& tokens : lane_tokens) {
    prefix.clear();
    for (std::int32_t tok : tokens) {
      const Context ctx = make_context(prefix, pair.context_order());
      const std::size_t row = pair.context_row(ctx);
      auto [it, inserted] = counts.try_emplace(row, pair.vocab_size(), 0.0);
      if (inserted) targets.emplace(row, pair.target_dist(ctx));
      it->second[static_cast<std::size_t>(tok)] += 1.0;
      ++total;
      prefix.push_back(tok);
    }
  }
  if (total == 0) return 0.0;
  double weighted_tv = 0.0;
  for (const auto& [row, row_counts] : counts) {
    double row_total = 0.0;
    for (double c : row_counts) row_total += c;
    const ProbDist freq = normalize(row_counts);
    weighted_tv += (row_total / static_cast<double>(total)) * tv_distance(freq, targets.at(row));
  }
  return weighted_tv;
}

PolicyReport run_policy(const ExperimentConfig& cfg, PolicyMode mode) {
  const ModelPair pair =
      make_coupled_pair(cfg.seed, cfg.vocab_size, cfg.order, cfg.divergence, cfg.temperature);
  const PolicyConfig pc = policy_config(cfg, mode);

  std::vector<std::uint64_t> seeds(cfg.batch_lanes);
  for (int l = 0; l < cfg.batch_lanes; ++l) seeds[static_cast<std::size_t>(l)] = lane_seed(cfg.seed, l);
  std::vector<PolicyConfig> configs{pc};
  std::vector<RunResult> lanes = run_batch(pair, configs, cfg.gamma, cfg.n_tokens, seeds);

  PolicyReport report;
  report.policy = (mode == PolicyMode::Ears) ? "ears" : "baseline";
  report.stats.accepted_len_histogram.assign(static_cast<std::size_t>(cfg.gamma) + 1, 0);
  std::vector<std::vector<std::int32_t>> sequences;
  sequences.reserve(lanes.size());
  for (RunResult& lane : lanes) {
    const RunStats& s = lane.stats;
    report.stats.tokens_emitted += s.tokens_emitted;
    report.stats.target_calls += s.target_calls;
    report.stats.draft_tokens_generated += s.draft_tokens_generated;
    report.stats.primary_accepts += s.primary_accepts;
    report.stats.pardon_accepts += s.pardon_accepts;
    report.stats.rejects += s.rejects;
    for (std::size_t k = 0; k < s.accepted_len_histogram.size(); ++k) {
      report.stats.accepted_len_histogram[k] += s.accepted_len_histogram[k];
    }
    report.stats.sum_uncertainty += s.sum_uncertainty;
    report.stats.sum_entropy += s.sum_entropy;
    report.stats.sum_oracle_bias_tv += s.sum_oracle_bias_tv;
    report.stats.sum_oracle_accept_rate += s.sum_oracle_accept_rate;
    report.stats.oracle_expected_emitted += s.oracle_expected_emitted;
    sequences.push_back(std::move(lane.tokens));
  }

  const RunStats& s = report.stats;
  const auto examined = static_cast<double>(s.draft_tokens_examined());
  const auto generated = static_cast<double>(s.draft_tokens_generated);
  const auto steps = static_cast<double>(s.target_calls);
  const CostModel cost{cfg.cost_target, cfg.cost_draft};
  report.accept_rate =
      examined > 0 ? static_cast<double>(s.primary_accepts + s.pardon_accepts) / examined : 0.0;
  report.accept_rate_oracle = generated > 0 ? s.sum_oracle_accept_rate / generated : 0.0;
  double len_sum = 0.0;
  for (std::size_t k = 0; k < s.accepted_len_histogram.size(); ++k) {
    len_sum += static_cast<double>(k) * static_cast<double>(s.accepted_len_histogram[k]);
  }
  report.mean_accepted_len = steps > 0 ? len_sum / steps : 0.0;
  report.pardon_share = examined > 0 ? static_cast<double>(s.pardon_accepts) / examined : 0.0;
  report.throughput = throughput_estimate(s, cost);
  report.cost_per_token = 1.0 / report.throughput;
  report.oracle_throughput = oracle_throughput_estimate(s, cost);
  report.mean_uncertainty = generated > 0 ? s.sum_uncertainty / generated : 0.0;
  report.mean_entropy = generated > 0 ? s.sum_entropy / generated : 0.0;
  report.bias_tv_oracle_mean = generated > 0 ? s.sum_oracle_bias_tv / generated : 0.0;
  report.output_tv_empirical = empirical_output_tv(pair, sequences);
  return report;
}

namespace {

json config_to_json(const ExperimentConfig& cfg) {
  return json{{"schema_version", kReportSchemaVersion},
              {"seed", cfg.seed},
              {"vocab_size", cfg.vocab_size},
              {"order", cfg.order},
              {"divergence", cfg.divergence},
              {"temperature", cfg.temperature},
              {"gamma", cfg.gamma},
              {"beta", cfg.beta},
              {"epsilon", cfg.epsilon},
              {"n_tokens", cfg.n_tokens},
              {"batch_lanes", cfg.batch_lanes},
              {"cost_target", cfg.cost_target},
              {"cost_draft", cfg.cost_draft},
              {"policy", cfg.policies}};
}

json policy_to_json(const PolicyReport& report) {
  const RunStats& s = report.stats;
  return json{{"tokens_emitted", s.tokens_emitted},
              {"target_calls", s.target_calls},
              {"draft_tokens_generated", s.draft_tokens_generated},
              {"draft_tokens_examined", s.draft_tokens_examined()},
              {"primary_accepts", s.primary_accepts},
              {"pardon_accepts", s.pardon_accepts},
              {"rejects", s.rejects},
              {"accepted_len_histogram", s.accepted_len_histogram},
              {"sum_uncertainty", s.sum_uncertainty},
              {"sum_entropy", s.sum_entropy},
              {"sum_oracle_bias_tv", s.sum_oracle_bias_tv},
              {"sum_oracle_accept_rate", s.sum_oracle_accept_rate},
              {"oracle_expected_emitted", s.oracle_expected_emitted},
              {"accept_rate", report.accept_rate},
              {"accept_rate_oracle", report.accept_rate_oracle},
              {"mean_accepted_len", report.mean_accepted_len},
              {"pardon_share", report.pardon_share},
              {"throughput", report.throughput},
              {"cost_per_token", report.cost_per_token},
              {"oracle_throughput", report.oracle_throughput},
              {"mean_uncertainty", report.mean_uncertainty},
              {"mean_entropy", report.mean_entropy},
              {"bias_tv_oracle_mean", report.bias_tv_oracle_mean},
              {"output_tv_empirical", report.output_tv_empirical}};
}

}  // namespace

std::string run_simulate(const ExperimentConfig& cfg) {
  validate_config(cfg);
  json policies = json::object();
  std::optional<PolicyReport> baseline, ears;
  const bool want_baseline =
      std::count(cfg.policies.begin(), cfg.policies.end(), "baseline") > 0;
  const bool want_ears = std::count(cfg.policies.begin(), cfg.policies.end(), "ears") > 0;
  if (want_baseline) {
    baseline = run_policy(cfg, PolicyMode::Baseline);
    policies["baseline"] = policy_to_json(*baseline);
  }
  if (want_ears) {
    ears = run_policy(cfg, PolicyMode::Ears);
    policies["ears"] = policy_to_json(*ears);
  }

  json report{{"schema_version", kReportSchemaVersion},
              {"kind", "simulate"},
              {"config", config_to_json(cfg)},
              {"policies", policies}};
  if (baseline && ears) {
    report["uplift"] = json{
        {"measured_throughput_pct", 100.0 * (ears->throughput / baseline->throughput - 1.0)},
        {"oracle_predicted_pct",
         100.0 * (ears->oracle_throughput / baseline->oracle_throughput - 1.0)}};
  }
  return report.dump(2) + "\n";
}

std::string run_sweep(const ExperimentConfig& cfg, const std::string& axis,
                      std::span<const double> grid) {
  validate_config(cfg);
  if (grid.empty()) throw ConfigError("sweep grid must be non-empty");
  if (axis != "beta" && axis != "temperature" && axis != "gamma" && axis != "divergence") {
    throw ConfigError("unknown sweep axis '" + axis + "'");
  }

  std::ostringstream csv;
  csv << "schema_version,axis,value,policy,seed,vocab_size,order,divergence,temperature,gamma,"
         "beta,n_tokens,batch_lanes,tokens_emitted,target_calls,draft_tokens_generated,"
         "draft_tokens_examined,primary_accepts,pardon_accepts,rejects,accept_rate,"
         "accept_rate_oracle,mean_accepted_len,pardon_share,mean_uncertainty,mean_entropy,"
         "throughput,cost_per_token,oracle_throughput,uplift_pct,oracle_uplift_pct,"
         "bias_tv_oracle,output_tv_empirical\n";

  const bool want_baseline =
      std::count(cfg.policies.begin(), cfg.policies.end(), "baseline") > 0;
  const bool want_ears = std::count(cfg.policies.begin(), cfg.policies.end(), "ears") > 0;

  for (double value : grid) {
    ExperimentConfig point = cfg;
    if (axis == "beta") {
      point.beta = value;
    } else if (axis == "temperature") {
      point.temperature = value;
    } else if (axis == "gamma") {
      const int g = static_cast<int>(std::llround(value));
      if (std::abs(value - g) > 1e-9) throw ConfigError("gamma grid values must be integers");
      point.gamma = g;
    } else {
      point.divergence = value;
    }
    validate_config(point);

    // Baseline is always run: it is the uplift reference at this grid point.
    const PolicyReport baseline = run_policy(point, PolicyMode::Baseline);
    std::optional<PolicyReport> ears;
    if (want_ears) ears = run_policy(point, PolicyMode::Ears);

    auto emit = [&](const PolicyReport& r, double uplift_pct, double oracle_uplift_pct) {
      const RunStats& s = r.stats;
      csv << kReportSchemaVersion << ',' << axis << ',' << fmt(value) << ',' << r.policy << ','
          << point.seed << ',' << point.vocab_size << ',' << point.order << ','
          << fmt(point.divergence) << ',' << fmt(point.temperature) << ',' << point.gamma << ','
          << fmt(point.beta) << ',' << point.n_tokens << ',' << point.batch_lanes << ','
          << s.tokens_emitted << ',' << s.target_calls << ',' << s.draft_tokens_generated << ','
          << s.draft_tokens_examined() << ',' << s.primary_accepts << ',' << s.pardon_accepts
          << ',' << s.rejects << ',' << fmt(r.accept_rate) << ',' << fmt(r.accept_rate_oracle)
          << ',' << fmt(r.mean_accepted_len) << ',' << fmt(r.pardon_share) << ','
          << fmt(r.mean_uncertainty) << ',' << fmt(r.mean_entropy) << ',' << fmt(r.throughput)
          << ',' << fmt(r.cost_per_token) << ',' << fmt(r.oracle_throughput) << ','
          << fmt(uplift_pct) << ',' << fmt(oracle_uplift_pct) << ',' << fmt(r.bias_tv_oracle_mean)
          << ',' << fmt(r.output_tv_empirical) << '\n';
    };

    if (want_baseline) emit(baseline, 0.0, 0.0);
    if (ears) {
      emit(*ears, 100.0 * (ears->throughput / baseline.throughput - 1.0),
           100.0 * (ears->oracle_throughput / baseline.oracle_throughput - 1.0));
    }
  }
  return csv.str();
}

namespace {

// Coupled random pair in the style of the synthetic models: target from
// standard normal logits, draft from the same logits plus a perturbation
// whose scale itself varies pair to pair.
std::pair<ProbDist, ProbDist> random_pair(Rng& rng, int vocab_size) {
  std::vector<double> target_logits(vocab_size), draft_logits(vocab_size);
  const double divergence = 0.25 + 1.25 * rng.uniform();
  for (int i = 0; i < vocab_size; ++i) {
    target_logits[static_cast<std::size_t>(i)] = rng.normal();
    draft_logits[static_cast<std::size_t>(i)] =
        target_logits[static_cast<std::size_t>(i)] + divergence * rng.normal();
  }
  return {temperature_scale(target_logits, 1.0), temperature_scale(draft_logits, 1.0)};
}

struct McSummary {
  double accept_rate = 0.0;
  std::vector<std::uint64_t> output_counts;
};

// One-step Monte Carlo over the real verifier: draft from p_d, verify, on
// rejection resample from the residual.
McSummary monte_carlo_step(const ProbDist& p_t, const ProbDist& p_d, const PolicyConfig& cfg,
                           std::uint64_t trials, Rng& rng) {
  McSummary mc;
  mc.output_counts.assign(p_t.size(), 0);
  const ProbDist residual = residual_distribution(p_t, p_d);
  std::uint64_t accepted = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const std::size_t x = sample(p_d, rng);
    const StepTrace trace = verify_token(p_t[x], p_d[x], p_t, cfg, rng);
    if (trace.decision == Decision::Reject) {
      ++mc.output_counts[sample(residual, rng)];
    } else {
      ++accepted;
      ++mc.output_counts[x];
    }
  }
  mc.accept_rate = static_cast<double>(accepted) / static_cast<double>(trials);
  return mc;
}

bool counts_within_multinomial_bound(const std::vector<std::uint64_t>& counts,
                                     const ProbDist& expected, std::uint64_t trials,
                                     double z_threshold, double* worst_z = nullptr) {
  bool ok = true;
  double worst = 0.0;
  for (std::size_t y = 0; y < expected.size(); ++y) {
    const double n = static_cast<double>(trials);
    const double mean = n * expected[y];
    const double sigma = std::sqrt(std::max(n * expected[y] * (1.0 - expected[y]), 0.0));
    const double diff = std::abs(static_cast<double>(counts[y]) - mean);
    // +1 continuity slack keeps near-zero-mass entries meaningful.
    if (diff > z_threshold * sigma + 1.0) ok = false;
    if (sigma > 0.0) worst = std::max(worst, diff / sigma);
  }
  if (worst_z) *worst_z = worst;
  return ok;
}

// z such that a two-sided normal tail of size alpha_total spread over
// n_tests comparisons stays below it (Bonferroni). Keeps the suite's false
// alarm rate at alpha_total no matter how many entries are compared.
double simultaneous_z(double alpha_total, std::size_t n_tests) {
  const double tail = alpha_total / (2.0 * static_cast<double>(n_tests));
  double lo = 1.0, hi = 10.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double p = 0.5 * std::erfc(mid / std::sqrt(2.0));
    (p > tail ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

OracleCheckResult run_oracle_check(const OracleCheckOptions& options) {
  if (options.n_pairs < 1) throw ConfigError("oracle-check: n_pairs must be >= 1");
  if (options.vocab_size < 2) throw ConfigError("oracle-check: vocab_size must be >= 2");

  std::ostringstream out;
  bool all_ok = true;
  auto line = [&](bool ok, const std::string& text) {
    out << (ok ? "[ok]   " : "[FAIL] ") << text << "\n";
    if (!ok) all_ok = false;
  };

  Rng rng(options.seed, 0xC0FFEEULL);
  std::vector<std::pair<ProbDist, ProbDist>> pairs;
  pairs.reserve(static_cast<std::size_t>(options.n_pairs));
  for (int i = 0; i < options.n_pairs; ++i) pairs.push_back(random_pair(rng, options.vocab_size));

  // 1. Losslessness at beta = 0: induced == p_t entrywise.
  {
    double worst = 0.0;
    int worst_pair = -1;
    for (int i = 0; i < options.n_pairs; ++i) {
      const auto& [p_t, p_d] = pairs[static_cast<std::size_t>(i)];
      const ProbDist induced = exact_induced_distribution(p_t, p_d, 0.0, 1e-10);
      for (std::size_t y = 0; y < p_t.size(); ++y) {
        const double err = std::abs(induced[y] - p_t[y]);
        if (err > worst) {
          worst = err;
          worst_pair = i;
        }
      }
    }
    const bool ok = worst < 1e-12;
    line(ok, "losslessness beta=0: max |induced - p_t| = " + fmt(worst) +
                 (ok ? "" : " (pair " + std::to_string(worst_pair) + ")"));
  }

  // 2. Accept-rate identity at beta = 0: rate == 1 - TV.
  {
    double worst = 0.0;
    for (const auto& [p_t, p_d] : pairs) {
      const auto accept = exact_accept_prob(p_t, p_d, 0.0, 1e-10);
      const double rate = overall_accept_rate(p_d, accept);
      worst = std::max(worst, std::abs(rate - (1.0 - tv_distance(p_t, p_d))));
    }
    line(worst < 1e-12, "accept-rate identity beta=0: max |rate - (1 - TV)| = " + fmt(worst));
  }

  // 3. Beta monotonicity of the overall accept rate.
  {
    const double betas[] = {0.0, 0.05, 0.1, 0.2};
    int violations = 0;
    for (const auto& [p_t, p_d] : pairs) {
      double prev = -1.0;
      for (double beta : betas) {
        const double rate = overall_accept_rate(p_d, exact_accept_prob(p_t, p_d, beta, 1e-10));
        if (rate < prev) ++violations;
        prev = rate;
      }
    }
    line(violations == 0,
         "beta monotonicity over {0,0.05,0.1,0.2}: " + std::to_string(violations) + " violations");
  }

  // 4. Grid-integration oracle vs closed form.
  {
    const int n = std::min(options.grid_pairs, options.n_pairs);
    const double betas[] = {0.0, 0.1};
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto& [p_t, p_d] = pairs[static_cast<std::size_t>(i)];
      for (double beta : betas) {
        const auto closed = exact_accept_prob(p_t, p_d, beta, 1e-10);
        const auto grid = grid_accept_prob(p_t, p_d, beta, 1e-10, options.grid_step);
        for (std::size_t x = 0; x < closed.size(); ++x) {
          worst = std::max(worst, std::abs(closed[x] - grid[x]));
        }
        const ProbDist induced_closed = exact_induced_distribution(p_t, p_d, beta, 1e-10);
        const ProbDist induced_grid =
            grid_induced_distribution(p_t, p_d, beta, 1e-10, options.grid_step);
        for (std::size_t y = 0; y < induced_closed.size(); ++y) {
          worst = std::max(worst, std::abs(induced_closed[y] - induced_grid[y]));
        }
      }
    }
    line(worst < 1e-5, "grid oracle vs closed form on " + std::to_string(n) +
                           " pairs: max abs diff = " + fmt(worst));
  }

  // 5. Monte Carlo agreement over the real verifier. The z threshold is
  // simultaneous over every compared quantity, so a clean implementation
  // passes for any seed with ~99% probability while systematic bias at the
  // 1e6-trial scale still fails loudly.
  {
    const int n = std::min(options.mc_pairs, options.n_pairs);
    const double betas[] = {0.0, 0.1};
    std::size_t n_tests = 0;
    for (int i = 0; i < n; ++i) {
      n_tests += 2 * (1 + pairs[static_cast<std::size_t>(i)].first.size());
    }
    const double z_max = simultaneous_z(0.01, n_tests);
    bool ok = true;
    double worst_rate_z = 0.0, worst_entry_z = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto& [p_t, p_d] = pairs[static_cast<std::size_t>(i)];
      for (double beta : betas) {
        const PolicyConfig pc{beta, 1e-10, PolicyMode::Ears};
        const StepOracle oracle = make_step_oracle(p_t, p_d, beta);
        Rng mc_rng(options.seed, 0xD1CE00ULL + static_cast<std::uint64_t>(i) * 2 +
                                     (beta > 0.0 ? 1 : 0));
        const McSummary mc = monte_carlo_step(p_t, p_d, pc, options.mc_trials, mc_rng);
        const double n_trials = static_cast<double>(options.mc_trials);
        const double sigma = std::sqrt(
            oracle.overall_accept_rate * (1.0 - oracle.overall_accept_rate) / n_trials);
        const double rate_z =
            sigma > 0.0 ? std::abs(mc.accept_rate - oracle.overall_accept_rate) / sigma : 0.0;
        worst_rate_z = std::max(worst_rate_z, rate_z);
        if (rate_z > z_max) ok = false;
        double entry_z = 0.0;
        if (!counts_within_multinomial_bound(mc.output_counts, oracle.induced,
                                             options.mc_trials, z_max, &entry_z)) {
          ok = false;
        }
        worst_entry_z = std::max(worst_entry_z, entry_z);
      }
    }
    line(ok, "Monte Carlo vs oracle on " + std::to_string(n) + " pairs x " +
                 std::to_string(options.mc_trials) + " trials: worst rate z = " +
                 fmt(worst_rate_z) + ", worst entry z = " + fmt(worst_entry_z) +
                 " (simultaneous bound " + fmt(z_max) + ")");
  }

  out << (all_ok ? "oracle-check: PASS\n" : "oracle-check: FAIL\n");
  return OracleCheckResult{all_ok, out.str()};
}

}  // namespace specdec
