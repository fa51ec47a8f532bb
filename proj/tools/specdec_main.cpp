// SPDX-License-Identifier: Apache-2.0

// specdec: speculative-decoding verification experiments.
//
//   specdec simulate     baseline-vs-ears run, JSON report
//   specdec sweep        beta/temperature/gamma/divergence sweep, CSV table
//   specdec oracle-check oracle invariant suite, pass/fail transcript
//
// Exit codes: 0 success, 1 runtime/check failure, 2 invalid config or usage.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "specdec/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct CommonFlags {
  std::string config_path;
  std::string out_path;
  specdec::ConfigOverrides overrides;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file (defaults used when omitted)");
  cmd->add_option("--out", flags.out_path, "output path (stdout when omitted)");
  cmd->add_option("--seed", flags.overrides.seed, "workload seed override");
  cmd->add_option("--beta", flags.overrides.beta, "ears base tolerance override");
  cmd->add_option("--gamma", flags.overrides.gamma, "speculation length override");
  cmd->add_option("--temperature", flags.overrides.temperature, "sampling temperature override");
  cmd->add_option("--lanes", flags.overrides.lanes, "batch lane count override");
  cmd->add_option("--policy", flags.overrides.policy, "baseline | ears | both")
      ->check(CLI::IsMember({"baseline", "ears", "both"}));
}

specdec::ExperimentConfig resolve_config(const CommonFlags& flags) {
  specdec::ExperimentConfig cfg = specdec::load_config_file(flags.config_path);
  specdec::apply_overrides(cfg, flags.overrides);
  return cfg;
}

int write_output(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return kExitOk;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot open output path: " << out_path << "\n";
    return kExitRuntime;
  }
  out << text;
  return kExitOk;
}

std::vector<double> parse_grid(const std::string& grid_text) {
  std::vector<double> grid;
  std::size_t pos = 0;
  while (pos < grid_text.size()) {
    std::size_t next = grid_text.find(',', pos);
    if (next == std::string::npos) next = grid_text.size();
    const std::string item = grid_text.substr(pos, next - pos);
    try {
      std::size_t used = 0;
      const double value = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      grid.push_back(value);
    } catch (const std::exception&) {
      throw specdec::ConfigError("invalid grid value '" + item + "'");
    }
    pos = next + 1;
  }
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speculative-decoding verification experiments"};
  app.require_subcommand(1);

  CommonFlags sim_flags;
  CLI::App* sim = app.add_subcommand("simulate", "run baseline and ears on one workload");
  add_common_flags(sim, sim_flags);

  CommonFlags sweep_flags;
  std::string axis;
  std::string grid_text;
  CLI::App* sweep = app.add_subcommand("sweep", "sweep one axis over a value grid");
  add_common_flags(sweep, sweep_flags);
  sweep->add_option("--axis", axis, "beta | temperature | gamma | divergence")
      ->required()
      ->check(CLI::IsMember({"beta", "temperature", "gamma", "divergence"}));
  sweep->add_option("--grid", grid_text, "comma-separated grid values")->required();

  std::uint64_t check_seed = 42;
  int check_pairs = 100;
  int check_vocab = 16;
  std::string check_out;
  CLI::App* check = app.add_subcommand("oracle-check", "run the oracle invariant suite");
  check->add_option("--seed", check_seed, "pair-generation seed");
  check->add_option("--pairs", check_pairs, "number of random (P_t, P_d) pairs");
  check->add_option("--vocab", check_vocab, "vocabulary size of the pairs");
  check->add_option("--out", check_out, "output path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (sim->parsed()) {
      return write_output(sim_flags.out_path, specdec::run_simulate(resolve_config(sim_flags)));
    }
    if (sweep->parsed()) {
      const std::vector<double> grid = parse_grid(grid_text);
      return write_output(sweep_flags.out_path,
                          specdec::run_sweep(resolve_config(sweep_flags), axis, grid));
    }
    if (check->parsed()) {
      specdec::OracleCheckOptions options;
      options.seed = check_seed;
      options.n_pairs = check_pairs;
      options.vocab_size = check_vocab;
      const specdec::OracleCheckResult result = specdec::run_oracle_check(options);
      const int write_rc = write_output(check_out, result.transcript);
      if (write_rc != kExitOk) return write_rc;
      return result.passed ? kExitOk : kExitRuntime;
    }
  } catch (const specdec::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
