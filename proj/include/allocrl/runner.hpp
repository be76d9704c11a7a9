#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "allocrl/agents.hpp"
#include "allocrl/backtest.hpp"
#include "allocrl/market_data.hpp"

namespace allocrl {

struct DataSpec {
  enum class Kind { Csv, Gbm, Fetch };
  Kind kind = Kind::Csv;
  std::filesystem::path csv_path;
  GbmSpec gbm;
  ProviderConfig provider;
  std::vector<std::string> tickers;
  std::string start_date, end_date;
};

struct AgentSpec {
  std::string kind;
  nlohmann::json overrides;  // validated against the agent's config struct
};

struct ExperimentConfig {
  DataSpec data;
  EnvConfig env;  // base settings; cost/reward/seed/projection vary per cell
  std::vector<AgentSpec> agents;
  long training_timesteps = 10000;
  int train_runs = 3;
  int test_runs = 100;
  std::vector<double> trading_costs = {0.0, 0.001, 0.01};
  std::vector<std::string> reward_functions = {"log_return"};
  double train_fraction = 0.7;
  std::uint64_t master_seed = 0;
  std::filesystem::path output_dir = "run_output";
};

// Strict parsing: any unknown key at any nesting level is a ConfigError.
ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::string& origin);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
// FNV-1a over the canonical JSON dump of the config.
std::string config_hash(const ExperimentConfig& cfg);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

const std::vector<std::string>& known_agent_kinds();
bool agent_is_trainable(const std::string& kind);

// Builds a fresh agent; `overrides` must only name fields of that agent's
// config struct. state_dim is the flattened lookback window size.
std::unique_ptr<Agent> make_agent(const std::string& kind, int state_dim, int action_dim,
                                  bool cash_last, const nlohmann::json& overrides,
                                  std::uint64_t seed);

PriceSeries load_experiment_data(const DataSpec& data);

struct CellRecord {
  std::string agent;
  double cost = 0;
  std::string reward_fn;
  std::vector<std::uint64_t> run_seeds;
  std::string status;  // "ok" | "failed" | "skipped"
  std::string error;
  std::vector<std::string> artifacts;  // checkpoint directories
  double seconds = 0;
};

struct RunManifest {
  std::string hash;
  std::uint64_t master_seed = 0;
  std::vector<CellRecord> cells;
};

struct RunOptions {
  bool train = true;  // false: load checkpoints instead of training
  std::filesystem::path checkpoint_source;  // prior run dir for train=false
};

// Full protocol: per (agent, cost, reward) cell, train `train_runs` policies
// on the train split and roll each one `test_runs` times on the test split
// with random starts; aggregate, write reports and manifest under output_dir.
// Baselines skip training. A failing cell is recorded, not fatal.
RunManifest run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

// Reads a metrics.csv produced by write_reports back into cell aggregates.
std::vector<CellResult> read_metrics_csv(const std::filesystem::path& path);

}  // namespace allocrl
