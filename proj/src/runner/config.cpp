#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "allocrl/errors.hpp"
#include "allocrl/runner.hpp"

namespace allocrl {

namespace {

using nlohmann::json;

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* k) { return it.key() == k; }))
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
T fetch(const json& j, const char* key, const T& def, const std::string& where) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("key '" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

template <typename T>
T require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError("missing key '" + std::string(key) + "' in " + where);
  return fetch<T>(j, key, T{}, where);
}

// scalar -> replicated vector; array -> per-asset vector of matching length
Eigen::VectorXd per_asset(const json& j, const char* key, double def, int n,
                          const std::string& where) {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(n, def);
  if (!j.contains(key)) return out;
  const json& v = j.at(key);
  if (v.is_number()) return Eigen::VectorXd::Constant(n, v.get<double>());
  if (v.is_array()) {
    if (static_cast<int>(v.size()) != n)
      throw ConfigError("key '" + std::string(key) + "' in " + where + " must have " +
                        std::to_string(n) + " entries");
    for (int i = 0; i < n; ++i) {
      if (!v[i].is_number())
        throw ConfigError("key '" + std::string(key) + "' in " + where + " must be numeric");
      out[i] = v[i].get<double>();
    }
    return out;
  }
  throw ConfigError("key '" + std::string(key) + "' in " + where +
                    " must be a number or an array");
}

DataSpec parse_data(const json& j, const std::string& where) {
  require_keys(j, {"csv", "gbm", "fetch"}, where);
  const int sources = static_cast<int>(j.contains("csv")) + j.contains("gbm") +
                      j.contains("fetch");
  if (sources != 1)
    throw ConfigError(where + " must name exactly one of 'csv', 'gbm', 'fetch'");

  DataSpec out;
  if (j.contains("csv")) {
    out.kind = DataSpec::Kind::Csv;
    out.csv_path = require<std::string>(j, "csv", where);
    return out;
  }
  if (j.contains("gbm")) {
    out.kind = DataSpec::Kind::Gbm;
    const json& g = j.at("gbm");
    const std::string gw = where + ".gbm";
    require_keys(g, {"assets", "days", "seed", "drift", "volatility", "initial_price"}, gw);
    out.gbm.num_assets = require<int>(g, "assets", gw);
    out.gbm.num_days = require<int>(g, "days", gw);
    if (out.gbm.num_assets < 1) throw ConfigError(gw + ".assets must be >= 1");
    if (out.gbm.num_days < 2) throw ConfigError(gw + ".days must be >= 2");
    out.gbm.seed = fetch<std::uint64_t>(g, "seed", 0, gw);
    out.gbm.drift = per_asset(g, "drift", 0.0002, out.gbm.num_assets, gw);
    out.gbm.volatility = per_asset(g, "volatility", 0.01, out.gbm.num_assets, gw);
    out.gbm.initial_price = per_asset(g, "initial_price", 100.0, out.gbm.num_assets, gw);
    return out;
  }
  out.kind = DataSpec::Kind::Fetch;
  const json& f = j.at("fetch");
  const std::string fw = where + ".fetch";
  require_keys(f,
               {"tickers", "start", "end", "host", "port", "path_template", "https",
                "cache_file", "timeout_seconds"},
               fw);
  out.tickers = require<std::vector<std::string>>(f, "tickers", fw);
  out.start_date = require<std::string>(f, "start", fw);
  out.end_date = require<std::string>(f, "end", fw);
  out.provider.host = require<std::string>(f, "host", fw);
  out.provider.port = fetch<int>(f, "port", 80, fw);
  out.provider.path_template =
      fetch<std::string>(f, "path_template", out.provider.path_template, fw);
  out.provider.https = fetch<bool>(f, "https", false, fw);
  out.provider.cache_file = fetch<std::string>(f, "cache_file", "", fw);
  out.provider.timeout_seconds = fetch<int>(f, "timeout_seconds", 10, fw);
  return out;
}

EnvConfig parse_env(const json& j, const std::string& where) {
  // cost, reward choice, seed and projection are cell-level runner concerns;
  // naming them here would silently conflict, so they are rejected.
  require_keys(j,
               {"episode_length", "lookback", "initial_investment", "retain_cash",
                "dsr_alpha", "exact_compounding"},
               where);
  EnvConfig out;
  out.episode_length = fetch<int>(j, "episode_length", out.episode_length, where);
  out.lookback = fetch<int>(j, "lookback", out.lookback, where);
  out.initial_investment =
      fetch<double>(j, "initial_investment", out.initial_investment, where);
  out.retain_cash = fetch<bool>(j, "retain_cash", out.retain_cash, where);
  out.dsr_alpha = fetch<double>(j, "dsr_alpha", out.dsr_alpha, where);
  out.exact_compounding = fetch<bool>(j, "exact_compounding", out.exact_compounding, where);
  if (out.episode_length < 1) throw ConfigError(where + ".episode_length must be >= 1");
  if (out.lookback < 1) throw ConfigError(where + ".lookback must be >= 1");
  if (!(out.initial_investment > 0))
    throw ConfigError(where + ".initial_investment must be > 0");
  return out;
}

NafConfig parse_naf(const json& j, const std::string& w) {
  require_keys(j,
               {"layer_size", "batch_size", "buffer_size", "learning_rate", "tau", "gamma",
                "update_every", "number_of_updates", "warmup_steps", "ou_theta", "ou_sigma"},
               w);
  NafConfig c;
  c.layer_size = fetch<int>(j, "layer_size", c.layer_size, w);
  c.batch_size = fetch<int>(j, "batch_size", c.batch_size, w);
  c.buffer_size = fetch<int>(j, "buffer_size", c.buffer_size, w);
  c.learning_rate = fetch<double>(j, "learning_rate", c.learning_rate, w);
  c.tau = fetch<double>(j, "tau", c.tau, w);
  c.gamma = fetch<double>(j, "gamma", c.gamma, w);
  c.update_every = fetch<int>(j, "update_every", c.update_every, w);
  c.number_of_updates = fetch<int>(j, "number_of_updates", c.number_of_updates, w);
  c.warmup_steps = fetch<int>(j, "warmup_steps", c.warmup_steps, w);
  c.ou_theta = fetch<double>(j, "ou_theta", c.ou_theta, w);
  c.ou_sigma = fetch<double>(j, "ou_sigma", c.ou_sigma, w);
  return c;
}

ReinforceConfig parse_reinforce(const json& j, const std::string& w) {
  require_keys(j, {"hidden", "gamma", "learning_rate", "episodes_per_update"}, w);
  ReinforceConfig c;
  c.hidden = fetch<int>(j, "hidden", c.hidden, w);
  c.gamma = fetch<double>(j, "gamma", c.gamma, w);
  c.learning_rate = fetch<double>(j, "learning_rate", c.learning_rate, w);
  c.episodes_per_update = fetch<int>(j, "episodes_per_update", c.episodes_per_update, w);
  return c;
}

DdpgConfig parse_ddpg(const json& j, const std::string& w) {
  require_keys(j,
               {"hidden", "memory_size", "num_memory_fill_episodes", "gamma", "tau", "sigma",
                "theta", "actor_lr", "critic_lr", "batch_size", "warmup_steps"},
               w);
  DdpgConfig c;
  c.hidden = fetch<int>(j, "hidden", c.hidden, w);
  c.memory_size = fetch<int>(j, "memory_size", c.memory_size, w);
  c.num_memory_fill_episodes =
      fetch<int>(j, "num_memory_fill_episodes", c.num_memory_fill_episodes, w);
  c.gamma = fetch<double>(j, "gamma", c.gamma, w);
  c.tau = fetch<double>(j, "tau", c.tau, w);
  c.sigma = fetch<double>(j, "sigma", c.sigma, w);
  c.theta = fetch<double>(j, "theta", c.theta, w);
  c.actor_lr = fetch<double>(j, "actor_lr", c.actor_lr, w);
  c.critic_lr = fetch<double>(j, "critic_lr", c.critic_lr, w);
  c.batch_size = fetch<int>(j, "batch_size", c.batch_size, w);
  c.warmup_steps = fetch<int>(j, "warmup_steps", c.warmup_steps, w);
  return c;
}

Td3Config parse_td3(const json& j, const std::string& w) {
  require_keys(j,
               {"hidden", "memory_size", "max_action", "discount", "update_freq", "tau",
                "policy_noise_std", "policy_noise_clip", "actor_lr", "critic_lr",
                "batch_size", "exploration_noise", "add_lstm", "warmup_steps"},
               w);
  Td3Config c;
  c.hidden = fetch<int>(j, "hidden", c.hidden, w);
  c.memory_size = fetch<int>(j, "memory_size", c.memory_size, w);
  c.max_action = fetch<double>(j, "max_action", c.max_action, w);
  c.discount = fetch<double>(j, "discount", c.discount, w);
  c.update_freq = fetch<int>(j, "update_freq", c.update_freq, w);
  c.tau = fetch<double>(j, "tau", c.tau, w);
  c.policy_noise_std = fetch<double>(j, "policy_noise_std", c.policy_noise_std, w);
  c.policy_noise_clip = fetch<double>(j, "policy_noise_clip", c.policy_noise_clip, w);
  c.actor_lr = fetch<double>(j, "actor_lr", c.actor_lr, w);
  c.critic_lr = fetch<double>(j, "critic_lr", c.critic_lr, w);
  c.batch_size = fetch<int>(j, "batch_size", c.batch_size, w);
  c.exploration_noise = fetch<double>(j, "exploration_noise", c.exploration_noise, w);
  c.add_lstm = fetch<bool>(j, "add_lstm", c.add_lstm, w);
  if (c.add_lstm) throw ConfigError(w + ".add_lstm is recorded but not supported (no recurrent trunk)");
  c.warmup_steps = fetch<int>(j, "warmup_steps", c.warmup_steps, w);
  return c;
}

A2cConfig parse_a2c(const json& j, const std::string& w) {
  require_keys(j,
               {"hidden", "entropy_beta", "gamma", "actor_lr", "critic_lr", "max_grad_norm",
                "rollout_steps"},
               w);
  A2cConfig c;
  c.hidden = fetch<int>(j, "hidden", c.hidden, w);
  c.entropy_beta = fetch<double>(j, "entropy_beta", c.entropy_beta, w);
  c.gamma = fetch<double>(j, "gamma", c.gamma, w);
  c.actor_lr = fetch<double>(j, "actor_lr", c.actor_lr, w);
  c.critic_lr = fetch<double>(j, "critic_lr", c.critic_lr, w);
  c.max_grad_norm = fetch<double>(j, "max_grad_norm", c.max_grad_norm, w);
  c.rollout_steps = fetch<int>(j, "rollout_steps", c.rollout_steps, w);
  return c;
}

SacConfig parse_sac(const json& j, const std::string& w) {
  require_keys(j,
               {"hidden", "value_lr", "soft_q_lr", "policy_lr", "gamma", "mean_lambda",
                "std_lambda", "z_lambda", "soft_tau", "buffer_size", "batch_size", "alpha",
                "warmup_steps"},
               w);
  SacConfig c;
  c.hidden = fetch<int>(j, "hidden", c.hidden, w);
  c.value_lr = fetch<double>(j, "value_lr", c.value_lr, w);
  c.soft_q_lr = fetch<double>(j, "soft_q_lr", c.soft_q_lr, w);
  c.policy_lr = fetch<double>(j, "policy_lr", c.policy_lr, w);
  c.gamma = fetch<double>(j, "gamma", c.gamma, w);
  c.mean_lambda = fetch<double>(j, "mean_lambda", c.mean_lambda, w);
  c.std_lambda = fetch<double>(j, "std_lambda", c.std_lambda, w);
  c.z_lambda = fetch<double>(j, "z_lambda", c.z_lambda, w);
  c.soft_tau = fetch<double>(j, "soft_tau", c.soft_tau, w);
  c.buffer_size = fetch<int>(j, "buffer_size", c.buffer_size, w);
  c.batch_size = fetch<int>(j, "batch_size", c.batch_size, w);
  c.alpha = fetch<double>(j, "alpha", c.alpha, w);
  c.warmup_steps = fetch<int>(j, "warmup_steps", c.warmup_steps, w);
  return c;
}

TrpoConfig parse_trpo(const json& j, const std::string& w) {
  require_keys(j,
               {"hidden", "damping", "episode_length", "fisher_ratio", "gamma", "l2_reg",
                "lambda", "learning_rate", "max_iteration_number", "max_kl", "val_opt_iter",
                "value_memory", "cg_iterations", "backtrack_coeff", "max_backtracks"},
               w);
  TrpoConfig c;
  c.hidden = fetch<int>(j, "hidden", c.hidden, w);
  c.damping = fetch<double>(j, "damping", c.damping, w);
  c.episode_length = fetch<int>(j, "episode_length", c.episode_length, w);
  c.fisher_ratio = fetch<double>(j, "fisher_ratio", c.fisher_ratio, w);
  c.gamma = fetch<double>(j, "gamma", c.gamma, w);
  c.l2_reg = fetch<double>(j, "l2_reg", c.l2_reg, w);
  c.lambda = fetch<double>(j, "lambda", c.lambda, w);
  c.learning_rate = fetch<double>(j, "learning_rate", c.learning_rate, w);
  c.max_iteration_number = fetch<int>(j, "max_iteration_number", c.max_iteration_number, w);
  c.max_kl = fetch<double>(j, "max_kl", c.max_kl, w);
  c.val_opt_iter = fetch<int>(j, "val_opt_iter", c.val_opt_iter, w);
  c.value_memory = fetch<int>(j, "value_memory", c.value_memory, w);
  c.cg_iterations = fetch<int>(j, "cg_iterations", c.cg_iterations, w);
  c.backtrack_coeff = fetch<double>(j, "backtrack_coeff", c.backtrack_coeff, w);
  c.max_backtracks = fetch<int>(j, "max_backtracks", c.max_backtracks, w);
  return c;
}

PpoConfig parse_ppo(const json& j, const std::string& w) {
  require_keys(j,
               {"hidden", "timesteps_per_batch", "max_timesteps_per_episode", "n_updates",
                "learning_rate", "gamma", "clip", "gae_lambda"},
               w);
  PpoConfig c;
  c.hidden = fetch<int>(j, "hidden", c.hidden, w);
  c.timesteps_per_batch = fetch<int>(j, "timesteps_per_batch", c.timesteps_per_batch, w);
  c.max_timesteps_per_episode =
      fetch<int>(j, "max_timesteps_per_episode", c.max_timesteps_per_episode, w);
  c.n_updates = fetch<int>(j, "n_updates", c.n_updates, w);
  c.learning_rate = fetch<double>(j, "learning_rate", c.learning_rate, w);
  c.gamma = fetch<double>(j, "gamma", c.gamma, w);
  c.clip = fetch<double>(j, "clip", c.clip, w);
  c.gae_lambda = fetch<double>(j, "gae_lambda", c.gae_lambda, w);
  return c;
}

MarkowitzPolicyConfig parse_markowitz(const json& j, const std::string& w) {
  require_keys(j, {"num_targets", "risk_free", "ridge"}, w);
  MarkowitzPolicyConfig c;
  c.num_targets = fetch<int>(j, "num_targets", c.num_targets, w);
  c.risk_free = fetch<double>(j, "risk_free", c.risk_free, w);
  c.ridge = fetch<double>(j, "ridge", c.ridge, w);
  return c;
}

void validate_overrides(const std::string& kind, const json& overrides) {
  const std::string w = "agents." + kind;
  if (kind == "naf") parse_naf(overrides, w);
  else if (kind == "reinforce") parse_reinforce(overrides, w);
  else if (kind == "ddpg") parse_ddpg(overrides, w);
  else if (kind == "td3") parse_td3(overrides, w);
  else if (kind == "a2c") parse_a2c(overrides, w);
  else if (kind == "sac") parse_sac(overrides, w);
  else if (kind == "trpo") parse_trpo(overrides, w);
  else if (kind == "ppo") parse_ppo(overrides, w);
  else if (kind == "markowitz") parse_markowitz(overrides, w);
  else if (!overrides.empty())
    throw ConfigError(w + " accepts no overrides");
}

}  // namespace

const std::vector<std::string>& known_agent_kinds() {
  static const std::vector<std::string> kinds = {
      "uniform", "random", "buy_and_hold", "markowitz", "naf", "reinforce",
      "ddpg",    "td3",    "a2c",          "sac",       "trpo", "ppo"};
  return kinds;
}

bool agent_is_trainable(const std::string& kind) {
  return kind != "uniform" && kind != "random" && kind != "buy_and_hold" &&
         kind != "markowitz";
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::string& origin) {
  require_keys(j,
               {"data", "env", "agents", "training_timesteps", "train_runs", "test_runs",
                "trading_costs", "reward_functions", "train_fraction", "master_seed",
                "output_dir"},
               origin);
  ExperimentConfig out;
  if (!j.contains("data")) throw ConfigError("missing key 'data' in " + origin);
  out.data = parse_data(j.at("data"), origin + ".data");
  out.env = j.contains("env") ? parse_env(j.at("env"), origin + ".env") : EnvConfig{};

  if (!j.contains("agents") || !j.at("agents").is_array() || j.at("agents").empty())
    throw ConfigError(origin + ".agents must be a non-empty array");
  std::set<std::string> seen;
  for (const auto& entry : j.at("agents")) {
    AgentSpec spec;
    if (entry.is_string()) {
      spec.kind = entry.get<std::string>();
      spec.overrides = json::object();
    } else if (entry.is_object()) {
      if (!entry.contains("name"))
        throw ConfigError(origin + ".agents entries need a 'name'");
      spec.kind = fetch<std::string>(entry, "name", "", origin + ".agents");
      spec.overrides = entry;
      spec.overrides.erase("name");
    } else {
      throw ConfigError(origin + ".agents entries must be names or objects");
    }
    const auto& kinds = known_agent_kinds();
    if (std::find(kinds.begin(), kinds.end(), spec.kind) == kinds.end())
      throw ConfigError("unknown algorithm '" + spec.kind + "' in " + origin + ".agents");
    if (!seen.insert(spec.kind).second)
      throw ConfigError("duplicate agent '" + spec.kind + "' in " + origin + ".agents");
    validate_overrides(spec.kind, spec.overrides);
    out.agents.push_back(std::move(spec));
  }

  out.training_timesteps = fetch<long>(j, "training_timesteps", out.training_timesteps, origin);
  out.train_runs = fetch<int>(j, "train_runs", out.train_runs, origin);
  out.test_runs = fetch<int>(j, "test_runs", out.test_runs, origin);
  out.trading_costs =
      fetch<std::vector<double>>(j, "trading_costs", out.trading_costs, origin);
  out.reward_functions =
      fetch<std::vector<std::string>>(j, "reward_functions", out.reward_functions, origin);
  out.train_fraction = fetch<double>(j, "train_fraction", out.train_fraction, origin);
  out.master_seed = fetch<std::uint64_t>(j, "master_seed", out.master_seed, origin);
  out.output_dir = fetch<std::string>(j, "output_dir", out.output_dir.string(), origin);

  if (out.training_timesteps < 1)
    throw ConfigError(origin + ".training_timesteps must be >= 1");
  if (out.train_runs < 1) throw ConfigError(origin + ".train_runs must be >= 1");
  if (out.test_runs < 1) throw ConfigError(origin + ".test_runs must be >= 1");
  if (out.trading_costs.empty())
    throw ConfigError(origin + ".trading_costs must be non-empty");
  for (double c : out.trading_costs)
    if (!(c >= 0.0 && c < 1.0))
      throw ConfigError(origin + ".trading_costs values must lie in [0, 1)");
  if (out.reward_functions.empty())
    throw ConfigError(origin + ".reward_functions must be non-empty");
  std::set<std::string> rf_seen;
  for (const auto& r : out.reward_functions) {
    if (r != "log_return" && r != "differential_sharpe")
      throw ConfigError(origin + ".reward_functions: unknown reward '" + r + "'");
    if (!rf_seen.insert(r).second)
      throw ConfigError(origin + ".reward_functions: duplicate reward '" + r + "'");
  }
  if (!(out.train_fraction > 0.0 && out.train_fraction < 1.0))
    throw ConfigError(origin + ".train_fraction must lie in (0, 1)");
  return out;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_experiment_config(j, path.string());
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  json j;
  json data;
  switch (cfg.data.kind) {
    case DataSpec::Kind::Csv:
      data["csv"] = cfg.data.csv_path.string();
      break;
    case DataSpec::Kind::Gbm: {
      json g;
      g["assets"] = cfg.data.gbm.num_assets;
      g["days"] = cfg.data.gbm.num_days;
      g["seed"] = cfg.data.gbm.seed;
      g["drift"] = std::vector<double>(cfg.data.gbm.drift.begin(), cfg.data.gbm.drift.end());
      g["volatility"] =
          std::vector<double>(cfg.data.gbm.volatility.begin(), cfg.data.gbm.volatility.end());
      g["initial_price"] = std::vector<double>(cfg.data.gbm.initial_price.begin(),
                                               cfg.data.gbm.initial_price.end());
      data["gbm"] = g;
      break;
    }
    case DataSpec::Kind::Fetch: {
      json f;
      f["tickers"] = cfg.data.tickers;
      f["start"] = cfg.data.start_date;
      f["end"] = cfg.data.end_date;
      f["host"] = cfg.data.provider.host;
      f["port"] = cfg.data.provider.port;
      f["path_template"] = cfg.data.provider.path_template;
      f["https"] = cfg.data.provider.https;
      f["cache_file"] = cfg.data.provider.cache_file.string();
      f["timeout_seconds"] = cfg.data.provider.timeout_seconds;
      data["fetch"] = f;
      break;
    }
  }
  j["data"] = data;
  j["env"] = {{"episode_length", cfg.env.episode_length},
              {"lookback", cfg.env.lookback},
              {"initial_investment", cfg.env.initial_investment},
              {"retain_cash", cfg.env.retain_cash},
              {"dsr_alpha", cfg.env.dsr_alpha},
              {"exact_compounding", cfg.env.exact_compounding}};
  json agents = json::array();
  for (const auto& a : cfg.agents) {
    json e = a.overrides;
    e["name"] = a.kind;
    agents.push_back(e);
  }
  j["agents"] = agents;
  j["training_timesteps"] = cfg.training_timesteps;
  j["train_runs"] = cfg.train_runs;
  j["test_runs"] = cfg.test_runs;
  j["trading_costs"] = cfg.trading_costs;
  j["reward_functions"] = cfg.reward_functions;
  j["train_fraction"] = cfg.train_fraction;
  j["master_seed"] = cfg.master_seed;
  j["output_dir"] = cfg.output_dir.string();
  return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string dump = config_to_json(cfg).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::unique_ptr<Agent> make_agent(const std::string& kind, int state_dim, int action_dim,
                                  bool cash_last, const nlohmann::json& overrides,
                                  std::uint64_t seed) {
  const std::string w = "agents." + kind;
  if (kind == "uniform") return std::make_unique<UniformAgent>(action_dim);
  if (kind == "random") return std::make_unique<RandomAgent>(action_dim, seed);
  if (kind == "buy_and_hold")
    return std::make_unique<BuyAndHoldAgent>(action_dim, cash_last);
  if (kind == "markowitz")
    return std::make_unique<MarkowitzAgent>(action_dim, cash_last,
                                            parse_markowitz(overrides, w));
  if (kind == "naf")
    return std::make_unique<NafAgent>(state_dim, action_dim, parse_naf(overrides, w), seed);
  if (kind == "reinforce")
    return std::make_unique<ReinforceAgent>(state_dim, action_dim,
                                            parse_reinforce(overrides, w), seed);
  if (kind == "ddpg")
    return std::make_unique<DdpgAgent>(state_dim, action_dim, parse_ddpg(overrides, w), seed);
  if (kind == "td3")
    return std::make_unique<Td3Agent>(state_dim, action_dim, parse_td3(overrides, w), seed);
  if (kind == "a2c")
    return std::make_unique<A2cAgent>(state_dim, action_dim, parse_a2c(overrides, w), seed);
  if (kind == "sac")
    return std::make_unique<SacAgent>(state_dim, action_dim, parse_sac(overrides, w), seed);
  if (kind == "trpo")
    return std::make_unique<TrpoAgent>(state_dim, action_dim, parse_trpo(overrides, w), seed);
  if (kind == "ppo")
    return std::make_unique<PpoAgent>(state_dim, action_dim, parse_ppo(overrides, w), seed);
  throw ConfigError("unknown algorithm '" + kind + "'");
}

PriceSeries load_experiment_data(const DataSpec& data) {
  switch (data.kind) {
    case DataSpec::Kind::Csv:
      return load_csv(data.csv_path);
    case DataSpec::Kind::Gbm:
      return generate_gbm(data.gbm);
    case DataSpec::Kind::Fetch:
      return fetch_remote(data.tickers, data.start_date, data.end_date, data.provider);
  }
  throw ConfigError("unreachable data kind");
}

}  // namespace allocrl
