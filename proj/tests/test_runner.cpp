#include <filesystem>
#include <string>
#include <vector>

#include "allocrl/errors.hpp"
#include "allocrl/runner.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace allocrl;
using nlohmann::json;

namespace {

json minimal_config() {
  return json::parse(R"({
    "data": {"gbm": {"assets": 2, "days": 30}},
    "agents": ["uniform"]
  })");
}

// small but complete experiment: 3 agents x 2 costs x 2 rewards
json tiny_experiment(const std::filesystem::path& out_dir) {
  json j = json::parse(R"({
    "data": {"gbm": {"assets": 2, "days": 60, "seed": 11,
                     "drift": 0.001, "volatility": 0.005}},
    "env": {"lookback": 4, "episode_length": 10},
    "agents": ["uniform", "random",
               {"name": "reinforce", "hidden": 8, "episodes_per_update": 1}],
    "training_timesteps": 60,
    "train_runs": 2,
    "test_runs": 3,
    "trading_costs": [0.0, 0.002],
    "reward_functions": ["log_return", "differential_sharpe"],
    "train_fraction": 0.6,
    "master_seed": 42
  })");
  j["output_dir"] = out_dir.string();
  return j;
}

}  // namespace

TEST_CASE("a minimal config fills every field with its default") {
  const ExperimentConfig cfg = parse_experiment_config(minimal_config(), "test");
  CHECK(cfg.data.kind == DataSpec::Kind::Gbm);
  CHECK(cfg.data.gbm.num_assets == 2);
  CHECK(cfg.data.gbm.num_days == 30);
  CHECK(cfg.data.gbm.seed == 0);
  REQUIRE(cfg.data.gbm.drift.size() == 2);
  CHECK(cfg.data.gbm.drift[0] == 0.0002);
  CHECK(cfg.data.gbm.volatility[1] == 0.01);
  CHECK(cfg.data.gbm.initial_price[0] == 100.0);

  const EnvConfig env_defaults;
  CHECK(cfg.env.lookback == env_defaults.lookback);
  CHECK(cfg.env.episode_length == env_defaults.episode_length);
  CHECK(cfg.env.initial_investment == env_defaults.initial_investment);
  CHECK(cfg.env.retain_cash == env_defaults.retain_cash);

  REQUIRE(cfg.agents.size() == 1);
  CHECK(cfg.agents[0].kind == "uniform");
  CHECK(cfg.agents[0].overrides.empty());
  CHECK(cfg.training_timesteps == 10000);
  CHECK(cfg.train_runs == 3);
  CHECK(cfg.test_runs == 100);
  CHECK(cfg.trading_costs == std::vector<double>{0.0, 0.001, 0.01});
  CHECK(cfg.reward_functions == std::vector<std::string>{"log_return"});
  CHECK(cfg.train_fraction == 0.7);
  CHECK(cfg.master_seed == 0);
  CHECK(cfg.output_dir == std::filesystem::path("run_output"));
}

TEST_CASE("unknown keys are rejected at every nesting level") {
  auto parse = [](json j) { return parse_experiment_config(j, "test"); };

  json top = minimal_config();
  top["surprise"] = 1;
  CHECK_THROWS_AS(parse(top), ConfigError);

  json data = minimal_config();
  data["data"]["extra"] = true;
  CHECK_THROWS_AS(parse(data), ConfigError);

  json gbm = minimal_config();
  gbm["data"]["gbm"]["sigma"] = 0.1;  // not the field's name
  CHECK_THROWS_AS(parse(gbm), ConfigError);

  json env = minimal_config();
  env["env"] = {{"lookback", 5}, {"window", 5}};
  CHECK_THROWS_AS(parse(env), ConfigError);

  // cost and reward selection live at experiment level, not in env
  json env_cost = minimal_config();
  env_cost["env"] = {{"trading_cost_ratio", 0.01}};
  CHECK_THROWS_AS(parse(env_cost), ConfigError);

  json agent = minimal_config();
  agent["agents"] = json::array({json{{"name", "ppo"}, {"clips", 0.2}}});
  CHECK_THROWS_AS(parse(agent), ConfigError);

  json fetch_extra = json::parse(R"({
    "data": {"fetch": {"tickers": ["A"], "start": "2020-01-01", "end": "2020-02-01",
                       "host": "h", "verify": true}},
    "agents": ["uniform"]
  })");
  CHECK_THROWS_AS(parse(fetch_extra), ConfigError);
}

TEST_CASE("the data block names exactly one source") {
  json none = minimal_config();
  none["data"] = json::object();
  CHECK_THROWS_AS(parse_experiment_config(none, "test"), ConfigError);

  json both = minimal_config();
  both["data"]["csv"] = "prices.csv";
  CHECK_THROWS_AS(parse_experiment_config(both, "test"), ConfigError);

  json csv = minimal_config();
  csv["data"] = {{"csv", "prices.csv"}};
  const ExperimentConfig cfg = parse_experiment_config(csv, "test");
  CHECK(cfg.data.kind == DataSpec::Kind::Csv);
  CHECK(cfg.data.csv_path == std::filesystem::path("prices.csv"));

  json missing = minimal_config();
  missing.erase("data");
  CHECK_THROWS_AS(parse_experiment_config(missing, "test"), ConfigError);
}

TEST_CASE("agent entries are validated strictly") {
  auto with_agents = [](json agents) {
    json j = minimal_config();
    j["agents"] = std::move(agents);
    return j;
  };
  CHECK_THROWS_AS(parse_experiment_config(with_agents(json::array()), "test"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(with_agents(json("uniform")), "test"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(with_agents(json::array({"qlearning"})), "test"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_experiment_config(with_agents(json::array({"uniform", "uniform"})), "test"),
      ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(with_agents(json::array({42})), "test"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_experiment_config(with_agents(json::array({json{{"hidden", 8}}})), "test"),
      ConfigError);
  // wrong override type
  CHECK_THROWS_AS(parse_experiment_config(
                      with_agents(json::array({json{{"name", "ppo"}, {"clip", "wide"}}})),
                      "test"),
                  ConfigError);
  // baselines without config structs accept no overrides
  CHECK_THROWS_AS(parse_experiment_config(
                      with_agents(json::array({json{{"name", "uniform"}, {"hidden", 8}}})),
                      "test"),
                  ConfigError);
  // markowitz is a baseline but has real knobs
  const ExperimentConfig cfg = parse_experiment_config(
      with_agents(json::array({json{{"name", "markowitz"}, {"num_targets", 20}}})), "test");
  CHECK(cfg.agents[0].overrides.at("num_targets") == 20);
}

TEST_CASE("experiment-level fields are range checked") {
  auto mutate = [](const char* key, json value) {
    json j = minimal_config();
    j[key] = std::move(value);
    return j;
  };
  CHECK_THROWS_AS(parse_experiment_config(mutate("training_timesteps", 0), "t"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(mutate("train_runs", 0), "t"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(mutate("test_runs", 0), "t"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(mutate("trading_costs", json::array()), "t"),
                  ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(mutate("trading_costs", {-0.001}), "t"),
                  ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(mutate("trading_costs", {1.0}), "t"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(mutate("reward_functions", {"sortino"}), "t"),
                  ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(
                      mutate("reward_functions", {"log_return", "log_return"}), "t"),
                  ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(mutate("train_fraction", 0.0), "t"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(mutate("train_fraction", 1.0), "t"), ConfigError);
  CHECK_THROWS_AS(parse_experiment_config(mutate("train_fraction", "most"), "t"),
                  ConfigError);

  json env_bad = minimal_config();
  env_bad["env"] = {{"lookback", 0}};
  CHECK_THROWS_AS(parse_experiment_config(env_bad, "t"), ConfigError);
  env_bad["env"] = {{"episode_length", 0}};
  CHECK_THROWS_AS(parse_experiment_config(env_bad, "t"), ConfigError);
  env_bad["env"] = {{"initial_investment", 0.0}};
  CHECK_THROWS_AS(parse_experiment_config(env_bad, "t"), ConfigError);

  json gbm_bad = minimal_config();
  gbm_bad["data"]["gbm"]["days"] = 1;
  CHECK_THROWS_AS(parse_experiment_config(gbm_bad, "t"), ConfigError);
  gbm_bad = minimal_config();
  gbm_bad["data"]["gbm"]["assets"] = 0;
  CHECK_THROWS_AS(parse_experiment_config(gbm_bad, "t"), ConfigError);
}

TEST_CASE("per-asset gbm parameters accept scalars and matched arrays") {
  json scalar = minimal_config();
  scalar["data"]["gbm"]["drift"] = 0.003;
  const ExperimentConfig a = parse_experiment_config(scalar, "t");
  CHECK(a.data.gbm.drift[0] == 0.003);
  CHECK(a.data.gbm.drift[1] == 0.003);

  json arr = minimal_config();
  arr["data"]["gbm"]["drift"] = {0.001, 0.002};
  const ExperimentConfig b = parse_experiment_config(arr, "t");
  CHECK(b.data.gbm.drift[0] == 0.001);
  CHECK(b.data.gbm.drift[1] == 0.002);

  json short_arr = minimal_config();
  short_arr["data"]["gbm"]["drift"] = {0.001};
  CHECK_THROWS_AS(parse_experiment_config(short_arr, "t"), ConfigError);

  json mixed = minimal_config();
  mixed["data"]["gbm"]["drift"] = {0.001, "fast"};
  CHECK_THROWS_AS(parse_experiment_config(mixed, "t"), ConfigError);

  json neither = minimal_config();
  neither["data"]["gbm"]["drift"] = "up";
  CHECK_THROWS_AS(parse_experiment_config(neither, "t"), ConfigError);
}

TEST_CASE("config hashes are stable and sensitive") {
  const ExperimentConfig a = parse_experiment_config(minimal_config(), "t");
  const ExperimentConfig b = parse_experiment_config(minimal_config(), "t");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);

  json seeded = minimal_config();
  seeded["master_seed"] = 7;
  CHECK(config_hash(parse_experiment_config(seeded, "t")) != config_hash(a));

  json tuned = minimal_config();
  tuned["agents"] = json::array({json{{"name", "ppo"}, {"hidden", 32}}});
  json tuned2 = tuned;
  tuned2["agents"][0]["hidden"] = 64;
  CHECK(config_hash(parse_experiment_config(tuned, "t")) !=
        config_hash(parse_experiment_config(tuned2, "t")));
}

TEST_CASE("configs load from disk with clear failure modes") {
  testutil::TempDir tmp("runner_cfg");
  CHECK_THROWS_AS(load_experiment_config(tmp / "absent.json"), FileNotFound);

  const auto broken = tmp / "broken.json";
  testutil::write_file(broken, "{\"data\": ");
  CHECK_THROWS_AS(load_experiment_config(broken), ConfigError);

  const auto good = tmp / "good.json";
  testutil::write_file(good, minimal_config().dump());
  const ExperimentConfig cfg = load_experiment_config(good);
  CHECK(cfg.agents[0].kind == "uniform");
}

TEST_CASE("every known algorithm can be constructed and act") {
  const int lookback = 3, assets = 2;
  const int state_dim = lookback * assets, action_dim = assets;
  Observation obs;
  obs.window.setConstant(lookback, assets, 0.01);

  for (const auto& kind : known_agent_kinds()) {
    auto agent = make_agent(kind, state_dim, action_dim, false, json::object(), 5);
    REQUIRE(agent != nullptr);
    agent->begin_episode(obs);
    const Eigen::VectorXd a = agent->act(obs, false);
    CHECK(a.size() == action_dim);
    CHECK(a.allFinite());
    CHECK(agent->trainable() == agent_is_trainable(kind));
  }
  CHECK_FALSE(agent_is_trainable("markowitz"));
  CHECK(agent_is_trainable("sac"));

  CHECK_THROWS_AS(make_agent("qlearning", state_dim, action_dim, false, json::object(), 5),
                  ConfigError);
  CHECK_THROWS_AS(
      make_agent("sac", state_dim, action_dim, false, json{{"hidden", "big"}}, 5),
      ConfigError);
  CHECK_THROWS_AS(
      make_agent("sac", state_dim, action_dim, false, json{{"width", 8}}, 5),
      ConfigError);
}

TEST_CASE("a small experiment runs end to end and writes every report") {
  testutil::TempDir tmp("runner_e2e");
  const auto out = tmp / "out";
  const ExperimentConfig cfg = parse_experiment_config(tiny_experiment(out), "t");
  const RunManifest manifest = run_experiment(cfg);

  CHECK(manifest.hash == config_hash(cfg));
  CHECK(manifest.master_seed == 42);
  REQUIRE(manifest.cells.size() == 3 * 2 * 2);

  std::vector<std::uint64_t> all_seeds;
  for (const auto& cell : manifest.cells) {
    CHECK(cell.status == "ok");
    CHECK(cell.error.empty());
    CHECK(cell.seconds >= 0.0);
    if (cell.agent == "reinforce") {
      CHECK(cell.run_seeds.size() == 2);   // train_runs
      CHECK(cell.artifacts.size() == 2);   // one checkpoint dir per run
      for (const auto& dir : cell.artifacts) {
        CHECK(std::filesystem::exists(std::filesystem::path(dir) / "checkpoint.json"));
      }
    } else {
      CHECK(cell.run_seeds.size() == 1);
      CHECK(cell.artifacts.empty());
    }
    all_seeds.insert(all_seeds.end(), cell.run_seeds.begin(), cell.run_seeds.end());
  }
  std::sort(all_seeds.begin(), all_seeds.end());
  CHECK(std::adjacent_find(all_seeds.begin(), all_seeds.end()) == all_seeds.end());

  for (const char* name : {"config.json", "manifest.json", "metrics.csv", "ranks.csv",
                           "equity.csv", "weights_mean.csv", "weights_std.csv"}) {
    CHECK(std::filesystem::exists(out / name));
  }

  // one mean and one peak row per cell
  const std::vector<CellResult> cells = read_metrics_csv(out / "metrics.csv");
  REQUIRE(cells.size() == manifest.cells.size());
  const std::string metrics_text = testutil::read_file(out / "metrics.csv");
  CHECK(std::count(metrics_text.begin(), metrics_text.end(), '\n') ==
        1 + 2 * static_cast<long>(cells.size()));
  for (const auto& c : cells) {
    CHECK(std::isfinite(c.mean.cumulative_return));
    CHECK(std::isfinite(c.peak.max_drawdown));
    CHECK((c.reward_fn == "log_return" || c.reward_fn == "differential_sharpe"));
  }

  // the ranking file derives from the metrics file alone
  const auto regen_dir = tmp / "regen";
  write_ranks_csv(regen_dir, cells);
  CHECK(testutil::read_file(regen_dir / "ranks.csv") == testutil::read_file(out / "ranks.csv"));

  // the stored config reproduces the hash
  const ExperimentConfig reloaded = load_experiment_config(out / "config.json");
  CHECK(config_hash(reloaded) == manifest.hash);
}

TEST_CASE("rerunning the same config reproduces the metrics file byte for byte") {
  testutil::TempDir tmp("runner_repro");
  const auto out = tmp / "out";
  json j = tiny_experiment(out);
  j["agents"] = json::array({"uniform", "random", "buy_and_hold", "markowitz"});
  const ExperimentConfig cfg = parse_experiment_config(j, "t");

  run_experiment(cfg);
  const std::string first = testutil::read_file(out / "metrics.csv");
  run_experiment(cfg);
  const std::string second = testutil::read_file(out / "metrics.csv");
  CHECK(first == second);
  CHECK_FALSE(first.empty());
}

TEST_CASE("evaluation mode needs a checkpoint source for trainable agents") {
  testutil::TempDir tmp("runner_eval");
  const auto out = tmp / "no_source";
  const ExperimentConfig cfg = parse_experiment_config(tiny_experiment(out), "t");

  RunOptions opts;
  opts.train = false;
  const RunManifest manifest = run_experiment(cfg, opts);
  for (const auto& cell : manifest.cells) {
    if (cell.agent == "reinforce") {
      CHECK(cell.status == "failed");
      CHECK(cell.error.find("checkpoint source") != std::string::npos);
    } else {
      CHECK(cell.status == "ok");
    }
  }
  // failed cells stay out of the reports
  const std::vector<CellResult> cells = read_metrics_csv(out / "metrics.csv");
  CHECK(cells.size() == 2 * 2 * 2);
  for (const auto& c : cells) CHECK(c.agent != "reinforce");
}

TEST_CASE("evaluating from checkpoints reproduces the training run") {
  testutil::TempDir tmp("runner_ckpt");
  const auto trained = tmp / "trained";
  const ExperimentConfig cfg = parse_experiment_config(tiny_experiment(trained), "t");
  run_experiment(cfg);

  const auto evaluated = tmp / "evaluated";
  json j2 = tiny_experiment(evaluated);
  const ExperimentConfig cfg2 = parse_experiment_config(j2, "t");
  RunOptions opts;
  opts.train = false;
  opts.checkpoint_source = trained;
  const RunManifest manifest = run_experiment(cfg2, opts);
  for (const auto& cell : manifest.cells) CHECK(cell.status == "ok");

  // same policies, same evaluation seeds: identical metrics
  CHECK(testutil::read_file(evaluated / "metrics.csv") ==
        testutil::read_file(trained / "metrics.csv"));
}

TEST_CASE("metrics files are validated when read back") {
  testutil::TempDir tmp("runner_read");
  CHECK_THROWS_AS(read_metrics_csv(tmp / "absent.csv"), FileNotFound);

  const auto bad_header = tmp / "bad_header.csv";
  testutil::write_file(bad_header, "agent,cost\n");
  CHECK_THROWS_AS(read_metrics_csv(bad_header), ParseError);

  const std::string header =
      "agent,cost,reward,aggregate,cumulative_return,annualized_return,sharpe,calmar,"
      "max_drawdown\n";
  const auto bad_agg = tmp / "bad_agg.csv";
  testutil::write_file(bad_agg, header + "uniform,0,log_return,median,1,1,1,1,0\n");
  CHECK_THROWS_AS(read_metrics_csv(bad_agg), ParseError);

  const auto bad_value = tmp / "bad_value.csv";
  testutil::write_file(bad_value, header + "uniform,0,log_return,mean,one,1,1,1,0\n");
  CHECK_THROWS_AS(read_metrics_csv(bad_value), ParseError);

  const auto good = tmp / "good.csv";
  testutil::write_file(good, header +
                                 "uniform,0.001,log_return,mean,0.5,0.25,1.1,2.5,0.1\n"
                                 "uniform,0.001,log_return,peak,0.6,0.3,1.2,3,0.1\n");
  const std::vector<CellResult> cells = read_metrics_csv(good);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].agent == "uniform");
  CHECK(cells[0].cost == 0.001);
  CHECK(cells[0].mean.cumulative_return == 0.5);
  CHECK(cells[0].peak.calmar == 3.0);
}
