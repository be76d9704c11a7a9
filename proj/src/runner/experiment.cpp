#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>
#include <utility>

#include "allocrl/errors.hpp"
#include "allocrl/runner.hpp"

namespace allocrl {

namespace {

using nlohmann::json;

int worker_count() {
  const char* env = std::getenv("ALLOC_RL_WORKERS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return std::clamp(n, 1, 64);
}

// Largest start offset that still leaves room for a full episode; 0 when the
// split is too short for any slack.
int auto_start_range(int return_rows, int lookback, int episode_length) {
  const int full = return_rows - episode_length - lookback;
  const int hard = return_rows - 1 - lookback;  // env constructor bound
  return std::max(0, std::min(full, hard));
}

std::string cell_dir_name(const std::string& agent, double cost,
                          const std::string& reward_fn) {
  return agent + "-cost_" + format_number(cost) + "-" + reward_fn;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw FileNotFound("cannot write '" + tmp.string() + "'");
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

struct CellTask {
  int index = 0;
  const AgentSpec* spec = nullptr;
  int cost_index = 0;
  int reward_index = 0;
};

}  // namespace

RunManifest run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  const PriceSeries prices = load_experiment_data(cfg.data);
  const auto [train_prices, test_prices] = train_test_split(prices, cfg.train_fraction);
  const Eigen::MatrixXd train_returns = log_returns(train_prices);
  const Eigen::MatrixXd test_returns = log_returns(test_prices);

  std::filesystem::create_directories(cfg.output_dir);
  const std::string hash = config_hash(cfg);
  write_text_atomic(cfg.output_dir / "config.json", config_to_json(cfg).dump(2) + "\n");

  std::vector<CellTask> tasks;
  for (const auto& spec : cfg.agents)
    for (std::size_t ci = 0; ci < cfg.trading_costs.size(); ++ci)
      for (std::size_t ri = 0; ri < cfg.reward_functions.size(); ++ri)
        tasks.push_back({static_cast<int>(tasks.size()), &spec, static_cast<int>(ci),
                         static_cast<int>(ri)});

  std::vector<CellResult> results(tasks.size());
  std::vector<CellRecord> records(tasks.size());

  auto run_cell = [&](const CellTask& task) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string& kind = task.spec->kind;
    const double cost = cfg.trading_costs[task.cost_index];
    const std::string& reward_fn = cfg.reward_functions[task.reward_index];

    CellResult res;
    res.agent = kind;
    res.cost = cost;
    res.reward_fn = reward_fn;
    CellRecord rec;
    rec.agent = kind;
    rec.cost = cost;
    rec.reward_fn = reward_fn;
    rec.status = "ok";

    try {
      const bool trainable = agent_is_trainable(kind);
      const int runs = trainable ? cfg.train_runs : 1;
      const int assets = static_cast<int>(test_returns.cols());
      const int action_dim = assets + (cfg.env.retain_cash ? 1 : 0);
      const int state_dim = cfg.env.lookback * assets;

      std::vector<MetricRow> rows;
      std::vector<std::vector<double>> curves;
      Eigen::VectorXd w_sum = Eigen::VectorXd::Zero(action_dim);
      Eigen::VectorXd w_sumsq = Eigen::VectorXd::Zero(action_dim);
      long w_count = 0;

      for (int run = 0; run < runs; ++run) {
        const std::uint64_t run_seed =
            mix_seed(cfg.master_seed, kind,
                     static_cast<std::uint64_t>(task.cost_index) * 16 + task.reward_index,
                     static_cast<std::uint64_t>(run));
        rec.run_seeds.push_back(run_seed);

        auto agent =
            make_agent(kind, state_dim, action_dim, cfg.env.retain_cash,
                       task.spec->overrides, run_seed);

        EnvConfig base = cfg.env;
        base.trading_cost_ratio = cost;
        base.use_log_return_reward = (reward_fn == "log_return");
        base.add_softmax = !agent->emits_simplex();

        const std::filesystem::path ckpt_dir =
            cfg.output_dir / "checkpoints" / cell_dir_name(kind, cost, reward_fn) /
            ("run_" + std::to_string(run));
        if (trainable) {
          if (opts.train) {
            EnvConfig tr = base;
            tr.seed = mix_seed(run_seed, "train-env");
            tr.random_start_range = auto_start_range(
                static_cast<int>(train_returns.rows()), tr.lookback, tr.episode_length);
            TradingEnv env_train(train_returns, tr);
            train_agent(*agent, env_train, cfg.training_timesteps);
            std::filesystem::create_directories(ckpt_dir);
            agent->save(ckpt_dir);
            json cm;
            cm["algorithm"] = kind;
            cm["config_hash"] = hash;
            cm["steps"] = cfg.training_timesteps;
            write_text_atomic(ckpt_dir / "checkpoint.json", cm.dump(2) + "\n");
            rec.artifacts.push_back(ckpt_dir.string());
          } else {
            if (opts.checkpoint_source.empty())
              throw ConfigError("evaluation of '" + kind +
                                "' needs a checkpoint source (--run)");
            const std::filesystem::path src =
                opts.checkpoint_source / "checkpoints" /
                cell_dir_name(kind, cost, reward_fn) / ("run_" + std::to_string(run));
            agent->load(src);
            rec.artifacts.push_back(src.string());
          }
        }

        EnvConfig te = base;
        te.seed = mix_seed(run_seed, "test-env");
        te.random_start_range = auto_start_range(static_cast<int>(test_returns.rows()),
                                                 te.lookback, te.episode_length);
        TradingEnv env_test(test_returns, te);
        for (int t = 0; t < cfg.test_runs; ++t) {
          EvaluationResult ev = evaluate_agent(*agent, env_test);
          rows.push_back(compute_metrics(ev.equity));
          for (int i = 0; i < ev.weights.rows(); ++i) {
            const Eigen::VectorXd w = ev.weights.row(i).transpose();
            w_sum += w;
            w_sumsq += w.cwiseProduct(w);
            ++w_count;
          }
          curves.push_back(std::move(ev.equity));
        }
      }

      const AggregateResult agg = aggregate_runs(rows);
      res.mean = agg.mean;
      res.peak = agg.peak;
      res.peak_equity = curves[agg.peak_index];
      if (w_count > 0) {
        res.weights_mean = w_sum / static_cast<double>(w_count);
        const Eigen::VectorXd var =
            (w_sumsq / static_cast<double>(w_count) -
             res.weights_mean.cwiseProduct(res.weights_mean))
                .cwiseMax(0.0);
        res.weights_std = var.cwiseSqrt();
      } else {
        res.weights_mean = Eigen::VectorXd::Zero(action_dim);
        res.weights_std = Eigen::VectorXd::Zero(action_dim);
      }
    } catch (const std::exception& e) {
      res.failed = true;
      res.error = e.what();
      rec.status = "failed";
      rec.error = e.what();
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    results[task.index] = std::move(res);
    records[task.index] = std::move(rec);
  };

  const int workers = worker_count();
  if (workers <= 1 || tasks.size() <= 1) {
    for (const auto& t : tasks) run_cell(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1))
          run_cell(tasks[i]);
      });
    for (auto& th : pool) th.join();
  }

  std::vector<std::string> asset_names = prices.tickers;
  if (cfg.env.retain_cash) asset_names.push_back("CASH");
  write_reports(cfg.output_dir, results, asset_names);

  RunManifest manifest;
  manifest.hash = hash;
  manifest.master_seed = cfg.master_seed;
  manifest.cells = records;

  json jm;
  jm["config_hash"] = manifest.hash;
  jm["master_seed"] = manifest.master_seed;
  json jcells = json::array();
  for (const auto& r : manifest.cells) {
    json c;
    c["agent"] = r.agent;
    c["cost"] = r.cost;
    c["reward"] = r.reward_fn;
    c["seeds"] = r.run_seeds;
    c["status"] = r.status;
    if (!r.error.empty()) c["error"] = r.error;
    c["artifacts"] = r.artifacts;
    c["seconds"] = r.seconds;
    jcells.push_back(c);
  }
  jm["cells"] = jcells;
  write_text_atomic(cfg.output_dir / "manifest.json", jm.dump(2) + "\n");
  return manifest;
}

std::vector<CellResult> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line))
    throw ParseError("'" + path.string() + "' is empty");
  const std::string expected =
      "agent,cost,reward,aggregate,cumulative_return,annualized_return,sharpe,calmar,"
      "max_drawdown";
  if (line != expected)
    throw ParseError("'" + path.string() + "' has an unexpected header");

  std::map<std::string, std::size_t> index;
  std::vector<CellResult> cells;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 9)
      throw ParseError("'" + path.string() + "' line " + std::to_string(line_no) +
                       ": expected 9 fields");
    const std::string key = fields[0] + '\n' + fields[1] + '\n' + fields[2];
    auto it = index.find(key);
    if (it == index.end()) {
      CellResult c;
      c.agent = fields[0];
      c.cost = std::stod(fields[1]);
      c.reward_fn = fields[2];
      it = index.emplace(key, cells.size()).first;
      cells.push_back(std::move(c));
    }
    MetricRow m;
    try {
      m.cumulative_return = std::stod(fields[4]);
      m.annualized_return = std::stod(fields[5]);
      m.sharpe = std::stod(fields[6]);
      m.calmar = std::stod(fields[7]);
      m.max_drawdown = std::stod(fields[8]);
    } catch (const std::exception&) {
      throw ParseError("'" + path.string() + "' line " + std::to_string(line_no) +
                       ": non-numeric metric");
    }
    if (fields[3] == "mean") {
      cells[it->second].mean = m;
    } else if (fields[3] == "peak") {
      cells[it->second].peak = m;
    } else {
      throw ParseError("'" + path.string() + "' line " + std::to_string(line_no) +
                       ": aggregate must be 'mean' or 'peak'");
    }
  }
  return cells;
}

}  // namespace allocrl
