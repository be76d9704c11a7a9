#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "allocrl/errors.hpp"
#include "allocrl/runner.hpp"

namespace {

using namespace allocrl;

int cmd_synth(int assets, int days, std::uint64_t seed, double drift, double vol,
              double price, const std::string& out) {
  GbmSpec spec;
  spec.num_assets = assets;
  spec.num_days = days;
  spec.seed = seed;
  spec.drift = Eigen::VectorXd::Constant(assets, drift);
  spec.volatility = Eigen::VectorXd::Constant(assets, vol);
  spec.initial_price = Eigen::VectorXd::Constant(assets, price);
  const PriceSeries series = generate_gbm(spec);
  save_csv(series, out);
  std::cout << "wrote " << series.num_days() << " days x " << series.num_assets()
            << " assets to " << out << "\n";
  return 0;
}

int cmd_fetch(const std::vector<std::string>& tickers, const std::string& start,
              const std::string& end, const ProviderConfig& provider,
              const std::string& out) {
  const PriceSeries series = fetch_remote(tickers, start, end, provider);
  save_csv(series, out);
  std::cout << "wrote " << series.num_days() << " days x " << series.num_assets()
            << " assets to " << out << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, bool train, const std::string& run_dir,
            std::int64_t seed_override, const std::string& out_override) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (seed_override >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed_override);
  if (!out_override.empty()) cfg.output_dir = out_override;
  RunOptions opts;
  opts.train = train;
  if (!run_dir.empty()) opts.checkpoint_source = run_dir;

  const RunManifest manifest = run_experiment(cfg, opts);
  int ok = 0;
  for (const auto& cell : manifest.cells) {
    std::cout << cell.agent << " cost=" << format_number(cell.cost) << " " << cell.reward_fn
              << ": " << cell.status;
    if (!cell.error.empty()) std::cout << " (" << cell.error << ")";
    std::cout << "\n";
    if (cell.status == "ok") ++ok;
  }
  std::cout << "reports written to " << cfg.output_dir.string() << "\n";
  return ok > 0 ? 0 : 2;
}

int cmd_report(const std::string& in_dir) {
  const std::filesystem::path dir = in_dir;
  const auto cells = read_metrics_csv(dir / "metrics.csv");
  write_ranks_csv(dir, cells);
  std::cout << "ranks.csv regenerated from " << (dir / "metrics.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asset-allocation experiment engine"};
  app.require_subcommand(1);

  // data synth / data fetch
  auto* data = app.add_subcommand("data", "dataset utilities");
  data->require_subcommand(1);

  auto* synth = data->add_subcommand("synth", "generate geometric-Brownian price CSV");
  int s_assets = 2, s_days = 500;
  std::uint64_t s_seed = 0;
  double s_drift = 0.0002, s_vol = 0.01, s_price = 100.0;
  std::string s_out;
  synth->add_option("--assets", s_assets, "number of assets")->check(CLI::PositiveNumber);
  synth->add_option("--days", s_days, "number of daily rows")->check(CLI::Range(2, 1 << 24));
  synth->add_option("--seed", s_seed, "generator seed");
  synth->add_option("--drift", s_drift, "per-day log drift");
  synth->add_option("--vol", s_vol, "per-day volatility");
  synth->add_option("--price", s_price, "initial price")->check(CLI::PositiveNumber);
  synth->add_option("--out", s_out, "output CSV path")->required();

  auto* fetch = data->add_subcommand("fetch", "download daily closes from a provider");
  std::vector<std::string> f_tickers;
  std::string f_start, f_end, f_out, f_cache;
  ProviderConfig f_provider;
  fetch->add_option("--tickers", f_tickers, "comma-separated tickers")
      ->required()
      ->delimiter(',');
  fetch->add_option("--start", f_start, "start date YYYY-MM-DD")->required();
  fetch->add_option("--end", f_end, "end date YYYY-MM-DD")->required();
  fetch->add_option("--host", f_provider.host, "provider host")->required();
  fetch->add_option("--port", f_provider.port, "provider port");
  fetch->add_option("--path-template", f_provider.path_template,
                    "request path with {tickers},{start},{end}");
  fetch->add_flag("--https", f_provider.https, "use https (needs TLS-enabled build)");
  fetch->add_option("--cache", f_cache, "cache CSV path (fallback on network failure)");
  fetch->add_option("--timeout", f_provider.timeout_seconds, "timeout seconds");
  fetch->add_option("--out", f_out, "output CSV path")->required();

  // train / evaluate / report
  std::string t_config, t_out;
  std::int64_t t_seed = -1;
  auto* train = app.add_subcommand("train", "train and evaluate all configured agents");
  train->add_option("--config", t_config, "experiment config JSON")->required();
  train->add_option("--seed", t_seed, "override master_seed");
  train->add_option("--out", t_out, "override output_dir");

  std::string e_config, e_out, e_run;
  std::int64_t e_seed = -1;
  auto* evaluate =
      app.add_subcommand("evaluate", "evaluate baselines and checkpointed agents");
  evaluate->add_option("--config", e_config, "experiment config JSON")->required();
  evaluate->add_option("--run", e_run, "previous run directory holding checkpoints");
  evaluate->add_option("--seed", e_seed, "override master_seed");
  evaluate->add_option("--out", e_out, "override output_dir");

  std::string r_in;
  auto* report = app.add_subcommand("report", "recompute ranks.csv from stored metrics");
  report->add_option("--in", r_in, "run directory with metrics.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (synth->parsed()) return cmd_synth(s_assets, s_days, s_seed, s_drift, s_vol, s_price, s_out);
    if (fetch->parsed()) {
      f_provider.cache_file = f_cache;
      return cmd_fetch(f_tickers, f_start, f_end, f_provider, f_out);
    }
    if (train->parsed()) return cmd_run(t_config, true, "", t_seed, t_out);
    if (evaluate->parsed()) return cmd_run(e_config, false, e_run, e_seed, e_out);
    if (report->parsed()) return cmd_report(r_in);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const FileNotFound& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
