#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace allocrl {

// Annualization convention used throughout: 252 trading days per year.
inline constexpr double kStepsPerYear = 252.0;

struct MetricRow {
  double cumulative_return = 0;
  double annualized_return = 0;
  double sharpe = 0;
  double calmar = 0;
  double max_drawdown = 0;  // magnitude, 0.2 means a 20% peak-to-trough loss
};

// (last - first) / first; curve values must be positive, at least one point.
double cumulative_return(const std::vector<double>& curve);

// (1 + cumulative)^(1/years) - 1 with years = num_steps / 252.
double annualized_return(double cumulative, double num_steps);

// Core ratio on annualized inputs.
double sharpe_core(double annual_return, double annual_risk_free, double annual_vol);

// Per-step simple returns in, annualized ratio out: mean excess * 252 over
// sample std * sqrt(252). Throws ZeroVolatility when the std is zero.
double sharpe(const std::vector<double>& step_returns, double risk_free_annual = 0.0);

// Largest peak-to-trough loss as a magnitude in [0, 1).
double max_drawdown(const std::vector<double>& curve);

// (annualized - risk_free) / mdd; +infinity sentinel when mdd == 0.
double calmar(double annualized, double mdd, double risk_free_annual = 0.0);

// All five metrics from one equity curve (per-step simple returns derived
// internally for the Sharpe term).
MetricRow compute_metrics(const std::vector<double>& curve, double risk_free_annual = 0.0);

struct AggregateResult {
  MetricRow mean;   // field-wise average over runs
  MetricRow peak;   // the single run with the highest cumulative return
  int peak_index = 0;  // first such run on ties
};
AggregateResult aggregate_runs(const std::vector<MetricRow>& runs);

struct RankedRow {
  std::string name;
  MetricRow metrics;
  int cumulative_rank = 0;
  int annualized_rank = 0;
  int sharpe_rank = 0;
  int calmar_rank = 0;
  int drawdown_rank = 0;   // smaller drawdown ranks better
  double overall_score = 0;  // mean of the five ranks
  int rank = 0;              // competition rank on overall_score
};

// Rows ordered best-first by (overall_score, higher cumulative return, name).
// Per-metric ties share the smallest applicable rank.
std::vector<RankedRow> rank_table(const std::vector<std::pair<std::string, MetricRow>>& rows);

// One experiment cell's aggregated outcome, as written into the report files.
struct CellResult {
  std::string agent;
  double cost = 0;
  std::string reward_fn;       // "log_return" | "differential_sharpe"
  MetricRow mean, peak;
  std::vector<double> peak_equity;   // representative curve for equity.csv
  Eigen::VectorXd weights_mean, weights_std;  // per asset, pooled over runs
  bool failed = false;
  std::string error;
};

// Writes metrics.csv, ranks.csv, equity.csv, weights_mean.csv, weights_std.csv
// with deterministic ordering and formatting. Failed cells are excluded from
// the tables (they are recorded in the run manifest by the caller).
void write_reports(const std::filesystem::path& dir, const std::vector<CellResult>& cells,
                   const std::vector<std::string>& asset_names);

// Rebuilds ranks.csv alone from already-aggregated cells.
void write_ranks_csv(const std::filesystem::path& dir, const std::vector<CellResult>& cells);

// Deterministic shortest-ish formatting shared by every CSV writer.
std::string format_number(double v);

}  // namespace allocrl
