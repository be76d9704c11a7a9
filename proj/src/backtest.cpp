#include "allocrl/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

#include "allocrl/errors.hpp"

namespace allocrl {

namespace {

void check_curve(const std::vector<double>& curve) {
  if (curve.empty()) throw EmptyCurve("empty equity curve");
  for (const double v : curve)
    if (!std::isfinite(v) || v <= 0) throw EmptyCurve("equity curve values must be positive");
}

}  // namespace

double cumulative_return(const std::vector<double>& curve) {
  check_curve(curve);
  return (curve.back() - curve.front()) / curve.front();
}

double annualized_return(double cumulative, double num_steps) {
  if (num_steps <= 0) throw EmptyCurve("annualized return needs at least one step");
  const double years = num_steps / kStepsPerYear;
  return std::pow(1.0 + cumulative, 1.0 / years) - 1.0;
}

double sharpe_core(double annual_return, double annual_risk_free, double annual_vol) {
  if (annual_vol <= 0) throw ZeroVolatility("volatility must be positive");
  return (annual_return - annual_risk_free) / annual_vol;
}

double sharpe(const std::vector<double>& step_returns, double risk_free_annual) {
  const std::size_t n = step_returns.size();
  if (n < 2) throw EmptyCurve("sharpe needs at least two returns");
  const double rf_step = risk_free_annual / kStepsPerYear;
  double mean = 0;
  for (const double r : step_returns) mean += r - rf_step;
  mean /= static_cast<double>(n);
  double ss = 0;
  for (const double r : step_returns) {
    const double d = (r - rf_step) - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0) throw ZeroVolatility("constant return series");
  return sharpe_core(mean * kStepsPerYear, 0.0, sd * std::sqrt(kStepsPerYear));
}

double max_drawdown(const std::vector<double>& curve) {
  check_curve(curve);
  double peak = curve.front();
  double worst = 0;
  for (const double v : curve) {
    peak = std::max(peak, v);
    worst = std::max(worst, (peak - v) / peak);
  }
  return worst;
}

double calmar(double annualized, double mdd, double risk_free_annual) {
  if (mdd < 0) throw EmptyCurve("drawdown magnitude cannot be negative");
  if (mdd == 0) return std::numeric_limits<double>::infinity();
  return (annualized - risk_free_annual) / mdd;
}

MetricRow compute_metrics(const std::vector<double>& curve, double risk_free_annual) {
  check_curve(curve);
  if (curve.size() < 2) throw EmptyCurve("metrics need at least two curve points");
  MetricRow m;
  m.cumulative_return = cumulative_return(curve);
  m.annualized_return = annualized_return(m.cumulative_return,
                                          static_cast<double>(curve.size() - 1));
  std::vector<double> rets(curve.size() - 1);
  for (std::size_t t = 1; t < curve.size(); ++t) rets[t - 1] = curve[t] / curve[t - 1] - 1.0;
  m.sharpe = sharpe(rets, risk_free_annual);
  m.max_drawdown = max_drawdown(curve);
  m.calmar = calmar(m.annualized_return, m.max_drawdown, risk_free_annual);
  return m;
}

AggregateResult aggregate_runs(const std::vector<MetricRow>& runs) {
  if (runs.empty()) throw EmptyRuns("no runs to aggregate");
  AggregateResult out;
  for (const auto& r : runs) {
    out.mean.cumulative_return += r.cumulative_return;
    out.mean.annualized_return += r.annualized_return;
    out.mean.sharpe += r.sharpe;
    out.mean.calmar += r.calmar;
    out.mean.max_drawdown += r.max_drawdown;
  }
  const double n = static_cast<double>(runs.size());
  out.mean.cumulative_return /= n;
  out.mean.annualized_return /= n;
  out.mean.sharpe /= n;
  out.mean.calmar /= n;
  out.mean.max_drawdown /= n;
  out.peak_index = 0;
  for (std::size_t i = 1; i < runs.size(); ++i)
    if (runs[i].cumulative_return > runs[out.peak_index].cumulative_return)
      out.peak_index = static_cast<int>(i);
  out.peak = runs[out.peak_index];
  return out;
}

namespace {

// competition ranking: ties share the smallest rank, the next value skips
std::vector<int> competition_ranks(const std::vector<double>& keys, bool higher_better) {
  const std::size_t n = keys.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return higher_better ? keys[a] > keys[b] : keys[a] < keys[b];
  });
  std::vector<int> ranks(n, 0);
  for (std::size_t pos = 0; pos < n; ++pos) {
    if (pos > 0 && keys[order[pos]] == keys[order[pos - 1]])
      ranks[order[pos]] = ranks[order[pos - 1]];
    else
      ranks[order[pos]] = static_cast<int>(pos) + 1;
  }
  return ranks;
}

}  // namespace

std::vector<RankedRow> rank_table(const std::vector<std::pair<std::string, MetricRow>>& rows) {
  if (rows.empty()) throw EmptyRuns("rank table needs at least one row");
  const std::size_t n = rows.size();
  std::vector<double> cum(n), ann(n), shp(n), cal(n), mdd(n);
  for (std::size_t i = 0; i < n; ++i) {
    cum[i] = rows[i].second.cumulative_return;
    ann[i] = rows[i].second.annualized_return;
    shp[i] = rows[i].second.sharpe;
    cal[i] = rows[i].second.calmar;
    mdd[i] = rows[i].second.max_drawdown;
  }
  const auto r_cum = competition_ranks(cum, true);
  const auto r_ann = competition_ranks(ann, true);
  const auto r_shp = competition_ranks(shp, true);
  const auto r_cal = competition_ranks(cal, true);
  const auto r_mdd = competition_ranks(mdd, false);

  std::vector<RankedRow> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].name = rows[i].first;
    out[i].metrics = rows[i].second;
    out[i].cumulative_rank = r_cum[i];
    out[i].annualized_rank = r_ann[i];
    out[i].sharpe_rank = r_shp[i];
    out[i].calmar_rank = r_cal[i];
    out[i].drawdown_rank = r_mdd[i];
    out[i].overall_score = (r_cum[i] + r_ann[i] + r_shp[i] + r_cal[i] + r_mdd[i]) / 5.0;
  }
  std::stable_sort(out.begin(), out.end(), [](const RankedRow& a, const RankedRow& b) {
    if (a.overall_score != b.overall_score) return a.overall_score < b.overall_score;
    if (a.metrics.cumulative_return != b.metrics.cumulative_return)
      return a.metrics.cumulative_return > b.metrics.cumulative_return;
    return a.name < b.name;
  });
  for (std::size_t pos = 0; pos < n; ++pos) {
    if (pos > 0 && out[pos].overall_score == out[pos - 1].overall_score)
      out[pos].rank = out[pos - 1].rank;
    else
      out[pos].rank = static_cast<int>(pos) + 1;
  }
  return out;
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw FileNotFound("cannot write '" + p.string() + "'");
  return out;
}

std::string cell_label(const CellResult& c) {
  return c.agent + "|c=" + format_number(c.cost) + "|" + c.reward_fn;
}

std::vector<const CellResult*> sorted_ok(const std::vector<CellResult>& cells) {
  std::vector<const CellResult*> ok;
  for (const auto& c : cells)
    if (!c.failed) ok.push_back(&c);
  std::stable_sort(ok.begin(), ok.end(), [](const CellResult* a, const CellResult* b) {
    if (a->cost != b->cost) return a->cost < b->cost;
    if (a->reward_fn != b->reward_fn) return a->reward_fn < b->reward_fn;
    return a->agent < b->agent;
  });
  return ok;
}

}  // namespace

void write_ranks_csv(const std::filesystem::path& dir, const std::vector<CellResult>& cells) {
  std::filesystem::create_directories(dir);
  const auto ok = sorted_ok(cells);
  auto out = open_out(dir / "ranks.csv");
  out << "cost,reward,aggregate,agent,cumulative_return_rank,annualized_return_rank,"
         "sharpe_rank,calmar_rank,max_drawdown_rank,overall_score,rank\n";
  std::map<std::pair<double, std::string>, std::vector<const CellResult*>> groups;
  for (const auto* c : ok) groups[{c->cost, c->reward_fn}].push_back(c);
  for (const auto& [key, group] : groups)
    for (const char* tag : {"mean", "peak"}) {
      std::vector<std::pair<std::string, MetricRow>> rows;
      for (const auto* c : group)
        rows.emplace_back(c->agent, std::string(tag) == "mean" ? c->mean : c->peak);
      for (const auto& r : rank_table(rows))
        out << format_number(key.first) << ',' << key.second << ',' << tag << ',' << r.name
            << ',' << r.cumulative_rank << ',' << r.annualized_rank << ',' << r.sharpe_rank
            << ',' << r.calmar_rank << ',' << r.drawdown_rank << ','
            << format_number(r.overall_score) << ',' << r.rank << '\n';
    }
}

void write_reports(const std::filesystem::path& dir, const std::vector<CellResult>& cells,
                   const std::vector<std::string>& asset_names) {
  std::filesystem::create_directories(dir);
  const auto ok = sorted_ok(cells);

  {
    auto out = open_out(dir / "metrics.csv");
    out << "agent,cost,reward,aggregate,cumulative_return,annualized_return,sharpe,calmar,max_drawdown\n";
    for (const auto* c : ok)
      for (const auto& [tag, m] : {std::pair<const char*, const MetricRow&>{"mean", c->mean},
                                   {"peak", c->peak}})
        out << c->agent << ',' << format_number(c->cost) << ',' << c->reward_fn << ',' << tag
            << ',' << format_number(m.cumulative_return) << ','
            << format_number(m.annualized_return) << ',' << format_number(m.sharpe) << ','
            << format_number(m.calmar) << ',' << format_number(m.max_drawdown) << '\n';
  }

  write_ranks_csv(dir, cells);

  {
    auto out = open_out(dir / "equity.csv");
    out << "step";
    std::size_t max_len = 0;
    for (const auto* c : ok) {
      out << ',' << cell_label(*c);
      max_len = std::max(max_len, c->peak_equity.size());
    }
    out << '\n';
    for (std::size_t t = 0; t < max_len; ++t) {
      out << t;
      for (const auto* c : ok) {
        out << ',';
        if (t < c->peak_equity.size()) out << format_number(c->peak_equity[t]);
      }
      out << '\n';
    }
  }

  for (const bool is_mean : {true, false}) {
    auto out = open_out(dir / (is_mean ? "weights_mean.csv" : "weights_std.csv"));
    out << "agent,cost,reward";
    for (const auto& a : asset_names) out << ',' << a;
    out << '\n';
    for (const auto* c : ok) {
      const Eigen::VectorXd& w = is_mean ? c->weights_mean : c->weights_std;
      out << c->agent << ',' << format_number(c->cost) << ',' << c->reward_fn;
      for (int i = 0; i < w.size(); ++i) out << ',' << format_number(w[i]);
      out << '\n';
    }
  }
}

}  // namespace allocrl
