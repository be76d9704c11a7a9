#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace allocrl {

// Daily close prices: one row per day, one column per ticker.
// Invariants (validate()): dates ISO-8601 and strictly increasing, every price
// finite and > 0, matrix dimensions consistent with dates/tickers.
struct PriceSeries {
  std::vector<std::string> dates;
  std::vector<std::string> tickers;
  Eigen::MatrixXd prices;

  int num_days() const { return static_cast<int>(dates.size()); }
  int num_assets() const { return static_cast<int>(tickers.size()); }
  void validate() const;
};

struct GbmSpec {
  int num_assets = 0;
  int num_days = 0;
  Eigen::VectorXd drift;          // per-day log drift, one per asset
  Eigen::VectorXd volatility;     // per-day, one per asset, >= 0
  Eigen::VectorXd initial_price;  // > 0
  std::uint64_t seed = 0;
};

// Remote daily-close provider. The path is a template; {tickers}, {start} and
// {end} are substituted before the request. Plain HTTP unless the build links
// TLS support into the bundled client.
struct ProviderConfig {
  std::string host;
  int port = 80;
  std::string path_template = "/daily?tickers={tickers}&start={start}&end={end}";
  bool https = false;
  std::filesystem::path cache_file;  // empty = no cache
  int timeout_seconds = 10;
};

PriceSeries load_csv(const std::filesystem::path& path);
void save_csv(const PriceSeries& series, const std::filesystem::path& path);

// Shared strict parser behind load_csv and fetch_remote; `origin` labels error
// messages (file path or provider URL).
PriceSeries parse_price_csv(const std::string& text, const std::string& origin);

// P[t+1][i] = P[t][i] * exp(drift_i - vol_i^2/2 + vol_i * z), z drawn row by
// row (day outer, asset inner) from the seeded generator.
PriceSeries generate_gbm(const GbmSpec& spec);

// r[t][i] = ln(P[t+1][i] / P[t][i]); one fewer row than the price series.
Eigen::MatrixXd log_returns(const PriceSeries& series);

// Chronological split: first floor(train_fraction * num_days) days train, the
// remainder test. Throws DegenerateSplit if either side would be empty.
std::pair<PriceSeries, PriceSeries> train_test_split(const PriceSeries& series,
                                                     double train_fraction);

// Fetches CSV from the provider, validates it like load_csv, restricts and
// reorders columns to `tickers`, and writes through the cache file if one is
// configured. On network failure falls back to the cache when present.
PriceSeries fetch_remote(const std::vector<std::string>& tickers,
                         const std::string& start_date, const std::string& end_date,
                         const ProviderConfig& provider);

}  // namespace allocrl
