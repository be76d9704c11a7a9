#include "allocrl/market_data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "allocrl/errors.hpp"
#include "allocrl/rng.hpp"

namespace allocrl {

namespace {

bool is_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (const int i : {0, 1, 2, 3, 5, 6, 8, 9})
    if (s[i] < '0' || s[i] > '9') return false;
  const int month = (s[5] - '0') * 10 + (s[6] - '0');
  const int day = (s[8] - '0') * 10 + (s[9] - '0');
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    if (comma == std::string::npos) {
      out.push_back(line.substr(begin));
      return out;
    }
    out.push_back(line.substr(begin, comma - begin));
    begin = comma + 1;
  }
}

std::string trimmed(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return s.substr(i);
}

// days-since-epoch to civil date (Hinnant's algorithm), for synthetic calendars
std::string date_from_day_number(long long days) {
  days += 719468;
  const long long era = (days >= 0 ? days : days - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(days - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long long y = static_cast<long long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u", y + (m <= 2), m, d);
  return buf;
}

}  // namespace

PriceSeries parse_price_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(origin + ": empty input");
  auto header = split_line(trimmed(line));
  if (header.size() < 2 || trimmed(header[0]) != "date")
    throw ParseError(origin + ": header must be 'date,<ticker>...'");

  PriceSeries series;
  for (std::size_t i = 1; i < header.size(); ++i) {
    const std::string t = trimmed(header[i]);
    if (t.empty()) throw ParseError(origin + ": empty ticker name in header");
    series.tickers.push_back(t);
  }
  const std::size_t cols = header.size();

  std::vector<double> values;  // row-major staging
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trimmed(line);
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != cols)
      throw ParseError(origin + ": line " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " fields, expected " +
                       std::to_string(cols));
    const std::string date = trimmed(cells[0]);
    if (!is_iso_date(date))
      throw ParseError(origin + ": line " + std::to_string(line_no) +
                       ": bad date '" + date + "'");

    std::vector<double> row(cols - 1);
    bool missing = false;
    for (std::size_t c = 1; c < cols; ++c) {
      const std::string cell = trimmed(cells[c]);
      if (cell.empty()) {  // data gap: drop the whole row, never impute
        missing = true;
        break;
      }
      double v = 0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw ParseError(origin + ": line " + std::to_string(line_no) + ", column '" +
                         series.tickers[c - 1] + "': unparseable value '" + cell + "'");
      if (!std::isfinite(v) || v <= 0.0)
        throw NonPositivePrice(origin + ": line " + std::to_string(line_no) +
                               ", column '" + series.tickers[c - 1] + "': price " + cell);
      row[c - 1] = v;
    }
    if (missing) continue;
    if (!series.dates.empty() && date <= series.dates.back())
      throw ParseError(origin + ": line " + std::to_string(line_no) +
                       ": dates not strictly increasing at '" + date + "'");
    series.dates.push_back(date);
    values.insert(values.end(), row.begin(), row.end());
  }
  if (series.dates.empty())
    throw ParseError(origin + ": no usable data rows");

  series.prices.resize(series.num_days(), series.num_assets());
  for (int r = 0; r < series.num_days(); ++r)
    for (int c = 0; c < series.num_assets(); ++c)
      series.prices(r, c) = values[static_cast<std::size_t>(r) * series.num_assets() + c];
  series.validate();
  return series;
}

void PriceSeries::validate() const {
  if (dates.empty() || tickers.empty())
    throw ParseError("price series has no rows or no tickers");
  if (prices.rows() != num_days() || prices.cols() != num_assets())
    throw ParseError("price matrix shape does not match dates/tickers");
  for (const auto& d : dates)
    if (!is_iso_date(d)) throw ParseError("bad date '" + d + "'");
  for (int i = 1; i < num_days(); ++i)
    if (dates[i] <= dates[i - 1])
      throw ParseError("dates not strictly increasing at '" + dates[i] + "'");
  for (int r = 0; r < prices.rows(); ++r)
    for (int c = 0; c < prices.cols(); ++c)
      if (!std::isfinite(prices(r, c)) || prices(r, c) <= 0.0)
        throw NonPositivePrice("non-positive price for '" + tickers[c] + "' on " + dates[r]);
}

PriceSeries load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_price_csv(buf.str(), path.string());
}

void save_csv(const PriceSeries& series, const std::filesystem::path& path) {
  series.validate();
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileNotFound("cannot write '" + path.string() + "'");
  out << "date";
  for (const auto& t : series.tickers) out << ',' << t;
  out << '\n';
  char buf[40];
  for (int r = 0; r < series.num_days(); ++r) {
    out << series.dates[r];
    for (int c = 0; c < series.num_assets(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", series.prices(r, c));
      out << ',' << buf;
    }
    out << '\n';
  }
}

PriceSeries generate_gbm(const GbmSpec& spec) {
  if (spec.num_assets < 1 || spec.num_days < 2)
    throw ParseError("gbm needs at least one asset and two days");
  auto need = [&](const Eigen::VectorXd& v, const char* name) {
    if (v.size() != spec.num_assets)
      throw ParseError(std::string("gbm ") + name + " must have one entry per asset");
  };
  need(spec.drift, "drift");
  need(spec.volatility, "volatility");
  need(spec.initial_price, "initial_price");
  for (int i = 0; i < spec.num_assets; ++i) {
    if (spec.volatility[i] < 0) throw ParseError("gbm volatility must be >= 0");
    if (spec.initial_price[i] <= 0) throw NonPositivePrice("gbm initial price must be > 0");
  }

  PriceSeries series;
  series.prices.resize(spec.num_days, spec.num_assets);
  series.prices.row(0) = spec.initial_price.transpose();
  Rng rng(spec.seed);
  for (int t = 1; t < spec.num_days; ++t)
    for (int i = 0; i < spec.num_assets; ++i) {
      const double vol = spec.volatility[i];
      const double step = spec.drift[i] - 0.5 * vol * vol + vol * rng.gaussian();
      series.prices(t, i) = series.prices(t - 1, i) * std::exp(step);
    }

  // synthetic consecutive calendar starting 2000-01-01 (day number 10957)
  series.dates.reserve(spec.num_days);
  for (int t = 0; t < spec.num_days; ++t)
    series.dates.push_back(date_from_day_number(10957 + t));
  for (int i = 0; i < spec.num_assets; ++i)
    series.tickers.push_back("SYN" + std::to_string(i + 1));
  series.validate();
  return series;
}

Eigen::MatrixXd log_returns(const PriceSeries& series) {
  series.validate();
  if (series.num_days() < 2) throw DataTooShort("need at least two days of prices");
  Eigen::MatrixXd r(series.num_days() - 1, series.num_assets());
  for (int t = 0; t + 1 < series.num_days(); ++t)
    for (int c = 0; c < series.num_assets(); ++c)
      r(t, c) = std::log(series.prices(t + 1, c) / series.prices(t, c));
  return r;
}

std::pair<PriceSeries, PriceSeries> train_test_split(const PriceSeries& series,
                                                     double train_fraction) {
  series.validate();
  const int n = series.num_days();
  const int k = static_cast<int>(std::floor(train_fraction * n));
  if (k < 1 || k >= n)
    throw DegenerateSplit("train fraction " + std::to_string(train_fraction) +
                          " leaves an empty split for " + std::to_string(n) + " days");
  auto take = [&](int begin, int count) {
    PriceSeries s;
    s.tickers = series.tickers;
    s.dates.assign(series.dates.begin() + begin, series.dates.begin() + begin + count);
    s.prices = series.prices.middleRows(begin, count);
    return s;
  };
  return {take(0, k), take(k, n - k)};
}

}  // namespace allocrl
