#include <algorithm>
#include <fstream>
#include <sstream>

#include "allocrl/errors.hpp"
#include "allocrl/market_data.hpp"
#include "httplib.h"

namespace allocrl {

namespace {

std::string substitute(std::string templ, const std::string& key, const std::string& value) {
  const std::string token = "{" + key + "}";
  std::size_t pos;
  while ((pos = templ.find(token)) != std::string::npos)
    templ.replace(pos, token.size(), value);
  return templ;
}

PriceSeries restrict_columns(const PriceSeries& full, const std::vector<std::string>& tickers,
                             const std::string& origin) {
  PriceSeries out;
  out.dates = full.dates;
  out.tickers = tickers;
  out.prices.resize(full.num_days(), static_cast<int>(tickers.size()));
  for (std::size_t j = 0; j < tickers.size(); ++j) {
    const auto it = std::find(full.tickers.begin(), full.tickers.end(), tickers[j]);
    if (it == full.tickers.end())
      throw ProviderFormatError(origin + ": response is missing ticker '" + tickers[j] + "'");
    out.prices.col(static_cast<int>(j)) =
        full.prices.col(static_cast<int>(it - full.tickers.begin()));
  }
  out.validate();
  return out;
}

}  // namespace

PriceSeries fetch_remote(const std::vector<std::string>& tickers,
                         const std::string& start_date, const std::string& end_date,
                         const ProviderConfig& provider) {
  if (tickers.empty()) throw EmptyUniverse("no tickers requested");
  for (std::size_t i = 0; i < tickers.size(); ++i)
    for (std::size_t j = i + 1; j < tickers.size(); ++j)
      if (tickers[i] == tickers[j])
        throw EmptyUniverse("duplicate ticker '" + tickers[i] + "' requested");

  std::string joined;
  for (std::size_t i = 0; i < tickers.size(); ++i) {
    if (i) joined += ',';
    joined += tickers[i];
  }
  std::string path = provider.path_template;
  path = substitute(path, "tickers", joined);
  path = substitute(path, "start", start_date);
  path = substitute(path, "end", end_date);
  const std::string origin =
      (provider.https ? "https://" : "http://") + provider.host + ":" +
      std::to_string(provider.port) + path;

  auto try_cache = [&](const std::string& why) -> PriceSeries {
    if (provider.cache_file.empty() || !std::filesystem::exists(provider.cache_file))
      throw NetworkError(origin + ": " + why + " (and no cache available)");
    return restrict_columns(load_csv(provider.cache_file), tickers, origin);
  };

  if (provider.https)
    // the bundled client is built without TLS; a real deployment would link
    // OpenSSL and drop this branch
    return try_cache("https requested but TLS support is not compiled in");

  httplib::Client client(provider.host, provider.port);
  client.set_connection_timeout(provider.timeout_seconds);
  client.set_read_timeout(provider.timeout_seconds);
  auto res = client.Get(path);
  if (!res) return try_cache("connection failed");
  if (res->status != 200)
    return try_cache("http status " + std::to_string(res->status));

  PriceSeries full;
  try {
    full = parse_price_csv(res->body, origin);
  } catch (const ParseError& e) {
    throw ProviderFormatError(e.what());
  } catch (const NonPositivePrice& e) {
    throw ProviderFormatError(e.what());
  }
  PriceSeries out = restrict_columns(full, tickers, origin);
  if (!provider.cache_file.empty()) save_csv(out, provider.cache_file);
  return out;
}

}  // namespace allocrl
