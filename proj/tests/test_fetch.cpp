#include <string>
#include <thread>

#include "allocrl/errors.hpp"
#include "allocrl/market_data.hpp"
#include "doctest.h"
#include "httplib.h"
#include "test_util.hpp"

using namespace allocrl;

namespace {

const char* kBody =
    "date,BBB,AAA\n"
    "2021-03-01,50,100\n"
    "2021-03-02,51,101\n"
    "2021-03-03,52,103\n";

// Local provider stub; serves kBody on /daily and records the path it saw.
class StubServer {
 public:
  StubServer() {
    server_.Get("/daily", [this](const httplib::Request& req, httplib::Response& res) {
      last_path_ = req.target;
      res.set_content(kBody, "text/csv");
    });
    server_.Get("/broken", [](const httplib::Request&, httplib::Response& res) {
      res.status = 500;
    });
    server_.Get("/garbage", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("this is not a csv at all", "text/plain");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  int port() const { return port_; }
  std::string last_path() const { return last_path_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::string last_path_;
};

ProviderConfig provider_for(const StubServer& server) {
  ProviderConfig p;
  p.host = "127.0.0.1";
  p.port = server.port();
  p.timeout_seconds = 5;
  return p;
}

}  // namespace

TEST_CASE("fetch_remote pulls, reorders, and restricts columns") {
  StubServer server;
  ProviderConfig p = provider_for(server);
  const PriceSeries s = fetch_remote({"AAA", "BBB"}, "2021-03-01", "2021-03-03", p);
  REQUIRE(s.num_days() == 3);
  REQUIRE(s.tickers == std::vector<std::string>{"AAA", "BBB"});
  CHECK(s.prices(0, 0) == doctest::Approx(100).epsilon(1e-12));  // AAA reordered first
  CHECK(s.prices(0, 1) == doctest::Approx(50).epsilon(1e-12));
  // the client URL-encodes the comma-joined ticker list
  CHECK(server.last_path() == "/daily?tickers=AAA%2CBBB&start=2021-03-01&end=2021-03-03");

  const PriceSeries only = fetch_remote({"BBB"}, "2021-03-01", "2021-03-03", p);
  REQUIRE(only.num_assets() == 1);
  CHECK(only.prices(2, 0) == doctest::Approx(52).epsilon(1e-12));
}

TEST_CASE("fetch_remote validates the request universe") {
  StubServer server;
  ProviderConfig p = provider_for(server);
  CHECK_THROWS_AS(fetch_remote({}, "2021-03-01", "2021-03-03", p), EmptyUniverse);
  CHECK_THROWS_AS(fetch_remote({"AAA", "AAA"}, "2021-03-01", "2021-03-03", p),
                  EmptyUniverse);
  CHECK_THROWS_AS(fetch_remote({"ZZZ"}, "2021-03-01", "2021-03-03", p),
                  ProviderFormatError);
}

TEST_CASE("provider failures surface as typed errors") {
  StubServer server;
  ProviderConfig p = provider_for(server);
  p.path_template = "/broken";
  CHECK_THROWS_AS(fetch_remote({"AAA"}, "a", "b", p), NetworkError);
  p.path_template = "/garbage";
  CHECK_THROWS_AS(fetch_remote({"AAA"}, "a", "b", p), ProviderFormatError);
  // nothing listening on the port
  ProviderConfig dead;
  dead.host = "127.0.0.1";
  dead.port = 9;  // discard port, nothing bound in the sandbox
  dead.timeout_seconds = 1;
  CHECK_THROWS_AS(fetch_remote({"AAA"}, "a", "b", dead), NetworkError);
}

TEST_CASE("the cache is written on success and used on failure") {
  testutil::TempDir tmp("fetch_cache");
  const auto cache = tmp / "cache.csv";
  {
    StubServer server;
    ProviderConfig p = provider_for(server);
    p.cache_file = cache;
    const PriceSeries s = fetch_remote({"AAA"}, "2021-03-01", "2021-03-03", p);
    CHECK(s.num_days() == 3);
    CHECK(std::filesystem::exists(cache));
  }
  // server gone: the cached copy answers instead
  ProviderConfig p;
  p.host = "127.0.0.1";
  p.port = 9;
  p.timeout_seconds = 1;
  p.cache_file = cache;
  const PriceSeries cached = fetch_remote({"AAA"}, "2021-03-01", "2021-03-03", p);
  REQUIRE(cached.num_days() == 3);
  CHECK(cached.prices(1, 0) == doctest::Approx(101).epsilon(1e-12));
  // a cold cache cannot help
  p.cache_file = tmp / "missing.csv";
  CHECK_THROWS_AS(fetch_remote({"AAA"}, "a", "b", p), NetworkError);
  // https without TLS support: cache or error, never a silent fallback
  p.https = true;
  p.cache_file = cache;
  CHECK(fetch_remote({"AAA"}, "2021-03-01", "2021-03-03", p).num_days() == 3);
  p.cache_file.clear();
  CHECK_THROWS_AS(fetch_remote({"AAA"}, "a", "b", p), NetworkError);
}
