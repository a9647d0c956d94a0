#include <doctest.h>

#include <atomic>
#include <chrono>
#include <httplib.h>
#include <mutex>
#include <sstream>
#include <thread>

#include "geotrace/errors.hpp"
#include "geotrace/fetch.hpp"
#include "support.hpp"

using namespace geotrace;

namespace {

// Answers every URL containing "good" with a fixed location, fails the rest.
class FakeTransport : public HttpTransport {
public:
    std::optional<std::string> get(const std::string& url) override {
        std::lock_guard lock(mu);
        urls.push_back(url);
        if (url.find("good") == std::string::npos) return std::nullopt;
        return R"({"latitude": 48.8566, "longitude": "2.3522", "city": "Paris", "country_code": "FR"})";
    }
    std::size_t calls() {
        std::lock_guard lock(mu);
        return urls.size();
    }
    std::mutex mu;
    std::vector<std::string> urls;
};

std::vector<Ipv4> ips(int n) {
    std::vector<Ipv4> out;
    for (int i = 0; i < n; ++i) out.push_back(Ipv4(62, 40, 98, static_cast<std::uint8_t>(i + 1)));
    return out;
}

}  // namespace

TEST_CASE("fetch config parsing") {
    std::istringstream in(
        "# comment\n"
        "source.alpha.url = http://good.example/{ip}?k={key}\n"
        "source.alpha.key = secret\n"
        "source.alpha.rate_per_s = 4\n"
        "source.beta.url = http://other.example/{ip}\n");
    auto cfg = parse_fetch_config(in);
    REQUIRE(cfg.size() == 2);
    CHECK(cfg[0].name == "alpha");
    CHECK(cfg[0].key == "secret");
    CHECK(cfg[0].rate_per_s == 4.0);
    CHECK(cfg[1].rate_per_s == 1.0);

    std::istringstream unknown("source.a.url = x\nsource.a.colour = red\n");
    CHECK_THROWS_AS(parse_fetch_config(unknown), ConfigError);
    std::istringstream no_url("source.a.rate_per_s = 2\n");
    CHECK_THROWS_AS(parse_fetch_config(no_url), ConfigError);
    std::istringstream zero_rate("source.a.url = x\nsource.a.rate_per_s = 0\n");
    CHECK_THROWS_AS(parse_fetch_config(zero_rate), ConfigError);
}

TEST_CASE("service response parsing") {
    const auto ip = Ipv4(8, 8, 8, 8);
    auto r = parse_service_response(R"({"lat": 1.5, "lng": 2.5, "city_name": "X", "country": "YY"})", ip, "s");
    REQUIRE(r);
    CHECK(r->location == GeoPoint{1.5, 2.5});
    CHECK(r->city == "X");
    CHECK(r->country == "YY");
    CHECK_FALSE(parse_service_response("{\"lat\": 91, \"lon\": 0}", ip, "s"));
    CHECK_FALSE(parse_service_response("{\"city\": \"no coords\"}", ip, "s"));
    CHECK_FALSE(parse_service_response("<html>", ip, "s"));
}

TEST_CASE("placeholders are substituted and results are cached") {
    testing::TempDir cache;
    FakeTransport transport;
    std::vector<SourceConfig> sources{{"alpha", "http://good.example/{ip}?key={key}", "K", 1000.0}};
    const auto list = ips(3);
    Diagnostics diag;
    FetchReport report;
    auto snap = fetch_geo(list, sources, cache.path(), transport, report, diag);
    CHECK(snap.size() == 3);
    CHECK(report.requests == 3);
    CHECK(transport.urls.at(0) == "http://good.example/62.40.98.1?key=K");

    FakeTransport second;
    FetchReport again;
    auto snap2 = fetch_geo(list, sources, cache.path(), second, again, diag);
    CHECK(second.calls() == 0);
    CHECK(again.requests == 0);
    CHECK(again.sources["alpha"].cached == 3);
    CHECK(snap2.size() == 3);
}

TEST_CASE("one failing source of three leaves rows from the other two") {
    testing::TempDir cache;
    FakeTransport transport;
    std::vector<SourceConfig> sources{{"a", "http://good-a/{ip}", "", 1000.0},
                                      {"b", "http://bad-b/{ip}", "", 1000.0},
                                      {"c", "http://good-c/{ip}", "", 1000.0}};
    Diagnostics diag;
    FetchReport report;
    const auto list = ips(4);
    auto snap = fetch_geo(list, sources, cache.path(), transport, report, diag);
    REQUIRE(snap.size() == 4);
    for (const auto& [ip, recs] : snap) {
        REQUIRE(recs.size() == 2);
        CHECK(recs[0].source == "a");
        CHECK(recs[1].source == "c");
    }
    CHECK(report.sources["b"].failed == 4);
    CHECK(diag.count("fetch") == 4);
    CHECK_FALSE(report.all_sources_unreachable());
}

TEST_CASE("ten requests at two per second take at least five seconds") {
    testing::TempDir cache;
    FakeTransport transport;
    std::vector<SourceConfig> sources{{"slow", "http://good/{ip}", "", 2.0}};
    Diagnostics diag;
    FetchReport report;
    const auto start = std::chrono::steady_clock::now();
    fetch_geo(ips(10), sources, cache.path(), transport, report, diag);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(transport.calls() == 10);
    CHECK(elapsed >= 5.0);
}

TEST_CASE("http transport against a localhost server") {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Get(R"(/geo/[0-9.]+)", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.set_content(R"({"lat": 52.52, "lon": 13.405, "city": "Berlin", "country": "DE"})", "application/json");
    });
    server.Get("/broken/.*", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    testing::TempDir cache;
    auto transport = make_http_transport(std::chrono::seconds(5));
    const std::string base = "http://127.0.0.1:" + std::to_string(port);
    std::vector<SourceConfig> sources{{"ok", base + "/geo/{ip}", "", 100.0}, {"bad", base + "/broken/{ip}", "", 100.0}};
    Diagnostics diag;
    FetchReport report;
    auto snap = fetch_geo(ips(2), sources, cache.path(), *transport, report, diag);
    server.stop();
    th.join();

    CHECK(hits == 2);
    REQUIRE(snap.size() == 2);
    CHECK(snap.begin()->second.at(0).city == "Berlin");
    CHECK(report.sources["bad"].failed == 2);
    CHECK_FALSE(transport->get("http://127.0.0.1:1/nothing-listens"));
}

TEST_CASE("all sources unreachable is reported") {
    testing::TempDir cache;
    FakeTransport transport;
    std::vector<SourceConfig> sources{{"x", "http://bad/{ip}", "", 1000.0}};
    Diagnostics diag;
    FetchReport report;
    CHECK(fetch_geo(ips(2), sources, cache.path(), transport, report, diag).empty());
    CHECK(report.all_sources_unreachable());
}
