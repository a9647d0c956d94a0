#pragma once

#include <chrono>
#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geotrace/diagnostics.hpp"
#include "geotrace/ingest.hpp"

namespace geotrace {

/// One geolocation service. `url` may contain `{ip}` and `{key}`
/// placeholders.
struct SourceConfig {
    std::string name;
    std::string url;
    std::string key;
    double rate_per_s = 1.0;
};

/// Flat `source.<name>.url|key|rate_per_s = value` file. Throws ConfigError
/// on unknown keys, missing urls or non-positive rates.
std::vector<SourceConfig> parse_fetch_config(std::istream& in);

/// Minimal HTTP GET seam so the client can be exercised offline.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    /// Body of a 2xx response, nullopt on any failure.
    virtual std::optional<std::string> get(const std::string& url) = 0;
};

/// cpp-httplib backed transport (http:// only unless built with OpenSSL).
std::unique_ptr<HttpTransport> make_http_transport(std::chrono::milliseconds timeout = std::chrono::seconds(10));

struct SourceReport {
    std::size_t cached = 0;
    std::size_t fetched = 0;
    std::size_t failed = 0;
};

struct FetchReport {
    std::map<std::string, SourceReport> sources;
    std::size_t requests = 0;

    /// True when network requests were needed and not one succeeded.
    bool all_sources_unreachable() const;
};

/// Parses a service response body: a JSON object with lat/latitude,
/// lon/longitude/lng, city, and country/country_code.
std::optional<GeoRecord> parse_service_response(const std::string& body, Ipv4 ip, const std::string& source);

/// Cache-first retrieval. A cached (ip, source) is never re-queried;
/// requests to one source are serialized and spaced by 1/rate_per_s, each
/// request holding its full slot. Sources run concurrently.
GeoSnapshot fetch_geo(std::span<const Ipv4> ips, std::span<const SourceConfig> sources,
                      const std::filesystem::path& cache_dir, HttpTransport& transport, FetchReport& report,
                      Diagnostics& diag);

}  // namespace geotrace
