#include "geotrace/fetch.hpp"

#include <cmath>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "geotrace/errors.hpp"

namespace geotrace {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

void replace_all(std::string& text, const std::string& from, const std::string& to) {
    for (std::size_t pos = 0; (pos = text.find(from, pos)) != std::string::npos; pos += to.size()) {
        text.replace(pos, from.size(), to);
    }
}

std::optional<double> number_field(const json& obj, std::initializer_list<const char*> names) {
    for (const char* n : names) {
        auto it = obj.find(n);
        if (it == obj.end()) continue;
        if (it->is_number()) return it->get<double>();
        if (it->is_string()) {
            try {
                std::size_t used = 0;
                const auto& s = it->get_ref<const std::string&>();
                double v = std::stod(s, &used);
                if (used == s.size()) return v;
            } catch (const std::exception&) {
            }
        }
        return std::nullopt;
    }
    return std::nullopt;
}

std::string string_field(const json& obj, std::initializer_list<const char*> names) {
    for (const char* n : names) {
        auto it = obj.find(n);
        if (it != obj.end() && it->is_string()) return it->get<std::string>();
    }
    return {};
}

std::filesystem::path cache_file(const std::filesystem::path& dir, const std::string& source, Ipv4 ip) {
    return dir / source / (ip.to_string() + ".json");
}

std::optional<GeoRecord> read_cache(const std::filesystem::path& file, Ipv4 ip, const std::string& source) {
    std::ifstream in(file);
    if (!in) return std::nullopt;
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_service_response(buf.str(), ip, source);
}

void write_cache_atomic(const std::filesystem::path& file, const GeoRecord& rec) {
    std::filesystem::create_directories(file.parent_path());
    auto tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << json{{"lat", rec.location.lat}, {"lon", rec.location.lon}, {"city", rec.city}, {"country", rec.country}}
                   .dump();
    }
    std::filesystem::rename(tmp, file);
}

class HttplibTransport final : public HttpTransport {
public:
    explicit HttplibTransport(std::chrono::milliseconds timeout) : timeout_(timeout) {}

    std::optional<std::string> get(const std::string& url) override {
        static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
        std::smatch m;
        if (!std::regex_match(url, m, kUrl)) return std::nullopt;
        httplib::Client client(m[1].str());
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        const std::string path = m[2].matched ? m[2].str() : "/";
        auto res = client.Get(path);
        if (!res || res->status < 200 || res->status >= 300) return std::nullopt;
        return res->body;
    }

private:
    std::chrono::milliseconds timeout_;
};

}  // namespace

std::vector<SourceConfig> parse_fetch_config(std::istream& in) {
    std::map<std::string, SourceConfig> by_name;
    std::map<std::string, bool> has_rate;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("fetch config line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        static const std::regex kKey(R"(^source\.([A-Za-z0-9_-]+)\.(url|key|rate_per_s)$)");
        std::smatch m;
        if (!std::regex_match(key, m, kKey)) throw ConfigError("fetch config: unknown key '" + key + "'");
        auto& src = by_name[m[1].str()];
        src.name = m[1].str();
        const std::string field = m[2].str();
        if (field == "url") {
            src.url = value;
        } else if (field == "key") {
            src.key = value;
        } else {
            try {
                src.rate_per_s = std::stod(value);
            } catch (const std::exception&) {
                throw ConfigError("fetch config: bad rate_per_s for " + src.name);
            }
            if (!(src.rate_per_s > 0.0) || !std::isfinite(src.rate_per_s)) {
                throw ConfigError("fetch config: rate_per_s must be positive for " + src.name);
            }
        }
    }
    std::vector<SourceConfig> out;
    for (auto& [name, src] : by_name) {
        if (src.url.empty()) throw ConfigError("fetch config: source '" + name + "' has no url");
        out.push_back(std::move(src));
    }
    return out;
}

std::unique_ptr<HttpTransport> make_http_transport(std::chrono::milliseconds timeout) {
    return std::make_unique<HttplibTransport>(timeout);
}

bool FetchReport::all_sources_unreachable() const {
    std::size_t fetched = 0, failed = 0;
    for (const auto& [_, r] : sources) {
        fetched += r.fetched;
        failed += r.failed;
    }
    return failed > 0 && fetched == 0;
}

std::optional<GeoRecord> parse_service_response(const std::string& body, Ipv4 ip, const std::string& source) {
    json obj;
    try {
        obj = json::parse(body);
    } catch (const json::exception&) {
        return std::nullopt;
    }
    if (!obj.is_object()) return std::nullopt;
    auto lat = number_field(obj, {"lat", "latitude"});
    auto lon = number_field(obj, {"lon", "longitude", "lng"});
    if (!lat || !lon) return std::nullopt;
    GeoRecord rec{ip, source, {*lat, *lon}, string_field(obj, {"city", "city_name"}),
                  string_field(obj, {"country", "country_code"})};
    if (!rec.location.valid()) return std::nullopt;
    return rec;
}

GeoSnapshot fetch_geo(std::span<const Ipv4> ips, std::span<const SourceConfig> sources,
                      const std::filesystem::path& cache_dir, HttpTransport& transport, FetchReport& report,
                      Diagnostics& diag) {
    using Clock = std::chrono::steady_clock;
    std::vector<std::vector<std::optional<GeoRecord>>> results(sources.size());
    std::vector<SourceReport> per_source(sources.size());
    std::vector<std::size_t> requests(sources.size(), 0);

    auto run_source = [&](std::size_t s) {
        const auto& src = sources[s];
        auto& out = results[s];
        out.resize(ips.size());
        const auto interval = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / src.rate_per_s));
        auto slot = Clock::now();
        for (std::size_t i = 0; i < ips.size(); ++i) {
            const auto file = cache_file(cache_dir, src.name, ips[i]);
            if (auto cached = read_cache(file, ips[i], src.name)) {
                out[i] = std::move(cached);
                ++per_source[s].cached;
                continue;
            }
            slot = std::max(slot, Clock::now());
            std::this_thread::sleep_until(slot);
            std::string url = src.url;
            replace_all(url, "{ip}", ips[i].to_string());
            replace_all(url, "{key}", src.key);
            ++requests[s];
            auto body = transport.get(url);
            slot += interval;
            std::optional<GeoRecord> rec = body ? parse_service_response(*body, ips[i], src.name) : std::nullopt;
            if (rec) {
                write_cache_atomic(file, *rec);
                out[i] = std::move(rec);
                ++per_source[s].fetched;
            } else {
                ++per_source[s].failed;
                diag.warn("fetch", src.name + ": no usable answer for " + ips[i].to_string());
            }
            std::this_thread::sleep_until(slot);
        }
    };

    {
        std::vector<std::jthread> workers;
        workers.reserve(sources.size());
        for (std::size_t s = 0; s < sources.size(); ++s) workers.emplace_back(run_source, s);
    }

    GeoSnapshot snapshot;
    for (std::size_t i = 0; i < ips.size(); ++i) {
        for (std::size_t s = 0; s < sources.size(); ++s) {
            if (results[s][i]) snapshot[ips[i]].push_back(*results[s][i]);
        }
    }
    for (std::size_t s = 0; s < sources.size(); ++s) {
        auto& r = report.sources[sources[s].name];
        r.cached += per_source[s].cached;
        r.fetched += per_source[s].fetched;
        r.failed += per_source[s].failed;
        report.requests += requests[s];
    }
    return snapshot;
}

}  // namespace geotrace
