#include "geotrace/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "geotrace/csv.hpp"
#include "geotrace/errors.hpp"
#include "geotrace/stats.hpp"

namespace geotrace {

using nlohmann::json;

namespace {

bool blank(const std::string& line) {
    return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

std::string id_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    throw std::invalid_argument("id must be string or integer");
}

std::optional<double> rtt_value(const json& v) {
    if (v.is_null()) return std::nullopt;
    if (!v.is_number()) throw std::invalid_argument("rtt must be numeric");
    const double rtt = v.get<double>();
    if (!std::isfinite(rtt) || rtt < 0.0) throw std::invalid_argument("rtt must be finite and non-negative");
    return rtt;
}

std::optional<Ipv4> responder_value(const json& v) {
    if (v.is_null()) return std::nullopt;
    if (!v.is_string()) throw std::invalid_argument("ip must be a string");
    const auto& text = v.get_ref<const std::string&>();
    if (text == "*") return std::nullopt;
    auto ip = Ipv4::parse(text);
    if (!ip) throw std::invalid_argument("not an IPv4 address: " + text);
    return ip;
}

RawTraceroute atlas_record(const json& rec) {
    RawTraceroute rt;
    rt.measurement_id = id_string(rec.at("msm_id"));
    rt.probe_id = id_string(rec.at("prb_id"));
    rt.timestamp = rec.at("timestamp").get<std::int64_t>();
    if (rt.timestamp <= 0) throw std::invalid_argument("timestamp must be positive");
    for (const auto& hop : rec.at("result")) {
        RawHop h;
        h.hop_index = hop.at("hop").get<int>();
        if (h.hop_index < 1) throw std::invalid_argument("hop index must be >= 1");
        if (!rt.hops.empty() && h.hop_index <= rt.hops.back().hop_index) {
            throw std::invalid_argument("hop indices not strictly increasing");
        }
        if (auto it = hop.find("result"); it != hop.end()) {
            for (const auto& reply : *it) {
                RawReply r;
                if (auto from = reply.find("from"); from != reply.end()) r.responder = responder_value(*from);
                if (auto rtt = reply.find("rtt"); rtt != reply.end()) r.rtt_ms = rtt_value(*rtt);
                // {"x":"*"} and error replies carry neither field.
                h.replies.push_back(r);
            }
        }
        rt.hops.push_back(std::move(h));
    }
    return rt;
}

RawTraceroute native_record(const json& rec) {
    RawTraceroute rt;
    rt.measurement_id = rec.at("path_id").get<std::string>();
    rt.timestamp = 1;
    int index = 0;
    for (const auto& hop : rec.at("hops")) {
        RawHop h;
        h.hop_index = ++index;
        RawReply r;
        if (auto ip = hop.find("ip"); ip != hop.end()) r.responder = responder_value(*ip);
        if (auto rtt = hop.find("rtt"); rtt != hop.end()) r.rtt_ms = rtt_value(*rtt);
        h.replies.push_back(r);
        rt.hops.push_back(std::move(h));
    }
    return rt;
}

enum class Format { Atlas, Native, Detect };

std::vector<RawTraceroute> parse_lines(std::istream& in, ParseStats& stats, Format format) {
    if (!in.good() && !in.eof()) throw InputError("traceroute stream is unreadable");
    std::vector<RawTraceroute> out;
    std::string line;
    while (std::getline(in, line)) {
        if (blank(line)) continue;
        ++stats.records;
        try {
            const json rec = json::parse(line);
            if (!rec.is_object()) throw std::invalid_argument("record is not an object");
            Format f = format;
            if (f == Format::Detect) f = rec.contains("path_id") ? Format::Native : Format::Atlas;
            out.push_back(f == Format::Atlas ? atlas_record(rec) : native_record(rec));
        } catch (const std::exception&) {
            ++stats.skipped;
        }
    }
    if (in.bad()) throw InputError("I/O error while reading traceroutes");
    return out;
}

// Majority responder among replies that carry both an address and an RTT;
// ties resolve to the first responder seen.
std::optional<PathHop> reduce_hop(const RawHop& hop) {
    std::vector<Ipv4> order;
    std::unordered_map<Ipv4, std::vector<double>> rtts;
    for (const auto& r : hop.replies) {
        if (!r.responder || !r.rtt_ms) continue;
        auto [it, inserted] = rtts.try_emplace(*r.responder);
        if (inserted) order.push_back(*r.responder);
        it->second.push_back(*r.rtt_ms);
    }
    if (order.empty()) return std::nullopt;
    Ipv4 chosen = order.front();
    for (Ipv4 ip : order) {
        if (rtts[ip].size() > rtts[chosen].size()) chosen = ip;
    }
    return PathHop{chosen, median(rtts[chosen])};
}

}  // namespace

std::vector<RawTraceroute> parse_atlas(std::istream& in, ParseStats& stats) {
    return parse_lines(in, stats, Format::Atlas);
}

std::vector<RawTraceroute> parse_native(std::istream& in, ParseStats& stats) {
    return parse_lines(in, stats, Format::Native);
}

std::vector<RawTraceroute> parse_traceroutes(std::istream& in, ParseStats& stats) {
    return parse_lines(in, stats, Format::Detect);
}

void write_native(std::ostream& out, std::span<const CleanPath> paths) {
    for (const auto& p : paths) {
        json hops = json::array();
        for (const auto& h : p.hops) hops.push_back({{"ip", h.ip.to_string()}, {"rtt", h.rtt_ms}});
        out << json{{"path_id", p.path_id}, {"hops", std::move(hops)}}.dump() << '\n';
    }
}

NormalizeResult normalize(const RawTraceroute& rt, const PrefixSet& bogon_filter) {
    CleanPath path;
    path.path_id = rt.measurement_id;
    if (!rt.probe_id.empty()) path.path_id += ":" + rt.probe_id + ":" + std::to_string(rt.timestamp);
    for (const auto& hop : rt.hops) {
        auto reduced = reduce_hop(hop);
        if (!reduced || bogon_filter.contains(reduced->ip)) continue;
        if (!path.hops.empty() && path.hops.back().ip == reduced->ip) continue;
        path.hops.push_back(*reduced);
    }
    std::unordered_set<Ipv4> seen;
    for (const auto& h : path.hops) {
        if (!seen.insert(h.ip).second) return Rejection::RoutingLoop;
    }
    if (path.hops.size() < 2) return Rejection::TooFewHops;
    return path;
}

GeoSnapshot parse_geo_snapshot(std::istream& in, SnapshotStats& stats) {
    GeoSnapshot snapshot;
    csv::Reader reader(in);
    auto header_row = reader.next();
    if (!header_row) return snapshot;
    csv::Header header(*header_row);
    const auto ip_col = header.index("ip");
    const auto source_col = header.index("source");
    const auto lat_col = header.index("lat");
    const auto lon_col = header.index("lon");
    const auto city_col = header.index("city");
    const auto country_col = header.index("country");
    if (!ip_col || !source_col || !lat_col || !lon_col || !city_col || !country_col) {
        throw InputError("geo snapshot header must be ip,source,lat,lon,city,country");
    }
    std::set<std::pair<Ipv4, std::string>> seen;
    while (auto row = reader.next()) {
        ++stats.rows;
        auto cell = [&](std::size_t col) -> const std::string& {
            static const std::string empty;
            return col < row->size() ? (*row)[col] : empty;
        };
        GeoRecord rec;
        try {
            auto ip = Ipv4::parse(cell(*ip_col));
            if (!ip || cell(*source_col).empty()) throw std::invalid_argument("ip/source");
            rec.ip = *ip;
            rec.source = cell(*source_col);
            std::size_t used = 0;
            rec.location.lat = std::stod(cell(*lat_col), &used);
            if (used != cell(*lat_col).size()) throw std::invalid_argument("lat");
            rec.location.lon = std::stod(cell(*lon_col), &used);
            if (used != cell(*lon_col).size()) throw std::invalid_argument("lon");
        } catch (const std::exception&) {
            ++stats.malformed;
            continue;
        }
        if (!rec.location.valid()) {
            ++stats.out_of_range;
            continue;
        }
        rec.city = cell(*city_col);
        rec.country = cell(*country_col);
        if (!seen.emplace(rec.ip, rec.source).second) {
            ++stats.duplicates;
            continue;
        }
        snapshot[rec.ip].push_back(std::move(rec));
    }
    return snapshot;
}

GeoSnapshot load_geo_snapshot(const std::filesystem::path& file, SnapshotStats& stats) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw InputError("cannot open geo snapshot " + file.string());
    return parse_geo_snapshot(in, stats);
}

void write_geo_snapshot(std::ostream& out, const GeoSnapshot& snapshot) {
    csv::write_row(out, {"ip", "source", "lat", "lon", "city", "country"});
    char lat[32], lon[32];
    for (const auto& [ip, records] : snapshot) {
        for (const auto& r : records) {
            std::snprintf(lat, sizeof lat, "%.6f", r.location.lat);
            std::snprintf(lon, sizeof lon, "%.6f", r.location.lon);
            csv::write_row(out, {ip.to_string(), r.source, lat, lon, r.city, r.country});
        }
    }
}

}  // namespace geotrace
