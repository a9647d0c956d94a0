#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "geotrace/geo.hpp"
#include "geotrace/ipv4.hpp"

namespace geotrace {

struct RawReply {
    std::optional<Ipv4> responder;
    std::optional<double> rtt_ms;
};

struct RawHop {
    int hop_index = 1;
    std::vector<RawReply> replies;
};

struct RawTraceroute {
    std::string measurement_id;
    std::string probe_id;
    std::int64_t timestamp = 0;
    std::vector<RawHop> hops;
};

struct PathHop {
    Ipv4 ip;
    double rtt_ms = 0.0;
    friend bool operator==(const PathHop&, const PathHop&) = default;
};

/// Normalized traceroute: responding, routable hops with per-hop median RTT
/// and no consecutive repeats.
struct CleanPath {
    std::string path_id;
    std::vector<PathHop> hops;
    friend bool operator==(const CleanPath&, const CleanPath&) = default;
};

struct ParseStats {
    std::size_t records = 0;
    std::size_t skipped = 0;
};

/// Newline-delimited RIPE Atlas traceroute results. Malformed records are
/// counted in `stats.skipped` and dropped. Throws InputError when the
/// stream is unreadable.
std::vector<RawTraceroute> parse_atlas(std::istream& in, ParseStats& stats);

/// Native interchange format, one `{"path_id", "hops":[{"ip","rtt"}]}` per
/// line. A hop with a null/"*" ip or null rtt is a timeout.
std::vector<RawTraceroute> parse_native(std::istream& in, ParseStats& stats);

/// Accepts either format line by line (Atlas records carry `result`,
/// native records carry `path_id`).
std::vector<RawTraceroute> parse_traceroutes(std::istream& in, ParseStats& stats);

void write_native(std::ostream& out, std::span<const CleanPath> paths);

enum class Rejection { TooFewHops, RoutingLoop };
using NormalizeResult = std::variant<CleanPath, Rejection>;

/// Drop unresponsive and filtered hops, reduce replies to a median RTT,
/// collapse consecutive duplicates (first RTT wins), reject routing loops
/// and paths with fewer than two hops.
NormalizeResult normalize(const RawTraceroute& rt, const PrefixSet& bogon_filter);

using GeoSnapshot = std::map<Ipv4, std::vector<GeoRecord>>;

struct SnapshotStats {
    std::size_t rows = 0;
    std::size_t out_of_range = 0;
    std::size_t duplicates = 0;
    std::size_t malformed = 0;
};

/// CSV `ip,source,lat,lon,city,country`. Out-of-range coordinates and
/// malformed rows are skipped; a repeated (ip, source) keeps the first row.
GeoSnapshot parse_geo_snapshot(std::istream& in, SnapshotStats& stats);
/// Throws InputError when the file is missing.
GeoSnapshot load_geo_snapshot(const std::filesystem::path& file, SnapshotStats& stats);
void write_geo_snapshot(std::ostream& out, const GeoSnapshot& snapshot);

}  // namespace geotrace
