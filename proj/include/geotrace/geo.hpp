#pragma once

#include <filesystem>
#include <istream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geotrace/ipv4.hpp"

namespace geotrace {

inline constexpr double kEarthRadiusKm = 6371.0;
/// Propagation speed of light in fiber, km per millisecond.
inline constexpr double kFiberKmPerMs = 200.0;
/// Default city radius used for polygons, clustering and match tests.
inline constexpr double kCityRadiusKm = 20.0;

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    bool valid() const { return lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0; }
    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Great-circle distance on a sphere of radius kEarthRadiusKm.
double haversine_km(GeoPoint a, GeoPoint b);

/// One-way distance light in fiber covers during half of a round-trip
/// difference: (delta_ms / 2) * kFiberKmPerMs.
constexpr double sol_km(double delta_ms) { return delta_ms / 2.0 * kFiberKmPerMs; }

/// A single geolocation database answer for one IP.
struct GeoRecord {
    Ipv4 ip;
    std::string source;
    GeoPoint location;
    std::string city;
    std::string country;
};

/// City-granularity candidate for an IP, merged across database sources.
struct CityCluster {
    int cluster_id = 0;
    GeoPoint centroid;
    std::string city;
    std::string country;
    std::set<std::string> supporting_sources;
    std::size_t member_count = 0;
};

/// Case-folded, trimmed, inner whitespace collapsed.
std::string normalize_place(std::string_view name);

/// Merge records for one IP into city clusters. Named records group by
/// normalized (city, country); unnamed records join the nearest cluster
/// within merge_radius_km or start their own. Output is independent of
/// input order.
std::vector<CityCluster> cluster_candidates(std::span<const GeoRecord> records,
                                            double merge_radius_km = kCityRadiusKm);

/// Disc approximation of a metropolitan area.
struct CityPolygon {
    int polygon_id = 0;
    std::string name;
    std::string country;
    GeoPoint centroid;
    double radius_km = kCityRadiusKm;
};

/// Reads `name,country,lat,lon[,radius_km]`. Throws InputError when the
/// file is missing or malformed.
std::vector<CityPolygon> load_city_catalog(const std::filesystem::path& file);
std::vector<CityPolygon> parse_city_catalog(std::istream& in, const std::string& origin = "<stream>");

}  // namespace geotrace
