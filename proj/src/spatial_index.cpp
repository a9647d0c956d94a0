#include "geotrace/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace geotrace {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
// Cell-boundary padding in degrees; absorbs rounding in the box computation.
constexpr double kPadDeg = 1e-6;

bool disc_intersects(const CityPolygon& p, GeoPoint center, double radius_km) {
    return haversine_km(center, p.centroid) <= radius_km + p.radius_km;
}

int lat_cell(double lat) { return std::clamp(static_cast<int>(std::floor(lat + 90.0)), 0, 179); }

}  // namespace

template <class Fn>
void SpatialIndex::for_each_cell(GeoPoint center, double radius_km, Fn&& fn) {
    const double angular = radius_km / kEarthRadiusKm;
    if (angular >= std::numbers::pi) {
        for (int la = 0; la < kLatCells; ++la)
            for (int lo = 0; lo < kLonCells; ++lo) fn(la * kLonCells + lo);
        return;
    }
    const double delta_deg = angular * kRadToDeg;
    double lat_min = center.lat - delta_deg - kPadDeg;
    double lat_max = center.lat + delta_deg + kPadDeg;
    bool all_lon = false;
    double half_width = 0.0;
    if (lat_max >= 90.0 || lat_min <= -90.0) {
        // Cap reaches a pole: every meridian crosses it.
        all_lon = true;
    } else {
        const double ratio = std::sin(angular) / std::cos(center.lat / kRadToDeg);
        if (ratio >= 1.0) {
            all_lon = true;
        } else {
            half_width = std::asin(ratio) * kRadToDeg + kPadDeg;
            if (half_width >= 180.0) all_lon = true;
        }
    }
    const int la0 = lat_cell(lat_min);
    const int la1 = lat_cell(lat_max);
    for (int la = la0; la <= la1; ++la) {
        if (all_lon) {
            for (int lo = 0; lo < kLonCells; ++lo) fn(la * kLonCells + lo);
            continue;
        }
        const int lo0 = static_cast<int>(std::floor(center.lon - half_width + 180.0));
        const int lo1 = static_cast<int>(std::floor(center.lon + half_width + 180.0));
        if (lo1 - lo0 + 1 >= kLonCells) {
            for (int lo = 0; lo < kLonCells; ++lo) fn(la * kLonCells + lo);
            continue;
        }
        for (int lo = lo0; lo <= lo1; ++lo) {
            const int wrapped = ((lo % kLonCells) + kLonCells) % kLonCells;
            fn(la * kLonCells + wrapped);
        }
    }
}

SpatialIndex::SpatialIndex(std::span<const CityPolygon> polygons)
    : polygons_(polygons.begin(), polygons.end()), cells_(kLatCells * kLonCells) {
    int max_id = -1;
    for (const auto& p : polygons_) {
        if (p.polygon_id < 0) throw std::invalid_argument("negative polygon id");
        max_id = std::max(max_id, p.polygon_id);
    }
    id_to_slot_.assign(static_cast<std::size_t>(max_id + 1), -1);
    for (std::size_t slot = 0; slot < polygons_.size(); ++slot) {
        const auto& p = polygons_[slot];
        if (id_to_slot_[static_cast<std::size_t>(p.polygon_id)] != -1) {
            throw std::invalid_argument("duplicate polygon id " + std::to_string(p.polygon_id));
        }
        id_to_slot_[static_cast<std::size_t>(p.polygon_id)] = static_cast<int>(slot);
        for_each_cell(p.centroid, p.radius_km, [&](int cell) {
            auto& bucket = cells_[static_cast<std::size_t>(cell)];
            if (bucket.empty() || bucket.back() != static_cast<int>(slot)) bucket.push_back(static_cast<int>(slot));
        });
    }
}

int SpatialIndex::slot_of(int polygon_id) const {
    if (polygon_id < 0 || static_cast<std::size_t>(polygon_id) >= id_to_slot_.size() ||
        id_to_slot_[static_cast<std::size_t>(polygon_id)] < 0) {
        throw std::out_of_range("unknown polygon id " + std::to_string(polygon_id));
    }
    return id_to_slot_[static_cast<std::size_t>(polygon_id)];
}

std::vector<int> SpatialIndex::query_overlaps(GeoPoint center, double radius_km) const {
    std::vector<int> out;
    std::vector<char> seen(polygons_.size(), 0);
    // Polygon discs are registered by their own box, so the query box only
    // needs its own radius: any shared point of two discs lies in both boxes.
    for_each_cell(center, radius_km, [&](int cell) {
        for (int slot : cells_[static_cast<std::size_t>(cell)]) {
            if (seen[static_cast<std::size_t>(slot)]) continue;
            seen[static_cast<std::size_t>(slot)] = 1;
            const auto& p = polygons_[static_cast<std::size_t>(slot)];
            if (disc_intersects(p, center, radius_km)) out.push_back(p.polygon_id);
        }
    });
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> linear_scan_overlaps(std::span<const CityPolygon> polygons, GeoPoint center, double radius_km) {
    std::vector<int> out;
    for (const auto& p : polygons) {
        if (disc_intersects(p, center, radius_km)) out.push_back(p.polygon_id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace geotrace
