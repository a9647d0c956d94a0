#pragma once

#include <span>
#include <vector>

#include "geotrace/geo.hpp"

namespace geotrace {

/// Immutable 1-degree latitude/longitude grid over city-polygon discs.
/// Each disc is registered in every cell its spherical bounding box touches;
/// a query visits the cells of its own bounding box and confirms candidates
/// with an exact haversine test, so results equal a linear scan.
class SpatialIndex {
public:
    explicit SpatialIndex(std::span<const CityPolygon> polygons);

    /// Polygon ids whose disc intersects the query disc (boundary inclusive),
    /// sorted ascending.
    std::vector<int> query_overlaps(GeoPoint center, double radius_km) const;

    std::span<const CityPolygon> polygons() const { return polygons_; }
    const CityPolygon& polygon(int id) const { return polygons_[static_cast<std::size_t>(slot_of(id))]; }

private:
    static constexpr int kLatCells = 180;
    static constexpr int kLonCells = 360;

    template <class Fn>
    static void for_each_cell(GeoPoint center, double radius_km, Fn&& fn);
    int slot_of(int polygon_id) const;

    std::vector<CityPolygon> polygons_;
    std::vector<int> id_to_slot_;
    std::vector<std::vector<int>> cells_;
};

/// Reference semantics for query_overlaps.
std::vector<int> linear_scan_overlaps(std::span<const CityPolygon> polygons, GeoPoint center, double radius_km);

}  // namespace geotrace
