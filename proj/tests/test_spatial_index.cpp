#include <doctest.h>

#include <random>

#include "geotrace/spatial_index.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace geotrace;

namespace {

// Own scan, independent of linear_scan_overlaps.
std::vector<int> brute(const std::vector<CityPolygon>& polys, GeoPoint c, double r) {
    std::vector<int> out;
    for (const auto& p : polys) {
        if (oracle::great_circle_km(c.lat, c.lon, p.centroid.lat, p.centroid.lon) <= r + p.radius_km + 1e-9) {
            out.push_back(p.polygon_id);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("zero radius at a centroid is boundary inclusive") {
    const auto cat = load_city_catalog(testing::catalog_file());
    SpatialIndex idx(cat);
    for (const auto& p : cat) {
        auto hits = idx.query_overlaps(p.centroid, 0.0);
        CHECK(std::find(hits.begin(), hits.end(), p.polygon_id) != hits.end());
    }
}

TEST_CASE("query far from every polygon is empty") {
    std::vector<CityPolygon> cat{{0, "A", "XX", {10, 10}, 20}, {1, "B", "XX", {-30, 100}, 50}};
    SpatialIndex idx(cat);
    CHECK(idx.query_overlaps({60, -40}, 100).empty());
    CHECK(idx.query_overlaps({10, 10.2}, 10).size() == 1);
}

TEST_CASE("grid index equals brute force on random catalogs including poles and the antimeridian") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lat(-90, 90), lon(-180, 180), rad(1, 300), qrad(0, 3000);
    std::uniform_int_distribution<int> count(1, 60);
    for (int inst = 0; inst < 200; ++inst) {
        std::vector<CityPolygon> cat;
        const int n = count(rng);
        for (int i = 0; i < n; ++i) {
            GeoPoint c{lat(rng), lon(rng)};
            if (i % 7 == 0) c.lon = (i % 2 ? 179.9 : -179.9);
            if (i % 11 == 0) c.lat = (i % 2 ? 89.5 : -89.5);
            cat.push_back({i * 3 + 1, "c" + std::to_string(i), "XX", c, rad(rng)});
        }
        SpatialIndex idx(cat);
        for (int q = 0; q < 20; ++q) {
            GeoPoint c{lat(rng), lon(rng)};
            const double r = qrad(rng);
            const auto got = idx.query_overlaps(c, r);
            REQUIRE(got == brute(cat, c, r));
            REQUIRE(got == linear_scan_overlaps(cat, c, r));
        }
    }
}
