#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "geotrace/errors.hpp"
#include "geotrace/geo.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace geotrace;

TEST_CASE("haversine identity and antipode") {
    const GeoPoint paris{48.8566, 2.3522};
    CHECK(haversine_km(paris, paris) == 0.0);
    CHECK(haversine_km({0, 0}, {0, 180}) == doctest::Approx(6371.0 * std::numbers::pi).epsilon(1e-12));
    CHECK(haversine_km({90, 0}, {-90, 0}) == doctest::Approx(6371.0 * std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("haversine Paris to London against the vector oracle") {
    const double expected = oracle::great_circle_km(48.8566, 2.3522, 51.5074, -0.1278);
    const double got = haversine_km({48.8566, 2.3522}, {51.5074, -0.1278});
    CHECK(std::abs(got - expected) / expected < 1e-3);
    CHECK(got == doctest::Approx(343.5).epsilon(0.01));
}

TEST_CASE("haversine random pairs against the vector oracle") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lat(-90, 90), lon(-180, 180);
    for (int i = 0; i < 2000; ++i) {
        const GeoPoint a{lat(rng), lon(rng)}, b{lat(rng), lon(rng)};
        const double want = oracle::great_circle_km(a.lat, a.lon, b.lat, b.lon);
        const double got = haversine_km(a, b);
        REQUIRE(std::abs(got - want) <= 1e-3 * want + 1e-9);
        REQUIRE(got == doctest::Approx(haversine_km(b, a)));
    }
}

TEST_CASE("sol_km constant") {
    CHECK(sol_km(0.0) == 0.0);
    CHECK(sol_km(10.0) == 1000.0);
    CHECK(sol_km(1.0) == 100.0);
}

TEST_CASE("normalize_place") {
    CHECK(normalize_place("  New   York ") == "new york");
    CHECK(normalize_place("PARIS") == "paris");
    CHECK(normalize_place("") == "");
}

namespace {
GeoRecord rec(const std::string& source, GeoPoint p, const std::string& city, const std::string& country) {
    return {*Ipv4::parse("62.40.98.1"), source, p, city, country};
}
}  // namespace

TEST_CASE("eight agreeing databases make one cluster") {
    std::vector<GeoRecord> records;
    for (int i = 0; i < 8; ++i) records.push_back(rec("db" + std::to_string(i), {48.8566, 2.3522}, "Paris", "FR"));
    auto clusters = cluster_candidates(records);
    REQUIRE(clusters.size() == 1);
    CHECK(clusters[0].supporting_sources.size() == 8);
    CHECK(clusters[0].member_count == 8);
}

TEST_CASE("distinct named cities stay apart") {
    std::vector<GeoRecord> records{rec("a", {48.8566, 2.3522}, "Paris", "FR"), rec("b", {51.5074, -0.1278}, "London", "GB")};
    CHECK(cluster_candidates(records).size() == 2);
}

TEST_CASE("unnamed record joins the nearest cluster within the radius") {
    // 5 km due north of Paris: 5 / 6371 rad of latitude.
    const double dlat = 5.0 / 6371.0 * 180.0 / std::numbers::pi;
    const GeoPoint near{48.8566 + dlat, 2.3522};
    const GeoPoint far{48.8566 + 5 * dlat, 2.3522};
    REQUIRE(oracle::great_circle_km(48.8566, 2.3522, near.lat, near.lon) <= 20.0);
    REQUIRE(oracle::great_circle_km(48.8566, 2.3522, far.lat, far.lon) > 20.0);

    std::vector<GeoRecord> records{rec("a", {48.8566, 2.3522}, "Paris", "FR"), rec("b", near, "", "")};
    auto clusters = cluster_candidates(records);
    REQUIRE(clusters.size() == 1);
    CHECK(clusters[0].city == "Paris");
    CHECK(clusters[0].supporting_sources == std::set<std::string>{"a", "b"});

    records.push_back(rec("c", far, "", ""));
    CHECK(cluster_candidates(records).size() == 2);
}

TEST_CASE("clustering is independent of record order") {
    std::vector<GeoRecord> records{rec("a", {48.8566, 2.3522}, "Paris", "FR"), rec("b", {51.5074, -0.1278}, "London", "GB"),
                                   rec("c", {48.86, 2.36}, "", ""), rec("d", {45.764, 4.8357}, "lyon", "fr"),
                                   rec("e", {45.77, 4.84}, "Lyon", "FR")};
    auto sorted_view = [](std::vector<CityCluster> v) {
        std::vector<std::string> out;
        for (const auto& c : v) {
            std::string s = normalize_place(c.city) + "|" + normalize_place(c.country) + "|";
            for (const auto& src : c.supporting_sources) s += src;
            out.push_back(s);
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    const auto base = sorted_view(cluster_candidates(records));
    CHECK(base.size() == 3);
    std::mt19937 rng(3);
    for (int i = 0; i < 20; ++i) {
        std::shuffle(records.begin(), records.end(), rng);
        CHECK(sorted_view(cluster_candidates(records)) == base);
    }
}

TEST_CASE("city catalog parsing") {
    std::istringstream in("name,country,lat,lon,radius_km\nParis,FR,48.8566,2.3522,20\nTiny,XX,1,2,\nParis,FR,48.8566,2.3522,35\n");
    auto cat = parse_city_catalog(in);
    REQUIRE(cat.size() == 3);
    CHECK(cat[0].radius_km == 20.0);
    CHECK(cat[1].radius_km == 20.0);
    CHECK(cat[2].radius_km == 35.0);
    CHECK(cat[0].polygon_id != cat[2].polygon_id);

    std::istringstream no_radius("name,country,lat,lon\nLyon,FR,45.764,4.8357\n");
    auto cat2 = parse_city_catalog(no_radius);
    REQUIRE(cat2.size() == 1);
    CHECK(cat2[0].radius_km == 20.0);

    std::istringstream bad("name,country,lat,lon\nX,YY,95,0\n");
    CHECK_THROWS_AS(parse_city_catalog(bad), InputError);
    CHECK_THROWS_AS(load_city_catalog(testing::fixture("does_not_exist.csv")), InputError);
    CHECK(load_city_catalog(testing::catalog_file()).size() > 200);
}
