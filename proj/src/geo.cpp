#include "geotrace/geo.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <tuple>

#include "geotrace/csv.hpp"
#include "geotrace/errors.hpp"

namespace geotrace {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct ClusterBuilder {
    std::string city;
    std::string country;
    double lat_sum = 0.0;
    double lon_sum = 0.0;
    std::size_t members = 0;
    std::set<std::string> sources;

    GeoPoint centroid() const {
        return {lat_sum / static_cast<double>(members), lon_sum / static_cast<double>(members)};
    }
    void add(const GeoRecord& r) {
        lat_sum += r.location.lat;
        lon_sum += r.location.lon;
        ++members;
        sources.insert(r.source);
    }
};

double parse_double(const std::string& text, const std::string& what, const std::string& origin, std::size_t line) {
    try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw InputError(origin + ":" + std::to_string(line) + ": bad " + what + " '" + text + "'");
    }
}

}  // namespace

double haversine_km(GeoPoint a, GeoPoint b) {
    const double phi1 = a.lat * kDegToRad;
    const double phi2 = b.lat * kDegToRad;
    const double dphi = (b.lat - a.lat) * kDegToRad;
    const double dlambda = (b.lon - a.lon) * kDegToRad;
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlambda / 2.0);
    double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    h = std::clamp(h, 0.0, 1.0);
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

std::string normalize_place(std::string_view name) {
    std::string out;
    out.reserve(name.size());
    bool pending_space = false;
    for (unsigned char c : name) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

std::vector<CityCluster> cluster_candidates(std::span<const GeoRecord> records, double merge_radius_km) {
    struct Keyed {
        std::string city;
        std::string country;
        const GeoRecord* rec;
    };
    std::vector<Keyed> named, unnamed;
    for (const auto& r : records) {
        Keyed k{normalize_place(r.city), normalize_place(r.country), &r};
        (k.city.empty() ? unnamed : named).push_back(std::move(k));
    }
    auto order = [](const Keyed& a, const Keyed& b) {
        return std::tie(a.country, a.city, a.rec->source, a.rec->location.lat, a.rec->location.lon) <
               std::tie(b.country, b.city, b.rec->source, b.rec->location.lat, b.rec->location.lon);
    };
    std::sort(named.begin(), named.end(), order);
    std::sort(unnamed.begin(), unnamed.end(), order);

    std::vector<ClusterBuilder> clusters;
    std::map<std::pair<std::string, std::string>, std::size_t> by_key;
    for (const auto& k : named) {
        auto [it, inserted] = by_key.try_emplace({k.country, k.city}, clusters.size());
        if (inserted) {
            ClusterBuilder b;
            b.city = k.rec->city;
            b.country = k.rec->country;
            clusters.push_back(std::move(b));
        }
        clusters[it->second].add(*k.rec);
    }
    for (const auto& k : unnamed) {
        std::size_t best = clusters.size();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            const double d = haversine_km(clusters[i].centroid(), k.rec->location);
            if (d <= merge_radius_km && d < best_d) {
                best_d = d;
                best = i;
            }
        }
        if (best == clusters.size()) {
            ClusterBuilder b;
            b.country = k.rec->country;
            clusters.push_back(std::move(b));
        }
        clusters[best].add(*k.rec);
    }

    std::vector<CityCluster> out;
    out.reserve(clusters.size());
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        const auto& b = clusters[i];
        out.push_back(CityCluster{static_cast<int>(i), b.centroid(), b.city, b.country, b.sources, b.members});
    }
    std::sort(out.begin(), out.end(), [](const CityCluster& a, const CityCluster& b) {
        return std::make_tuple(normalize_place(a.country), normalize_place(a.city), a.cluster_id) <
               std::make_tuple(normalize_place(b.country), normalize_place(b.city), b.cluster_id);
    });
    return out;
}

std::vector<CityPolygon> parse_city_catalog(std::istream& in, const std::string& origin) {
    csv::Reader reader(in);
    auto header_row = reader.next();
    if (!header_row) return {};
    csv::Header header(*header_row);
    auto name_col = header.index("name");
    auto country_col = header.index("country");
    auto lat_col = header.index("lat");
    auto lon_col = header.index("lon");
    auto radius_col = header.index("radius_km");
    if (!name_col || !country_col || !lat_col || !lon_col) {
        throw InputError(origin + ": catalog header must contain name,country,lat,lon");
    }
    std::vector<CityPolygon> out;
    while (auto row = reader.next()) {
        auto cell = [&](std::size_t col) -> std::string { return col < row->size() ? (*row)[col] : std::string{}; };
        CityPolygon p;
        p.polygon_id = static_cast<int>(out.size());
        p.name = cell(*name_col);
        p.country = cell(*country_col);
        p.centroid = {parse_double(cell(*lat_col), "lat", origin, reader.line()),
                      parse_double(cell(*lon_col), "lon", origin, reader.line())};
        if (!p.centroid.valid()) {
            throw InputError(origin + ":" + std::to_string(reader.line()) + ": coordinates out of range");
        }
        if (radius_col && !cell(*radius_col).empty()) {
            p.radius_km = parse_double(cell(*radius_col), "radius_km", origin, reader.line());
            if (!(p.radius_km > 0.0)) {
                throw InputError(origin + ":" + std::to_string(reader.line()) + ": radius_km must be positive");
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<CityPolygon> load_city_catalog(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw InputError("cannot open city catalog " + file.string());
    return parse_city_catalog(in, file.string());
}

}  // namespace geotrace
