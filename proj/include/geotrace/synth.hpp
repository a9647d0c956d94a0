#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "geotrace/diagnostics.hpp"
#include "geotrace/geo.hpp"
#include "geotrace/ingest.hpp"
#include "geotrace/results.hpp"

namespace geotrace::synth {

struct Router {
    Ipv4 ip;
    GeoPoint location;
    std::string city;
    std::string country;
};

struct Link {
    int a = 0;
    int b = 0;
    friend bool operator==(const Link&, const Link&) = default;
};

/// Ground-truth topology. Routers sit on catalog city centroids; `backbone`
/// holds a spanning tree over the edge routers plus tunnel links, and
/// `links` is its superset. Each tunnel is a three-router run whose interior
/// member connects only to its two tunnel neighbors.
struct World {
    std::vector<Router> routers;
    std::vector<Link> links;
    std::vector<Link> backbone;
    std::vector<std::vector<int>> mpls_tunnels;
    std::uint64_t rng_seed = 0;

    /// Routers strictly inside a tunnel.
    std::set<Ipv4> tunnel_interior() const;
    std::set<Ipv4> tunnel_members() const;
    std::optional<std::size_t> router_index(Ipv4 ip) const;
};

struct WorldParams {
    std::uint64_t seed = 1;
    int n_routers = 200;
    int n_cities = 60;
    double mpls_fraction = 0.0;
    /// Extra links per router to its nearest other cities, on top of the
    /// backbone.
    int nearest_links = 2;
    /// Shortest allowed tunnel link.
    double tunnel_min_link_km = 500.0;
    /// Restrict the world to one country's cities (ISO code); empty means
    /// any catalog city.
    std::string country;
};

/// Deterministic in params.seed. The world covers the n_cities catalog
/// cities (of params.country, when set) nearest a seed-chosen center. The tunnel count is
/// round(mpls_fraction * (n_routers - 1)), fewer when the region has no
/// long enough spans left. Throws ConfigError on invalid
/// parameters (including n_cities above the catalog size).
World generate_world(const WorldParams& params, std::span<const CityPolygon> catalog);

struct SimulatedPaths {
    std::vector<CleanPath> paths;
    /// Router indices per path, parallel to `paths`.
    std::vector<std::vector<int>> routes;
};

/// Routes between random endpoint pairs minimize distance plus a fixed
/// per-link cost. Base RTT at hop k is the round trip over the path distance
/// to k; every hop of a tunnel run reports the run's last hop's base RTT;
/// each hop is then scaled by (1 + u), u uniform in [-noise_fraction,
/// noise_fraction].
SimulatedPaths simulate_traceroutes(const World& world, int n_paths, double noise_fraction, std::uint64_t seed);

struct InjectionSpec {
    double interface_error_fraction = 0.05;
    double min_displacement_km = 500.0;
    /// Upper bound on displacement; unbounded when unset.
    std::optional<double> max_displacement_km;
    int db_count = 8;
    double db_noise_km = 0.0;

    void validate() const;
};

struct CorruptedSnapshot {
    GeoSnapshot snapshot;
    std::set<Ipv4> displaced;
};

/// One record per database per router. Displaced routers (an exact
/// interface_error_fraction share of non-tunnel routers) get every record on
/// one catalog city at least min_displacement_km away. Others get, per
/// database, the catalog city nearest a point jittered up to db_noise_km
/// from the truth, restricted to cities within db_noise_km of the truth.
CorruptedSnapshot corrupt_geodb(const World& world, const InjectionSpec& spec, std::span<const CityPolygon> catalog,
                                std::uint64_t seed, Diagnostics* diag = nullptr);

struct ScoreReport {
    std::size_t ips_scored = 0;
    std::size_t displaced = 0;
    std::size_t flagged = 0;
    std::size_t true_positive = 0;
    /// Flagged IPs that are neither displaced nor tunnel members.
    std::size_t false_positive = 0;
    std::size_t false_negative = 0;
    std::optional<double> precision;
    std::optional<double> recall;

    /// Same confusion counts on the refinement tag alone, before
    /// resolution clears false positives.
    std::size_t tagged = 0;
    std::size_t tag_true_positive = 0;
    std::size_t tag_false_positive = 0;
    std::optional<double> tag_precision;
    std::optional<double> tag_recall;

    std::size_t tunnel_interior = 0;
    std::size_t tunnel_interior_detected = 0;

    std::size_t interface_resolved = 0;
    std::size_t interface_within_100km = 0;
    std::vector<double> resolution_errors_km;

    std::size_t active_with_candidates = 0;
    std::size_t active_true_city_retained = 0;

    std::optional<double> tunnel_detection_rate() const;
    std::optional<double> resolution_within_100km_rate() const;
    std::optional<double> true_city_retention_rate() const;
};

/// Throws InputError when a result IP is not a router of `world`.
ScoreReport score_against_truth(std::span<const IpResult> results, const World& world,
                                const std::set<Ipv4>& displaced);

void write_score_csv(std::ostream& out, const ScoreReport& report);

void write_world_json(std::ostream& out, const World& world);
World read_world_json(std::istream& in);
void write_displaced_json(std::ostream& out, const std::set<Ipv4>& displaced);
std::set<Ipv4> read_displaced_json(std::istream& in);

}  // namespace geotrace::synth
