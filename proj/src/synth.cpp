#include "geotrace/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <queue>
#include <random>
#include <unordered_map>

#include <json.hpp>

#include "geotrace/errors.hpp"

namespace geotrace::synth {

using nlohmann::json;

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Explicit conversions keep streams identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
    }

private:
    std::mt19937_64 engine_;
};

GeoPoint destination(GeoPoint origin, double bearing_rad, double distance_km) {
    const double delta = distance_km / kEarthRadiusKm;
    const double phi1 = origin.lat * kDegToRad;
    const double lambda1 = origin.lon * kDegToRad;
    const double phi2 = std::asin(std::sin(phi1) * std::cos(delta) + std::cos(phi1) * std::sin(delta) * std::cos(bearing_rad));
    const double lambda2 = lambda1 + std::atan2(std::sin(bearing_rad) * std::sin(delta) * std::cos(phi1),
                                                std::cos(delta) - std::sin(phi1) * std::sin(phi2));
    double lon = lambda2 / kDegToRad;
    lon = std::fmod(lon + 540.0, 360.0) - 180.0;
    return {phi2 / kDegToRad, lon};
}

Link ordered(int a, int b) { return a < b ? Link{a, b} : Link{b, a}; }

bool link_less(const Link& x, const Link& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); }

// Routing weight added per link, so a detour through a co-located router
// is never free.
constexpr double kHopCostKm = 50.0;

std::vector<std::vector<std::pair<int, double>>> adjacency(const World& world) {
    std::vector<std::vector<std::pair<int, double>>> adj(world.routers.size());
    for (const auto& l : world.links) {
        const double d = kHopCostKm + haversine_km(world.routers[static_cast<std::size_t>(l.a)].location,
                                                   world.routers[static_cast<std::size_t>(l.b)].location);
        adj[static_cast<std::size_t>(l.a)].push_back({l.b, d});
        adj[static_cast<std::size_t>(l.b)].push_back({l.a, d});
    }
    for (auto& v : adj) std::sort(v.begin(), v.end());
    return adj;
}

struct ShortestPaths {
    std::vector<double> dist;
    std::vector<int> parent;
};

ShortestPaths dijkstra(const std::vector<std::vector<std::pair<int, double>>>& adj, int source) {
    ShortestPaths sp{std::vector<double>(adj.size(), std::numeric_limits<double>::infinity()), std::vector<int>(adj.size(), -1)};
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    sp.dist[static_cast<std::size_t>(source)] = 0.0;
    pq.push({0.0, source});
    while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > sp.dist[static_cast<std::size_t>(u)]) continue;
        for (auto [v, w] : adj[static_cast<std::size_t>(u)]) {
            const double nd = d + w;
            auto& dv = sp.dist[static_cast<std::size_t>(v)];
            // Strict improvement only: zero-length links between co-located
            // routers would otherwise let tie updates form parent cycles.
            if (nd < dv) {
                dv = nd;
                sp.parent[static_cast<std::size_t>(v)] = u;
                pq.push({nd, v});
            }
        }
    }
    return sp;
}

std::string format_rate(const std::optional<double>& v) {
    if (!v) return "N/A";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return buf;
}

std::optional<double> rate(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::set<Ipv4> World::tunnel_interior() const {
    std::set<Ipv4> out;
    for (const auto& t : mpls_tunnels) {
        for (std::size_t i = 1; i + 1 < t.size(); ++i) out.insert(routers[static_cast<std::size_t>(t[i])].ip);
    }
    return out;
}

std::set<Ipv4> World::tunnel_members() const {
    std::set<Ipv4> out;
    for (const auto& t : mpls_tunnels) {
        for (int r : t) out.insert(routers[static_cast<std::size_t>(r)].ip);
    }
    return out;
}

std::optional<std::size_t> World::router_index(Ipv4 ip) const {
    for (std::size_t i = 0; i < routers.size(); ++i) {
        if (routers[i].ip == ip) return i;
    }
    return std::nullopt;
}

World generate_world(const WorldParams& params, std::span<const CityPolygon> catalog) {
    if (params.n_routers < 2) throw ConfigError("n_routers must be >= 2");
    if (params.n_cities < 1) throw ConfigError("n_cities must be >= 1");
    if (static_cast<std::size_t>(params.n_cities) > catalog.size()) {
        throw ConfigError("n_cities (" + std::to_string(params.n_cities) + ") exceeds catalog size (" +
                          std::to_string(catalog.size()) + ")");
    }
    if (!(params.mpls_fraction >= 0.0 && params.mpls_fraction <= 1.0)) throw ConfigError("mpls_fraction must be in [0,1]");
    if (params.nearest_links < 0) throw ConfigError("nearest_links must be >= 0");
    if (!(params.tunnel_min_link_km > 0.0)) throw ConfigError("tunnel_min_link_km must be positive");

    const auto n_routers = static_cast<std::size_t>(params.n_routers);
    const auto n_tunnels =
        static_cast<std::size_t>(std::llround(params.mpls_fraction * static_cast<double>(n_routers - 1)));
    if (n_routers < n_tunnels + 2) throw ConfigError("mpls_fraction leaves fewer than two routers outside tunnels");

    std::vector<std::size_t> by_distance;
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        if (params.country.empty() || normalize_place(catalog[i].country) == normalize_place(params.country)) {
            by_distance.push_back(i);
        }
    }
    if (by_distance.size() < static_cast<std::size_t>(params.n_cities)) {
        throw ConfigError("catalog has " + std::to_string(by_distance.size()) + " cities for country '" + params.country +
                          "', n_cities is " + std::to_string(params.n_cities));
    }

    Rng rng(params.seed);
    World world;
    world.rng_seed = params.seed;

    const auto& center = catalog[by_distance[rng.index(by_distance.size())]];
    std::vector<double> dist_to_center(catalog.size());
    for (std::size_t i : by_distance) dist_to_center[i] = haversine_km(center.centroid, catalog[i].centroid);
    std::stable_sort(by_distance.begin(), by_distance.end(),
                     [&](std::size_t a, std::size_t b) { return dist_to_center[a] < dist_to_center[b]; });

    // Edge routers carry ordinary traffic; the remaining n_tunnels routers
    // become tunnel interiors.
    const std::size_t n_edge = n_routers - n_tunnels;
    const std::size_t n_cities = std::min(static_cast<std::size_t>(params.n_cities), n_edge);
    by_distance.resize(n_cities);

    std::vector<std::size_t> city_of;
    auto add_router = [&](std::size_t city) {
        const auto i = world.routers.size();
        const auto& c = catalog[by_distance[city]];
        const Ipv4 ip{static_cast<std::uint32_t>(0x14000000u + (i << 8) + 1u)};
        world.routers.push_back({ip, c.centroid, c.name, c.country});
        city_of.push_back(city);
    };
    for (std::size_t i = 0; i < n_edge; ++i) add_router(i < n_cities ? i : rng.index(n_cities));

    auto dist = [&](std::size_t a, std::size_t b) {
        return haversine_km(world.routers[a].location, world.routers[b].location);
    };
    auto city_dist = [&](std::size_t router, std::size_t city) {
        return haversine_km(world.routers[router].location, catalog[by_distance[city]].centroid);
    };

    // Prim's spanning tree over the edge routers; ties resolve to the lower
    // router index.
    std::vector<char> in_tree(n_edge, 0);
    std::vector<double> best(n_edge, std::numeric_limits<double>::infinity());
    std::vector<int> via(n_edge, -1);
    best[0] = 0.0;
    for (std::size_t step = 0; step < n_edge; ++step) {
        std::size_t u = n_edge;
        for (std::size_t v = 0; v < n_edge; ++v) {
            if (!in_tree[v] && (u == n_edge || best[v] < best[u])) u = v;
        }
        in_tree[u] = 1;
        if (via[u] >= 0) world.backbone.push_back(ordered(via[u], static_cast<int>(u)));
        for (std::size_t v = 0; v < n_edge; ++v) {
            if (in_tree[v]) continue;
            const double d = dist(u, v);
            if (d < best[v]) {
                best[v] = d;
                via[v] = static_cast<int>(u);
            }
        }
    }

    std::set<std::pair<int, int>> links;
    for (const auto& l : world.backbone) links.insert({l.a, l.b});
    // Extra links reach one random router in each of the nearest other
    // cities; linking to the nearest routers outright would join co-located
    // routers to each other and leave each city hanging off a single hub.
    std::vector<std::vector<int>> city_routers(n_cities);
    for (std::size_t i = 0; i < n_edge; ++i) city_routers[city_of[i]].push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < n_edge; ++i) {
        std::vector<std::size_t> cities;
        for (std::size_t c = 0; c < n_cities; ++c) {
            if (c != city_of[i]) cities.push_back(c);
        }
        std::stable_sort(cities.begin(), cities.end(),
                         [&](std::size_t a, std::size_t b) { return city_dist(i, a) < city_dist(i, b); });
        for (std::size_t k = 0; k < cities.size() && k < static_cast<std::size_t>(params.nearest_links); ++k) {
            const auto& members = city_routers[cities[k]];
            const auto l = ordered(static_cast<int>(i), members[rng.index(members.size())]);
            links.insert({l.a, l.b});
        }
    }

    // Tunnels are long-haul express runs u-v-w between distant edge routers.
    // The interior v sits at the world city that keeps the run most direct
    // while both links stay at least tunnel_min_link_km long, and connects
    // to nothing else.
    if (n_tunnels > 0) {
        const double min_link = params.tunnel_min_link_km;
        std::vector<std::pair<int, int>> spans;
        for (std::size_t u = 0; u < n_edge; ++u) {
            for (std::size_t w = u + 1; w < n_edge; ++w) {
                if (dist(u, w) >= 2.0 * min_link) spans.push_back({static_cast<int>(u), static_cast<int>(w)});
            }
        }
        rng.shuffle(spans);
        std::vector<char> used(n_edge, 0);
        for (const auto& [u, w] : spans) {
            if (world.mpls_tunnels.size() == n_tunnels) break;
            if (used[static_cast<std::size_t>(u)] || used[static_cast<std::size_t>(w)]) continue;
            const double direct = dist(static_cast<std::size_t>(u), static_cast<std::size_t>(w));
            std::optional<std::size_t> pick;
            double pick_len = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < n_cities; ++c) {
                const double a = city_dist(static_cast<std::size_t>(u), c);
                const double b = city_dist(static_cast<std::size_t>(w), c);
                if (std::min(a, b) < min_link || a + b > 1.25 * direct) continue;
                if (a + b < pick_len) {
                    pick = c;
                    pick_len = a + b;
                }
            }
            if (!pick) continue;
            used[static_cast<std::size_t>(u)] = used[static_cast<std::size_t>(w)] = 1;
            const int v = static_cast<int>(world.routers.size());
            add_router(*pick);
            world.mpls_tunnels.push_back({u, v, w});
            for (const auto& l : {ordered(u, v), ordered(v, w)}) {
                world.backbone.push_back(l);
                links.insert({l.a, l.b});
            }
        }
    }
    // Regions too small for the requested tunnels keep the router count by
    // attaching the spare routers as ordinary tree leaves.
    while (world.routers.size() < n_routers) {
        const int v = static_cast<int>(world.routers.size());
        add_router(rng.index(n_cities));
        std::size_t nearest = 0;
        for (std::size_t j = 1; j < n_edge; ++j) {
            if (dist(static_cast<std::size_t>(v), j) < dist(static_cast<std::size_t>(v), nearest)) nearest = j;
        }
        const auto l = ordered(static_cast<int>(nearest), v);
        world.backbone.push_back(l);
        links.insert({l.a, l.b});
    }
    std::sort(world.backbone.begin(), world.backbone.end(), link_less);
    for (const auto& [a, b] : links) world.links.push_back({a, b});
    return world;
}

SimulatedPaths simulate_traceroutes(const World& world, int n_paths, double noise_fraction, std::uint64_t seed) {
    if (n_paths < 0) throw ConfigError("n_paths must be >= 0");
    if (!(noise_fraction >= 0.0 && noise_fraction < 1.0)) throw ConfigError("noise_fraction must be in [0,1)");
    SimulatedPaths out;
    if (world.routers.size() < 2) return out;

    const auto adj = adjacency(world);
    const auto interior = world.tunnel_interior();
    std::vector<int> endpoints;
    for (std::size_t i = 0; i < world.routers.size(); ++i) {
        if (!interior.count(world.routers[i].ip)) endpoints.push_back(static_cast<int>(i));
    }
    if (endpoints.size() < 2) return out;

    // router -> (tunnel, position)
    std::unordered_map<int, std::pair<std::size_t, std::size_t>> tunnel_pos;
    for (std::size_t t = 0; t < world.mpls_tunnels.size(); ++t) {
        for (std::size_t p = 0; p < world.mpls_tunnels[t].size(); ++p) tunnel_pos[world.mpls_tunnels[t][p]] = {t, p};
    }

    Rng rng(seed);
    std::map<int, ShortestPaths> trees;
    char id[32];
    for (int n = 0; n < n_paths; ++n) {
        const int src = endpoints[rng.index(endpoints.size())];
        int dst = endpoints[rng.index(endpoints.size() - 1)];
        if (dst == src) dst = endpoints.back();
        auto it = trees.find(src);
        if (it == trees.end()) it = trees.emplace(src, dijkstra(adj, src)).first;
        const auto& sp = it->second;
        if (!std::isfinite(sp.dist[static_cast<std::size_t>(dst)])) continue;
        std::vector<int> route;
        for (int v = dst; v != -1; v = sp.parent[static_cast<std::size_t>(v)]) route.push_back(v);
        std::reverse(route.begin(), route.end());

        std::vector<double> base(route.size(), 0.0);
        double travelled = 0.0;
        for (std::size_t k = 1; k < route.size(); ++k) {
            travelled += haversine_km(world.routers[static_cast<std::size_t>(route[k - 1])].location,
                                      world.routers[static_cast<std::size_t>(route[k])].location);
            base[k] = 2.0 * travelled / kFiberKmPerMs;
        }
        for (std::size_t k = 0; k < route.size();) {
            auto tp = tunnel_pos.find(route[k]);
            std::size_t end = k + 1;
            if (tp != tunnel_pos.end()) {
                int step = 0;
                while (end < route.size()) {
                    auto next = tunnel_pos.find(route[end]);
                    if (next == tunnel_pos.end() || next->second.first != tp->second.first) break;
                    const auto prev_pos = static_cast<int>(tunnel_pos.at(route[end - 1]).second);
                    const int d = static_cast<int>(next->second.second) - prev_pos;
                    if ((d != 1 && d != -1) || (step != 0 && d != step)) break;
                    step = d;
                    ++end;
                }
                for (std::size_t j = k; j < end; ++j) base[j] = base[end - 1];
            }
            k = end;
        }

        CleanPath path;
        std::snprintf(id, sizeof id, "synth-%06d", n);
        path.path_id = id;
        for (std::size_t k = 0; k < route.size(); ++k) {
            const double u = 2.0 * rng.uniform01() - 1.0;
            path.hops.push_back({world.routers[static_cast<std::size_t>(route[k])].ip, base[k] * (1.0 + u * noise_fraction)});
        }
        out.paths.push_back(std::move(path));
        out.routes.push_back(std::move(route));
    }
    return out;
}

void InjectionSpec::validate() const {
    if (!(interface_error_fraction >= 0.0 && interface_error_fraction <= 1.0)) {
        throw ConfigError("interface_error_fraction must be in [0,1]");
    }
    if (!(min_displacement_km > 0.0)) throw ConfigError("min_displacement_km must be positive");
    if (max_displacement_km && *max_displacement_km < min_displacement_km) {
        throw ConfigError("max_displacement_km must be >= min_displacement_km");
    }
    if (db_count < 1) throw ConfigError("db_count must be >= 1");
    if (!(db_noise_km >= 0.0)) throw ConfigError("db_noise_km must be non-negative");
}

CorruptedSnapshot corrupt_geodb(const World& world, const InjectionSpec& spec, std::span<const CityPolygon> catalog,
                                std::uint64_t seed, Diagnostics* diag) {
    spec.validate();
    Rng rng(seed);
    const auto members = world.tunnel_members();
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < world.routers.size(); ++i) {
        if (!members.count(world.routers[i].ip)) eligible.push_back(i);
    }
    rng.shuffle(eligible);
    const auto wanted = static_cast<std::size_t>(
        std::llround(spec.interface_error_fraction * static_cast<double>(world.routers.size())));
    std::set<std::size_t> chosen(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(std::min(wanted, eligible.size())));

    CorruptedSnapshot out;
    for (std::size_t i = 0; i < world.routers.size(); ++i) {
        const auto& router = world.routers[i];
        auto& records = out.snapshot[router.ip];
        auto emit = [&](int db, GeoPoint where, const std::string& city, const std::string& country) {
            records.push_back({router.ip, "db" + std::to_string(db + 1), where, city, country});
        };
        if (chosen.count(i)) {
            std::vector<const CityPolygon*> targets;
            for (const auto& c : catalog) {
                const double d = haversine_km(router.location, c.centroid);
                if (d >= spec.min_displacement_km && (!spec.max_displacement_km || d <= *spec.max_displacement_km)) {
                    targets.push_back(&c);
                }
            }
            if (!targets.empty()) {
                const auto* target = targets[rng.index(targets.size())];
                for (int db = 0; db < spec.db_count; ++db) emit(db, target->centroid, target->name, target->country);
                out.displaced.insert(router.ip);
                continue;
            }
            if (diag) diag->warn("synth", "no catalog city far enough to displace " + router.ip.to_string());
        }
        std::vector<const CityPolygon*> nearby;
        for (const auto& c : catalog) {
            if (haversine_km(router.location, c.centroid) <= spec.db_noise_km) nearby.push_back(&c);
        }
        for (int db = 0; db < spec.db_count; ++db) {
            const double bearing = 2.0 * std::numbers::pi * rng.uniform01();
            const double reach = spec.db_noise_km * std::sqrt(rng.uniform01());
            if (nearby.empty()) {
                emit(db, router.location, router.city, router.country);
                continue;
            }
            const GeoPoint jittered = destination(router.location, bearing, reach);
            const CityPolygon* pick = nearby.front();
            double pick_d = haversine_km(jittered, pick->centroid);
            for (const auto* c : nearby) {
                const double d = haversine_km(jittered, c->centroid);
                if (d < pick_d) {
                    pick = c;
                    pick_d = d;
                }
            }
            emit(db, pick->centroid, pick->name, pick->country);
        }
    }
    return out;
}

std::optional<double> ScoreReport::tunnel_detection_rate() const { return rate(tunnel_interior_detected, tunnel_interior); }
std::optional<double> ScoreReport::resolution_within_100km_rate() const {
    return rate(interface_within_100km, interface_resolved);
}
std::optional<double> ScoreReport::true_city_retention_rate() const {
    return rate(active_true_city_retained, active_with_candidates);
}

ScoreReport score_against_truth(std::span<const IpResult> results, const World& world, const std::set<Ipv4>& displaced) {
    std::unordered_map<Ipv4, std::size_t> index;
    for (std::size_t i = 0; i < world.routers.size(); ++i) index.emplace(world.routers[i].ip, i);
    const auto members = world.tunnel_members();
    const auto interior = world.tunnel_interior();

    ScoreReport rep;
    for (const auto& r : results) {
        auto it = index.find(r.ip);
        if (it == index.end()) throw InputError("result IP " + r.ip.to_string() + " is not a router of this world");
        const auto& router = world.routers[it->second];
        ++rep.ips_scored;
        const bool is_displaced = displaced.count(r.ip) > 0;
        const bool flagged = r.flagged();
        rep.displaced += is_displaced;
        rep.flagged += flagged;
        if (flagged && is_displaced) ++rep.true_positive;
        if (flagged && !is_displaced && !members.count(r.ip)) ++rep.false_positive;
        if (!flagged && is_displaced) ++rep.false_negative;
        const bool tagged = r.status == "anomalous";
        rep.tagged += tagged;
        if (tagged && is_displaced) ++rep.tag_true_positive;
        if (tagged && !is_displaced && !members.count(r.ip)) ++rep.tag_false_positive;

        if (interior.count(r.ip)) {
            ++rep.tunnel_interior;
            if (r.status == "anomalous" || r.verdict == "mpls_affected") ++rep.tunnel_interior_detected;
        }
        if (r.verdict == "interface_affected" && r.resolved) {
            const double err = haversine_km(*r.resolved, router.location);
            ++rep.interface_resolved;
            rep.resolution_errors_km.push_back(err);
            if (err <= 100.0) ++rep.interface_within_100km;
        }
        if (r.status == "active" && !r.clusters.empty()) {
            ++rep.active_with_candidates;
            const auto city = normalize_place(router.city);
            const auto country = normalize_place(router.country);
            for (const auto& c : r.clusters) {
                if (normalize_place(c.city) == city && normalize_place(c.country) == country) {
                    ++rep.active_true_city_retained;
                    break;
                }
            }
        }
    }
    std::sort(rep.resolution_errors_km.begin(), rep.resolution_errors_km.end());
    rep.precision = rate(rep.true_positive, rep.true_positive + rep.false_positive);
    rep.recall = rate(rep.true_positive, rep.displaced);
    rep.tag_precision = rate(rep.tag_true_positive, rep.tag_true_positive + rep.tag_false_positive);
    rep.tag_recall = rate(rep.tag_true_positive, rep.displaced);
    return rep;
}

void write_score_csv(std::ostream& out, const ScoreReport& r) {
    auto count = [&](const char* name, std::size_t v) { out << name << ',' << v << '\n'; };
    auto value = [&](const char* name, const std::optional<double>& v) { out << name << ',' << format_rate(v) << '\n'; };
    out << "metric,value\n";
    count("ips_scored", r.ips_scored);
    count("displaced", r.displaced);
    count("flagged", r.flagged);
    count("true_positive", r.true_positive);
    count("false_positive", r.false_positive);
    count("false_negative", r.false_negative);
    value("precision", r.precision);
    value("recall", r.recall);
    count("tagged", r.tagged);
    count("tag_true_positive", r.tag_true_positive);
    count("tag_false_positive", r.tag_false_positive);
    value("tag_precision", r.tag_precision);
    value("tag_recall", r.tag_recall);
    count("tunnel_interior", r.tunnel_interior);
    count("tunnel_interior_detected", r.tunnel_interior_detected);
    value("tunnel_detection_rate", r.tunnel_detection_rate());
    count("interface_resolved", r.interface_resolved);
    count("interface_within_100km", r.interface_within_100km);
    value("resolution_within_100km_rate", r.resolution_within_100km_rate());
    const auto& e = r.resolution_errors_km;
    value("resolution_error_median_km", e.empty() ? std::nullopt : std::optional<double>(e[e.size() / 2]));
    value("resolution_error_max_km", e.empty() ? std::nullopt : std::optional<double>(e.back()));
    count("active_with_candidates", r.active_with_candidates);
    count("active_true_city_retained", r.active_true_city_retained);
    value("true_city_retention_rate", r.true_city_retention_rate());
}

void write_world_json(std::ostream& out, const World& world) {
    json routers = json::array();
    for (const auto& r : world.routers) {
        routers.push_back({{"ip", r.ip.to_string()}, {"lat", r.location.lat}, {"lon", r.location.lon},
                           {"city", r.city}, {"country", r.country}});
    }
    auto links = [](const std::vector<Link>& v) {
        json arr = json::array();
        for (const auto& l : v) arr.push_back({l.a, l.b});
        return arr;
    };
    json doc;
    doc["rng_seed"] = world.rng_seed;
    doc["routers"] = std::move(routers);
    doc["links"] = links(world.links);
    doc["backbone"] = links(world.backbone);
    doc["mpls_tunnels"] = world.mpls_tunnels;
    out << doc.dump(1) << '\n';
}

World read_world_json(std::istream& in) {
    World world;
    try {
        const json doc = json::parse(in);
        world.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
        for (const auto& r : doc.at("routers")) {
            auto ip = Ipv4::parse(r.at("ip").get<std::string>());
            if (!ip) throw std::invalid_argument("bad router ip");
            world.routers.push_back({*ip, {r.at("lat").get<double>(), r.at("lon").get<double>()},
                                     r.at("city").get<std::string>(), r.at("country").get<std::string>()});
        }
        const auto n = static_cast<int>(world.routers.size());
        auto links = [n](const json& arr) {
            std::vector<Link> out;
            for (const auto& l : arr) {
                Link link{l.at(0).get<int>(), l.at(1).get<int>()};
                if (link.a < 0 || link.b < 0 || link.a >= n || link.b >= n) throw std::invalid_argument("link index");
                out.push_back(link);
            }
            return out;
        };
        world.links = links(doc.at("links"));
        world.backbone = links(doc.at("backbone"));
        world.mpls_tunnels = doc.at("mpls_tunnels").get<std::vector<std::vector<int>>>();
    } catch (const std::exception& e) {
        throw InputError(std::string("malformed world JSON: ") + e.what());
    }
    return world;
}

void write_displaced_json(std::ostream& out, const std::set<Ipv4>& displaced) {
    json arr = json::array();
    for (Ipv4 ip : displaced) arr.push_back(ip.to_string());
    out << json{{"displaced", std::move(arr)}}.dump(1) << '\n';
}

std::set<Ipv4> read_displaced_json(std::istream& in) {
    std::set<Ipv4> out;
    try {
        const json doc = json::parse(in);
        for (const auto& v : doc.at("displaced")) {
            auto ip = Ipv4::parse(v.get<std::string>());
            if (!ip) throw std::invalid_argument("bad ip");
            out.insert(*ip);
        }
    } catch (const std::exception& e) {
        throw InputError(std::string("malformed displaced-set JSON: ") + e.what());
    }
    return out;
}

}  // namespace geotrace::synth
