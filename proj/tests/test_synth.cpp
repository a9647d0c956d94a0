#include <doctest.h>

#include <fstream>
#include <queue>
#include <random>
#include <sstream>

#include "geotrace/errors.hpp"
#include "geotrace/synth.hpp"
#include "support.hpp"

using namespace geotrace;
using namespace geotrace::synth;

namespace {

const std::vector<CityPolygon>& catalog() {
    static const auto cat = load_city_catalog(testing::catalog_file());
    return cat;
}

std::string world_json(const World& w) {
    std::ostringstream out;
    write_world_json(out, w);
    return out.str();
}

// Number of connected components by BFS over `links`.
std::size_t components(const World& w) {
    std::vector<std::vector<int>> adj(w.routers.size());
    for (const auto& l : w.links) {
        adj[static_cast<std::size_t>(l.a)].push_back(l.b);
        adj[static_cast<std::size_t>(l.b)].push_back(l.a);
    }
    std::vector<char> seen(w.routers.size(), 0);
    std::size_t n = 0;
    for (std::size_t s = 0; s < w.routers.size(); ++s) {
        if (seen[s]) continue;
        ++n;
        std::queue<std::size_t> q;
        q.push(s);
        seen[s] = 1;
        while (!q.empty()) {
            auto v = q.front();
            q.pop();
            for (int u : adj[v]) {
                if (!seen[static_cast<std::size_t>(u)]) {
                    seen[static_cast<std::size_t>(u)] = 1;
                    q.push(static_cast<std::size_t>(u));
                }
            }
        }
    }
    return n;
}

// Base RTTs recomputed from the route: round trip over the cumulative
// distance, tunnel runs reporting their last member's value.
std::vector<double> analytic_rtts(const World& w, const std::vector<int>& route) {
    std::vector<double> base(route.size(), 0.0);
    double km = 0.0;
    for (std::size_t k = 1; k < route.size(); ++k) {
        km += haversine_km(w.routers[static_cast<std::size_t>(route[k - 1])].location,
                           w.routers[static_cast<std::size_t>(route[k])].location);
        base[k] = km / 100.0;
    }
    auto tunnel_of = [&](int r) -> int {
        for (std::size_t t = 0; t < w.mpls_tunnels.size(); ++t)
            for (int m : w.mpls_tunnels[t])
                if (m == r) return static_cast<int>(t);
        return -1;
    };
    std::size_t k = 0;
    while (k < route.size()) {
        const int t = tunnel_of(route[k]);
        std::size_t end = k + 1;
        while (t >= 0 && end < route.size() && tunnel_of(route[end]) == t) ++end;
        for (std::size_t j = k; j < end; ++j) base[j] = base[end - 1];
        k = end;
    }
    return base;
}

}  // namespace

TEST_CASE("same seed gives the same world, different seed does not") {
    WorldParams p;
    p.seed = 42;
    p.mpls_fraction = 0.03;
    CHECK(world_json(generate_world(p, catalog())) == world_json(generate_world(p, catalog())));
    p.seed = 43;
    auto other = generate_world(p, catalog());
    p.seed = 42;
    CHECK(world_json(other) != world_json(generate_world(p, catalog())));
}

TEST_CASE("200-router world is connected") {
    for (std::uint64_t seed : {1, 2, 3}) {
        WorldParams p;
        p.seed = seed;
        p.mpls_fraction = 0.03;
        auto w = generate_world(p, catalog());
        CHECK(w.routers.size() == 200);
        CHECK(components(w) == 1);
        std::set<Ipv4> unique;
        for (const auto& r : w.routers) unique.insert(r.ip);
        CHECK(unique.size() == 200);
    }
}

TEST_CASE("no tunnels at fraction 0, three on 100 backbone segments at 0.03") {
    WorldParams p;
    p.n_routers = 60;
    p.n_cities = 20;
    CHECK(generate_world(p, catalog()).mpls_tunnels.empty());

    p.n_routers = 101;
    p.n_cities = 40;
    p.country = "US";
    p.mpls_fraction = 0.03;
    auto w = generate_world(p, catalog());
    // Count tunnel entries through the JSON form.
    auto doc = world_json(w);
    std::istringstream in(doc);
    auto back = read_world_json(in);
    CHECK(back.mpls_tunnels.size() == 3);
    for (const auto& t : back.mpls_tunnels) CHECK(t.size() == 3);
    CHECK(w.tunnel_interior().size() == 3);
    CHECK(world_json(back) == doc);
}

TEST_CASE("two routers make a single link") {
    WorldParams p;
    p.n_routers = 2;
    p.n_cities = 2;
    auto w = generate_world(p, catalog());
    CHECK(w.routers.size() == 2);
    CHECK(w.links.size() == 1);
}

TEST_CASE("invalid parameters are config errors") {
    WorldParams p;
    p.n_routers = 1;
    CHECK_THROWS_AS(generate_world(p, catalog()), ConfigError);
    p = {};
    p.n_cities = 100000;
    CHECK_THROWS_AS(generate_world(p, catalog()), ConfigError);
    p = {};
    p.mpls_fraction = 1.5;
    CHECK_THROWS_AS(generate_world(p, catalog()), ConfigError);
    p = {};
    p.country = "ZZ";
    CHECK_THROWS_AS(generate_world(p, catalog()), ConfigError);
}

TEST_CASE("adjacent hops 500 km apart differ by 5 ms without noise") {
    World w;
    w.routers = {{Ipv4(20, 0, 0, 1), {0, 0}, "A", "XX"}, {Ipv4(20, 0, 0, 2), {0, 500.0 / 6371.0 * 180.0 / 3.14159265358979323846}, "B", "XX"}};
    w.links = {{0, 1}};
    w.backbone = w.links;
    auto sim = simulate_traceroutes(w, 4, 0.0, 1);
    REQUIRE(sim.paths.size() == 4);
    for (const auto& p : sim.paths) {
        REQUIRE(p.hops.size() == 2);
        CHECK(p.hops[1].rtt_ms - p.hops[0].rtt_ms == doctest::Approx(5.0).epsilon(1e-12));
    }
}

TEST_CASE("noise bound and tunnel exit rtt against recomputed analytic values") {
    WorldParams p;
    p.seed = 5;
    p.n_routers = 120;
    p.n_cities = 40;
    p.country = "US";
    p.mpls_fraction = 0.03;
    auto w = generate_world(p, catalog());
    REQUIRE_FALSE(w.mpls_tunnels.empty());
    const auto interior = w.tunnel_interior();

    auto exact = simulate_traceroutes(w, 1500, 0.0, 9);
    auto noisy = simulate_traceroutes(w, 1500, 0.05, 9);
    REQUIRE(exact.routes == noisy.routes);
    std::size_t tunnel_runs = 0;
    for (std::size_t i = 0; i < exact.paths.size(); ++i) {
        const auto want = analytic_rtts(w, exact.routes[i]);
        for (std::size_t k = 0; k < want.size(); ++k) {
            REQUIRE(exact.paths[i].hops[k].rtt_ms == doctest::Approx(want[k]).epsilon(1e-9));
            REQUIRE(noisy.paths[i].hops[k].rtt_ms >= want[k] * 0.95 - 1e-9);
            REQUIRE(noisy.paths[i].hops[k].rtt_ms <= want[k] * 1.05 + 1e-9);
        }
        for (std::size_t k = 1; k + 1 < exact.routes[i].size(); ++k) {
            if (!interior.count(w.routers[static_cast<std::size_t>(exact.routes[i][k])].ip)) continue;
            ++tunnel_runs;
            // All three members of the run report the exit's RTT.
            CHECK(exact.paths[i].hops[k - 1].rtt_ms == exact.paths[i].hops[k + 1].rtt_ms);
            CHECK(exact.paths[i].hops[k].rtt_ms == exact.paths[i].hops[k + 1].rtt_ms);
        }
    }
    CHECK(tunnel_runs > 0);
}

TEST_CASE("corruption: noise radius, displacement and record count") {
    WorldParams p;
    p.seed = 8;
    p.n_routers = 80;
    p.n_cities = 30;
    auto w = generate_world(p, catalog());

    InjectionSpec clean;
    clean.interface_error_fraction = 0.0;
    clean.db_noise_km = 100.0;
    auto c = corrupt_geodb(w, clean, catalog(), 3);
    CHECK(c.displaced.empty());
    for (const auto& r : w.routers) {
        const auto& recs = c.snapshot.at(r.ip);
        REQUIRE(recs.size() == 8);
        for (const auto& g : recs) CHECK(haversine_km(g.location, r.location) <= 100.0);
    }

    InjectionSpec all;
    all.interface_error_fraction = 1.0;
    all.min_displacement_km = 500.0;
    auto d = corrupt_geodb(w, all, catalog(), 3);
    CHECK(d.displaced.size() == w.routers.size() - w.tunnel_members().size());
    for (Ipv4 ip : d.displaced) {
        const auto& truth = w.routers[*w.router_index(ip)];
        const auto& recs = d.snapshot.at(ip);
        REQUIRE(recs.size() == 8);
        for (const auto& g : recs) {
            CHECK(haversine_km(g.location, truth.location) >= 500.0);
            CHECK(g.city == recs.front().city);
        }
    }

    InjectionSpec five;
    auto f = corrupt_geodb(w, five, catalog(), 3);
    CHECK(f.displaced.size() == static_cast<std::size_t>(std::llround(0.05 * 80)));
    CHECK(corrupt_geodb(w, five, catalog(), 3).snapshot.size() == f.snapshot.size());
}

namespace {

std::vector<IpResult> results_for(const World& w) {
    std::vector<IpResult> out;
    for (const auto& r : w.routers) {
        IpResult x;
        x.ip = r.ip;
        x.clusters.push_back({r.location, r.city, r.country, 1.0});
        out.push_back(x);
    }
    return out;
}

}  // namespace

TEST_CASE("perfect detection scores 1.0; nothing injected is N/A") {
    WorldParams p;
    p.n_routers = 30;
    p.n_cities = 10;
    auto w = generate_world(p, catalog());
    auto results = results_for(w);
    std::set<Ipv4> displaced{w.routers[3].ip, w.routers[7].ip};
    for (auto& r : results) {
        if (displaced.count(r.ip)) {
            r.status = "anomalous";
            r.verdict = "interface_affected";
        }
    }
    auto s = score_against_truth(results, w, displaced);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);

    auto none = score_against_truth(results_for(w), w, {});
    CHECK_FALSE(none.precision);
    CHECK_FALSE(none.recall);
    std::ostringstream out;
    write_score_csv(out, none);
    CHECK(out.str().find("precision,N/A\n") != std::string::npos);
    CHECK(out.str().find("recall,N/A\n") != std::string::npos);

    auto stranger = results_for(w);
    stranger[0].ip = Ipv4(1, 2, 3, 4);
    CHECK_THROWS_AS(score_against_truth(stranger, w, {}), InputError);
}

TEST_CASE("held fixture matches the golden score file") {
    const auto dir = testing::fixture("score_small");
    std::ifstream wf(dir / "world.json"), df(dir / "displaced.json"), rf(dir / "ips.jsonl");
    const auto world = read_world_json(wf);
    const auto displaced = read_displaced_json(df);
    auto results = read_results(rf);
    std::ostringstream out;
    write_score_csv(out, score_against_truth(results, world, displaced));
    CHECK(out.str() == testing::slurp(dir / "score.golden.csv"));

    std::mt19937 rng(4);
    std::shuffle(results.begin(), results.end(), rng);
    std::ostringstream shuffled;
    write_score_csv(shuffled, score_against_truth(results, world, displaced));
    CHECK(shuffled.str() == out.str());
}
