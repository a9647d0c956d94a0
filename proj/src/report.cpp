#include "geotrace/report.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <set>
#include <unordered_set>

#include "geotrace/csv.hpp"

namespace geotrace {

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string country_code(std::string_view c) {
    std::string out;
    for (unsigned char ch : c) {
        if (!std::isspace(ch)) out += static_cast<char>(std::toupper(ch));
    }
    return out;
}

}  // namespace

double percent(std::size_t part, std::size_t whole) {
    return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

SummaryTable summarize(std::span<const ResolutionOutcome> outcomes, std::span<const CleanPath> paths) {
    std::unordered_set<Ipv4> mpls, iface;
    for (const auto& o : outcomes) {
        if (std::holds_alternative<MplsAffected>(o.verdict)) mpls.insert(o.ip);
        if (std::holds_alternative<InterfaceAffected>(o.verdict)) iface.insert(o.ip);
    }
    SummaryTable t;
    std::set<Ipv4> ips;
    std::set<std::pair<Ipv4, Ipv4>> links;
    for (const auto& p : paths) {
        bool path_mpls = false, path_iface = false;
        for (std::size_t i = 0; i < p.hops.size(); ++i) {
            const Ipv4 ip = p.hops[i].ip;
            ips.insert(ip);
            path_mpls |= mpls.count(ip) > 0;
            path_iface |= iface.count(ip) > 0;
            if (i + 1 < p.hops.size()) links.insert(std::minmax(ip, p.hops[i + 1].ip));
        }
        ++t.total.traceroutes;
        t.mpls.traceroutes += path_mpls;
        t.interface.traceroutes += path_iface;
        t.total_affected.traceroutes += path_mpls || path_iface;
        t.corrected.traceroutes += path_iface && !path_mpls;
    }
    for (Ipv4 ip : ips) {
        const bool m = mpls.count(ip) > 0, f = iface.count(ip) > 0;
        ++t.total.ips;
        t.mpls.ips += m;
        t.interface.ips += f;
        t.total_affected.ips += m || f;
        t.corrected.ips += f && !m;
    }
    for (const auto& [a, b] : links) {
        const bool m = mpls.count(a) || mpls.count(b);
        const bool f = iface.count(a) || iface.count(b);
        ++t.total.links;
        t.mpls.links += m;
        t.interface.links += f;
        t.total_affected.links += m || f;
        t.corrected.links += f && !m;
    }
    return t;
}

void write_summary_csv(std::ostream& out, const SummaryTable& t) {
    csv::write_row(out, {"category", "ips", "ips_pct", "links", "links_pct", "traceroutes", "traceroutes_pct"});
    auto row = [&](const char* name, const ElementCounts& c, const ElementCounts& base) {
        csv::write_row(out, {name, std::to_string(c.ips), fixed(percent(c.ips, base.ips), 4), std::to_string(c.links),
                             fixed(percent(c.links, base.links), 4), std::to_string(c.traceroutes),
                             fixed(percent(c.traceroutes, base.traceroutes), 4)});
    };
    row("Total Elements", t.total, t.total);
    row("MPLS-Affected", t.mpls, t.total);
    row("Interface-Affected", t.interface, t.total);
    row("Total Affected", t.total_affected, t.total);
    row("Corrected", t.corrected, t.total_affected);
}

std::vector<CandidateState> sol_baseline(std::span<const CleanPath> paths, const GeoSnapshot& snapshot,
                                         const RefineConfig& cfg) {
    auto states = initial_states(paths, snapshot);
    const auto initial = states;
    const auto pairs = extract_pairs(paths);
    std::vector<std::vector<char>> violated(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) violated[i].assign(states[i].candidates.size(), 0);

    auto check = [&](const CandidateState& self, std::vector<char>& bad, const CandidateState& neighbor,
                     const NeighborPair& pair, bool self_is_a) {
        if (neighbor.candidates.empty()) return;
        for (std::size_t c = 0; c < self.candidates.size(); ++c) {
            if (bad[c]) continue;
            for (const auto& obs : pair.observations) {
                const double mine = self_is_a ? obs.rtt_a_ms : obs.rtt_b_ms;
                const double theirs = self_is_a ? obs.rtt_b_ms : obs.rtt_a_ms;
                const bool any = std::any_of(neighbor.candidates.begin(), neighbor.candidates.end(), [&](const CityCluster& nc) {
                    return pair_feasible(self.candidates[c].centroid, nc.centroid, mine, theirs, cfg);
                });
                if (!any) {
                    bad[c] = 1;
                    break;
                }
            }
        }
    };
    auto index_of = [&](Ipv4 ip) {
        return static_cast<std::size_t>(find_state(initial, ip) - initial.data());
    };
    for (const auto& pair : pairs) {
        const auto a = index_of(pair.ip_a);
        const auto b = index_of(pair.ip_b);
        check(initial[a], violated[a], initial[b], pair, true);
        check(initial[b], violated[b], initial[a], pair, false);
    }
    for (std::size_t i = 0; i < states.size(); ++i) {
        std::vector<CityCluster> kept;
        for (std::size_t c = 0; c < states[i].candidates.size(); ++c) {
            if (!violated[i][c]) kept.push_back(states[i].candidates[c]);
        }
        states[i].candidates = std::move(kept);
        states[i].scores.assign(states[i].candidates.size(), CandidateScore{});
    }
    return states;
}

std::vector<HistogramRow> cluster_histogram(std::span<const CandidateState> states,
                                            std::span<const CandidateState> baseline) {
    static const char* kBuckets[] = {"0", "1", "2", "3", ">=4"};
    std::vector<HistogramRow> rows;
    auto tally = [&](const std::string& method, auto&& count_for) {
        std::size_t counts[5] = {0, 0, 0, 0, 0};
        std::size_t total = 0;
        for (const auto& s : states) {
            if (s.candidates.empty()) continue;
            ++total;
            ++counts[std::min<std::size_t>(count_for(s), 4)];
        }
        for (int b = 0; b < 5; ++b) {
            rows.push_back({method, kBuckets[b], counts[b],
                            total ? static_cast<double>(counts[b]) / static_cast<double>(total) : 0.0});
        }
    };
    tally("geotrace", [](const CandidateState& s) { return s.candidates.size(); });
    tally("sol_baseline", [&](const CandidateState& s) -> std::size_t {
        const auto* b = find_state(baseline, s.ip);
        return b ? b->candidates.size() : 0;
    });
    return rows;
}

double single_cluster_fraction(std::span<const HistogramRow> rows, const std::string& method) {
    for (const auto& r : rows) {
        if (r.method == method && r.bucket == "1") return r.fraction;
    }
    return 0.0;
}

void write_histogram_csv(std::ostream& out, std::span<const HistogramRow> rows) {
    csv::write_row(out, {"method", "clusters", "count", "fraction"});
    for (const auto& r : rows) csv::write_row(out, {r.method, r.bucket, std::to_string(r.count), fixed(r.fraction, 6)});
}

std::optional<MajorityLocation> majority_location(std::span<const GeoRecord> records, GeoPoint reference) {
    struct Group {
        std::string city, country;
        double lat = 0.0, lon = 0.0;
        std::size_t n = 0;
    };
    std::map<std::pair<std::string, std::string>, Group> groups;
    for (const auto& r : records) {
        auto& g = groups[{normalize_place(r.country), normalize_place(r.city)}];
        if (g.n == 0) {
            g.city = r.city;
            g.country = r.country;
        }
        g.lat += r.location.lat;
        g.lon += r.location.lon;
        ++g.n;
    }
    std::optional<MajorityLocation> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [_, g] : groups) {
        const GeoPoint where{g.lat / static_cast<double>(g.n), g.lon / static_cast<double>(g.n)};
        const double d = haversine_km(where, reference);
        if (!best || g.n > best->votes || (g.n == best->votes && d < best_d)) {
            best = MajorityLocation{where, g.city, g.country, g.n};
            best_d = d;
        }
    }
    return best;
}

DistanceCdf distance_cdf(std::span<const ResolutionOutcome> outcomes, const GeoSnapshot& snapshot, Diagnostics* diag) {
    DistanceCdf cdf;
    for (const auto& o : outcomes) {
        const auto* iface = std::get_if<InterfaceAffected>(&o.verdict);
        if (!iface) continue;
        auto it = snapshot.find(o.ip);
        auto majority = it == snapshot.end() ? std::nullopt : majority_location(it->second, iface->resolved);
        if (!majority) {
            ++cdf.excluded;
            if (diag) diag->warn("distance_cdf", o.ip.to_string() + " absent from geo snapshot");
            continue;
        }
        cdf.entries.push_back({o.ip, haversine_km(iface->resolved, majority->location)});
    }
    std::sort(cdf.entries.begin(), cdf.entries.end(), [](const DistanceEntry& a, const DistanceEntry& b) {
        return std::tie(a.distance_km, a.ip) < std::tie(b.distance_km, b.ip);
    });
    if (!cdf.entries.empty()) {
        std::size_t under = 0;
        double sum = 0.0;
        for (const auto& e : cdf.entries) {
            under += e.distance_km < kCityRadiusKm;
            sum += e.distance_km;
        }
        const auto n = static_cast<double>(cdf.entries.size());
        cdf.fraction_under_20km = static_cast<double>(under) / n;
        cdf.mean_km = sum / n;
        cdf.max_km = cdf.entries.back().distance_km;
    }
    return cdf;
}

void write_distance_cdf_csv(std::ostream& out, const DistanceCdf& cdf) {
    csv::write_row(out, {"ip", "distance_km", "cdf"});
    const auto n = static_cast<double>(cdf.entries.size());
    for (std::size_t i = 0; i < cdf.entries.size(); ++i) {
        csv::write_row(out, {cdf.entries[i].ip.to_string(), fixed(cdf.entries[i].distance_km, 3),
                             fixed(static_cast<double>(i + 1) / n, 6)});
    }
}

CountryDelta country_delta(std::span<const ResolutionOutcome> outcomes, const GeoSnapshot& snapshot,
                           const SpatialIndex& catalog) {
    CountryDelta out;
    for (const auto& o : outcomes) {
        const auto* iface = std::get_if<InterfaceAffected>(&o.verdict);
        if (!iface) continue;
        auto it = snapshot.find(o.ip);
        if (it == snapshot.end()) continue;
        auto majority = majority_location(it->second, iface->resolved);
        if (!majority) continue;
        const auto resolved = country_code(catalog.polygon(iface->polygon_id).country);
        const auto consensus = country_code(majority->country);
        ++out.rows[resolved].resolved;
        ++out.rows[consensus].db_consensus;
        ++out.corrected;
        out.changed += resolved != consensus;
    }
    for (auto& [_, row] : out.rows) {
        row.delta = static_cast<long>(row.resolved) - static_cast<long>(row.db_consensus);
    }
    out.changed_fraction = out.corrected ? static_cast<double>(out.changed) / static_cast<double>(out.corrected) : 0.0;
    return out;
}

void write_country_delta_csv(std::ostream& out, const CountryDelta& delta) {
    csv::write_row(out, {"country", "db_consensus", "resolved", "delta"});
    for (const auto& [country, row] : delta.rows) {
        csv::write_row(out, {country, std::to_string(row.db_consensus), std::to_string(row.resolved), std::to_string(row.delta)});
    }
}

}  // namespace geotrace
