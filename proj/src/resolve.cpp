#include "geotrace/resolve.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

#include "geotrace/errors.hpp"
#include "geotrace/parallel.hpp"
#include "geotrace/stats.hpp"

namespace geotrace {

void ResolveConfig::validate() const {
    if (!(country_dominance > 0.0 && country_dominance <= 1.0)) throw ConfigError("country_dominance must be in (0,1]");
    if (!(anchor_allowance_fraction > 0.0 && anchor_allowance_fraction <= 1.0)) {
        throw ConfigError("anchor_allowance_fraction must be in (0,1]");
    }
    if (!(tie_merge_km > 0.0) || !(tie_merge_step_km > 0.0)) throw ConfigError("tie merge distances must be positive");
    if (tie_merge_km > tie_merge_max_km) throw ConfigError("tie_merge_km must not exceed tie_merge_max_km");
    if (!(match_radius_km >= 0.0)) throw ConfigError("match_radius_km must be non-negative");
    if (!(buffer_floor_km > 0.0)) throw ConfigError("buffer_floor_km must be positive");
    if (min_anchors < 1) throw ConfigError("min_anchors must be >= 1");
}

const char* to_string(MplsReason reason) {
    switch (reason) {
        case MplsReason::CountryDispersed: return "country_dispersed";
        case MplsReason::Unresolvable: return "unresolvable";
    }
    return "unknown";
}

namespace {

std::vector<AnchorObservation> select_anchors_in(Ipv4 ip, std::span<const CleanPath* const> paths,
                                                 std::span<const CandidateState> states) {
    std::vector<AnchorObservation> out;
    auto anchor_at = [&](const PathHop& hop) -> const CandidateState* {
        if (hop.ip == ip) return nullptr;
        const auto* s = find_state(states, hop.ip);
        return s && s->is_anchor() ? s : nullptr;
    };
    for (const CleanPath* path_ptr : paths) {
        const auto& path = *path_ptr;
        auto pos = std::find_if(path.hops.begin(), path.hops.end(), [&](const PathHop& h) { return h.ip == ip; });
        if (pos == path.hops.end()) continue;
        const auto i = static_cast<std::size_t>(pos - path.hops.begin());
        const double own_rtt = pos->rtt_ms;

        std::optional<std::pair<std::size_t, const CandidateState*>> before, after;
        for (std::size_t j = i; j-- > 0;) {
            if (const auto* s = anchor_at(path.hops[j])) {
                before.emplace(j, s);
                break;
            }
        }
        for (std::size_t j = i + 1; j < path.hops.size(); ++j) {
            if (const auto* s = anchor_at(path.hops[j])) {
                after.emplace(j, s);
                break;
            }
        }
        auto pick = before;
        if (after) {
            const double d_after = std::abs(own_rtt - path.hops[after->first].rtt_ms);
            if (!pick || d_after < std::abs(own_rtt - path.hops[pick->first].rtt_ms)) pick = after;
        }
        if (!pick) continue;
        const auto& hop = path.hops[pick->first];
        const auto& cluster = pick->second->candidates.front();
        out.push_back({ip, hop.ip, cluster.centroid, cluster.country, own_rtt - hop.rtt_ms, hop.rtt_ms});
    }
    return out;
}

std::vector<const CleanPath*> pointers(std::span<const CleanPath> paths) {
    std::vector<const CleanPath*> out;
    out.reserve(paths.size());
    for (const auto& p : paths) out.push_back(&p);
    return out;
}

ResolutionOutcome resolve_ip_in(Ipv4 ip, std::span<const CleanPath* const> paths,
                                std::span<const CandidateState> states,
                                std::span<const CityCluster> original_candidates, const SpatialIndex& index,
                                const ResolveConfig& cfg);

}  // namespace

std::vector<AnchorObservation> select_anchors(Ipv4 ip, std::span<const CleanPath> paths,
                                              std::span<const CandidateState> states) {
    return select_anchors_in(ip, pointers(paths), states);
}

std::vector<AnchorSummary> aggregate_medians(std::span<const AnchorObservation> observations) {
    std::map<Ipv4, std::vector<const AnchorObservation*>> groups;
    for (const auto& o : observations) groups[o.anchor_ip].push_back(&o);
    std::vector<AnchorSummary> out;
    out.reserve(groups.size());
    for (const auto& [anchor, members] : groups) {
        std::vector<double> deltas, rtts;
        for (const auto* o : members) {
            deltas.push_back(o->delta_rtt_ms);
            rtts.push_back(o->anchor_rtt_ms);
        }
        out.push_back({anchor, median(deltas), median(rtts), members.front()->anchor_location,
                       members.front()->anchor_country, members.size()});
    }
    return out;
}

bool mpls_country_filter(std::span<const AnchorSummary> anchors, const ResolveConfig& cfg) {
    if (anchors.empty()) return false;
    std::map<std::string, std::size_t> per_country;
    std::map<Ipv4, bool> distinct;
    for (const auto& a : anchors) {
        if (distinct.emplace(a.anchor_ip, true).second) ++per_country[normalize_place(a.country)];
    }
    std::size_t top = 0;
    for (const auto& [_, n] : per_country) top = std::max(top, n);
    const double share = static_cast<double>(top) / static_cast<double>(distinct.size());
    return share <= cfg.country_dominance;
}

std::vector<BufferRegion> build_buffers(std::span<const AnchorSummary> anchors, const ResolveConfig& cfg) {
    std::vector<BufferRegion> out;
    out.reserve(anchors.size());
    for (const auto& a : anchors) {
        const double budget_ms = std::abs(a.median_delta_ms) + cfg.anchor_allowance_fraction * a.median_anchor_rtt_ms;
        out.push_back({a.location, std::max(sol_km(budget_ms), cfg.buffer_floor_km), a.anchor_ip});
    }
    return out;
}

OverlapCount count_overlaps(std::span<const BufferRegion> buffers, const SpatialIndex& index) {
    std::map<int, std::size_t> hits;
    for (const auto& b : buffers) {
        for (int id : index.query_overlaps(b.center, b.radius_km)) ++hits[id];
    }
    OverlapCount out;
    for (const auto& [id, n] : hits) out.max_overlap = std::max(out.max_overlap, n);
    for (const auto& [id, n] : hits) {
        if (n == out.max_overlap) out.best_polygons.push_back(id);
    }
    return out;
}

std::vector<std::vector<std::size_t>> single_linkage(std::span<const GeoPoint> points, double threshold_km) {
    std::vector<std::size_t> parent(points.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    std::function<std::size_t(std::size_t)> root = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            if (haversine_km(points[i], points[j]) <= threshold_km) {
                auto ri = root(i), rj = root(j);
                if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
            }
        }
    }
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < points.size(); ++i) groups[root(i)].push_back(i);
    std::vector<std::vector<std::size_t>> out;
    for (auto& [_, g] : groups) out.push_back(std::move(g));
    return out;
}

std::optional<ResolvedLocation> resolve_location(std::span<const BufferRegion> buffers, const SpatialIndex& index,
                                                 const ResolveConfig& cfg) {
    if (buffers.size() < cfg.min_anchors) return std::nullopt;
    const auto overlap = count_overlaps(buffers, index);
    if (overlap.best_polygons.empty()) return std::nullopt;
    if (overlap.best_polygons.size() == 1) {
        const auto& p = index.polygon(overlap.best_polygons.front());
        return ResolvedLocation{p.centroid, p.polygon_id, overlap.max_overlap};
    }
    std::vector<GeoPoint> centroids;
    for (int id : overlap.best_polygons) centroids.push_back(index.polygon(id).centroid);
    // Step count is derived up front so accumulated floating error cannot
    // skip the final threshold.
    const auto steps = static_cast<int>(std::floor((cfg.tie_merge_max_km - cfg.tie_merge_km) / cfg.tie_merge_step_km + 1e-9));
    for (int k = 0; k <= steps; ++k) {
        const double threshold = cfg.tie_merge_km + k * cfg.tie_merge_step_km;
        if (single_linkage(centroids, threshold).size() != 1) continue;
        GeoPoint mean{0.0, 0.0};
        for (const auto& c : centroids) {
            mean.lat += c.lat;
            mean.lon += c.lon;
        }
        mean.lat /= static_cast<double>(centroids.size());
        mean.lon /= static_cast<double>(centroids.size());
        int nearest = overlap.best_polygons.front();
        double nearest_d = std::numeric_limits<double>::infinity();
        for (int id : overlap.best_polygons) {
            const double d = haversine_km(mean, index.polygon(id).centroid);
            if (d < nearest_d) {
                nearest_d = d;
                nearest = id;
            }
        }
        return ResolvedLocation{mean, nearest, overlap.max_overlap};
    }
    return std::nullopt;
}

ResolutionOutcome classify(Ipv4 ip, const ResolvedLocation& resolved, std::span<const CityCluster> original_candidates,
                           const ResolveConfig& cfg, std::size_t anchor_count) {
    const CityCluster* match = nullptr;
    double match_d = std::numeric_limits<double>::infinity();
    for (const auto& c : original_candidates) {
        const double d = haversine_km(resolved.point, c.centroid);
        if (d > cfg.match_radius_km) continue;
        if (!match || d < match_d || (d == match_d && c.cluster_id < match->cluster_id)) {
            match = &c;
            match_d = d;
        }
    }
    ResolutionOutcome out{ip, InterfaceAffected{resolved.point, resolved.polygon_id}, anchor_count, resolved.max_overlap};
    if (match) out.verdict = FalsePositive{*match};
    return out;
}

namespace {

ResolutionOutcome resolve_ip_in(Ipv4 ip, std::span<const CleanPath* const> paths,
                                std::span<const CandidateState> states,
                                std::span<const CityCluster> original_candidates, const SpatialIndex& index,
                                const ResolveConfig& cfg) {
    const auto observations = select_anchors_in(ip, paths, states);
    if (observations.empty()) return {ip, MplsAffected{MplsReason::Unresolvable}, 0, 0};
    const auto anchors = aggregate_medians(observations);
    if (mpls_country_filter(anchors, cfg)) return {ip, MplsAffected{MplsReason::CountryDispersed}, anchors.size(), 0};
    const auto buffers = build_buffers(anchors, cfg);
    const auto resolved = resolve_location(buffers, index, cfg);
    if (!resolved) {
        const std::size_t overlap = buffers.size() >= cfg.min_anchors ? count_overlaps(buffers, index).max_overlap : 0;
        return {ip, MplsAffected{MplsReason::Unresolvable}, anchors.size(), overlap};
    }
    return classify(ip, *resolved, original_candidates, cfg, anchors.size());
}

}  // namespace

ResolutionOutcome resolve_ip(Ipv4 ip, std::span<const CleanPath> paths, std::span<const CandidateState> states,
                             std::span<const CityCluster> original_candidates, const SpatialIndex& index,
                             const ResolveConfig& cfg) {
    return resolve_ip_in(ip, pointers(paths), states, original_candidates, index, cfg);
}

std::vector<ResolutionOutcome> resolve_all(std::span<const CleanPath> paths, std::span<const CandidateState> states,
                                           std::span<const CandidateState> initial, const SpatialIndex& index,
                                           const ResolveConfig& cfg, int threads) {
    std::vector<Ipv4> targets;
    for (const auto& s : states) {
        if (s.status == Status::Anomalous) targets.push_back(s.ip);
    }
    std::unordered_map<Ipv4, std::size_t> slot;
    for (std::size_t i = 0; i < targets.size(); ++i) slot.emplace(targets[i], i);
    std::vector<std::vector<const CleanPath*>> through(targets.size());
    for (const auto& p : paths) {
        for (const auto& h : p.hops) {
            if (auto it = slot.find(h.ip); it != slot.end()) through[it->second].push_back(&p);
        }
    }
    std::vector<ResolutionOutcome> out(targets.size());
    parallel_for(targets.size(), threads, [&](std::size_t i) {
        const auto* original = find_state(initial, targets[i]);
        std::span<const CityCluster> candidates;
        if (original) candidates = original->candidates;
        out[i] = resolve_ip_in(targets[i], through[i], states, candidates, index, cfg);
    });
    return out;
}

}  // namespace geotrace
