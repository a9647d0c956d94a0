#include "geotrace/refine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "geotrace/errors.hpp"
#include "geotrace/parallel.hpp"

namespace geotrace {

namespace {

struct Incidence {
    std::size_t pair;
    bool is_a;
    std::size_t neighbor_state;
};

std::size_t state_index(std::span<const CandidateState> states, Ipv4 ip) {
    auto it = std::lower_bound(states.begin(), states.end(), ip,
                               [](const CandidateState& s, Ipv4 v) { return s.ip < v; });
    if (it == states.end() || it->ip != ip) {
        throw std::invalid_argument("no candidate state for " + ip.to_string());
    }
    return static_cast<std::size_t>(it - states.begin());
}

bool within_budget(double dist_km, double rtt_a_ms, double rtt_b_ms, const RefineConfig& cfg) {
    const double budget_ms = std::abs(rtt_a_ms - rtt_b_ms) + cfg.deviation_fraction * (rtt_a_ms + rtt_b_ms);
    return dist_km <= sol_km(budget_ms);
}

}  // namespace

void RefineConfig::validate() const {
    auto fraction = [](double v, const char* name) {
        if (!(v > 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must be in (0,1]");
    };
    fraction(deviation_fraction, "deviation_fraction");
    fraction(prune_fraction, "prune_fraction");
    fraction(anomaly_ratio_threshold, "anomaly_ratio_threshold");
    fraction(direction_threshold, "direction_threshold");
    if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
}

std::optional<std::size_t> CandidateState::best() const {
    if (candidates.empty()) return std::nullopt;
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i].ratio > scores[best].ratio) best = i;
    }
    return best;
}

std::vector<NeighborPair> extract_pairs(std::span<const CleanPath> paths) {
    std::map<std::pair<Ipv4, Ipv4>, std::vector<PairObservation>> acc;
    for (const auto& path : paths) {
        for (std::size_t i = 0; i + 1 < path.hops.size(); ++i) {
            const auto& first = path.hops[i];
            const auto& second = path.hops[i + 1];
            if (first.ip == second.ip) continue;
            if (first.ip < second.ip) {
                acc[{first.ip, second.ip}].push_back({first.rtt_ms, second.rtt_ms, true});
            } else {
                acc[{second.ip, first.ip}].push_back({second.rtt_ms, first.rtt_ms, false});
            }
        }
    }
    std::vector<NeighborPair> out;
    out.reserve(acc.size());
    for (auto& [key, obs] : acc) out.push_back({key.first, key.second, std::move(obs)});
    return out;
}

bool pair_feasible(GeoPoint loc_a, GeoPoint loc_b, double rtt_a_ms, double rtt_b_ms, const RefineConfig& cfg) {
    return within_budget(haversine_km(loc_a, loc_b), rtt_a_ms, rtt_b_ms, cfg);
}

std::vector<CandidateState> initial_states(std::span<const CleanPath> paths, const GeoSnapshot& snapshot) {
    std::set<Ipv4> ips;
    for (const auto& p : paths)
        for (const auto& h : p.hops) ips.insert(h.ip);
    std::vector<CandidateState> states;
    states.reserve(ips.size());
    for (Ipv4 ip : ips) {
        CandidateState s;
        s.ip = ip;
        if (auto it = snapshot.find(ip); it != snapshot.end()) s.candidates = cluster_candidates(it->second);
        s.scores.resize(s.candidates.size());
        states.push_back(std::move(s));
    }
    return states;
}

void score_iteration(std::vector<CandidateState>& states, std::span<const NeighborPair> pairs,
                     const RefineConfig& cfg, int threads) {
    std::vector<std::vector<Incidence>> incident(states.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const std::size_t a = state_index(states, pairs[p].ip_a);
        const std::size_t b = state_index(states, pairs[p].ip_b);
        incident[a].push_back({p, true, b});
        incident[b].push_back({p, false, a});
    }

    // Scores are written into a scratch copy so every IP reads the same
    // (previous-iteration) candidate sets.
    std::vector<std::vector<CandidateScore>> next(states.size());
    std::vector<std::size_t> observed(states.size(), 0);
    parallel_for(states.size(), threads, [&](std::size_t x) {
        const auto& self = states[x];
        auto& scores = next[x];
        scores = self.scores;
        std::vector<std::uint64_t> ok(self.candidates.size(), 0), total(self.candidates.size(), 0);
        std::vector<std::uint64_t> ok_prev(self.candidates.size(), 0), total_prev(self.candidates.size(), 0);
        std::vector<std::uint64_t> ok_next(self.candidates.size(), 0), total_next(self.candidates.size(), 0);
        std::size_t observations = 0;
        for (const auto& inc : incident[x]) {
            const auto& pair = pairs[inc.pair];
            const auto& neighbor = states[inc.neighbor_state];
            if (neighbor.candidates.empty()) continue;
            observations += pair.observations.size();
            for (std::size_t c = 0; c < self.candidates.size(); ++c) {
                for (const auto& nc : neighbor.candidates) {
                    const double dist = haversine_km(self.candidates[c].centroid, nc.centroid);
                    for (const auto& obs : pair.observations) {
                        const double mine = inc.is_a ? obs.rtt_a_ms : obs.rtt_b_ms;
                        const double theirs = inc.is_a ? obs.rtt_b_ms : obs.rtt_a_ms;
                        const bool feasible = within_budget(dist, mine, theirs, cfg);
                        const bool self_first = inc.is_a == obs.a_first;
                        ++total[c];
                        ok[c] += feasible;
                        if (self_first) {
                            ++total_next[c];
                            ok_next[c] += feasible;
                        } else {
                            ++total_prev[c];
                            ok_prev[c] += feasible;
                        }
                    }
                }
            }
        }
        observed[x] = observations;
        for (std::size_t c = 0; c < self.candidates.size(); ++c) {
            if (total[c] == 0) continue;
            auto& s = scores[c];
            s.evaluations = total[c];
            s.ratio = static_cast<double>(ok[c]) / static_cast<double>(total[c]);
            s.prev_evaluations = total_prev[c];
            s.next_evaluations = total_next[c];
            s.prev_ratio = total_prev[c] ? static_cast<double>(ok_prev[c]) / static_cast<double>(total_prev[c]) : 0.0;
            s.next_ratio = total_next[c] ? static_cast<double>(ok_next[c]) / static_cast<double>(total_next[c]) : 0.0;
        }
    });
    for (std::size_t x = 0; x < states.size(); ++x) {
        states[x].scores = std::move(next[x]);
        states[x].observations = observed[x];
    }
}

bool prune(CandidateState& state, const RefineConfig& cfg) {
    auto best = state.best();
    if (!best) return false;
    const double top = state.scores[*best].ratio;
    if (top <= 0.0) return false;
    const double cutoff = cfg.prune_fraction * top;
    std::vector<CityCluster> kept;
    std::vector<CandidateScore> kept_scores;
    for (std::size_t i = 0; i < state.candidates.size(); ++i) {
        if (state.scores[i].ratio < cutoff) continue;
        kept.push_back(std::move(state.candidates[i]));
        kept_scores.push_back(state.scores[i]);
    }
    const bool changed = kept.size() != state.candidates.size();
    state.candidates = std::move(kept);
    state.scores = std::move(kept_scores);
    return changed;
}

IterateResult iterate(std::vector<CandidateState>& states, std::span<const NeighborPair> pairs,
                      const RefineConfig& cfg, int threads, Diagnostics* diag) {
    IterateResult result;
    while (result.iterations < cfg.max_iterations) {
        ++result.iterations;
        score_iteration(states, pairs, cfg, threads);
        std::size_t changed = 0;
        for (auto& s : states) changed += prune(s, cfg);
        if (diag) {
            diag->info("refine: iteration " + std::to_string(result.iterations) + " ips_changed=" + std::to_string(changed));
        }
        if (changed == 0) return result;
    }
    result.hit_iteration_cap = true;
    if (diag) diag->warn("refine", "no fixed point after " + std::to_string(cfg.max_iterations) + " iterations");
    return result;
}

void tag_anomalies(std::vector<CandidateState>& states, const RefineConfig& cfg) {
    for (auto& s : states) {
        s.status = Status::Active;
        auto best = s.best();
        if (!best || s.observations < cfg.min_observations) continue;
        const auto& score = s.scores[*best];
        const bool low_overall = score.ratio < cfg.anomaly_ratio_threshold;
        bool one_sided = false;
        if (score.prev_evaluations > 0 && score.next_evaluations > 0) {
            one_sided = (score.prev_ratio < cfg.direction_threshold) != (score.next_ratio < cfg.direction_threshold);
        }
        if (low_overall || one_sided) s.status = Status::Anomalous;
    }
}

const CandidateState* find_state(std::span<const CandidateState> states, Ipv4 ip) {
    auto it = std::lower_bound(states.begin(), states.end(), ip,
                               [](const CandidateState& s, Ipv4 v) { return s.ip < v; });
    return it != states.end() && it->ip == ip ? &*it : nullptr;
}

}  // namespace geotrace
