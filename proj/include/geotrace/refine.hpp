#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "geotrace/diagnostics.hpp"
#include "geotrace/geo.hpp"
#include "geotrace/ingest.hpp"

namespace geotrace {

struct RefineConfig {
    /// Share of the two hops' RTT sum granted as slack.
    double deviation_fraction = 0.10;
    /// Candidates below this share of the best ratio are pruned.
    double prune_fraction = 0.90;
    double anomaly_ratio_threshold = 0.5;
    double direction_threshold = 0.5;
    int max_iterations = 20;
    std::size_t min_observations = 3;

    /// Throws ConfigError when a knob is outside its documented range.
    void validate() const;
};

/// One traversal of an adjacent pair. RTTs keep their per-IP roles; the
/// flag records which side came first on the path.
struct PairObservation {
    double rtt_a_ms = 0.0;
    double rtt_b_ms = 0.0;
    bool a_first = true;
};

/// Unordered adjacent IP pair, canonicalized with ip_a < ip_b.
struct NeighborPair {
    Ipv4 ip_a;
    Ipv4 ip_b;
    std::vector<PairObservation> observations;
};

enum class Status { Active, Anomalous };

struct CandidateScore {
    double ratio = 0.0;
    double prev_ratio = 0.0;
    double next_ratio = 0.0;
    std::uint64_t evaluations = 0;
    std::uint64_t prev_evaluations = 0;
    std::uint64_t next_evaluations = 0;
};

struct CandidateState {
    Ipv4 ip;
    std::vector<CityCluster> candidates;
    /// Parallel to `candidates`.
    std::vector<CandidateScore> scores;
    /// Neighbor observations whose neighbor had at least one candidate in
    /// the most recent scoring pass.
    std::size_t observations = 0;
    Status status = Status::Active;

    /// Index of the highest ratio (first wins ties); nullopt when empty.
    std::optional<std::size_t> best() const;
    bool is_anchor() const { return status == Status::Active && candidates.size() == 1; }
};

std::vector<NeighborPair> extract_pairs(std::span<const CleanPath> paths);

bool pair_feasible(GeoPoint loc_a, GeoPoint loc_b, double rtt_a_ms, double rtt_b_ms, const RefineConfig& cfg);

/// States for every IP on the paths, sorted by IP, candidates clustered from
/// the snapshot (empty when the IP has no records).
std::vector<CandidateState> initial_states(std::span<const CleanPath> paths, const GeoSnapshot& snapshot);

/// Recompute every candidate's ratios against the neighbors' current
/// candidate sets. Reads only the candidate sets, writes only scores, so the
/// update is simultaneous. States must be sorted by IP and cover every IP
/// in `pairs`.
void score_iteration(std::vector<CandidateState>& states, std::span<const NeighborPair> pairs,
                     const RefineConfig& cfg, int threads = 1);

/// Drop candidates below prune_fraction of the best ratio. Returns true when
/// the candidate set changed.
bool prune(CandidateState& state, const RefineConfig& cfg);

struct IterateResult {
    int iterations = 0;
    bool hit_iteration_cap = false;
};

IterateResult iterate(std::vector<CandidateState>& states, std::span<const NeighborPair> pairs,
                      const RefineConfig& cfg, int threads = 1, Diagnostics* diag = nullptr);

void tag_anomalies(std::vector<CandidateState>& states, const RefineConfig& cfg);

/// Binary search in IP-sorted states.
const CandidateState* find_state(std::span<const CandidateState> states, Ipv4 ip);

}  // namespace geotrace
