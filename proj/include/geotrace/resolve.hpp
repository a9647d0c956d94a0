#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "geotrace/geo.hpp"
#include "geotrace/ingest.hpp"
#include "geotrace/refine.hpp"
#include "geotrace/spatial_index.hpp"

namespace geotrace {

struct ResolveConfig {
    /// A country holding more than this share of anchors rules out MPLS.
    double country_dominance = 0.95;
    /// Share of the anchor's median RTT added to the buffer budget.
    double anchor_allowance_fraction = 0.10;
    double tie_merge_km = 20.0;
    double tie_merge_max_km = 100.0;
    double tie_merge_step_km = 20.0;
    double match_radius_km = 20.0;
    std::size_t min_anchors = 2;
    /// Smallest buffer radius.
    double buffer_floor_km = kCityRadiusKm;

    void validate() const;
};

struct AnchorObservation {
    Ipv4 anomalous_ip;
    Ipv4 anchor_ip;
    GeoPoint anchor_location;
    std::string anchor_country;
    /// Anomalous hop RTT minus anchor RTT on one traceroute.
    double delta_rtt_ms = 0.0;
    double anchor_rtt_ms = 0.0;
};

struct AnchorSummary {
    Ipv4 anchor_ip;
    double median_delta_ms = 0.0;
    double median_anchor_rtt_ms = 0.0;
    GeoPoint location;
    std::string country;
    std::size_t count = 0;
};

struct BufferRegion {
    GeoPoint center;
    double radius_km = 0.0;
    Ipv4 anchor_ip;
};

struct InterfaceAffected {
    GeoPoint resolved;
    int polygon_id = -1;
};

enum class MplsReason { CountryDispersed, Unresolvable };

struct MplsAffected {
    MplsReason reason = MplsReason::Unresolvable;
};

struct FalsePositive {
    CityCluster confirmed;
};

using Verdict = std::variant<InterfaceAffected, MplsAffected, FalsePositive>;

struct ResolutionOutcome {
    Ipv4 ip;
    Verdict verdict;
    std::size_t anchor_count = 0;
    std::size_t max_overlap = 0;
};

const char* to_string(MplsReason reason);

/// One observation per path through `ip`: the nearest anchor on each side,
/// keeping the smaller |delta| (preceding side wins ties).
std::vector<AnchorObservation> select_anchors(Ipv4 ip, std::span<const CleanPath> paths,
                                              std::span<const CandidateState> states);

/// Group by anchor IP (ascending) with median delta and median anchor RTT.
std::vector<AnchorSummary> aggregate_medians(std::span<const AnchorObservation> observations);

/// True (MPLS-affected) when no country exceeds cfg.country_dominance of
/// the distinct anchors.
bool mpls_country_filter(std::span<const AnchorSummary> anchors, const ResolveConfig& cfg);

std::vector<BufferRegion> build_buffers(std::span<const AnchorSummary> anchors, const ResolveConfig& cfg);

struct ResolvedLocation {
    GeoPoint point;
    int polygon_id = -1;
    std::size_t max_overlap = 0;
};

struct OverlapCount {
    std::vector<int> best_polygons;
    std::size_t max_overlap = 0;
};

/// Polygons hit by the largest number of buffers.
OverlapCount count_overlaps(std::span<const BufferRegion> buffers, const SpatialIndex& index);

/// Single-linkage groups of points at the given threshold, each group
/// listing indices in ascending order; groups ordered by first index.
std::vector<std::vector<std::size_t>> single_linkage(std::span<const GeoPoint> points, double threshold_km);

/// nullopt means unresolvable: too few buffers, no overlapping polygon, or
/// ties that stay apart at the largest merge threshold.
std::optional<ResolvedLocation> resolve_location(std::span<const BufferRegion> buffers, const SpatialIndex& index,
                                                 const ResolveConfig& cfg);

ResolutionOutcome classify(Ipv4 ip, const ResolvedLocation& resolved, std::span<const CityCluster> original_candidates,
                           const ResolveConfig& cfg, std::size_t anchor_count);

/// Full per-IP resolution: anchors, MPLS filter, buffers, overlap, verdict.
/// `original_candidates` are the IP's clusters before refinement.
ResolutionOutcome resolve_ip(Ipv4 ip, std::span<const CleanPath> paths, std::span<const CandidateState> states,
                             std::span<const CityCluster> original_candidates, const SpatialIndex& index,
                             const ResolveConfig& cfg);

/// Resolves every Anomalous state in `states`; `initial` holds the same IPs
/// before refinement. Outcomes are sorted by IP.
std::vector<ResolutionOutcome> resolve_all(std::span<const CleanPath> paths, std::span<const CandidateState> states,
                                           std::span<const CandidateState> initial, const SpatialIndex& index,
                                           const ResolveConfig& cfg, int threads = 1);

}  // namespace geotrace
