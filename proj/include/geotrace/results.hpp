#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "geotrace/geo.hpp"
#include "geotrace/refine.hpp"
#include "geotrace/resolve.hpp"

namespace geotrace {

/// One row of ips.jsonl.
struct IpResult {
    struct Cluster {
        GeoPoint centroid;
        std::string city;
        std::string country;
        double ratio = 0.0;
    };

    Ipv4 ip;
    /// "active" or "anomalous" (refinement tag).
    std::string status = "active";
    /// "none", "interface_affected", "mpls_affected" or "false_positive".
    std::string verdict = "none";
    std::string reason;
    std::vector<Cluster> clusters;
    std::optional<GeoPoint> resolved;
    std::string resolved_country;
    std::size_t anchors = 0;
    std::size_t max_overlap = 0;

    /// Anomalous after resolution: tagged and not cleared as a false positive.
    bool flagged() const { return verdict == "interface_affected" || verdict == "mpls_affected"; }
};

/// Join refined states with resolution outcomes. Outcomes must be sorted
/// by IP; `catalog` supplies the country of resolved polygons.
std::vector<IpResult> make_results(std::span<const CandidateState> states, std::span<const ResolutionOutcome> outcomes,
                                   const SpatialIndex& catalog);

void write_results(std::ostream& out, std::span<const IpResult> results);
/// Throws InputError on malformed lines.
std::vector<IpResult> read_results(std::istream& in);

}  // namespace geotrace
