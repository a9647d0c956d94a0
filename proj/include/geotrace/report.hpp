#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "geotrace/diagnostics.hpp"
#include "geotrace/ingest.hpp"
#include "geotrace/refine.hpp"
#include "geotrace/resolve.hpp"
#include "geotrace/spatial_index.hpp"

namespace geotrace {

struct ElementCounts {
    std::size_t ips = 0;
    std::size_t links = 0;
    std::size_t traceroutes = 0;
    friend bool operator==(const ElementCounts&, const ElementCounts&) = default;
};

/// Affected-element table. Affected rows are relative to `total`; the
/// corrected row is relative to `total_affected`.
struct SummaryTable {
    ElementCounts total;
    ElementCounts mpls;
    ElementCounts interface;
    ElementCounts total_affected;
    ElementCounts corrected;
};

/// 100 * part / whole, or 0 when whole is 0.
double percent(std::size_t part, std::size_t whole);

/// An element is MPLS- (interface-) affected when it involves at least one
/// MPLS-affected (interface-affected) IP; links are unordered adjacent
/// pairs. Corrected elements are affected by interface IPs only.
SummaryTable summarize(std::span<const ResolutionOutcome> outcomes, std::span<const CleanPath> paths);

void write_summary_csv(std::ostream& out, const SummaryTable& table);

/// Speed-of-light baseline: one pass, a cluster survives when every
/// neighbor observation has some neighbor cluster within the same budget
/// pair_feasible uses. Neighbors without clusters impose no constraint.
std::vector<CandidateState> sol_baseline(std::span<const CleanPath> paths, const GeoSnapshot& snapshot,
                                         const RefineConfig& cfg);

struct HistogramRow {
    std::string method;
    std::string bucket;
    std::size_t count = 0;
    double fraction = 0.0;
};

/// Buckets 0, 1, 2, 3, >=4 surviving clusters for each method, over the IPs
/// that have at least one GeoTrace candidate.
std::vector<HistogramRow> cluster_histogram(std::span<const CandidateState> states,
                                            std::span<const CandidateState> baseline);

/// Share of IPs with exactly one cluster for `method` ("geotrace" or
/// "sol_baseline"), read from histogram rows.
double single_cluster_fraction(std::span<const HistogramRow> rows, const std::string& method);

void write_histogram_csv(std::ostream& out, std::span<const HistogramRow> rows);

/// Modal (city, country) location among an IP's records, ties broken by
/// proximity to `reference`.
struct MajorityLocation {
    GeoPoint location;
    std::string city;
    std::string country;
    std::size_t votes = 0;
};
std::optional<MajorityLocation> majority_location(std::span<const GeoRecord> records, GeoPoint reference);

struct DistanceEntry {
    Ipv4 ip;
    double distance_km = 0.0;
};

struct DistanceCdf {
    /// Sorted by distance, then IP.
    std::vector<DistanceEntry> entries;
    double fraction_under_20km = 0.0;
    double mean_km = 0.0;
    double max_km = 0.0;
    std::size_t excluded = 0;
};

DistanceCdf distance_cdf(std::span<const ResolutionOutcome> outcomes, const GeoSnapshot& snapshot,
                         Diagnostics* diag = nullptr);
void write_distance_cdf_csv(std::ostream& out, const DistanceCdf& cdf);

struct CountryDeltaRow {
    std::size_t db_consensus = 0;
    std::size_t resolved = 0;
    long delta = 0;
};

struct CountryDelta {
    std::map<std::string, CountryDeltaRow> rows;
    std::size_t corrected = 0;
    std::size_t changed = 0;
    double changed_fraction = 0.0;
};

/// delta(country) = IPs resolved into country - IPs the database majority
/// places there, over interface-affected outcomes.
CountryDelta country_delta(std::span<const ResolutionOutcome> outcomes, const GeoSnapshot& snapshot,
                           const SpatialIndex& catalog);
void write_country_delta_csv(std::ostream& out, const CountryDelta& delta);

}  // namespace geotrace
