#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geotrace/diagnostics.hpp"
#include "geotrace/ingest.hpp"
#include "geotrace/refine.hpp"
#include "geotrace/report.hpp"
#include "geotrace/resolve.hpp"
#include "geotrace/results.hpp"
#include "geotrace/spatial_index.hpp"
#include "geotrace/synth.hpp"

namespace geotrace {

/// Flat `key = value` text; `#` starts a comment line. Throws ConfigError on
/// lines without `=` and on repeated keys.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::istream& in, const std::string& origin);
KeyValues load_key_values(const std::filesystem::path& file);

struct PipelineConfig {
    std::filesystem::path traceroutes;
    std::filesystem::path geo_snapshot;
    std::filesystem::path city_catalog;
    std::filesystem::path out = "out";
    int threads = 1;
    std::uint64_t seed = 1;
    RefineConfig refine;
    ResolveConfig resolve;

    /// Knob ranges plus existence of every input path. Throws ConfigError.
    void validate() const;
};

/// Reads pipeline keys; relative paths resolve against `base_dir`. Keys of
/// other subcommands are ignored, unknown `refine.`/`resolve.` keys are
/// rejected.
PipelineConfig pipeline_config(const KeyValues& kv, const std::filesystem::path& base_dir);

/// Everything the run computes, kept in memory for tests and reporting.
struct Analysis {
    std::vector<CandidateState> initial;
    std::vector<CandidateState> states;
    std::vector<ResolutionOutcome> outcomes;
    std::vector<CandidateState> baseline;
    std::vector<IpResult> results;
    SummaryTable summary;
    std::vector<HistogramRow> histogram;
    DistanceCdf distances;
    CountryDelta deltas;
    IterateResult refine_result;
};

Analysis analyze(std::span<const CleanPath> paths, const GeoSnapshot& snapshot, const SpatialIndex& catalog,
                 const RefineConfig& refine, const ResolveConfig& resolve, int threads, Diagnostics& diag);

/// Parse and normalize a traceroute file. Throws InputError when the file is
/// unreadable or yields no usable path.
std::vector<CleanPath> load_paths(const std::filesystem::path& file, Diagnostics& diag);

/// Writes ips.jsonl, summary.csv, clusters_hist.csv, distance_cdf.csv and
/// country_delta.csv into `dir`.
void write_outputs(const std::filesystem::path& dir, const Analysis& analysis);

/// End to end. Throws InputError / ConfigError; the CLI maps them to exit
/// codes 1 and 2.
Analysis run(const PipelineConfig& config, Diagnostics& diag);

struct SynthConfig {
    std::filesystem::path city_catalog;
    std::filesystem::path out = "synth";
    synth::WorldParams world;
    int n_paths = 5000;
    double noise_fraction = 0.05;
    synth::InjectionSpec injection;

    void validate() const;
};

SynthConfig synth_config(const KeyValues& kv, const std::filesystem::path& base_dir);

/// Writes world.json, traceroutes.jsonl, geo_snapshot.csv and
/// displaced.json. Sub-seeds for simulation and corruption derive from
/// world.seed.
void run_synth(const SynthConfig& config, Diagnostics& diag);

/// Reads `results_dir/ips.jsonl`, the world and displaced set, and writes
/// score.csv into `out_dir`. Throws InputError when results and world
/// disagree.
synth::ScoreReport run_score(const std::filesystem::path& results_dir, const std::filesystem::path& world_file,
                             const std::filesystem::path& displaced_file, const std::filesystem::path& out_dir);

/// Writes a file through a temporary sibling and a rename.
void write_file_atomic(const std::filesystem::path& file, const std::string& contents);

}  // namespace geotrace
