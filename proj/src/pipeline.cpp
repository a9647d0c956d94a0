#include "geotrace/pipeline.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "geotrace/errors.hpp"

namespace geotrace {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) throw ConfigError(key + ": not a number: '" + text + "'");
    return value;
}

class Reader {
public:
    Reader(const KeyValues& kv, fs::path base) : kv_(kv), base_(std::move(base)) {}

    template <typename T>
    void number(const std::string& key, T& target) const {
        if (auto it = kv_.find(key); it != kv_.end()) target = parse_number<T>(key, it->second);
    }
    void path(const std::string& key, fs::path& target) const {
        if (auto it = kv_.find(key); it != kv_.end()) {
            fs::path p = it->second;
            target = p.is_relative() ? base_ / p : p;
        }
    }
    /// Every key under `prefix` must be one of `known`.
    void check_section(const std::string& prefix, const std::set<std::string>& known) const {
        for (auto it = kv_.lower_bound(prefix); it != kv_.end() && it->first.starts_with(prefix); ++it) {
            if (!known.count(it->first)) throw ConfigError("unknown config key: " + it->first);
        }
    }

private:
    const KeyValues& kv_;
    fs::path base_;
};

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void require_file(const std::string& what, const fs::path& p) {
    if (p.empty()) throw ConfigError(what + " path is not set");
    if (!fs::is_regular_file(p)) throw ConfigError(what + " not found: " + p.string());
}

template <typename Fn>
std::string render(Fn&& fn) {
    std::ostringstream out;
    fn(out);
    return out.str();
}

}  // namespace

KeyValues parse_key_values(std::istream& in, const std::string& origin) {
    KeyValues kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        }
        auto key = trim(std::string_view(text).substr(0, eq));
        auto value = trim(std::string_view(text).substr(eq + 1));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (!kv.emplace(key, value).second) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key " + key);
        }
    }
    return kv;
}

KeyValues load_key_values(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config " + file.string());
    return parse_key_values(in, file.string());
}

void PipelineConfig::validate() const {
    refine.validate();
    resolve.validate();
    if (threads < 1) throw ConfigError("threads must be >= 1");
    require_file("traceroutes", traceroutes);
    require_file("geo_snapshot", geo_snapshot);
    require_file("city_catalog", city_catalog);
}

PipelineConfig pipeline_config(const KeyValues& kv, const fs::path& base_dir) {
    PipelineConfig c;
    Reader r(kv, base_dir);
    r.check_section("refine.", {"refine.deviation_fraction", "refine.prune_fraction", "refine.anomaly_ratio_threshold",
                                "refine.direction_threshold", "refine.max_iterations", "refine.min_observations"});
    r.check_section("resolve.", {"resolve.country_dominance", "resolve.anchor_allowance_fraction", "resolve.tie_merge_km",
                                 "resolve.tie_merge_max_km", "resolve.tie_merge_step_km", "resolve.match_radius_km",
                                 "resolve.min_anchors", "resolve.buffer_floor_km"});
    r.path("traceroutes", c.traceroutes);
    r.path("geo_snapshot", c.geo_snapshot);
    r.path("city_catalog", c.city_catalog);
    r.path("out", c.out);
    r.number("threads", c.threads);
    r.number("seed", c.seed);
    r.number("refine.deviation_fraction", c.refine.deviation_fraction);
    r.number("refine.prune_fraction", c.refine.prune_fraction);
    r.number("refine.anomaly_ratio_threshold", c.refine.anomaly_ratio_threshold);
    r.number("refine.direction_threshold", c.refine.direction_threshold);
    r.number("refine.max_iterations", c.refine.max_iterations);
    r.number("refine.min_observations", c.refine.min_observations);
    r.number("resolve.country_dominance", c.resolve.country_dominance);
    r.number("resolve.anchor_allowance_fraction", c.resolve.anchor_allowance_fraction);
    r.number("resolve.tie_merge_km", c.resolve.tie_merge_km);
    r.number("resolve.tie_merge_max_km", c.resolve.tie_merge_max_km);
    r.number("resolve.tie_merge_step_km", c.resolve.tie_merge_step_km);
    r.number("resolve.match_radius_km", c.resolve.match_radius_km);
    r.number("resolve.min_anchors", c.resolve.min_anchors);
    r.number("resolve.buffer_floor_km", c.resolve.buffer_floor_km);
    return c;
}

std::vector<CleanPath> load_paths(const fs::path& file, Diagnostics& diag) {
    std::ifstream in(file);
    if (!in) throw InputError("cannot read traceroutes: " + file.string());
    ParseStats stats;
    const auto raw = parse_traceroutes(in, stats);
    diag.warn("malformed_traceroute", file.string() + ": skipped malformed records", stats.skipped);
    if (raw.empty()) throw InputError("no traceroute records in " + file.string());

    const auto bogons = PrefixSet::default_bogons();
    std::vector<CleanPath> paths;
    std::size_t too_short = 0, loops = 0;
    for (const auto& rt : raw) {
        auto result = normalize(rt, bogons);
        if (auto* p = std::get_if<CleanPath>(&result)) {
            paths.push_back(std::move(*p));
        } else if (std::get<Rejection>(result) == Rejection::TooFewHops) {
            ++too_short;
        } else {
            ++loops;
        }
    }
    diag.info("ingest: records=" + std::to_string(raw.size()) + " paths=" + std::to_string(paths.size()) +
              " too_few_hops=" + std::to_string(too_short) + " routing_loops=" + std::to_string(loops));
    if (paths.empty()) throw InputError("no usable traceroute paths in " + file.string());
    return paths;
}

Analysis analyze(std::span<const CleanPath> paths, const GeoSnapshot& snapshot, const SpatialIndex& catalog,
                 const RefineConfig& refine, const ResolveConfig& resolve, int threads, Diagnostics& diag) {
    Analysis a;
    a.initial = initial_states(paths, snapshot);
    a.states = a.initial;
    const auto pairs = extract_pairs(paths);
    a.refine_result = iterate(a.states, pairs, refine, threads, &diag);
    tag_anomalies(a.states, refine);

    std::size_t anomalous = 0;
    for (const auto& s : a.states) anomalous += s.status == Status::Anomalous;
    diag.info("refine: ips=" + std::to_string(a.states.size()) + " anomalous=" + std::to_string(anomalous));

    a.outcomes = resolve_all(paths, a.states, a.initial, catalog, resolve, threads);
    a.results = make_results(a.states, a.outcomes, catalog);
    a.baseline = sol_baseline(paths, snapshot, refine);
    a.summary = summarize(a.outcomes, paths);
    a.histogram = cluster_histogram(a.states, a.baseline);
    a.distances = distance_cdf(a.outcomes, snapshot, &diag);
    a.deltas = country_delta(a.outcomes, snapshot, catalog);
    return a;
}

void write_file_atomic(const fs::path& file, const std::string& contents) {
    const fs::path tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + tmp.string());
        out << contents;
        if (!out.flush()) throw InputError("cannot write " + tmp.string());
    }
    fs::rename(tmp, file);
}

void write_outputs(const fs::path& dir, const Analysis& a) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
    write_file_atomic(dir / "ips.jsonl", render([&](std::ostream& o) { write_results(o, a.results); }));
    write_file_atomic(dir / "summary.csv", render([&](std::ostream& o) { write_summary_csv(o, a.summary); }));
    write_file_atomic(dir / "clusters_hist.csv", render([&](std::ostream& o) { write_histogram_csv(o, a.histogram); }));
    write_file_atomic(dir / "distance_cdf.csv", render([&](std::ostream& o) { write_distance_cdf_csv(o, a.distances); }));
    write_file_atomic(dir / "country_delta.csv", render([&](std::ostream& o) { write_country_delta_csv(o, a.deltas); }));
}

Analysis run(const PipelineConfig& config, Diagnostics& diag) {
    config.validate();
    const auto paths = load_paths(config.traceroutes, diag);

    SnapshotStats snap_stats;
    const auto snapshot = load_geo_snapshot(config.geo_snapshot, snap_stats);
    diag.warn("snapshot_out_of_range", "geo snapshot rows with out-of-range coordinates", snap_stats.out_of_range);
    diag.warn("snapshot_duplicate", "geo snapshot rows repeating an (ip, source)", snap_stats.duplicates);
    diag.warn("snapshot_malformed", "malformed geo snapshot rows", snap_stats.malformed);

    const auto polygons = load_city_catalog(config.city_catalog);
    const SpatialIndex catalog(polygons);

    auto analysis = analyze(paths, snapshot, catalog, config.refine, config.resolve, config.threads, diag);
    write_outputs(config.out, analysis);
    return analysis;
}

void SynthConfig::validate() const {
    require_file("city_catalog", city_catalog);
    if (n_paths < 0) throw ConfigError("n_paths must be >= 0");
    if (!(noise_fraction >= 0.0 && noise_fraction < 1.0)) throw ConfigError("noise_fraction must be in [0, 1)");
    injection.validate();
}

SynthConfig synth_config(const KeyValues& kv, const fs::path& base_dir) {
    SynthConfig c;
    Reader r(kv, base_dir);
    r.path("city_catalog", c.city_catalog);
    r.path("out", c.out);
    r.number("seed", c.world.seed);
    r.number("n_routers", c.world.n_routers);
    r.number("n_cities", c.world.n_cities);
    r.number("mpls_fraction", c.world.mpls_fraction);
    r.number("nearest_links", c.world.nearest_links);
    r.number("tunnel_min_link_km", c.world.tunnel_min_link_km);
    if (auto it = kv.find("country"); it != kv.end()) c.world.country = it->second;
    r.number("n_paths", c.n_paths);
    r.number("noise_fraction", c.noise_fraction);
    r.number("interface_error_fraction", c.injection.interface_error_fraction);
    r.number("min_displacement_km", c.injection.min_displacement_km);
    if (kv.count("max_displacement_km")) {
        double v = 0.0;
        r.number("max_displacement_km", v);
        c.injection.max_displacement_km = v;
    }
    r.number("db_count", c.injection.db_count);
    r.number("db_noise_km", c.injection.db_noise_km);
    return c;
}

void run_synth(const SynthConfig& config, Diagnostics& diag) {
    config.validate();
    const auto catalog = load_city_catalog(config.city_catalog);
    const auto world = synth::generate_world(config.world, catalog);
    const auto sim = synth::simulate_traceroutes(world, config.n_paths, config.noise_fraction, derive_seed(config.world.seed, 1));
    const auto corrupted = synth::corrupt_geodb(world, config.injection, catalog, derive_seed(config.world.seed, 2), &diag);

    std::error_code ec;
    fs::create_directories(config.out, ec);
    if (ec) throw InputError("cannot create output directory " + config.out.string() + ": " + ec.message());
    write_file_atomic(config.out / "world.json", render([&](std::ostream& o) { synth::write_world_json(o, world); }));
    write_file_atomic(config.out / "traceroutes.jsonl", render([&](std::ostream& o) { write_native(o, sim.paths); }));
    write_file_atomic(config.out / "geo_snapshot.csv",
                      render([&](std::ostream& o) { write_geo_snapshot(o, corrupted.snapshot); }));
    write_file_atomic(config.out / "displaced.json",
                      render([&](std::ostream& o) { synth::write_displaced_json(o, corrupted.displaced); }));
    diag.info("synth: routers=" + std::to_string(world.routers.size()) + " links=" + std::to_string(world.links.size()) +
              " tunnels=" + std::to_string(world.mpls_tunnels.size()) + " paths=" + std::to_string(sim.paths.size()) +
              " displaced=" + std::to_string(corrupted.displaced.size()));
}

synth::ScoreReport run_score(const fs::path& results_dir, const fs::path& world_file, const fs::path& displaced_file,
                             const fs::path& out_dir) {
    auto open = [](const fs::path& p) {
        std::ifstream in(p);
        if (!in) throw InputError("cannot read " + p.string());
        return in;
    };
    auto results_in = open(results_dir / "ips.jsonl");
    const auto results = read_results(results_in);
    auto world_in = open(world_file);
    const auto world = synth::read_world_json(world_in);
    auto displaced_in = open(displaced_file);
    const auto displaced = synth::read_displaced_json(displaced_in);

    const auto report = synth::score_against_truth(results, world, displaced);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw InputError("cannot create output directory " + out_dir.string() + ": " + ec.message());
    write_file_atomic(out_dir / "score.csv", render([&](std::ostream& o) { synth::write_score_csv(o, report); }));
    return report;
}

}  // namespace geotrace
