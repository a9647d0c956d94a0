// geotrace: detect, classify and correct IP geolocation anomalies in
// traceroute corpora.
//
//   geotrace run --config run.conf [--out DIR] [--threads N] [--seed N]
//   geotrace synth --config synth.conf [--out DIR] [--seed N]
//   geotrace score --results DIR --world world.json [--displaced FILE] [--out DIR]
//   geotrace fetch-geo --config sources.conf --traceroutes FILE --cache DIR --out snapshot.csv
//
// Exit codes: 0 success, 1 input error, 2 config error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "geotrace/errors.hpp"
#include "geotrace/fetch.hpp"
#include "geotrace/pipeline.hpp"

namespace fs = std::filesystem;
using namespace geotrace;

namespace {

fs::path config_dir(const fs::path& config) {
    auto dir = config.parent_path();
    return dir.empty() ? fs::path(".") : dir;
}

int cmd_run(Diagnostics& diag, const fs::path& config_file, const std::optional<fs::path>& out,
            const std::optional<int>& threads, const std::optional<std::uint64_t>& seed) {
    auto cfg = pipeline_config(load_key_values(config_file), config_dir(config_file));
    if (out) cfg.out = *out;
    if (threads) cfg.threads = *threads;
    if (seed) cfg.seed = *seed;
    const auto analysis = run(cfg, diag);
    std::size_t interface = 0, mpls = 0, fp = 0;
    for (const auto& r : analysis.results) {
        interface += r.verdict == "interface_affected";
        mpls += r.verdict == "mpls_affected";
        fp += r.verdict == "false_positive";
    }
    diag.info("run: ips=" + std::to_string(analysis.results.size()) + " interface_affected=" + std::to_string(interface) +
              " mpls_affected=" + std::to_string(mpls) + " false_positive=" + std::to_string(fp) +
              " out=" + cfg.out.string());
    return 0;
}

int cmd_synth(Diagnostics& diag, const fs::path& config_file, const std::optional<fs::path>& out,
              const std::optional<std::uint64_t>& seed) {
    auto cfg = synth_config(load_key_values(config_file), config_dir(config_file));
    if (out) cfg.out = *out;
    if (seed) cfg.world.seed = *seed;
    run_synth(cfg, diag);
    return 0;
}

int cmd_score(const fs::path& results, const fs::path& world, std::optional<fs::path> displaced,
              std::optional<fs::path> out) {
    if (!displaced) displaced = config_dir(world) / "displaced.json";
    const auto report = run_score(results, world, *displaced, out.value_or(results));
    auto fmt = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string("N/A"); };
    std::cerr << "score: precision=" << fmt(report.precision) << " recall=" << fmt(report.recall)
              << " tag_precision=" << fmt(report.tag_precision) << " tag_recall=" << fmt(report.tag_recall)
              << " tunnel_detection=" << fmt(report.tunnel_detection_rate())
              << " within_100km=" << fmt(report.resolution_within_100km_rate()) << '\n';
    return 0;
}

int cmd_fetch(Diagnostics& diag, const fs::path& config_file, const fs::path& traceroutes, const fs::path& cache,
              const fs::path& out) {
    std::ifstream cfg_in(config_file);
    if (!cfg_in) throw ConfigError("cannot read config " + config_file.string());
    const auto sources = parse_fetch_config(cfg_in);
    const auto paths = load_paths(traceroutes, diag);
    std::set<Ipv4> unique;
    for (const auto& p : paths) {
        for (const auto& h : p.hops) unique.insert(h.ip);
    }
    const std::vector<Ipv4> ips(unique.begin(), unique.end());
    auto transport = make_http_transport();
    FetchReport report;
    const auto snapshot = fetch_geo(ips, sources, cache, *transport, report, diag);
    std::ostringstream body;
    write_geo_snapshot(body, snapshot);
    write_file_atomic(out, body.str());
    for (const auto& [name, s] : report.sources) {
        diag.info("fetch: " + name + " cached=" + std::to_string(s.cached) + " fetched=" + std::to_string(s.fetched) +
                  " failed=" + std::to_string(s.failed));
    }
    if (report.all_sources_unreachable()) {
        std::cerr << "error: every geolocation source was unreachable\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IP geolocation anomaly detection over traceroute corpora"};
    app.require_subcommand(1);

    fs::path run_config;
    std::optional<fs::path> run_out;
    std::optional<int> run_threads;
    std::optional<std::uint64_t> run_seed;
    auto* run_cmd = app.add_subcommand("run", "detect, classify and correct anomalies");
    run_cmd->add_option("--config", run_config, "pipeline config file")->required();
    run_cmd->add_option("--out", run_out, "output directory");
    run_cmd->add_option("--threads", run_threads, "worker threads");
    run_cmd->add_option("--seed", run_seed, "rng seed");

    fs::path synth_conf;
    std::optional<fs::path> synth_out;
    std::optional<std::uint64_t> synth_seed;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic world, traceroutes and snapshot");
    synth_cmd->add_option("--config", synth_conf, "synth config file")->required();
    synth_cmd->add_option("--out", synth_out, "output directory");
    synth_cmd->add_option("--seed", synth_seed, "world seed");

    fs::path score_results, score_world;
    std::optional<fs::path> score_displaced, score_out;
    auto* score_cmd = app.add_subcommand("score", "score a run against synthetic ground truth");
    score_cmd->add_option("--results", score_results, "directory holding ips.jsonl")->required();
    score_cmd->add_option("--world", score_world, "world.json from synth")->required();
    score_cmd->add_option("--displaced", score_displaced, "displaced.json (default: next to the world)");
    score_cmd->add_option("--out", score_out, "directory for score.csv (default: results directory)");

    fs::path fetch_config, fetch_traces, fetch_cache = "geo_cache", fetch_out = "geo_snapshot.csv";
    auto* fetch_cmd = app.add_subcommand("fetch-geo", "build a geo snapshot from online services");
    fetch_cmd->add_option("--config", fetch_config, "source config file")->required();
    fetch_cmd->add_option("--traceroutes", fetch_traces, "traceroute file listing the IPs")->required();
    fetch_cmd->add_option("--cache", fetch_cache, "cache directory");
    fetch_cmd->add_option("--out", fetch_out, "snapshot CSV to write");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    // The summary line closes every run, failed or not.
    Diagnostics diag(&std::cerr);
    int code = 0;
    try {
        if (*run_cmd) code = cmd_run(diag, run_config, run_out, run_threads, run_seed);
        if (*synth_cmd) code = cmd_synth(diag, synth_conf, synth_out, synth_seed);
        if (*score_cmd) code = cmd_score(score_results, score_world, score_displaced, score_out);
        if (*fetch_cmd) code = cmd_fetch(diag, fetch_config, fetch_traces, fetch_cache, fetch_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        code = 2;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        code = 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        code = 1;
    }
    std::cerr << diag.summary_line() << '\n';
    return code;
}
