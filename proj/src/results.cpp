#include "geotrace/results.hpp"

#include <algorithm>

#include <json.hpp>

#include "geotrace/errors.hpp"

namespace geotrace {

using nlohmann::json;

std::vector<IpResult> make_results(std::span<const CandidateState> states, std::span<const ResolutionOutcome> outcomes,
                                   const SpatialIndex& catalog) {
    std::vector<IpResult> out;
    out.reserve(states.size());
    for (const auto& s : states) {
        IpResult r;
        r.ip = s.ip;
        r.status = s.status == Status::Anomalous ? "anomalous" : "active";
        for (std::size_t i = 0; i < s.candidates.size(); ++i) {
            const auto& c = s.candidates[i];
            r.clusters.push_back({c.centroid, c.city, c.country, s.scores[i].ratio});
        }
        auto it = std::lower_bound(outcomes.begin(), outcomes.end(), s.ip,
                                   [](const ResolutionOutcome& o, Ipv4 ip) { return o.ip < ip; });
        if (it != outcomes.end() && it->ip == s.ip) {
            r.anchors = it->anchor_count;
            r.max_overlap = it->max_overlap;
            if (const auto* iface = std::get_if<InterfaceAffected>(&it->verdict)) {
                r.verdict = "interface_affected";
                r.resolved = iface->resolved;
                r.resolved_country = catalog.polygon(iface->polygon_id).country;
            } else if (const auto* mpls = std::get_if<MplsAffected>(&it->verdict)) {
                r.verdict = "mpls_affected";
                r.reason = to_string(mpls->reason);
            } else if (const auto* fp = std::get_if<FalsePositive>(&it->verdict)) {
                r.verdict = "false_positive";
                double ratio = 0.0;
                for (std::size_t i = 0; i < s.candidates.size(); ++i) {
                    if (s.candidates[i].cluster_id == fp->confirmed.cluster_id) ratio = s.scores[i].ratio;
                }
                r.clusters = {{fp->confirmed.centroid, fp->confirmed.city, fp->confirmed.country, ratio}};
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_results(std::ostream& out, std::span<const IpResult> results) {
    for (const auto& r : results) {
        json clusters = json::array();
        for (const auto& c : r.clusters) {
            clusters.push_back(
                {{"lat", c.centroid.lat}, {"lon", c.centroid.lon}, {"city", c.city}, {"country", c.country}, {"ratio", c.ratio}});
        }
        json row;
        row["ip"] = r.ip.to_string();
        row["status"] = r.status;
        row["verdict"] = r.verdict;
        row["reason"] = r.reason;
        row["clusters"] = std::move(clusters);
        row["resolved"] = r.resolved ? json{{"lat", r.resolved->lat}, {"lon", r.resolved->lon}} : json(nullptr);
        row["resolved_country"] = r.resolved_country;
        row["anchors"] = r.anchors;
        row["max_overlap"] = r.max_overlap;
        out << row.dump() << '\n';
    }
}

std::vector<IpResult> read_results(std::istream& in) {
    std::vector<IpResult> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json row = json::parse(line);
            IpResult r;
            auto ip = Ipv4::parse(row.at("ip").get<std::string>());
            if (!ip) throw std::invalid_argument("bad ip");
            r.ip = *ip;
            r.status = row.at("status").get<std::string>();
            r.verdict = row.at("verdict").get<std::string>();
            r.reason = row.value("reason", "");
            for (const auto& c : row.at("clusters")) {
                r.clusters.push_back({{c.at("lat").get<double>(), c.at("lon").get<double>()},
                                      c.value("city", ""), c.value("country", ""), c.value("ratio", 0.0)});
            }
            if (const auto& res = row.at("resolved"); !res.is_null()) {
                r.resolved = GeoPoint{res.at("lat").get<double>(), res.at("lon").get<double>()};
            }
            r.resolved_country = row.value("resolved_country", "");
            r.anchors = row.at("anchors").get<std::size_t>();
            r.max_overlap = row.value("max_overlap", std::size_t{0});
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw InputError("ips.jsonl line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace geotrace
