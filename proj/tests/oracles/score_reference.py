#!/usr/bin/env python3
"""Reference scorer: confusion counts and rates for a synthetic run.

usage: score_reference.py ips.jsonl world.json displaced.json > score.csv
"""
import json
import math
import sys

R = 6371.0


def km(a, b):
    la1, lo1, la2, lo2 = map(math.radians, (a[0], a[1], b[0], b[1]))
    h = math.sin((la2 - la1) / 2) ** 2 + math.cos(la1) * math.cos(la2) * math.sin((lo2 - lo1) / 2) ** 2
    return 2 * R * math.asin(min(1.0, math.sqrt(h)))


def place(s):
    return " ".join(s.split()).casefold()


def rate(n, d):
    return "N/A" if d == 0 else "%.6f" % (n / d)


def main(ips_file, world_file, displaced_file):
    world = json.load(open(world_file))
    routers = {r["ip"]: r for r in world["routers"]}
    ips = [r["ip"] for r in world["routers"]]
    members, interior = set(), set()
    for run in world["mpls_tunnels"]:
        members.update(ips[i] for i in run)
        interior.update(ips[i] for i in run[1:-1])
    displaced = set(json.load(open(displaced_file))["displaced"])
    rows = [json.loads(l) for l in open(ips_file) if l.strip()]

    c = dict.fromkeys(["ips_scored", "displaced", "flagged", "tp", "fp", "fn", "tagged", "ttp", "tfp",
                       "interior", "interior_hit", "iface", "iface100", "active", "retained"], 0)
    errors = []
    for r in rows:
        ip = r["ip"]
        truth = routers[ip]
        c["ips_scored"] += 1
        d = ip in displaced
        flagged = r["verdict"] in ("interface_affected", "mpls_affected")
        tagged = r["status"] == "anomalous"
        c["displaced"] += d
        c["flagged"] += flagged
        c["tp"] += flagged and d
        c["fp"] += flagged and not d and ip not in members
        c["fn"] += d and not flagged
        c["tagged"] += tagged
        c["ttp"] += tagged and d
        c["tfp"] += tagged and not d and ip not in members
        if ip in interior:
            c["interior"] += 1
            c["interior_hit"] += tagged or r["verdict"] == "mpls_affected"
        if r["verdict"] == "interface_affected" and r["resolved"] is not None:
            e = km((r["resolved"]["lat"], r["resolved"]["lon"]), (truth["lat"], truth["lon"]))
            errors.append(e)
            c["iface"] += 1
            c["iface100"] += e <= 100.0
        if r["status"] == "active" and r["clusters"]:
            c["active"] += 1
            c["retained"] += any(place(k["city"]) == place(truth["city"]) and
                                 place(k["country"]) == place(truth["country"]) for k in r["clusters"])
    errors.sort()
    out = [
        ("ips_scored", c["ips_scored"]), ("displaced", c["displaced"]), ("flagged", c["flagged"]),
        ("true_positive", c["tp"]), ("false_positive", c["fp"]), ("false_negative", c["fn"]),
        ("precision", rate(c["tp"], c["tp"] + c["fp"])), ("recall", rate(c["tp"], c["displaced"])),
        ("tagged", c["tagged"]), ("tag_true_positive", c["ttp"]), ("tag_false_positive", c["tfp"]),
        ("tag_precision", rate(c["ttp"], c["ttp"] + c["tfp"])), ("tag_recall", rate(c["ttp"], c["displaced"])),
        ("tunnel_interior", c["interior"]), ("tunnel_interior_detected", c["interior_hit"]),
        ("tunnel_detection_rate", rate(c["interior_hit"], c["interior"])),
        ("interface_resolved", c["iface"]), ("interface_within_100km", c["iface100"]),
        ("resolution_within_100km_rate", rate(c["iface100"], c["iface"])),
        # upper median, matching the report's convention
        ("resolution_error_median_km", "%.6f" % errors[len(errors) // 2] if errors else "N/A"),
        ("resolution_error_max_km", "%.6f" % errors[-1] if errors else "N/A"),
        ("active_with_candidates", c["active"]), ("active_true_city_retained", c["retained"]),
        ("true_city_retention_rate", rate(c["retained"], c["active"])),
    ]
    sys.stdout.write("metric,value\n")
    for k, v in out:
        sys.stdout.write("%s,%s\n" % (k, int(v) if isinstance(v, bool) else v))


if __name__ == "__main__":
    main(*sys.argv[1:4])
