#!/usr/bin/env python3
"""Reference RIPE Atlas traceroute reader used to produce test expectations.

Reads newline-delimited result objects and prints, as JSON, every record that
satisfies the contract (positive timestamp, hop >= 1 strictly increasing,
replies with an IPv4 "from" and a non-negative finite "rtt" when present)
plus the number of records rejected.
"""
import ipaddress
import json
import math
import sys


def ident(v):
    if isinstance(v, bool):
        raise ValueError("bool id")
    if isinstance(v, int) or isinstance(v, str):
        return str(v)
    raise ValueError("bad id")


def reply(r):
    ip = r.get("from")
    if ip is not None:
        if not isinstance(ip, str):
            raise ValueError("from")
        ip = None if ip == "*" else str(ipaddress.IPv4Address(ip))
    rtt = r.get("rtt")
    if rtt is not None:
        if isinstance(rtt, bool) or not isinstance(rtt, (int, float)):
            raise ValueError("rtt")
        rtt = float(rtt)
        if not math.isfinite(rtt) or rtt < 0:
            raise ValueError("rtt range")
    return [ip, rtt]


def record(obj):
    ts = obj["timestamp"]
    if not isinstance(ts, int) or ts <= 0:
        raise ValueError("timestamp")
    hops = []
    last = 0
    for hop in obj["result"]:
        idx = hop["hop"]
        if not isinstance(idx, int) or idx < 1 or idx <= last:
            raise ValueError("hop index")
        last = idx
        hops.append({"hop": idx, "replies": [reply(r) for r in hop.get("result", [])]})
    return {"measurement_id": ident(obj["msm_id"]), "probe_id": ident(obj["prb_id"]), "timestamp": ts, "hops": hops}


def main(path):
    out, skipped = [], 0
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise ValueError("not an object")
                out.append(record(obj))
            except (KeyError, ValueError, TypeError):
                skipped += 1
    json.dump({"records": out, "skipped": skipped}, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main(sys.argv[1])
