"""Command-line front end.

Subcommands: gen, decompose, build, query, verify, stats.  All outputs are
deterministic for a fixed seed; run manifests carry a timestamp but their
hash (stamped into every CSV row) is computed without it.

Exit codes: 2 usage, 3 weight/mode mismatch, 4 fault equals endpoint,
5 unknown label id, 1 verification mismatch or other failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import json
import math
import sys
import time
from dataclasses import asdict, dataclass

from . import archive as ar
from ._fault_build import build_fault_labels, default_region_size, plan_fault_build, resolve_threads
from .counting import prime_bits_for, random_prime
from .countlabel import (
    CountQueryError,
    build_count_labels,
    count_label_size_words,
    query_count as count_query_count,
    query_count_avoiding_fast,
    query_count_avoiding_naive,
    query_distance,
    query_length_preserved,
)
from .decomp import RDivision, build_decomposition
from .faultlabel import LabelQueryError, label_size_words, query_count, query_dist
from .generators import gen_gadget, gen_grid, gen_omv_grid
from .graph import DIST_INFINITY, Graph, GraphFormatError, load_graph, save_graph
from .oracle import Mask, count_sssp, sssp
from .rng import SplitMix64

EXIT_USAGE = 2
EXIT_MODE_MISMATCH = 3
EXIT_FAULT_ENDPOINT = 4
EXIT_MISSING_ID = 5


@dataclass
class RunManifest:
    command: str
    seed: int
    graph_hash: int | None
    fingerprint: int | None
    r: int | None
    mode: str | None
    prime: int | None
    timestamp: float = 0.0

    def hash(self) -> str:
        payload = asdict(self)
        payload.pop("timestamp")
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def write(self, path: str) -> None:
        payload = asdict(self)
        payload["manifest_hash"] = self.hash()
        with open(path, "w", encoding="utf-8") as fp:
            json.dump(payload, fp, indent=2, sort_keys=True)
            fp.write("\n")


def _parse_mode(text: str | None, seed: int) -> tuple[str, int | None]:
    if text is None or text == "exact":
        return "exact", None
    if text == "dist":
        return "dist", None
    if text.startswith("mod:"):
        bits = int(text.split(":", 1)[1])
        if bits < 3 or bits > 62:
            raise ValueError("mod bits must be in 3..62")
        return "mod", random_prime(bits, seed)
    if text == "mod":
        return "mod", random_prime(61, seed)
    raise ValueError(f"unknown mode {text!r}")


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _load_graph_file(path: str) -> Graph:
    with open(path, "r", encoding="utf-8") as fp:
        return load_graph(fp)


# ---------------------------------------------------------------------------
# gen


def _cmd_gen(args) -> int:
    if args.kind == "grid":
        graph = gen_grid(args.rows, args.cols, args.seed, args.maxw)
        expectations = None
    elif args.kind == "gadget":
        bits = [int(b) for b in args.bits.split(",") if b != ""]
        fx = gen_gadget(bits, args.unit)
        graph = fx.graph
        expectations = {
            "kind": "gadget",
            "source": fx.source,
            "target": fx.target,
            "expected_count": fx.expected_count,
            "expected_length": len(bits) + 1 if fx.expected_count else None,
        }
        if expectations["expected_length"] is not None:
            expectations["expected_length"] *= args.unit
    else:
        rows = args.matrix.split(";")
        matrix = [[int(c) for c in row] for row in rows]
        fx = gen_omv_grid(matrix)
        graph = fx.graph
        cells = []
        for i in range(1, fx.size + 1):
            for j in range(fx.size):
                cells.append({
                    "i": i, "j": j,
                    "source": fx.sources[j], "target": fx.targets[i],
                    "expected_length": fx.expected_distance(i, j),
                    "expected_count": fx.expected_count(i, j),
                })
        expectations = {"kind": "omv", "size": fx.size, "cells": cells}
    with open(args.out, "w", encoding="utf-8") as fp:
        fp.write(save_graph(graph))
    if expectations is not None:
        with open(args.out + ".expect.json", "w", encoding="utf-8") as fp:
            json.dump(expectations, fp, indent=2, sort_keys=True)
            fp.write("\n")
    manifest = RunManifest("gen", args.seed, graph.structural_hash(), None,
                           None, None, None, time.time())
    manifest.write(args.out + ".manifest.json")
    _say(args, f"wrote {args.out}: n={graph.n} m={graph.m}")
    return 0


# ---------------------------------------------------------------------------
# decompose


def _cmd_decompose(args) -> int:
    graph = _load_graph_file(args.graph)
    tree = build_decomposition(graph, args.leaf_threshold)
    if args.r is not None:
        rdiv = RDivision(tree, args.r)
        _say(args, f"regions: {len(rdiv.regions)} (n/r bound "
                   f"{rdiv.region_count_bound()[1]})")
    if args.dump:
        text = tree.dump()
        if args.dump == "-":
            sys.stdout.write(text)
        else:
            with open(args.dump, "w", encoding="utf-8") as fp:
                fp.write(text)
    _say(args, f"pieces: {len(tree)} fingerprint: {tree.fingerprint():016x}")
    return 0


# ---------------------------------------------------------------------------
# build


def _cmd_build(args) -> int:
    graph = _load_graph_file(args.graph)
    mode, prime = _parse_mode(args.mode, args.seed)
    threads = resolve_threads(None)
    try:
        if args.scheme == "fault":
            r = args.r if args.r is not None else default_region_size(graph.n)
            builder = plan_fault_build(graph, r=r, mode=mode, prime=prime,
                                       threads=threads)
            manifest = RunManifest("build", args.seed, graph.structural_hash(),
                                   builder.fingerprint, builder.rdiv.r, mode,
                                   prime, time.time())
            rows = []
            with open(args.out, "wb") as fp:
                def labels_with_sizes():
                    for label in builder.iter_labels():
                        words = label_size_words(label)
                        rows.append([manifest.hash(), label.owner,
                                     words["item1"], words["item2"], words["item3"],
                                     words["item4"], words["item5"], words["total"]])
                        yield label

                ar.write_fault_archive(fp, labels_with_sizes(), graph.n, mode,
                                       prime, builder.fingerprint,
                                       graph.structural_hash())
            header = ["manifest_hash", "owner", "item1", "item2", "item3",
                      "item4", "item5", "total"]
        else:
            if mode == "dist":
                raise ValueError("count scheme always stores counts; use exact or mod")
            tree = build_decomposition(graph, leaf_threshold=2)
            labels = build_count_labels(graph, tree, mode=mode, prime=prime)
            manifest = RunManifest("build", args.seed, graph.structural_hash(),
                                   tree.fingerprint(), None, mode, prime,
                                   time.time())
            rows = [[manifest.hash(), v, count_label_size_words(labels[v])]
                    for v in range(graph.n)]
            with open(args.out, "wb") as fp:
                ar.write_count_archive(fp, (labels[v] for v in range(graph.n)),
                                       graph.n, mode, prime, tree.fingerprint(),
                                       graph.structural_hash())
            header = ["manifest_hash", "owner", "total"]
    except ValueError as exc:
        if "weight" in str(exc) or "counts" in str(exc):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_MODE_MISMATCH
        raise
    sizes_path = args.sizes_csv or (args.out + ".sizes.csv")
    with open(sizes_path, "w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow(header)
        writer.writerows(rows)
    manifest.write(args.out + ".manifest.json")
    _say(args, f"wrote {args.out} ({graph.n} labels) and {sizes_path}")
    return 0


# ---------------------------------------------------------------------------
# query


# Seam for tests: the query path opens archives through this hook so a
# read auditor can wrap the file object.
_archive_opener = open


def _cmd_query(args) -> int:
    faults: list[int] = []
    if args.fault is not None:
        faults = [args.fault]
    elif args.faults:
        faults = [int(x) for x in args.faults.split(",") if x != ""]
    with _archive_opener(args.labels, "rb") as raw:
        magic = raw.read(4)
        raw.seek(0)
        try:
            if magic == ar.FAULT_MAGIC:
                reader = ar.FaultArchiveReader(raw)
                if args.what in ("dist", "count"):
                    if len(faults) != 1:
                        print("error: fault archives answer single-fault queries",
                              file=sys.stderr)
                        return EXIT_USAGE
                    lu, lv = reader.load(args.u), reader.load(args.v)
                    lf = reader.load(faults[0])
                    if args.what == "dist":
                        d = query_dist(lu, lv, lf)
                        print(f"dist={_fmt_dist(d)}")
                    else:
                        ans = query_count(lu, lv, lf)
                        print(f"dist={_fmt_dist(ans.distance)} count={int(ans.count)}")
                else:
                    print("error: preserved queries need a count archive",
                          file=sys.stderr)
                    return EXIT_USAGE
            elif magic == ar.COUNT_MAGIC:
                reader = ar.CountArchiveReader(raw)
                ls, lt = reader.load(args.u), reader.load(args.v)
                fl = [reader.load(f) for f in faults]
                if args.what == "dist":
                    if faults:
                        print("error: dist ignores faults; drop --faults",
                              file=sys.stderr)
                        return EXIT_USAGE
                    print(f"dist={_fmt_dist(query_distance(ls, lt))}")
                elif args.what == "count":
                    if faults:
                        value = query_count_avoiding_fast(ls, lt, fl)
                    else:
                        value = count_query_count(ls, lt)
                    print(f"count={int(value)}")
                else:
                    verdict = query_length_preserved(ls, lt, fl)
                    print(f"preserved={'true' if verdict else 'false'}")
            else:
                print(f"error: unrecognized archive magic {magic!r}", file=sys.stderr)
                return 1
        except (LabelQueryError, CountQueryError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FAULT_ENDPOINT
        except KeyError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_MISSING_ID
    return 0


def _fmt_dist(d: int) -> str:
    return "inf" if d >= DIST_INFINITY else str(d)


# ---------------------------------------------------------------------------
# verify


def _verify_fault(graph, reader, args, writer) -> tuple[int, int]:
    labels = {v: reader.load(v) for v in range(graph.n)}
    counting = reader.mode != "dist"
    mod = reader.prime if reader.mode == "mod" else None
    checked = bad = 0

    def run_triple(u, v, f, res) -> None:
        nonlocal checked, bad
        checked += 1
        if counting:
            ans = query_count(labels[u], labels[v], labels[f])
            ok = ans.distance == res.dist[v] and int(ans.count) == res.counts[v]
            got = (ans.distance, int(ans.count))
            want = (res.dist[v], res.counts[v])
        else:
            d = query_dist(labels[u], labels[v], labels[f])
            ok = d == res.dist[v]
            got, want = (d,), (res.dist[v],)
        if not ok:
            bad += 1
            if writer:
                writer.writerow(["fault", u, v, f, got, want])

    if args.exhaustive:
        if graph.n > 400:
            raise ValueError("exhaustive verification capped at 400 vertices")
        for f in range(graph.n):
            for u in range(graph.n):
                if u == f:
                    continue
                res = count_sssp(graph, u, Mask.removing({f}), mod=mod) \
                    if counting else sssp(graph, u, Mask.removing({f}))
                for v in range(graph.n):
                    if v != u and v != f:
                        run_triple(u, v, f, res)
    else:
        rng = SplitMix64(args.seed)
        for _ in range(args.samples):
            u = rng.choice_index(graph.n)
            v = rng.choice_index(graph.n)
            f = rng.choice_index(graph.n)
            if u == v or f in (u, v):
                continue
            res = count_sssp(graph, u, Mask.removing({f}), mod=mod) \
                if counting else sssp(graph, u, Mask.removing({f}))
            run_triple(u, v, f, res)
    return checked, bad


def _verify_count(graph, reader, args, writer) -> tuple[int, int]:
    labels = {v: reader.load(v) for v in range(graph.n)}
    mod = reader.prime if reader.mode == "mod" else None
    checked = bad = 0
    base = [count_sssp(graph, s, mod=mod) for s in range(graph.n)]
    if args.exhaustive:
        pairs = itertools.product(range(graph.n), repeat=2)
    else:
        rng = SplitMix64(args.seed)
        pairs = ((rng.choice_index(graph.n), rng.choice_index(graph.n))
                 for _ in range(args.samples))
    for s, t in pairs:
        checked += 1
        d = query_distance(labels[s], labels[t])
        c = int(count_query_count(labels[s], labels[t]))
        if d != base[s].dist[t] or c != base[s].counts[t]:
            bad += 1
            if writer:
                writer.writerow(["count-pair", s, t, "", (d, c),
                                 (base[s].dist[t], base[s].counts[t])])
    # multi-fault samples
    rng = SplitMix64(args.seed ^ 0xFA17)
    exact_dists = [sssp(graph, s).dist for s in range(graph.n)] \
        if mod else [b.dist for b in base]
    for _ in range(args.samples if not args.exhaustive else 500):
        s = rng.choice_index(graph.n)
        t = rng.choice_index(graph.n)
        if s == t:
            continue
        failed = set()
        while len(failed) < rng.choice_index(5):
            x = rng.choice_index(graph.n)
            if x not in (s, t):
                failed.add(x)
        fl = [labels[x] for x in sorted(failed)]
        naive = int(query_count_avoiding_naive(labels[s], labels[t], fl))
        fast = int(query_count_avoiding_fast(labels[s], labels[t], fl))
        from .oracle import count_exact_length_avoiding

        oracle_val = int(count_exact_length_avoiding(graph, s, t, failed,
                                                     exact_dists[s][t], mod=mod))
        checked += 1
        if not (naive == fast == oracle_val):
            bad += 1
            if writer:
                writer.writerow(["count-fault", s, t, sorted(failed),
                                 (naive, fast), oracle_val])
    return checked, bad


def _cmd_verify(args) -> int:
    graph = _load_graph_file(args.graph)
    writer = None
    csv_fp = None
    if args.mismatch_csv:
        csv_fp = open(args.mismatch_csv, "w", newline="", encoding="utf-8")
        writer = csv.writer(csv_fp)
        writer.writerow(["class", "u", "v", "faults", "got", "want"])
    try:
        with open(args.labels, "rb") as raw:
            magic = raw.read(4)
            raw.seek(0)
            if magic == ar.FAULT_MAGIC:
                reader = ar.FaultArchiveReader(raw)
                checked, bad = _verify_fault(graph, reader, args, writer)
                klass = "fault-triples"
            elif magic == ar.COUNT_MAGIC:
                reader = ar.CountArchiveReader(raw)
                checked, bad = _verify_count(graph, reader, args, writer)
                klass = "count-queries"
            else:
                print("error: unrecognized archive", file=sys.stderr)
                return 1
    finally:
        if csv_fp:
            csv_fp.close()
    status = "PASS" if bad == 0 else "FAIL"
    print(f"{status} {klass}: checked={checked} mismatches={bad}")
    return 0 if bad == 0 else 1


# ---------------------------------------------------------------------------
# stats


def _fit_slope(ns: list[int], words: list[int]) -> float | None:
    if len(ns) < 2:
        return None
    xs = [math.log(n) for n in ns]
    ys = [math.log(w) for w in words]
    mx = sum(xs) / len(xs)
    my = sum(ys) / len(ys)
    den = sum((x - mx) ** 2 for x in xs)
    if den == 0:
        return None
    return sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / den


def _cmd_stats(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s != ""]
    for n in sizes:
        side = math.isqrt(n)
        if side * side != n:
            print(f"error: {n} is not a perfect square", file=sys.stderr)
            return EXIT_USAGE
    mode_text = args.mode
    if mode_text is None:
        mode_text = "dist" if args.scheme == "fault" else "exact"
    mode, prime = _parse_mode(mode_text, args.seed)
    rows = []
    maxima = []
    manifest = RunManifest(f"stats-{args.scheme}", args.seed, None, None, None,
                           mode, prime, time.time())
    stamp = manifest.hash()
    for n in sizes:
        side = math.isqrt(n)
        graph = gen_grid(side, side, args.seed, args.maxw)
        if args.scheme == "fault":
            r = default_region_size(n)
            builder = plan_fault_build(graph, r=r, mode=mode, prime=prime)
            max_words = 0
            total_words = 0
            breakdown_max = dict.fromkeys(
                ("item1", "item2", "item3", "item4", "item5"), 0)
            for label in builder.iter_labels():
                words = label_size_words(label)
                total_words += words["total"]
                max_words = max(max_words, words["total"])
                for key in breakdown_max:
                    breakdown_max[key] = max(breakdown_max[key], words[key])
            rows.append([stamp, args.scheme, n, r, max_words,
                         round(total_words / n, 2)] +
                        [breakdown_max[k] for k in sorted(breakdown_max)])
        else:
            labels = build_count_labels(graph, mode=mode, prime=prime)
            words = [count_label_size_words(labels[v]) for v in range(n)]
            max_words = max(words)
            rows.append([stamp, args.scheme, n, "", max_words,
                         round(sum(words) / n, 2), "", "", "", "", ""])
        maxima.append(max_words)
        _say(args, f"n={n}: max_words={max_words}")
    slope = _fit_slope(sizes, maxima)
    header = ["manifest_hash", "scheme", "n", "r", "max_words", "mean_words",
              "item1_max", "item2_max", "item3_max", "item4_max", "item5_max"]
    out = args.out or f"stats_{args.scheme}.csv"
    with open(out, "w", newline="", encoding="utf-8") as fp:
        writer = csv.writer(fp)
        writer.writerow(header)
        writer.writerows(rows)
        writer.writerow([stamp, args.scheme, "slope", "",
                         "NA" if slope is None else f"{slope:.4f}",
                         "", "", "", "", "", ""])
    manifest.write(out + ".manifest.json")
    print(f"slope={'NA' if slope is None else f'{slope:.4f}'}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=0, help="RNG seed (u64)")
    shared.add_argument("--mode", default=None,
                        help="exact | mod[:bits] | dist (fault scheme only)")
    shared.add_argument("--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="sepalabel",
                                     description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", parents=[shared], help="generate graphs")
    gen_sub = p_gen.add_subparsers(dest="kind", required=True)
    g_grid = gen_sub.add_parser("grid", parents=[shared])
    g_grid.add_argument("rows", type=int)
    g_grid.add_argument("cols", type=int)
    g_grid.add_argument("--maxw", type=int, default=100)
    g_grid.add_argument("--out", required=True)
    g_gadget = gen_sub.add_parser("gadget", parents=[shared])
    g_gadget.add_argument("bits", help="comma-separated 0/1 list")
    g_gadget.add_argument("--unit", type=int, default=1)
    g_gadget.add_argument("--out", required=True)
    g_omv = gen_sub.add_parser("omv", parents=[shared])
    g_omv.add_argument("--matrix", required=True, help="rows of 0/1, ';'-joined")
    g_omv.add_argument("--out", required=True)

    p_dec = sub.add_parser("decompose", parents=[shared], help="build the tree")
    p_dec.add_argument("--graph", required=True)
    p_dec.add_argument("--leaf-threshold", type=int, default=2)
    p_dec.add_argument("--r", type=int, default=None)
    p_dec.add_argument("--dump", nargs="?", const="-", default=None)

    p_build = sub.add_parser("build", parents=[shared], help="build labels")
    p_build.add_argument("--graph", required=True)
    p_build.add_argument("--scheme", choices=("fault", "count"), required=True)
    p_build.add_argument("--r", type=int, default=None)
    p_build.add_argument("--out", required=True)
    p_build.add_argument("--sizes-csv", default=None)

    p_query = sub.add_parser("query", parents=[shared], help="query an archive")
    p_query.add_argument("--labels", required=True)
    p_query.add_argument("--u", type=int, required=True)
    p_query.add_argument("--v", type=int, required=True)
    p_query.add_argument("--fault", type=int, default=None)
    p_query.add_argument("--faults", default=None)
    p_query.add_argument("--what", choices=("dist", "count", "preserved"),
                         default="dist")

    p_verify = sub.add_parser("verify", parents=[shared],
                              help="check an archive against the oracle")
    p_verify.add_argument("--graph", required=True)
    p_verify.add_argument("--labels", required=True)
    group = p_verify.add_mutually_exclusive_group(required=True)
    group.add_argument("--exhaustive", action="store_true")
    group.add_argument("--samples", type=int, default=None)
    p_verify.add_argument("--mismatch-csv", default=None)

    p_stats = sub.add_parser("stats", parents=[shared],
                             help="label size scaling report")
    p_stats.add_argument("--scheme", choices=("fault", "count"), required=True)
    p_stats.add_argument("--sizes", required=True, help="comma-separated n's")
    p_stats.add_argument("--maxw", type=int, default=100)
    p_stats.add_argument("--out", default=None)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "decompose":
            return _cmd_decompose(args)
        if args.command == "build":
            return _cmd_build(args)
        if args.command == "query":
            return _cmd_query(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "stats":
            return _cmd_stats(args)
        parser.error("unknown command")
    except GraphFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
