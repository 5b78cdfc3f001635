"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see per-criterion
output.  Every expected value here comes from an independent oracle run
(masked counting Dijkstra / exhaustive sweeps) or a closed-form fixture
formula; tolerances are exact equality throughout.
"""
import hashlib
import io
import itertools
import subprocess
import sys
import time

import pytest

from sepalabel import cli
from sepalabel._fault_build import build_fault_labels, default_region_size, plan_fault_build
from sepalabel.archive import FaultArchiveReader, ReadAuditor
from sepalabel.counting import random_prime
from sepalabel.countlabel import (
    build_count_labels,
    count_label_size_words,
    query_count as cl_query_count,
    query_count_avoiding_fast,
    query_count_avoiding_naive,
    query_distance,
    query_length_preserved,
)
from sepalabel.faultlabel import label_size_words, query_count, query_dist
from sepalabel.generators import gen_gadget, gen_grid, gen_omv_grid, gen_random_digraph
from sepalabel.graph import DIST_INFINITY
from sepalabel.oracle import (
    Mask,
    all_pairs_reference,
    count_exact_length_avoiding,
    count_sssp,
    sssp,
)
from sepalabel.rng import SplitMix64


def _report(num: int, name: str, detail: str = "") -> None:
    suffix = f" ({detail})" if detail else ""
    print(f"\nACCEPTANCE {num} {name}: PASS{suffix}")


def _fit_slope(ns, ws):
    import math

    xs = [math.log(x) for x in ns]
    ys = [math.log(w) for w in ws]
    mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
    return sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / \
        sum((x - mx) ** 2 for x in xs)


def test_criterion_1_single_fault_distance_exactness():
    started = time.time()
    checked = 0
    for side, seed in ((4, 101), (5, 102), (6, 103)):
        g = gen_grid(side, side, seed, 100)
        labels = build_fault_labels(g, mode="dist")
        for f in range(g.n):
            for u in range(g.n):
                if u == f:
                    continue
                res = sssp(g, u, Mask.removing({f}))
                for v in range(g.n):
                    if v == u or v == f:
                        continue
                    assert query_dist(labels[u], labels[v], labels[f]) == res.dist[v], \
                        (side, u, v, f)
                    checked += 1
    elapsed = time.time() - started
    assert elapsed < 120, f"criterion 1 exceeded its runtime budget: {elapsed:.0f}s"
    _report(1, "single-fault distance exactness",
            f"{checked} triples, {elapsed:.0f}s")


def test_criterion_2_single_fault_counting_exactness():
    checked = 0
    cases = [gen_grid(4, 4, 201, 100), gen_grid(5, 5, 202, 100)]
    rng = SplitMix64(999)
    for i in range(10):
        n = 10 + rng.choice_index(21)  # 10..30
        cases.append(gen_random_digraph(n, int(2.5 * n), seed=300 + i, maxw=9))
    for g in cases:
        labels = build_fault_labels(g, mode="exact")
        for f in range(g.n):
            for u in range(g.n):
                if u == f:
                    continue
                res = count_sssp(g, u, Mask.removing({f}))
                for v in range(g.n):
                    if v == u or v == f:
                        continue
                    ans = query_count(labels[u], labels[v], labels[f])
                    assert ans.distance == res.dist[v]
                    assert int(ans.count) == res.counts[v]
                    checked += 1
    _report(2, "single-fault counting exactness", f"{checked} triples")


def test_criterion_3_distance_and_count_label_exactness():
    g = gen_grid(6, 6, 301, 50)
    labels = build_count_labels(g)
    dists, counts = all_pairs_reference(g)
    for s in range(g.n):
        for t in range(g.n):
            assert query_distance(labels[s], labels[t]) == dists[s][t]
            assert int(cl_query_count(labels[s], labels[t])) == counts[s][t]
    gadgets = 0
    for length in range(2, 9):
        for bits in itertools.product((0, 1), repeat=length - 1):
            fx = gen_gadget(bits)
            glabels = build_count_labels(fx.graph)
            got = int(cl_query_count(glabels[fx.source], glabels[fx.target]))
            formula = sum(b << (length - 1 - i) for i, b in enumerate(bits))
            assert got == formula == fx.expected_count
            gadgets += 1
    _report(3, "all-pairs label exactness + gadget counts",
            f"{g.n * g.n} pairs, {gadgets} gadgets")


def test_criterion_4_multi_fault_three_way():
    started = time.time()
    total = 0
    for side, seed in ((6, 401), (8, 402)):
        g = gen_grid(side, side, seed, 20)
        labels = build_count_labels(g)
        dists = [sssp(g, s).dist for s in range(g.n)]
        rng = SplitMix64(seed * 7)
        goal = 5000
        done = 0
        while done < goal:
            s = rng.choice_index(g.n)
            t = rng.choice_index(g.n)
            if s == t:
                continue
            size = rng.choice_index(7)  # |F| in 0..6
            failed = set()
            while len(failed) < size:
                x = rng.choice_index(g.n)
                if x not in (s, t):
                    failed.add(x)
            fl = [labels[x] for x in sorted(failed)]
            naive = int(query_count_avoiding_naive(labels[s], labels[t], fl))
            fast = int(query_count_avoiding_fast(labels[s], labels[t], fl))
            oracle = int(count_exact_length_avoiding(g, s, t, failed, dists[s][t]))
            assert naive == fast == oracle, (side, s, t, sorted(failed))
            done += 1
        total += done
    elapsed = time.time() - started
    assert total >= 10000
    assert elapsed < 300, f"criterion 4 exceeded its runtime budget: {elapsed:.0f}s"
    _report(4, "multi-fault naive = fast = oracle",
            f"{total} queries, {elapsed:.0f}s")


def test_criterion_5_matrix_grid_fixture():
    rng = SplitMix64(501)
    cells = 0
    for n_dim in range(2, 7):
        for _ in range(20):
            matrix = [[rng.choice_index(2) for _ in range(n_dim)]
                      for _ in range(n_dim)]
            fx = gen_omv_grid(matrix)
            labels = build_count_labels(fx.graph)
            for j in range(n_dim):
                res = count_sssp(fx.graph, fx.sources[j])
                for i in range(1, n_dim + 1):
                    t = fx.targets[i]
                    want_d = fx.expected_distance(i, j)
                    want_c = fx.expected_count(i, j)
                    assert res.dist[t] == want_d
                    assert res.counts[t] == want_c
                    assert query_distance(labels[fx.sources[j]], labels[t]) == want_d
                    assert int(cl_query_count(labels[fx.sources[j]], labels[t])) == want_c
                    cells += 1
    _report(5, "matrix-grid fixture formulas", f"{cells} cells")


@pytest.mark.filterwarnings("ignore:prime has")
def test_criterion_6_mod_consistency():
    g = gen_grid(6, 6, 601, 10)
    prime = random_prime(61, seed=699)
    exact = build_count_labels(g)
    modular = build_count_labels(g, mode="mod", prime=prime)
    rng = SplitMix64(611)
    done = 0
    while done < 1000:
        s = rng.choice_index(g.n)
        t = rng.choice_index(g.n)
        if s == t:
            continue
        failed = set()
        while len(failed) < rng.choice_index(7):
            x = rng.choice_index(g.n)
            if x not in (s, t):
                failed.add(x)
        fe = [exact[x] for x in sorted(failed)]
        fm = [modular[x] for x in sorted(failed)]
        ce = int(query_count_avoiding_fast(exact[s], exact[t], fe))
        cm = int(query_count_avoiding_fast(modular[s], modular[t], fm))
        assert cm == ce % prime
        assert query_length_preserved(exact[s], exact[t], fe) \
            == query_length_preserved(modular[s], modular[t], fm)
        done += 1
    _report(6, "mod-p counts and verdicts match exact", f"{done} queries")


def test_criterion_7_label_size_scaling():
    started = time.time()
    fault_sizes = (256, 1024, 4096)
    fault_max = []
    for n in fault_sizes:
        side = int(n ** 0.5)
        g = gen_grid(side, side, 701, 100)
        builder = plan_fault_build(g, r=default_region_size(n), mode="dist")
        fault_max.append(max(label_size_words(lab)["total"]
                             for lab in builder.iter_labels()))
    fault_slope = _fit_slope(fault_sizes, fault_max)
    assert 0.4 <= fault_slope <= 0.85, (fault_slope, fault_max)

    count_sizes = (64, 256, 1024)
    count_max = []
    for n in count_sizes:
        side = int(n ** 0.5)
        g = gen_grid(side, side, 702, 100)
        labels = build_count_labels(g)
        count_max.append(max(count_label_size_words(labels[v]) for v in range(n)))
    count_slope = _fit_slope(count_sizes, count_max)
    assert 0.35 <= count_slope <= 0.8, (count_slope, count_max)
    elapsed = time.time() - started
    assert elapsed < 600, f"criterion 7 exceeded its runtime budget: {elapsed:.0f}s"
    _report(7, "label-size scaling",
            f"fault slope {fault_slope:.3f}, count slope {count_slope:.3f}, "
            f"{elapsed:.0f}s")


def test_criterion_8_label_only_query_contract(tmp_path, monkeypatch, capsys):
    graph_file = tmp_path / "g.dg"
    archive = tmp_path / "g.ftl"
    assert cli.main(["gen", "grid", "5", "5", "--seed", "801",
                     "--out", str(graph_file), "--quiet"]) == 0
    assert cli.main(["build", "--graph", str(graph_file), "--scheme", "fault",
                     "--out", str(archive), "--seed", "801", "--quiet"]) == 0

    audits = []

    def opener(path, mode="rb"):
        auditor = ReadAuditor(open(path, mode))
        audits.append(auditor)
        return _Closing(auditor)

    class _Closing:
        def __init__(self, auditor):
            self.auditor = auditor

        def __enter__(self):
            return self.auditor

        def __exit__(self, *exc):
            self.auditor._fp.close()
            return False

    monkeypatch.setattr(cli, "_archive_opener", opener)
    with open(archive, "rb") as fp:
        spans_reader = FaultArchiveReader(fp)
        index_end = spans_reader.header_end
        label_spans = [spans_reader.label_span(v) for v in range(25)]

    rng = SplitMix64(808)
    ran = 0
    while ran < 100:
        u, v, f = (rng.choice_index(25) for _ in range(3))
        if u == v or f in (u, v):
            continue
        audits.clear()
        assert cli.main(["query", "--labels", str(archive), "--u", str(u),
                         "--v", str(v), "--fault", str(f),
                         "--what", "count", "--quiet"]) == 0
        capsys.readouterr()
        allowed = [(0, index_end)] + [label_spans[x] for x in (u, v, f)]
        for auditor in audits:
            for off, length in auditor.spans:
                assert any(off >= a and off + length <= a + l
                           for a, l in allowed), \
                    f"query ({u},{v},{f}) read bytes ({off},{length}) " \
                    f"outside its own labels"
        ran += 1
    _report(8, "queries touch only the requested labels", f"{ran} queries")


def test_criterion_9_pipeline_determinism(tmp_path):
    def pipeline(tag):
        d = tmp_path / tag
        d.mkdir()
        cmds = [
            ["gen", "grid", "5", "5", "--seed", "901", "--out", str(d / "g.dg"),
             "--quiet"],
            ["build", "--graph", str(d / "g.dg"), "--scheme", "fault",
             "--out", str(d / "g.ftl"), "--seed", "901", "--quiet"],
            ["build", "--graph", str(d / "g.dg"), "--scheme", "count",
             "--mode", "mod:61", "--out", str(d / "g.cnt"), "--seed", "901",
             "--quiet"],
            ["stats", "--scheme", "count", "--sizes", "64,256", "--seed", "901",
             "--out", str(d / "s.csv"), "--quiet"],
        ]
        for cmd in cmds:
            subprocess.run([sys.executable, "-m", "sepalabel.cli"] + cmd,
                           check=True, capture_output=True)
        return {
            name: hashlib.sha256((d / name).read_bytes()).hexdigest()
            for name in ("g.dg", "g.ftl", "g.ftl.sizes.csv", "g.cnt",
                         "g.cnt.sizes.csv", "s.csv")
        }

    first = pipeline("run_a")
    second = pipeline("run_b")
    assert first == second
    _report(9, "pipeline determinism", "6 artifacts byte-identical")
