"""Construction of single-fault labels.

All label entries are shortest-path values in masked subgraphs.  They are
computed batched: one (reverse-)Dijkstra per (mask, hub vertex) yields the
entry for every owner at once, and per-owner labels are materialized by
slicing the batched rows.  Owner-specific work (the region boundary matrix
in G minus the owner) is the only per-owner sweep; it uses early-stopping
Dijkstras with the owner skipped in the relax loop.

Counts are stored in int64 arrays with a spill dict for values that do not
fit; distances always fit (the loader bounds n * max_weight below 2^63).
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .decomp import DecompositionTree, RDivision, build_decomposition
from .faultlabel import (
    DIST_MODE,
    EXACT_MODE,
    MOD_MODE,
    FaultLabel,
    Item2,
    Item3,
    Item4,
    Item5,
    TreeTopo,
)
from .graph import DIST_INFINITY, Graph
from .oracle import Mask, MaskedView, _dijkstra, _dijkstra_counting

_SAT = DIST_INFINITY  # also the int64 maximum


def default_region_size(n: int) -> int:
    """ceil(n^(2/3)), the default r-division granularity."""
    r = max(1, round(n ** (2.0 / 3.0)))
    while r ** 3 < n * n:
        r += 1
    while r > 1 and (r - 1) ** 3 >= n * n:
        r -= 1
    return r


def resolve_threads(threads: int | None) -> int:
    if threads is not None:
        return max(1, threads)
    env = os.environ.get("SEPALABEL_THREADS")
    if env:
        return max(1, int(env))
    return min(2, os.cpu_count() or 1)


@dataclass
class _Row:
    """One batched result row: value per vertex of some vertex universe."""

    dist: np.ndarray
    cnt: np.ndarray | None
    big: dict[int, int] | None

    def value_at(self, v: int) -> int:
        return int(self.dist[v])

    def count_at(self, v: int) -> int:
        c = int(self.cnt[v])
        if c == _SAT and self.big is not None:
            return self.big.get(v, c)
        return c


def _pack(dist: Sequence[int], counts: Sequence[int] | None) -> _Row:
    d_arr = np.fromiter(dist, dtype=np.int64, count=len(dist))
    if counts is None:
        return _Row(d_arr, None, None)
    try:
        c_arr = np.fromiter(counts, dtype=np.int64, count=len(counts))
        return _Row(d_arr, c_arr, None)
    except OverflowError:
        big: dict[int, int] = {}
        c_arr = np.empty(len(counts), dtype=np.int64)
        for i, c in enumerate(counts):
            if c >= _SAT:
                big[i] = c
                c_arr[i] = _SAT
            else:
                c_arr[i] = c
        return _Row(d_arr, c_arr, big)


def _run_view(view: MaskedView, source: int, counting: bool, mod: int | None) -> _Row:
    """Masked run from an original-id source, folded back to original ids."""
    src = view.source_node(source)
    if counting:
        raw_d, raw_c = _dijkstra_counting(view.adj, view.size, src, mod)
    else:
        raw_d = _dijkstra(view.adj, view.size, src)
        raw_c = None
    if view.size == view.n:
        dist = raw_d
        cnt = raw_c
    else:
        nodes = view.result_nodes()
        dist = [DIST_INFINITY] * view.n
        cnt = [0] * view.n if counting else None
        for v in range(view.n):
            if view.present[v]:
                node = nodes[v]
                dist[v] = raw_d[node]
                if counting:
                    cnt[v] = raw_c[node]
    dist[source] = 0
    if counting:
        cnt[source] = 1
    return _pack(dist, cnt)


def _run_adj(adj, size: int, source: int, counting: bool, mod: int | None) -> _Row:
    if counting:
        raw_d, raw_c = _dijkstra_counting(adj, size, source, mod)
        return _pack(raw_d, raw_c)
    return _pack(_dijkstra(adj, size, source), None)


def _removed_adj(graph: Graph, removed: set[int]) -> list[list[tuple[int, int]]]:
    adj: list[list[tuple[int, int]]] = [[] for _ in range(graph.n)]
    for e in graph.edges:
        if e.tail not in removed and e.head not in removed:
            adj[e.tail].append((e.head, e.weight))
    return adj


def _with_vertex(base: list[list[tuple[int, int]]], graph: Graph, keep: int,
                 removed: set[int]) -> list[list[tuple[int, int]]]:
    """Copy of `base` (built with `removed` deleted) with `keep` re-added."""
    adj = list(base)
    adj[keep] = [(h, w) for (h, w) in graph.adj_out[keep] if h not in removed or h == keep]
    touched: dict[int, list[tuple[int, int]]] = {}
    for t, w in graph.adj_in[keep]:
        if t in removed and t != keep:
            continue
        lst = touched.get(t)
        if lst is None:
            lst = list(adj[t])
            touched[t] = lst
        lst.append((keep, w))
    for t, lst in touched.items():
        adj[t] = lst
    return adj


# Module-level handle for fork-based workers.
_WORK: "_FaultBuilder | None" = None


def _worker_item2(rid: int):
    return _WORK._item2_region(rid)  # type: ignore[union-attr]


def _worker_item4(pid: int):
    return _WORK._item4_piece(pid)  # type: ignore[union-attr]


def _worker_item3(owners: tuple[int, ...]) -> list[tuple]:
    return [_WORK._item3_matrix(v) for v in owners]  # type: ignore[union-attr]


def _parallel_map(fn, tasks, threads: int):
    if threads <= 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    import multiprocessing as mp
    from concurrent.futures import ProcessPoolExecutor

    ctx = mp.get_context("fork")
    chunk = max(1, len(tasks) // (threads * 8))
    with ProcessPoolExecutor(threads, mp_context=ctx) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


class _FaultBuilder:
    def __init__(self, graph: Graph, tree: DecompositionTree, rdiv: RDivision,
                 mode: str, prime: int | None, threads: int):
        if mode not in (DIST_MODE, EXACT_MODE, MOD_MODE):
            raise ValueError(f"unknown mode {mode!r}")
        if mode == MOD_MODE and (prime is None or prime < 2):
            raise ValueError("mod mode needs a prime")
        if mode != MOD_MODE:
            prime = None
        if mode != DIST_MODE and not graph.counting_ready:
            raise ValueError("counting labels require strictly positive weights")
        self.graph = graph
        self.reverse_graph = graph.reverse()
        self.tree = tree
        self.rdiv = rdiv
        self.mode = mode
        self.prime = prime
        self.counting = mode != DIST_MODE
        self.mod = prime if mode == MOD_MODE else None
        self.threads = threads
        self.fingerprint = tree.fingerprint() ^ (rdiv.r * 0x9E3779B97F4A7C15 % (1 << 64))

        old_ids = sorted(rdiv.truncated)
        self.to_new = {old: new for new, old in enumerate(old_ids)}
        parent, depth, is_region = [], [], []
        for old in old_ids:
            piece = tree.pieces[old]
            parent.append(self.to_new[piece.parent] if piece.parent is not None else -1)
            depth.append(piece.depth)
            is_region.append(rdiv.is_region(old))
        self.topo = TreeTopo(parent, depth, is_region)
        self.region_of = [self.to_new[r] for r in rdiv.region_of]
        self.n_pieces = len(old_ids)
        self.piece_vertices = [tree.pieces[old].vertices for old in old_ids]
        self.piece_boundary = [tree.pieces[old].boundary for old in old_ids]
        self.piece_sep = [tree.pieces[old].separator for old in old_ids]
        self.regions = sorted(self.to_new[r] for r in rdiv.regions)

        self.interior_pieces: list[set[int]] = [set() for _ in range(graph.n)]
        for pid in range(self.n_pieces):
            bnd = set(self.piece_boundary[pid])
            for v in self.piece_vertices[pid]:
                if v not in bnd:
                    self.interior_pieces[v].add(pid)

        # item4 hub lists: boundary of P outside the sibling Q
        self.plists: dict[int, tuple[int, ...]] = {}
        for pid in range(self.n_pieces):
            sib = self.topo.sibling(pid)
            if sib is None:
                continue
            sib_set = set(self.piece_vertices[sib])
            self.plists[pid] = tuple(v for v in self.piece_boundary[pid]
                                     if v not in sib_set)

        self._item2_data: dict[int, dict[int, tuple[_Row, _Row]]] = {}
        self._item4_data: dict[int, dict[int, tuple[_Row, _Row, _Row, _Row]]] = {}
        # inside-piece rows, indexed by piece-local vertex ids
        self._item4_inside: dict[int, tuple[dict[int, int], dict[int, tuple[_Row, _Row]]]] = {}
        self._item5_data: dict[int, tuple[dict[int, int], dict[int, tuple[_Row, _Row, _Row, _Row]]]] = {}
        self._region_graphs: dict[int, tuple[Graph, tuple[int, ...]]] = {}

    # ------------------------------------------------------------------
    # batched sweeps

    def _region_graph(self, rid: int) -> tuple[Graph, tuple[int, ...]]:
        cached = self._region_graphs.get(rid)
        if cached is None:
            cached = self.graph.induced_subgraph(self.piece_vertices[rid])
            self._region_graphs[rid] = cached
        return cached

    def _item2_region(self, rid: int):
        mask = Mask.internally_avoiding(self.piece_vertices[rid])
        view_fwd = MaskedView(self.graph, mask)
        view_rev = MaskedView(self.reverse_graph, mask)
        rows = []
        for b in self.piece_boundary[rid]:
            to_row = _run_view(view_rev, b, self.counting, self.mod)
            from_row = _run_view(view_fwd, b, self.counting, self.mod)
            rows.append((b, to_row, from_row))
        return rid, rows

    def _build_item2(self) -> None:
        for rid, rows in _parallel_map(_worker_item2, self.regions, self.threads):
            self._item2_data[rid] = {b: (to_row, from_row) for b, to_row, from_row in rows}

    def _item4_piece(self, pid: int):
        graph, rgraph = self.graph, self.reverse_graph
        sib = self.topo.sibling(pid)
        both = set(self.piece_vertices[pid]) | set(self.piece_vertices[sib])
        q_only = set(self.piece_vertices[sib])
        base_fwd = _removed_adj(graph, both)
        base_rev = _removed_adj(rgraph, both)
        adj_q_fwd = _removed_adj(graph, q_only)
        adj_q_rev = _removed_adj(rgraph, q_only)
        n = graph.n
        outside_rows = []
        for p in self.plists[pid]:
            adj_fwd = _with_vertex(base_fwd, graph, p, both)
            adj_rev = _with_vertex(base_rev, rgraph, p, both)
            row_a = _run_adj(adj_rev, n, p, self.counting, self.mod)
            row_a2 = _run_adj(adj_fwd, n, p, self.counting, self.mod)
            row_b = _run_adj(adj_q_fwd, n, p, self.counting, self.mod)
            row_b2 = _run_adj(adj_q_rev, n, p, self.counting, self.mod)
            outside_rows.append((p, row_a, row_b, row_a2, row_b2))
        # inside-piece rows for owners in the piece interior
        inside_rows = []
        to_sub: dict[int, int] = {}
        if self.plists[pid]:
            sub, old = self.graph.induced_subgraph(self.piece_vertices[pid])
            to_sub = {v: i for i, v in enumerate(old)}
            bnd_sub = [to_sub[v] for v in self.piece_boundary[pid]]
            mask = Mask.internally_avoiding(bnd_sub)
            view_f = MaskedView(sub, mask)
            view_r = MaskedView(sub.reverse(), mask)
            for p in self.plists[pid]:
                row_c = _run_view(view_r, to_sub[p], self.counting, self.mod)
                row_c2 = _run_view(view_f, to_sub[p], self.counting, self.mod)
                inside_rows.append((p, row_c, row_c2))
        return pid, outside_rows, to_sub, inside_rows

    def _build_item4(self) -> None:
        pids = sorted(pid for pid, plist in self.plists.items() if plist)
        for pid, outside, to_sub, inside in _parallel_map(_worker_item4, pids, self.threads):
            self._item4_data[pid] = {
                p: (ra, rb, ra2, rb2) for p, ra, rb, ra2, rb2 in outside
            }
            self._item4_inside[pid] = (to_sub, {p: (rc, rc2) for p, rc, rc2 in inside})

    def _build_item5(self) -> None:
        for pid in range(self.n_pieces):
            if self.topo.is_region[pid]:
                continue
            sep = self.piece_sep[pid]
            if not sep:
                continue
            bnd = set(self.piece_boundary[pid])
            inner = [v for v in self.piece_vertices[pid] if v not in bnd]
            sub, old = self.graph.induced_subgraph(inner)
            to_sub = {v: i for i, v in enumerate(old)}
            sep_sub = [to_sub[v] for v in sep]
            plain_f = MaskedView(sub, Mask.none())
            plain_r = MaskedView(sub.reverse(), Mask.none())
            avoid = Mask.internally_avoiding(sep_sub)
            avoid_f = MaskedView(sub, avoid)
            avoid_r = MaskedView(sub.reverse(), avoid)
            rows: dict[int, tuple[_Row, _Row, _Row, _Row]] = {}
            for p in sep:
                sp = to_sub[p]
                rows[p] = (
                    _run_view(avoid_r, sp, self.counting, self.mod),
                    _run_view(plain_f, sp, self.counting, self.mod),
                    _run_view(plain_r, sp, self.counting, self.mod),
                    _run_view(avoid_f, sp, self.counting, self.mod),
                )
            self._item5_data[pid] = (to_sub, rows)

    def _item3_matrix(self, owner: int):
        rid = self.region_of[owner]
        bnd = self.piece_boundary[rid]
        k = len(bnd)
        stop = set(bnd) - {owner}
        d_mat = [DIST_INFINITY] * (k * k)
        c_mat = [0] * (k * k) if self.counting else None
        adj = self.graph.adj_out
        n = self.graph.n
        for i, b in enumerate(bnd):
            if b == owner:
                continue
            if self.counting:
                dist, cnt = _dijkstra_counting(adj, n, b, self.mod,
                                               stop_nodes=stop, skip=owner)
            else:
                dist = _dijkstra(adj, n, b, stop_nodes=stop, skip=owner)
                cnt = None
            base = i * k
            for j, b2 in enumerate(bnd):
                if b2 == owner:
                    continue
                d_mat[base + j] = dist[b2]
                if c_mat is not None:
                    c_mat[base + j] = cnt[b2]
        return owner, d_mat, c_mat

    # ------------------------------------------------------------------

    def prepare(self) -> None:
        global _WORK
        _WORK = self
        try:
            self._build_item2()
            self._build_item4()
            self._build_item5()
        finally:
            _WORK = None

    @staticmethod
    def _tup(values: list[int] | None):
        return tuple(values) if values is not None else None

    def materialize(self, owner: int, item3_row=None) -> FaultLabel:
        counting = self.counting
        rid = self.region_of[owner]

        item2: dict[int, Item2] = {}
        for region in self.regions:
            per_b = self._item2_data[region]
            bnd = self.piece_boundary[region]
            d_to, d_from = [], []
            c_to = [] if counting else None
            c_from = [] if counting else None
            for b in bnd:
                to_row, from_row = per_b[b]
                d_to.append(to_row.value_at(owner))
                d_from.append(from_row.value_at(owner))
                if counting:
                    c_to.append(to_row.count_at(owner))
                    c_from.append(from_row.count_at(owner))
            item2[region] = Item2(tuple(bnd), tuple(d_to), tuple(d_from),
                                  self._tup(c_to), self._tup(c_from))

        if item3_row is None:
            _, d_mat, c_mat = self._item3_matrix(owner)
        else:
            _, d_mat, c_mat = item3_row
        sub, old = self._region_graph(rid)
        edges = tuple((old[e.tail], old[e.head], e.weight) for e in sub.edges)
        item3 = Item3(tuple(old), edges, tuple(self.piece_boundary[rid]),
                      tuple(d_mat), tuple(c_mat) if c_mat is not None else None)

        item4: dict[int, Item4] = {}
        for pid in sorted(self._item4_data):
            plist = self.plists[pid]
            per_p = self._item4_data[pid]
            d_a, d_b, d_a2, d_b2 = [], [], [], []
            c_a = [] if counting else None
            c_b = [] if counting else None
            c_a2 = [] if counting else None
            c_b2 = [] if counting else None
            for p in plist:
                row_a, row_b, row_a2, row_b2 = per_p[p]
                d_a.append(row_a.value_at(owner))
                d_b.append(row_b.value_at(owner))
                d_a2.append(row_a2.value_at(owner))
                d_b2.append(row_b2.value_at(owner))
                if counting:
                    c_a.append(row_a.count_at(owner))
                    c_b.append(row_b.count_at(owner))
                    c_a2.append(row_a2.count_at(owner))
                    c_b2.append(row_b2.count_at(owner))
            d_c = d_c2 = c_c = c_c2 = None
            if pid in self.interior_pieces[owner]:
                to_sub, inside = self._item4_inside[pid]
                sv = to_sub[owner]
                d_c, d_c2 = [], []
                c_c = [] if counting else None
                c_c2 = [] if counting else None
                for p in plist:
                    row_c, row_c2 = inside[p]
                    d_c.append(row_c.value_at(sv))
                    d_c2.append(row_c2.value_at(sv))
                    if counting:
                        c_c.append(row_c.count_at(sv))
                        c_c2.append(row_c2.count_at(sv))
                d_c, d_c2 = tuple(d_c), tuple(d_c2)
            item4[pid] = Item4(plist, tuple(d_a), tuple(d_b), tuple(d_a2), tuple(d_b2),
                               self._tup(c_a), self._tup(c_b),
                               self._tup(c_a2), self._tup(c_b2),
                               d_c, d_c2, self._tup(c_c), self._tup(c_c2))

        item5: dict[int, Item5] = {}
        for pid in sorted(self.interior_pieces[owner]):
            data = self._item5_data.get(pid)
            if data is None:
                continue
            to_sub, rows = data
            sv = to_sub.get(owner)
            if sv is None:
                continue
            sep = self.piece_sep[pid]
            d_out, d_in, d_out2, d_in2 = [], [], [], []
            c_out = [] if counting else None
            c_in = [] if counting else None
            c_out2 = [] if counting else None
            c_in2 = [] if counting else None
            for p in sep:
                r_out, r_in, r_out2, r_in2 = rows[p]
                d_out.append(r_out.value_at(sv))
                d_in.append(r_in.value_at(sv))
                d_out2.append(r_out2.value_at(sv))
                d_in2.append(r_in2.value_at(sv))
                if counting:
                    c_out.append(r_out.count_at(sv))
                    c_in.append(r_in.count_at(sv))
                    c_out2.append(r_out2.count_at(sv))
                    c_in2.append(r_in2.count_at(sv))
            item5[pid] = Item5(tuple(sep), tuple(d_out), tuple(d_in),
                               tuple(d_out2), tuple(d_in2),
                               self._tup(c_out), self._tup(c_in),
                               self._tup(c_out2), self._tup(c_in2))

        return FaultLabel(owner=owner, region=rid, mode=self.mode, prime=self.prime,
                          fingerprint=self.fingerprint, topo=self.topo,
                          interior_pieces=frozenset(self.interior_pieces[owner]),
                          item2=item2, item3=item3, item4=item4, item5=item5)

    def iter_labels(self, owners: Sequence[int] | None = None) -> Iterator[FaultLabel]:
        owners = list(range(self.graph.n)) if owners is None else list(owners)
        global _WORK
        _WORK = self
        try:
            chunk_size = 64
            chunks = [tuple(owners[i:i + chunk_size])
                      for i in range(0, len(owners), chunk_size)]
            for chunk, rows in zip(chunks,
                                   _parallel_map(_worker_item3, chunks, self.threads)):
                for owner, row in zip(chunk, rows):
                    yield self.materialize(owner, item3_row=row)
        finally:
            _WORK = None


def plan_fault_build(graph: Graph, tree: DecompositionTree | None = None,
                     rdiv: RDivision | None = None, *, r: int | None = None,
                     mode: str = EXACT_MODE, prime: int | None = None,
                     threads: int | None = None) -> _FaultBuilder:
    if tree is None:
        tree = build_decomposition(graph, leaf_threshold=2)
    if rdiv is None:
        wanted = r if r is not None else default_region_size(graph.n)
        rdiv = RDivision(tree, max(wanted, tree.leaf_threshold))
    builder = _FaultBuilder(graph, tree, rdiv, mode, prime, resolve_threads(threads))
    builder.prepare()
    return builder


def build_fault_labels(graph: Graph, tree: DecompositionTree | None = None,
                       rdiv: RDivision | None = None, *, r: int | None = None,
                       mode: str = EXACT_MODE, prime: int | None = None,
                       threads: int | None = None) -> dict[int, FaultLabel]:
    """All labels as a dict; fine for small and mid-size graphs.

    For large graphs prefer plan_fault_build(...).iter_labels() and stream.
    """
    builder = plan_fault_build(graph, tree, rdiv, r=r, mode=mode, prime=prime,
                               threads=threads)
    return {label.owner: label for label in builder.iter_labels()}
