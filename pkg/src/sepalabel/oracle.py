"""Brute-force shortest-path reference: masked Dijkstra with counting.

Masks distinguish fully removed vertices from internally-forbidden ones
(usable only as a path's first or last vertex).  The internal-forbidden
constraint is realized by vertex splitting: each forbidden vertex v becomes
an in-copy (incoming edges only, usable as a target) and an out-copy
(outgoing edges only, usable as a source), so no path can pass through v.

Counting relies on strictly positive weights: when a vertex is popped from
the heap its count is final, and a shortest walk is automatically simple.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Iterable, Sequence

from .graph import DIST_INFINITY, Graph

EMPTY_FROZEN: frozenset[int] = frozenset()


@dataclass(frozen=True)
class Mask:
    """Vertices excluded from paths.

    removed: never usable.  internal_forbidden: usable only as the first or
    last vertex of a path.
    """

    removed: frozenset[int] = EMPTY_FROZEN
    internal_forbidden: frozenset[int] = EMPTY_FROZEN

    @staticmethod
    def none() -> "Mask":
        return _EMPTY_MASK

    @staticmethod
    def removing(vertices: Iterable[int]) -> "Mask":
        return Mask(removed=frozenset(vertices))

    @staticmethod
    def internally_avoiding(vertices: Iterable[int]) -> "Mask":
        return Mask(internal_forbidden=frozenset(vertices))


_EMPTY_MASK = Mask()


@dataclass
class SsspResult:
    source: int
    dist: list[int]
    counts: list[int] | None
    mask: Mask
    mod: int | None = None

    def distance(self, v: int) -> int:
        return self.dist[v]

    def count(self, v: int) -> int:
        if self.counts is None:
            raise ValueError("counting was not enabled for this run")
        return self.counts[v]


class MaskedView:
    """Adjacency of the split graph for (graph, mask); reusable across sources.

    Node ids: original v for ordinary vertices, n+v for in-copies and 2n+v
    for out-copies of internally-forbidden vertices.  Removed vertices keep
    no adjacency at all.
    """

    __slots__ = ("graph", "mask", "n", "size", "adj", "present")

    def __init__(self, graph: Graph, mask: Mask):
        n = graph.n
        removed = mask.removed
        forbidden = mask.internal_forbidden - removed
        self.graph = graph
        self.mask = mask
        self.n = n
        if not removed and not forbidden:
            # nothing masked: reuse the graph adjacency untouched
            self.size = n
            self.adj = graph.adj_out
            self.present = [True] * n
            return
        self.size = 3 * n
        adj: list[list[tuple[int, int]]] = [[] for _ in range(3 * n)]
        for e in graph.edges:
            t, h, w = e.tail, e.head, e.weight
            if t in removed or h in removed:
                continue
            src = 2 * n + t if t in forbidden else t
            dst = n + h if h in forbidden else h
            adj[src].append((dst, w))
        self.adj = adj
        self.present = [v not in removed for v in range(n)]

    def source_node(self, s: int) -> int:
        if not self.present[s]:
            raise ValueError(f"source {s} is removed by the mask")
        if s in self.mask.internal_forbidden:
            return 2 * self.n + s
        return s

    def result_nodes(self) -> list[int]:
        """Split-graph node whose distance is the answer for each original v."""
        n = self.n
        forbidden = self.mask.internal_forbidden - self.mask.removed
        return [n + v if v in forbidden else v for v in range(n)]


def _dijkstra(adj: Sequence[Sequence[tuple[int, int]]], size: int, src: int,
              stop_nodes: set[int] | None = None,
              skip: int = -1) -> list[int]:
    """Plain Dijkstra over an explicit adjacency.  Distances use the
    DIST_INFINITY sentinel.  If stop_nodes is given, stops once all of them
    are settled.  `skip` marks one node as deleted without copying the
    adjacency."""
    dist = [DIST_INFINITY] * size
    dist[src] = 0
    pq: list[tuple[int, int]] = [(0, src)]
    remaining = len(stop_nodes) if stop_nodes else -1
    if stop_nodes and src in stop_nodes:
        remaining -= 1
        if remaining == 0:
            return dist
    while pq:
        d, u = heappop(pq)
        if d > dist[u]:
            continue
        if stop_nodes and u != src and u in stop_nodes:
            remaining -= 1
            if remaining == 0:
                break
        for v, w in adj[u]:
            if v == skip:
                continue
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heappush(pq, (nd, v))
    return dist


def _dijkstra_counting(adj: Sequence[Sequence[tuple[int, int]]], size: int, src: int,
                       mod: int | None = None,
                       stop_nodes: set[int] | None = None,
                       skip: int = -1) -> tuple[list[int], list[int]]:
    dist = [DIST_INFINITY] * size
    cnt = [0] * size
    dist[src] = 0
    cnt[src] = 1
    settled = [False] * size
    pq: list[tuple[int, int]] = [(0, src)]
    remaining = len(stop_nodes) if stop_nodes else -1
    while pq:
        d, u = heappop(pq)
        if settled[u] or d > dist[u]:
            continue
        settled[u] = True
        if stop_nodes and u in stop_nodes:
            remaining -= 1
            if remaining == 0:
                break
        cu = cnt[u]
        for v, w in adj[u]:
            if v == skip:
                continue
            nd = d + w
            dv = dist[v]
            if nd < dv:
                dist[v] = nd
                cnt[v] = cu
                heappush(pq, (nd, v))
            elif nd == dv:
                cv = cnt[v] + cu
                cnt[v] = cv % mod if mod else cv
    if mod:
        cnt = [c % mod for c in cnt]
    return dist, cnt


def sssp(graph: Graph, source: int, mask: Mask = _EMPTY_MASK) -> SsspResult:
    """Shortest distances from `source` under `mask` (no counting)."""
    view = MaskedView(graph, mask)
    raw = _dijkstra(view.adj, view.size, view.source_node(source))
    nodes = view.result_nodes()
    dist = [raw[nodes[v]] if view.present[v] else DIST_INFINITY for v in range(graph.n)]
    dist[source] = 0
    return SsspResult(source, dist, None, mask)


def count_sssp(graph: Graph, source: int, mask: Mask = _EMPTY_MASK,
               mod: int | None = None) -> SsspResult:
    """Shortest distances and path counts from `source` under `mask`."""
    if not graph.counting_ready:
        raise ValueError("counting requires strictly positive edge weights")
    view = MaskedView(graph, mask)
    raw_d, raw_c = _dijkstra_counting(view.adj, view.size, view.source_node(source), mod)
    nodes = view.result_nodes()
    dist = [DIST_INFINITY] * graph.n
    cnt = [0] * graph.n
    for v in range(graph.n):
        if view.present[v]:
            dist[v] = raw_d[nodes[v]]
            cnt[v] = raw_c[nodes[v]]
    dist[source] = 0
    cnt[source] = 1
    return SsspResult(source, dist, cnt, mask, mod)


def count_exact_length_avoiding(graph: Graph, s: int, t: int,
                                failed: Iterable[int], target_length: int,
                                mod: int | None = None) -> "CountValue":
    """Number of s-to-t paths of length exactly `target_length` that avoid
    `failed`.  The caller supplies target_length = d(s,t) in the intact
    graph, so only paths that are shortest in the surviving graph qualify."""
    from .counting import CountValue

    failed_set = frozenset(failed)
    if s in failed_set or t in failed_set:
        raise ValueError("endpoints may not be failed")
    if target_length >= DIST_INFINITY:
        return CountValue(0, mod)
    res = count_sssp(graph, s, Mask.removing(failed_set), mod)
    if res.dist[t] != target_length:
        return CountValue(0, mod)
    return CountValue(res.counts[t], mod)


def all_pairs_reference(graph: Graph, mod: int | None = None,
                        cap: int = 400) -> tuple[list[list[int]], list[list[int]]]:
    """Distance and count matrices via n counting-Dijkstra runs."""
    if graph.n > cap:
        raise ValueError(f"graph exceeds the all-pairs cap ({graph.n} > {cap})")
    dists: list[list[int]] = []
    counts: list[list[int]] = []
    for s in range(graph.n):
        res = count_sssp(graph, s, mod=mod)
        dists.append(res.dist)
        counts.append(res.counts)  # type: ignore[arg-type]
    return dists, counts


def all_pairs_distances(graph: Graph, cap: int = 400) -> list[list[int]]:
    """Distance matrix only; works on graphs with zero-weight edges."""
    if graph.n > cap:
        raise ValueError(f"graph exceeds the all-pairs cap ({graph.n} > {cap})")
    return [sssp(graph, s).dist for s in range(graph.n)]
