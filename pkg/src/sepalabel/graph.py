"""Directed weighted multigraph with a line-oriented text format.

Vertices are 0..n-1.  Parallel edges are kept in insertion order and are
significant for path counting; self-loops are rejected.  Weights are
non-negative integers, and a graph whose weights are all >= 1 is flagged
counting-ready (shortest-path counting requires strictly positive weights).
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import IO, Iterable

DIST_INFINITY = (1 << 63) - 1
MAX_WEIGHT = 1 << 40


class GraphFormatError(ValueError):
    """Raised on malformed graph files; carries the 1-based line number."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class EdgeRecord:
    tail: int
    head: int
    weight: int


class Graph:
    """Immutable directed multigraph on vertices 0..n-1."""

    __slots__ = ("n", "edges", "adj_out", "adj_in", "counting_ready", "max_weight")

    def __init__(self, n: int, edges: Iterable[tuple[int, int, int]]):
        if n < 0:
            raise ValueError("vertex count must be non-negative")
        edge_list: list[EdgeRecord] = []
        max_w = 0
        counting_ready = True
        for tail, head, weight in edges:
            if not (0 <= tail < n) or not (0 <= head < n):
                raise ValueError(f"edge ({tail},{head}) has endpoint outside 0..{n - 1}")
            if tail == head:
                raise ValueError(f"self-loop at vertex {tail}")
            if weight < 0 or weight > MAX_WEIGHT:
                raise ValueError(f"weight {weight} outside 0..2^40")
            if weight == 0:
                counting_ready = False
            if weight > max_w:
                max_w = weight
            edge_list.append(EdgeRecord(tail, head, weight))
        if n > 0 and n * max_w >= DIST_INFINITY:
            raise ValueError("n * max_weight must stay below the distance sentinel")
        self.n = n
        self.edges = tuple(edge_list)
        self.counting_ready = counting_ready
        self.max_weight = max_w
        out: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        inn: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for e in edge_list:
            out[e.tail].append((e.head, e.weight))
            inn[e.head].append((e.tail, e.weight))
        self.adj_out = [tuple(a) for a in out]
        self.adj_in = [tuple(a) for a in inn]

    @property
    def m(self) -> int:
        return len(self.edges)

    def out_edges(self, u: int) -> tuple[tuple[int, int], ...]:
        return self.adj_out[u]

    def in_edges(self, u: int) -> tuple[tuple[int, int], ...]:
        return self.adj_in[u]

    def reverse(self) -> "Graph":
        """Graph with every edge (u,v,w) replaced by (v,u,w)."""
        return Graph(self.n, ((e.head, e.tail, e.weight) for e in self.edges))

    def induced_subgraph(self, keep: Iterable[int]) -> tuple["Graph", tuple[int, ...]]:
        """Subgraph on `keep`, densely remapped.

        Returns (subgraph, old_ids) where old_ids[new_id] is the original
        vertex id.  Edge order follows the original edge list.
        """
        old_ids = sorted(set(keep))
        for v in old_ids:
            if not (0 <= v < self.n):
                raise ValueError(f"vertex {v} not in graph")
        to_new = {old: new for new, old in enumerate(old_ids)}
        sub_edges = [
            (to_new[e.tail], to_new[e.head], e.weight)
            for e in self.edges
            if e.tail in to_new and e.head in to_new
        ]
        return Graph(len(old_ids), sub_edges), tuple(old_ids)

    def structural_hash(self) -> int:
        """64-bit hash of (n, edge list); identical graphs hash identically."""
        h = hashlib.sha256()
        h.update(str(self.n).encode())
        for e in self.edges:
            h.update(b"\x00" + f"{e.tail},{e.head},{e.weight}".encode())
        return int.from_bytes(h.digest()[:8], "little")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


def load_graph(source: str | IO[str]) -> Graph:
    """Parse the `p dgraph` text format.

    Comment lines start with `c`.  The first non-comment line must be
    `p dgraph <n> <m>`, followed by exactly m lines `e <tail> <head> <weight>`.
    """
    if hasattr(source, "read"):
        text = source.read()  # type: ignore[union-attr]
    else:
        text = source
    n = -1
    m = -1
    edges: list[tuple[int, int, int]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "p":
            if n >= 0:
                raise GraphFormatError("duplicate problem line", line_no)
            if len(parts) != 4 or parts[1] != "dgraph":
                raise GraphFormatError("expected 'p dgraph <n> <m>'", line_no)
            try:
                n, m = int(parts[2]), int(parts[3])
            except ValueError:
                raise GraphFormatError("non-integer n or m", line_no) from None
            if n < 0 or m < 0:
                raise GraphFormatError("negative n or m", line_no)
        elif parts[0] == "e":
            if n < 0:
                raise GraphFormatError("edge before problem line", line_no)
            if len(parts) != 4:
                raise GraphFormatError("expected 'e <tail> <head> <weight>'", line_no)
            try:
                tail, head, weight = int(parts[1]), int(parts[2]), int(parts[3])
            except ValueError:
                raise GraphFormatError("non-integer edge field", line_no) from None
            if not (0 <= tail < n):
                raise GraphFormatError(f"tail {tail} out of range", line_no)
            if not (0 <= head < n):
                raise GraphFormatError(f"head {head} out of range", line_no)
            if tail == head:
                raise GraphFormatError(f"self-loop at {tail}", line_no)
            if weight < 0 or weight > MAX_WEIGHT:
                raise GraphFormatError(f"weight {weight} outside 0..2^40", line_no)
            edges.append((tail, head, weight))
        else:
            raise GraphFormatError(f"unknown record '{parts[0]}'", line_no)
    if n < 0:
        raise GraphFormatError("missing problem line")
    if len(edges) != m:
        raise GraphFormatError(f"declared {m} edges, found {len(edges)}")
    try:
        return Graph(n, edges)
    except ValueError as exc:
        raise GraphFormatError(str(exc)) from None


def save_graph(graph: Graph) -> str:
    """Serialize to the text format; load_graph(save_graph(g)) == g."""
    lines = [f"p dgraph {graph.n} {graph.m}"]
    lines.extend(f"e {e.tail} {e.head} {e.weight}" for e in graph.edges)
    return "\n".join(lines) + "\n"
