"""Balanced recursive decomposition and r-divisions.

Each piece carries three vertex sets: its vertices V(P), its boundary
(vertices lying on separators of strict ancestors) and its separator,
always chosen from interior (= non-boundary) vertices.  A piece's two
children are the two sides of the separator split, each together with the
separator and the boundary vertices incident to that side; boundary
vertices incident to neither side go to both children so that the children
always cover the parent.

Separators are BFS levels: within the interior we pick, among all levels
whose removal leaves both sides at most ceil(2/3 * |interior|), the
smallest one.  This keeps separators small on grid-like inputs without
requiring any planarity machinery, and the balance bound holds
unconditionally (the median level is always feasible).
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Sequence

from .graph import Graph


@dataclass(frozen=True)
class Piece:
    pid: int
    parent: int | None
    depth: int
    vertices: tuple[int, ...]
    boundary: tuple[int, ...]
    separator: tuple[int, ...]
    children: tuple[int, ...] = ()

    @property
    def interior_size(self) -> int:
        return len(self.vertices) - len(self.boundary)

    def interior(self) -> tuple[int, ...]:
        b = set(self.boundary)
        return tuple(v for v in self.vertices if v not in b)


def _undirected_adj(graph: Graph) -> list[tuple[int, ...]]:
    nbrs: list[set[int]] = [set() for _ in range(graph.n)]
    for e in graph.edges:
        nbrs[e.tail].add(e.head)
        nbrs[e.head].add(e.tail)
    return [tuple(sorted(s)) for s in nbrs]


def _components(adj: Sequence[Sequence[int]], vertices: Sequence[int]) -> list[list[int]]:
    inside = set(vertices)
    seen: set[int] = set()
    comps: list[list[int]] = []
    for start in vertices:
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v in inside and v not in seen:
                    seen.add(v)
                    comp.append(v)
                    stack.append(v)
        comps.append(sorted(comp))
    return comps


def _bfs_levels(adj: Sequence[Sequence[int]], comp: Sequence[int]) -> list[list[int]]:
    inside = set(comp)
    root = comp[0]
    level = {root: 0}
    frontier = [root]
    levels = [[root]]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v in inside and v not in level:
                    level[v] = level[u] + 1
                    nxt.append(v)
        if nxt:
            levels.append(sorted(nxt))
        frontier = nxt
    return levels


def _ceil_two_thirds(k: int) -> int:
    return -((-2 * k) // 3)


def _split_component(adj: Sequence[Sequence[int]], comp: Sequence[int],
                     bound: int) -> tuple[list[int], list[int], list[int]]:
    """Split one connected component by its best feasible BFS level."""
    levels = _bfs_levels(adj, comp)
    sizes = [len(lv) for lv in levels]
    total = len(comp)
    prefix = 0
    best: tuple[int, int] | None = None  # (level size, index)
    prefixes = []
    for i, sz in enumerate(sizes):
        prefixes.append(prefix)
        if prefix <= bound and total - prefix - sz <= bound:
            if best is None or sz < best[0]:
                best = (sz, i)
        prefix += sz
    assert best is not None, "median BFS level is always feasible"
    idx = best[1]
    below = [v for lv in levels[:idx] for v in lv]
    above = [v for lv in levels[idx + 1:] for v in lv]
    return sorted(levels[idx]), sorted(below), sorted(above)


def _split_interior(adj: Sequence[Sequence[int]], interior: Sequence[int]
                    ) -> tuple[list[int], list[int], list[int]]:
    """Return (separator, side_a, side_b) with both sides within the
    2/3 balance bound and no interior edge between the sides."""
    total = len(interior)
    bound = _ceil_two_thirds(total)
    comps = _components(adj, interior)
    comps.sort(key=lambda c: (-len(c), c[0]))
    if len(comps) == 1:
        return _split_component(adj, comps[0], bound)
    if len(comps[0]) > bound:
        sep, side_a, side_b = _split_component(adj, comps[0], bound)
        rest = comps[1:]
    else:
        sep, side_a, side_b = [], [], []
        rest = comps
    sa, sb = list(side_a), list(side_b)
    for comp in rest:
        if len(sa) <= len(sb):
            sa.extend(comp)
        else:
            sb.extend(comp)
    return sep, sorted(sa), sorted(sb)


def find_separator(piece_graph: Graph, balance: tuple[int, int] = (2, 3)) -> set[int]:
    """Balanced separator of a piece-interior graph (vertices 0..n-1)."""
    if balance != (2, 3):
        raise ValueError("only 2/3 balance is supported")
    if piece_graph.n < 2:
        raise ValueError("need at least 2 interior vertices")
    adj = _undirected_adj(piece_graph)
    sep, _, _ = _split_interior(adj, list(range(piece_graph.n)))
    return set(sep)


class DecompositionTree:
    """Binary decomposition tree; piece 0 is the root (all of G)."""

    def __init__(self, graph: Graph, pieces: list[Piece], home_piece: list[int],
                 leaf_threshold: int):
        self.graph = graph
        self.pieces = pieces
        self.home_piece = home_piece
        self.leaf_threshold = leaf_threshold
        self.root = 0

    def __len__(self) -> int:
        return len(self.pieces)

    def is_leaf(self, pid: int) -> bool:
        return not self.pieces[pid].children

    def ancestors(self, pid: int) -> list[int]:
        """Pieces from the root down to pid, inclusive."""
        chain = []
        cur: int | None = pid
        while cur is not None:
            chain.append(cur)
            cur = self.pieces[cur].parent
        chain.reverse()
        return chain

    def lca(self, a: int, b: int) -> int:
        pa, pb = self.pieces[a], self.pieces[b]
        while pa.depth > pb.depth:
            pa = self.pieces[pa.parent]  # type: ignore[index]
        while pb.depth > pa.depth:
            pb = self.pieces[pb.parent]  # type: ignore[index]
        while pa.pid != pb.pid:
            pa = self.pieces[pa.parent]  # type: ignore[index]
            pb = self.pieces[pb.parent]  # type: ignore[index]
        return pa.pid

    def is_ancestor(self, anc: int, desc: int) -> bool:
        return self.lca(anc, desc) == anc

    def lowest_common_with_either(self, r_f: int, r_u: int, r_v: int) -> tuple[int, str]:
        """Deepest piece that is an ancestor-or-self of r_f and of r_u or r_v.

        Returns (piece, side) where side is 'u' when the piece is an
        ancestor of r_u (preferred on ties), else 'v'.
        """
        xu = self.lca(r_f, r_u)
        xv = self.lca(r_f, r_v)
        if self.pieces[xu].depth >= self.pieces[xv].depth:
            return xu, "u"
        return xv, "v"

    def sep_ancestry(self, v: int) -> list[tuple[int, tuple[int, ...]]]:
        """(piece, separator) pairs from the root down to v's home piece."""
        return [(pid, self.pieces[pid].separator) for pid in self.ancestors(self.home_piece[v])]

    def piece_subgraph(self, pid: int) -> tuple[Graph, tuple[int, ...]]:
        return self.graph.induced_subgraph(self.pieces[pid].vertices)

    def edge_child(self, pid: int, tail: int, head: int) -> int | None:
        """Child piece an edge of pid belongs to (lower id when both qualify)."""
        for cid in sorted(self.pieces[pid].children):
            vs = set(self.pieces[cid].vertices)
            if tail in vs and head in vs:
                return cid
        return None

    def dump(self) -> str:
        lines = []
        for p in self.pieces:
            parent = p.parent if p.parent is not None else -1
            sep = " ".join(map(str, p.separator))
            bnd = " ".join(map(str, p.boundary))
            lines.append(f"piece {p.pid} {parent} {p.depth} | sep: {sep} | bnd: {bnd}")
        return "\n".join(lines) + "\n"

    def fingerprint(self) -> int:
        h = hashlib.sha256()
        h.update(self.dump().encode())
        h.update(str(self.graph.structural_hash()).encode())
        return int.from_bytes(h.digest()[:8], "little")


def build_decomposition(graph: Graph, leaf_threshold: int = 2) -> DecompositionTree:
    """Recursively split the graph until interiors have at most
    leaf_threshold vertices; a leaf's separator is its whole interior."""
    if leaf_threshold < 1:
        raise ValueError("leaf_threshold must be >= 1")
    if graph.n == 0:
        raise ValueError("cannot decompose the empty graph")
    adj = _undirected_adj(graph)
    pieces: list[Piece] = []
    home = [-1] * graph.n
    # queue of (vertices, boundary, parent, depth); ids assigned in BFS order
    queue: list[tuple[tuple[int, ...], tuple[int, ...], int | None, int]] = [
        (tuple(range(graph.n)), (), None, 0)
    ]
    children_of: dict[int, list[int]] = {}
    while queue:
        nxt: list[tuple[tuple[int, ...], tuple[int, ...], int | None, int]] = []
        for vertices, boundary, parent, depth in queue:
            pid = len(pieces)
            if parent is not None:
                children_of.setdefault(parent, []).append(pid)
            bset = set(boundary)
            interior = [v for v in vertices if v not in bset]
            if len(interior) <= leaf_threshold:
                sep = tuple(interior)
                pieces.append(Piece(pid, parent, depth, vertices, boundary, sep))
                for v in interior:
                    home[v] = pid
                continue
            sep_l, side_a, side_b = _split_interior(adj, interior)
            sep = tuple(sep_l)
            pieces.append(Piece(pid, parent, depth, vertices, boundary, sep))
            for v in sep:
                home[v] = pid
            side_a_set, side_b_set = set(side_a), set(side_b)
            bnd_a, bnd_b = [], []
            for b in boundary:
                inc_a = any(w in side_a_set for w in adj[b])
                inc_b = any(w in side_b_set for w in adj[b])
                if inc_a or not (inc_a or inc_b):
                    bnd_a.append(b)
                if inc_b or not (inc_a or inc_b):
                    bnd_b.append(b)
            va = tuple(sorted(side_a + list(sep) + bnd_a))
            vb = tuple(sorted(side_b + list(sep) + bnd_b))
            ba = tuple(sorted(set(bnd_a) | set(sep)))
            bb = tuple(sorted(set(bnd_b) | set(sep)))
            nxt.append((va, ba, pid, depth + 1))
            nxt.append((vb, bb, pid, depth + 1))
        queue = nxt
    pieces = [
        Piece(p.pid, p.parent, p.depth, p.vertices, p.boundary, p.separator,
              tuple(children_of.get(p.pid, ())))
        for p in pieces
    ]
    return DecompositionTree(graph, pieces, home, leaf_threshold)


class RDivision:
    """Truncation of the tree at pieces of size <= r (or at its leaves)."""

    def __init__(self, tree: DecompositionTree, r: int):
        if r < tree.leaf_threshold:
            raise ValueError("r must be at least the leaf threshold")
        self.tree = tree
        self.r = r
        regions: list[int] = []
        kept: list[int] = []
        stack = [tree.root]
        while stack:
            pid = stack.pop()
            kept.append(pid)
            piece = tree.pieces[pid]
            if len(piece.vertices) <= r or not piece.children:
                regions.append(pid)
            else:
                stack.extend(reversed(piece.children))
        self.regions = tuple(sorted(regions))
        self.truncated = tuple(sorted(kept))
        region_of = [-1] * tree.graph.n
        for rid in self.regions:
            for v in tree.pieces[rid].vertices:
                if region_of[v] == -1:
                    region_of[v] = rid
        self.region_of = region_of
        self._region_set = frozenset(self.regions)

    def is_region(self, pid: int) -> bool:
        return pid in self._region_set

    def region_count_bound(self) -> tuple[int, int]:
        """(actual region count, ceil(n/r)); reported, not enforced."""
        n = self.tree.graph.n
        return len(self.regions), -((-n) // self.r)
