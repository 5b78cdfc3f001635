"""Deterministic graph generators: grids, counting gadgets, matrix grids.

All randomness comes from SplitMix64 so generated fixtures are
bit-identical for a given seed.  Undirected constructions are realized as
pairs of antiparallel directed edges of equal weight; the fixture queries
are source-to-sink monotone, so directed path counts match the undirected
ones.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .graph import DIST_INFINITY, Graph
from .rng import SplitMix64


def gen_grid(rows: int, cols: int, weight_seed: int, maxw: int) -> Graph:
    """Directed grid with both directions on every grid edge.

    Vertex (r, c) has id r*cols + c.  Each direction of each grid edge
    draws its own weight uniformly from 1..maxw.  Draw order: row-major
    over vertices; per vertex the rightward pair then the downward pair,
    forward direction first.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    if maxw < 1:
        raise ValueError("maxw must be >= 1")
    n = rows * cols
    if n * maxw >= DIST_INFINITY:
        raise ValueError("n * maxw overflows the distance sentinel")
    rng = SplitMix64(weight_seed)
    edges: list[tuple[int, int, int]] = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1, rng.randint(1, maxw)))
                edges.append((v + 1, v, rng.randint(1, maxw)))
            if r + 1 < rows:
                edges.append((v, v + cols, rng.randint(1, maxw)))
                edges.append((v + cols, v, rng.randint(1, maxw)))
    return Graph(n, edges)


@dataclass(frozen=True)
class GadgetFixture:
    graph: Graph
    source: int
    target: int
    expected_count: int


def gen_gadget(bits: Sequence[int], unit: int = 1) -> GadgetFixture:
    """Two-path counting gadget encoding `bits` in its shortest-path count.

    A chain u_0..u_{L-1}, a chain v_1..v_L with every edge duplicated, and
    a cross edge u_i -> v_{i+1} wherever bits[i] = 1; all edges point
    forward with weight `unit`.  The number of shortest u_0-to-v_L paths is
    sum(bits[i] * 2^(L-1-i)).
    """
    length = len(bits) + 1
    if length < 2:
        raise ValueError("need at least one bit")
    if unit < 1:
        raise ValueError("unit weight must be >= 1")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("bits must be 0 or 1")
    # ids: u_i -> i for 0..L-1, v_j -> L + (j-1) for 1..L
    def u(i: int) -> int:
        return i

    def v(j: int) -> int:
        return length + j - 1

    edges: list[tuple[int, int, int]] = []
    for i in range(length - 1):
        edges.append((u(i), u(i + 1), unit))
    for j in range(1, length):
        edges.append((v(j), v(j + 1), unit))
        edges.append((v(j), v(j + 1), unit))
    for i, bit in enumerate(bits):
        if bit:
            edges.append((u(i), v(i + 1), unit))
    expected = sum(b << (length - 1 - i) for i, b in enumerate(bits))
    return GadgetFixture(Graph(2 * length, edges), u(0), v(length), expected)


@dataclass(frozen=True)
class OmvGridFixture:
    graph: Graph
    size: int
    matrix: tuple[tuple[int, ...], ...]
    sources: tuple[int, ...]   # s_j = vertex (0, j)
    targets: tuple[int, ...]   # t_i = vertex (i, N)

    def expected_distance(self, i: int, j: int) -> int:
        """Shortest s_j-to-t_i length, for i in 1..N and j in 0..N-1."""
        return self.size * (self.size - j) + i * (j + 1)

    def expected_count(self, i: int, j: int) -> int:
        """Shortest s_j-to-t_i multiplicity: 1 plus the matrix bit (i, j+1)."""
        return 1 + self.matrix[i - 1][j]

    def vertex(self, i: int, j: int) -> int:
        return i * (self.size + 1) + j


def gen_omv_grid(matrix: Sequence[Sequence[int]]) -> OmvGridFixture:
    """(N+1)x(N+1) grid encoding a boolean matrix in shortest-path counts.

    Horizontal edges (weight N) everywhere except the first row; vertical
    edges in column j (weight j+1) everywhere except the last column; a
    diagonal ((i-1,j-1),(i,j)) of weight N+j wherever matrix[i-1][j-1] = 1
    (matrix indices are 1-based in the construction).  All edges are
    undirected, realized as antiparallel pairs.  The shortest s_j-to-t_i
    path has length N(N-j) + i(j+1) and multiplicity 1 + M[i][j+1].
    """
    n_dim = len(matrix)
    if n_dim < 1:
        raise ValueError("matrix must be at least 1x1")
    for row in matrix:
        if len(row) != n_dim:
            raise ValueError("matrix must be square")
        if any(x not in (0, 1) for x in row):
            raise ValueError("matrix entries must be 0 or 1")
    side = n_dim + 1

    def vid(i: int, j: int) -> int:
        return i * side + j

    edges: list[tuple[int, int, int]] = []

    def undirected(a: int, b: int, w: int) -> None:
        edges.append((a, b, w))
        edges.append((b, a, w))

    for i in range(side):
        for j in range(n_dim):
            if i >= 1:
                undirected(vid(i, j), vid(i, j + 1), n_dim)
    for i in range(n_dim):
        for j in range(side):
            if j <= n_dim - 1:
                undirected(vid(i, j), vid(i + 1, j), j + 1)
    for i in range(1, n_dim + 1):
        for j in range(1, n_dim + 1):
            if matrix[i - 1][j - 1]:
                undirected(vid(i - 1, j - 1), vid(i, j), n_dim + j)
    graph = Graph(side * side, edges)
    sources = tuple(vid(0, j) for j in range(side))
    targets = tuple(vid(i, n_dim) for i in range(side))
    frozen = tuple(tuple(row) for row in matrix)
    return OmvGridFixture(graph, n_dim, frozen, sources, targets)


def gen_random_digraph(n: int, m: int, seed: int, maxw: int = 10) -> Graph:
    """Random sparse digraph (no self-loops, parallels allowed); test fodder."""
    if n < 2:
        raise ValueError("need at least 2 vertices")
    rng = SplitMix64(seed)
    edges = []
    for _ in range(m):
        t = rng.choice_index(n)
        h = rng.choice_index(n - 1)
        if h >= t:
            h += 1
        edges.append((t, h, rng.randint(1, maxw)))
    return Graph(n, edges)
