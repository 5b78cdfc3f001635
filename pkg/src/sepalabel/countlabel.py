"""Square-root-size labels for distances and shortest-path counts, with
multi-fault counting queries.

The label of v holds, for every piece P on the root-to-home chain of v
(home = the piece whose separator contains v) and every u in Sep(P):

    d1/p1  length and multiplicity of shortest v-to-u paths inside
           V(P)\bd(P) whose internal vertices avoid Sep(P);
    d2/p2  length and multiplicity of shortest u-to-v paths inside
           V(P)\bd(P).

Every shortest s-to-t path decomposes uniquely at the rootmost chain piece
whose separator it meets and at the first separator vertex u on it, which
gives the distance identity

    d(s,t) = min over u of d1(s,u) + d2(u,t)

and the count as the matching sum of p1(s,u) * p2(u,t).

Multi-fault queries return the number of s-to-t paths of length exactly
d(s,t) (the distance in the intact graph) avoiding all failed vertices,
via inclusion-exclusion over the failed vertices ordered by distance from
s: R[j], the number of shortest s-to-v_j paths avoiding earlier failures,
subtracts, for each earlier failure v_i on a shortest path, R[i] times the
v_i-to-v_j count.  The faster variant folds the double sum through
per-separator-vertex accumulators F(u) keyed by D(s,u), the best
label-derivable bound on d(s,u).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

from .counting import CountValue, prime_bits_for
from .decomp import DecompositionTree
from .graph import DIST_INFINITY, Graph
from .oracle import Mask, MaskedView, _dijkstra_counting

EXACT_MODE = "exact"
MOD_MODE = "mod"

Entry = tuple[int, tuple[int, ...], tuple[int, ...], tuple[int, ...],
              tuple[int, ...], tuple[int, ...]]


@dataclass
class CountLabel:
    owner: int
    mode: str
    prime: int | None
    fingerprint: int
    n: int
    entries: tuple[Entry, ...]          # (piece, sep, d1, p1, d2, p2), root first
    a_index: dict[int, tuple[int, int, int, int]] = field(
        default=None, repr=False, compare=False)  # type: ignore[assignment]

    def __post_init__(self):
        if self.a_index is None:
            index: dict[int, tuple[int, int, int, int]] = {}
            for _pid, sep, d1, p1, d2, p2 in self.entries:
                for i, u in enumerate(sep):
                    if u not in index:  # rootmost entry wins
                        index[u] = (d1[i], p1[i], d2[i], p2[i])
            self.a_index = index


class CountQueryError(ValueError):
    pass


def _check(*labels: CountLabel) -> None:
    first = labels[0]
    for lab in labels[1:]:
        if lab.fingerprint != first.fingerprint:
            raise CountQueryError("labels come from different builds")
        if lab.mode != first.mode or lab.prime != first.prime:
            raise CountQueryError("labels built with different counting modes")


def build_count_labels(graph: Graph, tree: DecompositionTree | None = None,
                       mode: str = EXACT_MODE,
                       prime: int | None = None) -> dict[int, CountLabel]:
    """One label per vertex, entries computed per piece by batched runs."""
    if mode not in (EXACT_MODE, MOD_MODE):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == MOD_MODE and (prime is None or prime < 2):
        raise ValueError("mod mode needs a prime")
    if mode != MOD_MODE:
        prime = None
    if not graph.counting_ready:
        raise ValueError("counting labels require strictly positive weights")
    if tree is None:
        from .decomp import build_decomposition

        tree = build_decomposition(graph, leaf_threshold=2)
    mod = prime
    fingerprint = tree.fingerprint()

    piece_rows: dict[int, tuple[dict[int, int], dict[int, tuple]]] = {}
    for piece in tree.pieces:
        sep = piece.separator
        if not sep:
            continue
        bnd = set(piece.boundary)
        inner = [v for v in piece.vertices if v not in bnd]
        sub, old = graph.induced_subgraph(inner)
        to_sub = {v: i for i, v in enumerate(old)}
        sep_sub = [to_sub[u] for u in sep]
        avoid_rev = MaskedView(sub.reverse(), Mask.internally_avoiding(sep_sub))
        plain_fwd = MaskedView(sub, Mask.none())
        rows: dict[int, tuple] = {}
        for u in sep:
            su = to_sub[u]
            src = avoid_rev.source_node(su)
            raw_d1, raw_p1 = _dijkstra_counting(avoid_rev.adj, avoid_rev.size, src, mod)
            nodes = avoid_rev.result_nodes()
            d1 = [raw_d1[nodes[v]] for v in range(sub.n)]
            p1 = [raw_p1[nodes[v]] for v in range(sub.n)]
            d1[su], p1[su] = 0, 1
            # A path from a separator vertex meets Sep(P) first at its own
            # start, so prefixes from other separator vertices are unusable:
            # store them unreachable, matching a subgraph that keeps only u.
            for w in sep_sub:
                if w != su:
                    d1[w], p1[w] = DIST_INFINITY, 0
            d2, p2 = _dijkstra_counting(plain_fwd.adj, sub.n, su, mod)
            rows[u] = (d1, p1, d2, p2)
        piece_rows[piece.pid] = (to_sub, rows)

    labels: dict[int, CountLabel] = {}
    for v in range(graph.n):
        entries: list[Entry] = []
        for pid in tree.ancestors(tree.home_piece[v]):
            sep = tree.pieces[pid].separator
            if not sep:
                continue
            to_sub, rows = piece_rows[pid]
            sv = to_sub[v]
            d1l, p1l, d2l, p2l = [], [], [], []
            for u in sep:
                d1, p1, d2, p2 = rows[u]
                d1l.append(d1[sv])
                p1l.append(p1[sv])
                d2l.append(d2[sv])
                p2l.append(p2[sv])
            entries.append((pid, tuple(sep), tuple(d1l), tuple(p1l),
                            tuple(d2l), tuple(p2l)))
        labels[v] = CountLabel(owner=v, mode=mode, prime=prime,
                               fingerprint=fingerprint, n=graph.n,
                               entries=tuple(entries))
    return labels


# ---------------------------------------------------------------------------
# queries


def query_distance(ls: CountLabel, lt: CountLabel) -> int:
    """d(s,t): minimize d1(s,u) + d2(u,t) over shared separator vertices."""
    _check(ls, lt)
    best = DIST_INFINITY
    t_index = lt.a_index
    for u, (d1, _p1, _d2, _p2) in ls.a_index.items():
        if d1 >= DIST_INFINITY:
            continue
        other = t_index.get(u)
        if other is None or other[2] >= DIST_INFINITY:
            continue
        cand = d1 + other[2]
        if cand < best:
            best = cand
    return best


def query_count(ls: CountLabel, lt: CountLabel) -> CountValue:
    """Number of shortest s-to-t paths in the intact graph."""
    _check(ls, lt)
    mod = ls.prime if ls.mode == MOD_MODE else None
    d = query_distance(ls, lt)
    if d >= DIST_INFINITY:
        return CountValue(0, mod)
    total = 0
    t_index = lt.a_index
    for u, (d1, p1, _d2, _p2) in ls.a_index.items():
        other = t_index.get(u)
        if other is None:
            continue
        if d1 + other[2] == d:
            total += p1 * other[3]
            if mod:
                total %= mod
    return CountValue(total % mod if mod else total, mod)


def _pair(ls: CountLabel, lt: CountLabel, mod: int | None) -> tuple[int, int]:
    """(distance, count) between two labels."""
    d = query_distance(ls, lt)
    if d >= DIST_INFINITY:
        return d, 0
    total = 0
    t_index = lt.a_index
    for u, (d1, p1, _d2, _p2) in ls.a_index.items():
        other = t_index.get(u)
        if other is not None and d1 + other[2] == d:
            total += p1 * other[3]
            if mod:
                total %= mod
    return d, total


@dataclass
class FaultContext:
    """Per-query state for multi-fault counting."""

    faults: list[CountLabel]
    d_from_s: list[int]                 # d(s, v_j) for j = 0..k+1
    r_values: list[int]


def _prepare_faults(ls: CountLabel, lt: CountLabel,
                    fault_labels: tuple[CountLabel, ...] | list[CountLabel],
                    mod: int | None) -> tuple[FaultContext, int]:
    seen = set()
    faults = []
    for lf in fault_labels:
        if lf.owner in (ls.owner, lt.owner):
            raise CountQueryError("fault equals endpoint")
        if lf.owner not in seen:
            seen.add(lf.owner)
            faults.append(lf)
    if faults:
        _check(ls, lt, *faults)
    else:
        _check(ls, lt)
    d_st = query_distance(ls, lt)
    kept = []
    for lf in faults:
        d_sf = query_distance(ls, lf)
        if d_sf < DIST_INFINITY and d_sf < d_st:
            kept.append((d_sf, lf.owner, lf))
    kept.sort(key=lambda x: (x[0], x[1]))
    ctx = FaultContext(faults=[lf for _, _, lf in kept],
                       d_from_s=[0] + [d for d, _, _ in kept] + [d_st],
                       r_values=[1])
    return ctx, d_st


def query_count_avoiding_naive(ls: CountLabel, lt: CountLabel,
                               fault_labels: list[CountLabel]) -> CountValue:
    """Paths of length exactly d(s,t) avoiding all failed vertices, by the
    pairwise inclusion-exclusion recurrence."""
    mod = ls.prime if ls.mode == MOD_MODE else None
    ctx, d_st = _prepare_faults(ls, lt, fault_labels, mod)
    if d_st >= DIST_INFINITY:
        return CountValue(0, mod)
    seq = [ls] + ctx.faults + [lt]
    k = len(ctx.faults)
    for j in range(1, k + 2):
        _, base = _pair(ls, seq[j], mod)
        acc = base
        for i in range(1, j):
            d_ij, p_ij = _pair(seq[i], seq[j], mod)
            if d_ij < DIST_INFINITY and ctx.d_from_s[i] + d_ij == ctx.d_from_s[j]:
                acc -= ctx.r_values[i] * p_ij
                if mod:
                    acc %= mod
        ctx.r_values.append(acc % mod if mod else acc)
    result = ctx.r_values[k + 1]
    return CountValue(result % mod if mod else result, mod)


def query_count_avoiding_fast(ls: CountLabel, lt: CountLabel,
                              fault_labels: list[CountLabel]) -> CountValue:
    """Same value as the naive recurrence, one label scan per failure.

    D(s,u) = min over failures v_i of d(s,v_i) + d1(v_i,u) bounds d(s,u)
    from above; the bound is tight exactly when some shortest s-to-u path
    passes a failure, which the outer distance test certifies, so the
    accumulators F(u) only ever contribute to genuinely shortest paths.
    """
    mod = ls.prime if ls.mode == MOD_MODE else None
    ctx, d_st = _prepare_faults(ls, lt, fault_labels, mod)
    if d_st >= DIST_INFINITY:
        return CountValue(0, mod)
    faults = ctx.faults
    k = len(faults)
    d_upper: dict[int, int] = {}
    for i, lf in enumerate(faults, start=1):
        d_si = ctx.d_from_s[i]
        for u, (d1, _p1, _d2, _p2) in lf.a_index.items():
            if d1 >= DIST_INFINITY:
                continue
            cand = d_si + d1
            if cand < d_upper.get(u, DIST_INFINITY):
                d_upper[u] = cand
    acc_f: dict[int, int] = {}
    seq = [ls] + faults + [lt]
    for j in range(1, k + 2):
        lj = seq[j]
        d_sj = ctx.d_from_s[j]
        _, base = _pair(ls, lj, mod)
        sub = 0
        for u, (_d1, _p1, d2, p2) in lj.a_index.items():
            if d2 >= DIST_INFINITY:
                continue
            bound = d_upper.get(u)
            if bound is not None and bound + d2 == d_sj:
                f_u = acc_f.get(u)
                if f_u:
                    sub += p2 * f_u
                    if mod:
                        sub %= mod
        r_j = base - sub
        if mod:
            r_j %= mod
        ctx.r_values.append(r_j)
        if j <= k:
            for u, (d1, p1, _d2, _p2) in lj.a_index.items():
                if d1 >= DIST_INFINITY:
                    continue
                if d_sj + d1 == d_upper.get(u):
                    inc = r_j * p1
                    acc_f[u] = (acc_f.get(u, 0) + inc) % mod if mod \
                        else acc_f.get(u, 0) + inc
    result = ctx.r_values[k + 1]
    return CountValue(result % mod if mod else result, mod)


def query_length_preserved(ls: CountLabel, lt: CountLabel,
                           fault_labels: list[CountLabel]) -> bool:
    """True iff the failures leave some s-to-t path of the original length.

    In mod mode this is one-sided Monte Carlo: a zero residue may falsely
    report an increase with probability inversely polynomial in n when the
    prime carries ceil(4 k log2 n) bits.
    """
    if ls.mode == MOD_MODE:
        needed = prime_bits_for(len(fault_labels), ls.n)
        if ls.prime is not None and ls.prime.bit_length() < needed:
            warnings.warn(
                f"prime has {ls.prime.bit_length()} bits; "
                f"{needed} recommended for {len(fault_labels)} faults",
                stacklevel=2)
    return not query_count_avoiding_fast(ls, lt, fault_labels).is_zero


def count_label_size_words(label: CountLabel) -> int:
    """One word per stored id, distance or count."""
    total = 2  # owner + graph size
    for _pid, sep, _d1, _p1, _d2, _p2 in label.entries:
        total += 1 + 5 * len(sep)
    return total
