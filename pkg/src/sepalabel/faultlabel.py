"""Single-fault distance/counting labels and their label-only queries.

Each vertex label stores five item groups over the decomposition tree
truncated at an r-division:

  item1  tree topology (no vertex lists) plus the owner's region id and
         the set of pieces whose interior contains the owner;
  item2  per region R: owner<->boundary(R) distances/counts among paths
         internally disjoint from V(R);
  item3  the owner's region subgraph and the boundary-to-boundary matrix
         of distances/counts in G minus the owner;
  item4  per non-root piece P with sibling Q, per p in bd(P) \ V(Q):
         owner->p with V(P)+V(Q) removed (p kept), p->owner with V(Q)
         removed, the two mirrored directions, and - when the owner lies
         in P's interior - owner<->p among paths inside P internally
         disjoint from bd(P);
  item5  per ancestor piece P whose interior contains the owner, per
         p in Sep(P): owner->p inside P\bd(P) internally disjoint from
         Sep(P), p->owner inside P\bd(P), and the mirrored pair.

A query (u, v, f) combines three candidate routes, each of which counts
every qualifying path exactly once:

  boundary route   paths touching bd(R_f): prefix to the first boundary
                   vertex, a stored middle hop in G minus f, suffix from
                   the last boundary vertex;
  detour route     paths avoiding some ancestor piece of R_f below X while
                   visiting its sibling P: split at the first (or, on the
                   mirrored side, last) vertex of bd(P) on the path;
  separator route  paths confined to a common ancestor piece P below X,
                   split at the first separator vertex; plus a run inside
                   the shared region when R_u = R_v.

X is the lowest piece that is an ancestor of R_f and of R_u or R_v.
Queries use only the three labels: no graph or tree access.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .counting import CountValue
from .graph import DIST_INFINITY, Graph
from .oracle import Mask, count_sssp, sssp

DIST_MODE = "dist"
EXACT_MODE = "exact"
MOD_MODE = "mod"


class TreeTopo:
    """Topology of the truncated decomposition tree (piece ids only)."""

    __slots__ = ("parent", "depth", "is_region", "children")

    def __init__(self, parent: Sequence[int], depth: Sequence[int],
                 is_region: Sequence[bool]):
        self.parent = tuple(parent)
        self.depth = tuple(depth)
        self.is_region = tuple(is_region)
        kids: list[list[int]] = [[] for _ in parent]
        for pid, par in enumerate(parent):
            if par >= 0:
                kids[par].append(pid)
        self.children = tuple(tuple(k) for k in kids)

    def __len__(self) -> int:
        return len(self.parent)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TreeTopo):
            return NotImplemented
        return self.parent == other.parent and self.is_region == other.is_region

    def sibling(self, pid: int) -> int | None:
        par = self.parent[pid]
        if par < 0:
            return None
        a, b = self.children[par]
        return b if pid == a else a

    def lca(self, a: int, b: int) -> int:
        da, db = self.depth[a], self.depth[b]
        while da > db:
            a = self.parent[a]
            da -= 1
        while db > da:
            b = self.parent[b]
            db -= 1
        while a != b:
            a = self.parent[a]
            b = self.parent[b]
        return a

    def is_ancestor(self, anc: int, desc: int) -> bool:
        return self.lca(anc, desc) == anc

    def lowest_common_with_either(self, r_f: int, r_u: int, r_v: int) -> tuple[int, str]:
        xu = self.lca(r_f, r_u)
        xv = self.lca(r_f, r_v)
        if self.depth[xu] >= self.depth[xv]:
            return xu, "u"
        return xv, "v"

    def chain_down(self, top: int, bottom: int) -> list[int]:
        """Pieces strictly below `top` on the path down to `bottom`,
        inclusive of `bottom`; empty when top == bottom."""
        chain = []
        cur = bottom
        while cur != top:
            chain.append(cur)
            cur = self.parent[cur]
            if cur < 0:
                raise ValueError("top is not an ancestor of bottom")
        chain.reverse()
        return chain


@dataclass(frozen=True)
class Item2:
    bnd: tuple[int, ...]
    d_to: tuple[int, ...]
    d_from: tuple[int, ...]
    c_to: tuple[int, ...] | None
    c_from: tuple[int, ...] | None


@dataclass(frozen=True)
class Item3:
    vertices: tuple[int, ...]
    edges: tuple[tuple[int, int, int], ...]
    bnd: tuple[int, ...]
    d_mat: tuple[int, ...]            # row-major |bnd| x |bnd|
    c_mat: tuple[int, ...] | None


@dataclass(frozen=True)
class Item4:
    plist: tuple[int, ...]
    d_a: tuple[int, ...]              # owner->p, V(P)+V(Q) removed, p kept
    d_b: tuple[int, ...]              # p->owner, V(Q) removed
    d_a2: tuple[int, ...]             # p->owner, V(P)+V(Q) removed, p kept
    d_b2: tuple[int, ...]             # owner->p, V(Q) removed
    c_a: tuple[int, ...] | None
    c_b: tuple[int, ...] | None
    c_a2: tuple[int, ...] | None
    c_b2: tuple[int, ...] | None
    d_c: tuple[int, ...] | None       # owner->p inside P, internal bd(P) avoided
    d_c2: tuple[int, ...] | None      # p->owner inside P, internal bd(P) avoided
    c_c: tuple[int, ...] | None
    c_c2: tuple[int, ...] | None


@dataclass(frozen=True)
class Item5:
    sep: tuple[int, ...]
    d_out: tuple[int, ...]            # owner->p in P\bd(P), internal Sep(P) avoided
    d_in: tuple[int, ...]             # p->owner in P\bd(P)
    d_out2: tuple[int, ...]           # owner->p in P\bd(P)
    d_in2: tuple[int, ...]            # p->owner in P\bd(P), internal Sep(P) avoided
    c_out: tuple[int, ...] | None
    c_in: tuple[int, ...] | None
    c_out2: tuple[int, ...] | None
    c_in2: tuple[int, ...] | None


@dataclass
class FaultLabel:
    owner: int
    region: int
    mode: str
    prime: int | None
    fingerprint: int
    topo: TreeTopo
    interior_pieces: frozenset[int]
    item2: dict[int, Item2]
    item3: Item3
    item4: dict[int, Item4]
    item5: dict[int, Item5]
    _region_graph_cache: tuple[Graph, dict[int, int], tuple[int, ...]] | None = field(
        default=None, repr=False, compare=False)

    @property
    def counting(self) -> bool:
        return self.mode != DIST_MODE

    def region_graph(self) -> tuple[Graph, dict[int, int], tuple[int, ...]]:
        """(graph, old->new map, new->old ids) for the stored region subgraph."""
        if self._region_graph_cache is None:
            old_ids = self.item3.vertices
            to_new = {v: i for i, v in enumerate(old_ids)}
            g = Graph(len(old_ids),
                      [(to_new[t], to_new[h], w) for (t, h, w) in self.item3.edges])
            self._region_graph_cache = (g, to_new, old_ids)
        return self._region_graph_cache


@dataclass(frozen=True)
class QueryAnswer:
    distance: int
    count: CountValue | None
    case_breakdown: tuple[tuple[str, int, int], ...]

    def reachable(self) -> bool:
        return self.distance < DIST_INFINITY


class LabelQueryError(ValueError):
    pass


# ---------------------------------------------------------------------------
# assembled candidate structures


@dataclass
class LayeredRoute:
    """u -> first boundary copy -> last boundary copy -> v."""

    prefix: dict[int, tuple[int, int]]
    middle: dict[tuple[int, int], tuple[int, int]]
    suffix: dict[int, tuple[int, int]]

    def edge_count_per_path(self) -> int:
        return 3

    def best(self, mod: int | None) -> tuple[int, int]:
        best_d = DIST_INFINITY
        total = 0
        for a, (da, ca) in self.prefix.items():
            if da >= DIST_INFINITY:
                continue
            for b, (db, cb) in self.suffix.items():
                mid = self.middle.get((a, b))
                if mid is None or mid[0] >= DIST_INFINITY or db >= DIST_INFINITY:
                    continue
                d = da + mid[0] + db
                if d < best_d:
                    best_d = d
                    total = ca * mid[1] * cb
                elif d == best_d and best_d < DIST_INFINITY:
                    total += ca * mid[1] * cb
                if mod:
                    total %= mod
        return best_d, (total % mod if mod else total)


@dataclass
class StarRoute:
    """u -> hub -> v, hubs keyed by (piece, vertex)."""

    into: dict[tuple[int, int], tuple[int, int]]
    outof: dict[tuple[int, int], tuple[int, int]]

    def edge_count_per_path(self) -> int:
        return 2

    def best(self, mod: int | None) -> tuple[int, int]:
        best_d = DIST_INFINITY
        total = 0
        for key, (da, ca) in self.into.items():
            if da >= DIST_INFINITY:
                continue
            out = self.outof.get(key)
            if out is None or out[0] >= DIST_INFINITY:
                continue
            d = da + out[0]
            if d < best_d:
                best_d = d
                total = ca * out[1]
            elif d == best_d and best_d < DIST_INFINITY:
                total += ca * out[1]
            if mod:
                total %= mod
        return best_d, (total % mod if mod else total)


def _check_compatible(*labels: FaultLabel) -> None:
    first = labels[0]
    for lab in labels[1:]:
        if lab.fingerprint != first.fingerprint:
            raise LabelQueryError("labels come from different builds")
        if lab.mode != first.mode or lab.prime != first.prime:
            raise LabelQueryError("labels built with different counting modes")


def _region_run(label: FaultLabel, source: int, *, removed: Iterable[int],
                internal_forbidden: Iterable[int], reverse: bool,
                counting: bool, mod: int | None) -> dict[int, tuple[int, int]]:
    """Masked run inside the label's stored region subgraph.

    Returns original-id -> (distance, count); count is 1 when counting is
    off.  Source must be present in the region and not removed.
    """
    g, to_new, old_ids = label.region_graph()
    if source not in to_new:
        return {}
    removed_new = {to_new[x] for x in removed if x in to_new}
    if to_new[source] in removed_new:
        return {}
    forb_new = {to_new[x] for x in internal_forbidden if x in to_new}
    mask = Mask(frozenset(removed_new), frozenset(forb_new))
    run_graph = g.reverse() if reverse else g
    if counting:
        res = count_sssp(run_graph, to_new[source], mask, mod)
        return {old_ids[v]: (res.dist[v], res.counts[v]) for v in range(g.n)}
    res = sssp(run_graph, to_new[source], mask)
    return {old_ids[v]: (res.dist[v], 1) for v in range(g.n)}


def _pairs(bnd: Sequence[int], d: Sequence[int], c: Sequence[int] | None,
           skip: int = -1) -> dict[int, tuple[int, int]]:
    if c is None:
        return {b: (d[i], 1) for i, b in enumerate(bnd) if b != skip}
    return {b: (d[i], c[i]) for i, b in enumerate(bnd) if b != skip}


def assemble_boundary_route(lu: FaultLabel, lv: FaultLabel, lf: FaultLabel,
                            counting: bool, mod: int | None) -> LayeredRoute:
    """Candidate paths through bd(R_f) minus f.

    The prefix layer depends on where u sits relative to R_f: a boundary
    endpoint contributes only its own zero-length entry (the first boundary
    vertex of any such path is u itself), an interior endpoint contributes
    a run inside the region, and any other endpoint contributes its stored
    region-disjoint distances.  The suffix layer mirrors this for v.
    """
    f = lf.owner
    bnd = lf.item3.bnd
    layer = [b for b in bnd if b != f]
    layer_set = set(layer)

    def endpoint_edges(lab: FaultLabel, inbound: bool) -> dict[int, tuple[int, int]]:
        w = lab.owner
        if w in layer_set:
            return {w: (0, 1)}
        if lab.region == lf.region:
            run = _region_run(lab, w, removed={f}, internal_forbidden=bnd,
                              reverse=inbound, counting=counting, mod=mod)
            return {b: run[b] for b in layer if b in run}
        entry = lab.item2.get(lf.region)
        if entry is None:
            raise LabelQueryError("label lacks the fault region entry")
        if inbound:
            return _pairs(entry.bnd, entry.d_from, entry.c_from if counting else None, skip=f)
        return _pairs(entry.bnd, entry.d_to, entry.c_to if counting else None, skip=f)

    prefix = endpoint_edges(lu, inbound=False)
    suffix = endpoint_edges(lv, inbound=True)
    k = len(bnd)
    idx = {b: i for i, b in enumerate(bnd)}
    middle: dict[tuple[int, int], tuple[int, int]] = {}
    d_mat, c_mat = lf.item3.d_mat, lf.item3.c_mat
    for a in prefix:
        ia = idx[a]
        for b in suffix:
            pos = ia * k + idx[b]
            middle[(a, b)] = (d_mat[pos], c_mat[pos] if (counting and c_mat) else 1)
    return LayeredRoute(prefix, middle, suffix)


def assemble_detour_route(lu: FaultLabel, lv: FaultLabel, lf: FaultLabel,
                          x_piece: int, side: str, counting: bool) -> StarRoute:
    """Candidate paths avoiding an ancestor piece of R_f strictly below X.

    For each piece Q on the path from X down to R_f, hubs are bd(P) \ V(Q)
    of the sibling P.  On the preferred side the prefix uses the stored
    outside-of-(P,Q) distances, or the inside-P distances when the owner
    lies in P's interior (exactly one of the two is available); the suffix
    uses the V(Q)-removed distances.  Mirrored when side == 'v'.
    """
    topo = lu.topo
    into: dict[tuple[int, int], tuple[int, int]] = {}
    outof: dict[tuple[int, int], tuple[int, int]] = {}
    for q_piece in topo.chain_down(x_piece, lf.region):
        p_piece = topo.sibling(q_piece)
        if p_piece is None:
            continue
        eu = lu.item4.get(p_piece)
        ev = lv.item4.get(p_piece)
        if eu is None or ev is None:
            continue
        if side == "u":
            if eu.d_c is not None:
                du, cu = eu.d_c, eu.c_c
            else:
                du, cu = eu.d_a, eu.c_a
            dv, cv = ev.d_b, ev.c_b
        else:
            du, cu = eu.d_b2, eu.c_b2
            if ev.d_c2 is not None:
                dv, cv = ev.d_c2, ev.c_c2
            else:
                dv, cv = ev.d_a2, ev.c_a2
        use_c = counting
        for i, p in enumerate(eu.plist):
            key = (p_piece, p)
            into[key] = (du[i], cu[i] if use_c else 1)
            outof[key] = (dv[i], cv[i] if use_c else 1)
    return StarRoute(into, outof)


def assemble_separator_route(lu: FaultLabel, lv: FaultLabel, lf: FaultLabel,
                             x_piece: int, side: str, counting: bool,
                             mod: int | None) -> tuple[StarRoute, tuple[int, int] | None]:
    """Candidate paths confined to a common ancestor piece strictly below X,
    split at separator vertices; plus the in-region candidate when both
    endpoints share a region."""
    topo = lu.topo
    r_side = lu.region if side == "u" else lv.region
    other = lv.region if side == "u" else lu.region
    into: dict[tuple[int, int], tuple[int, int]] = {}
    outof: dict[tuple[int, int], tuple[int, int]] = {}
    if topo.is_ancestor(x_piece, r_side):
        for piece in topo.chain_down(x_piece, r_side)[:-1]:
            if not topo.is_ancestor(piece, other):
                continue
            eu = lu.item5.get(piece)
            ev = lv.item5.get(piece)
            if eu is None or ev is None:
                continue
            if side == "u":
                du, cu = eu.d_out, eu.c_out
                dv, cv = ev.d_in, ev.c_in
            else:
                du, cu = eu.d_out2, eu.c_out2
                dv, cv = ev.d_in2, ev.c_in2
            # When the restricted-side endpoint is itself a separator vertex
            # of this piece, every qualifying path meets the separator first
            # (side u) or last (side v) at that endpoint, so only its
            # zero-length hub entry may contribute.
            restricted_owner = lu.owner if side == "u" else lv.owner
            only = restricted_owner if restricted_owner in set(eu.sep) else None
            for i, p in enumerate(eu.sep):
                if only is not None and p != only:
                    continue
                key = (piece, p)
                into[key] = (du[i], cu[i] if counting else 1)
                outof[key] = (dv[i], cv[i] if counting else 1)
    region_candidate: tuple[int, int] | None = None
    if lu.region == lv.region:
        f = lf.owner
        bnd_set = set(lu.item3.bnd)
        if lu.owner not in bnd_set and lv.owner not in bnd_set \
                and lu.owner != f and lv.owner != f:
            run = _region_run(lu, lu.owner, removed=set(bnd_set) | {f},
                              internal_forbidden=(), reverse=False,
                              counting=counting, mod=mod)
            if lv.owner in run:
                region_candidate = run[lv.owner]
    return StarRoute(into, outof), region_candidate


def _query(lu: FaultLabel, lv: FaultLabel, lf: FaultLabel,
           counting: bool) -> QueryAnswer:
    _check_compatible(lu, lv, lf)
    if lf.owner == lu.owner or lf.owner == lv.owner:
        raise LabelQueryError("fault equals endpoint")
    if counting and not lu.counting:
        raise LabelQueryError("labels were built without counts")
    mod = lu.prime if lu.mode == MOD_MODE else None
    if lu.owner == lv.owner:
        one = CountValue(1, mod) if counting else None
        return QueryAnswer(0, one, (("trivial", 0, 1),))
    x_piece, side = lu.topo.lowest_common_with_either(lf.region, lu.region, lv.region)

    cases: list[tuple[str, int, int]] = []
    route1 = assemble_boundary_route(lu, lv, lf, counting, mod)
    d1, c1 = route1.best(mod)
    cases.append(("boundary", d1, c1))
    route2 = assemble_detour_route(lu, lv, lf, x_piece, side, counting)
    d2, c2 = route2.best(mod)
    cases.append(("detour", d2, c2))
    route3, region_candidate = assemble_separator_route(
        lu, lv, lf, x_piece, side, counting, mod)
    d3, c3 = route3.best(mod)
    if region_candidate is not None and region_candidate[0] < DIST_INFINITY:
        dr, cr = region_candidate
        if dr < d3:
            d3, c3 = dr, cr
        elif dr == d3:
            c3 = c3 + cr
            if mod:
                c3 %= mod
    cases.append(("separator", d3, c3))

    best = min(d for _, d, _ in cases)
    if best >= DIST_INFINITY:
        zero = CountValue(0, mod) if counting else None
        return QueryAnswer(DIST_INFINITY, zero, tuple(cases))
    total = sum(c for _, d, c in cases if d == best)
    if mod:
        total %= mod
    cnt = CountValue(total, mod) if counting else None
    return QueryAnswer(best, cnt, tuple(cases))


def query_dist(lu: FaultLabel, lv: FaultLabel, lf: FaultLabel) -> int:
    """Shortest u-to-v distance in G minus {f}, from the three labels."""
    return _query(lu, lv, lf, counting=False).distance


def query_count(lu: FaultLabel, lv: FaultLabel, lf: FaultLabel) -> QueryAnswer:
    """Distance and number of shortest u-to-v paths in G minus {f}."""
    return _query(lu, lv, lf, counting=True)


# ---------------------------------------------------------------------------
# size accounting: one word per stored distance, count or id


def label_size_words(label: FaultLabel) -> dict[str, int]:
    counting = label.counting
    per_value = 2 if counting else 1
    item1 = 2 + 3 * len(label.topo) + len(label.interior_pieces)
    item2 = 0
    for entry in label.item2.values():
        item2 += 1 + len(entry.bnd) + 2 * per_value * len(entry.bnd)
    it3 = label.item3
    item3 = len(it3.vertices) + 3 * len(it3.edges) + len(it3.bnd) \
        + per_value * len(it3.bnd) ** 2
    item4 = 0
    for entry in label.item4.values():
        width = 4 * per_value
        if entry.d_c is not None:
            width += 2 * per_value
        item4 += 1 + len(entry.plist) * (1 + width)
    item5 = 0
    for entry in label.item5.values():
        item5 += 1 + len(entry.sep) * (1 + 4 * per_value)
    total = item1 + item2 + item3 + item4 + item5
    return {"item1": item1, "item2": item2, "item3": item3,
            "item4": item4, "item5": item5, "total": total}
