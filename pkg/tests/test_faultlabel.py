import itertools

import pytest

from sepalabel._fault_build import build_fault_labels, default_region_size, plan_fault_build
from sepalabel.counting import random_prime
from sepalabel.decomp import RDivision, build_decomposition
from sepalabel.faultlabel import (
    LabelQueryError,
    assemble_boundary_route,
    assemble_detour_route,
    label_size_words,
    query_count,
    query_dist,
)
from sepalabel.generators import gen_grid, gen_random_digraph
from sepalabel.graph import DIST_INFINITY, Graph
from sepalabel.oracle import Mask, count_sssp, sssp
from sepalabel.rng import SplitMix64


def diamond():
    # 0 -> 1 -> 3 and 0 -> 2 -> 3, unit weights
    return Graph(4, [(0, 1, 1), (0, 2, 1), (1, 3, 1), (2, 3, 1)])


def exhaustive_check(g, labels, counting=True, mod=None):
    bad = []
    for f in range(g.n):
        per_u = {}
        for u in range(g.n):
            if u != f:
                per_u[u] = count_sssp(g, u, Mask.removing({f}), mod=mod) \
                    if counting else sssp(g, u, Mask.removing({f}))
        for u, v in itertools.permutations(range(g.n), 2):
            if f in (u, v):
                continue
            res = per_u[u]
            if counting:
                ans = query_count(labels[u], labels[v], labels[f])
                ok = ans.distance == res.dist[v] and int(ans.count) == res.counts[v]
            else:
                ok = query_dist(labels[u], labels[v], labels[f]) == res.dist[v]
            if not ok:
                bad.append((u, v, f))
    return bad


def test_diamond_fault():
    g = diamond()
    labels = build_fault_labels(g, threads=1)
    ans = query_count(labels[0], labels[3], labels[1])
    assert ans.distance == 2 and int(ans.count) == 1


def test_path_fault_unreachable():
    g = Graph(3, [(0, 1, 1), (1, 2, 1)])
    labels = build_fault_labels(g, threads=1)
    ans = query_count(labels[0], labels[2], labels[1])
    assert ans.distance == DIST_INFINITY and int(ans.count) == 0


def test_same_endpoints():
    g = diamond()
    labels = build_fault_labels(g, threads=1)
    ans = query_count(labels[0], labels[0], labels[2])
    assert ans.distance == 0 and int(ans.count) == 1


def test_fault_equals_endpoint_rejected():
    g = diamond()
    labels = build_fault_labels(g, threads=1)
    with pytest.raises(LabelQueryError):
        query_dist(labels[0], labels[3], labels[0])


def test_single_vertex_label():
    g = Graph(1, [])
    labels = build_fault_labels(g, threads=1)
    lab = labels[0]
    assert lab.item4 == {} and lab.item5 == {}
    assert lab.item3.bnd == ()


def test_single_region_degenerate():
    # 3-path, r = n: one region, empty boundary everywhere
    g = Graph(3, [(0, 1, 1), (1, 0, 1), (1, 2, 1), (2, 1, 1)])
    labels = build_fault_labels(g, r=3, threads=1)
    assert labels[1].item3.bnd == ()
    assert all(not e.bnd for e in labels[1].item2.values())
    ans = query_count(labels[0], labels[2], labels[1])
    assert ans.distance == DIST_INFINITY and int(ans.count) == 0


def test_exhaustive_grids():
    for rows, cols, seed, maxw in ((4, 4, 7, 100), (4, 4, 7, 3), (5, 5, 11, 5)):
        g = gen_grid(rows, cols, seed, maxw)
        labels = build_fault_labels(g, threads=1)
        assert exhaustive_check(g, labels) == []


def test_exhaustive_varied_r():
    g = gen_grid(5, 5, 2, 100)
    for r in (4, 9, 25):
        labels = build_fault_labels(g, r=r, threads=1)
        assert exhaustive_check(g, labels) == []


def test_exhaustive_random_digraphs():
    for seed in range(4):
        g = gen_random_digraph(16, 40, seed=seed, maxw=3)
        labels = build_fault_labels(g, r=5, threads=1)
        assert exhaustive_check(g, labels) == []


def test_exhaustive_dist_mode():
    g = gen_grid(4, 4, 19, 50)
    labels = build_fault_labels(g, mode="dist", threads=1)
    assert exhaustive_check(g, labels, counting=False) == []
    with pytest.raises(LabelQueryError):
        query_count(labels[0], labels[5], labels[1])


def test_exhaustive_mod_mode():
    g = gen_grid(4, 4, 5, 4)
    p = random_prime(61, seed=77)
    labels = build_fault_labels(g, mode="mod", prime=p, threads=1)
    bad = exhaustive_check(g, labels, mod=p)
    assert bad == []
    ans = query_count(labels[0], labels[15], labels[5])
    assert ans.count.prime == p


def test_zero_weight_distance_only():
    g = Graph(4, [(0, 1, 0), (1, 3, 2), (0, 2, 1), (2, 3, 0)])
    labels = build_fault_labels(g, mode="dist", threads=1)
    assert query_dist(labels[0], labels[3], labels[1]) == 1
    with pytest.raises(ValueError):
        build_fault_labels(g, mode="exact", threads=1)


def test_stored_entries_match_oracle_replay():
    """Sampled label entries equal direct oracle runs with the same mask."""
    g = gen_grid(6, 6, 23, 9)
    tree = build_decomposition(g, 2)
    rdiv = RDivision(tree, default_region_size(g.n))
    labels = build_fault_labels(g, tree, rdiv, threads=1)
    rng = SplitMix64(4)
    old_of_new = sorted(rdiv.truncated)
    for _ in range(30):
        owner = rng.choice_index(g.n)
        lab = labels[owner]
        # item2 replay for a random region/boundary vertex
        rid = sorted(lab.item2)[rng.choice_index(len(lab.item2))]
        entry = lab.item2[rid]
        if entry.bnd:
            i = rng.choice_index(len(entry.bnd))
            b = entry.bnd[i]
            region_vertices = tree.pieces[old_of_new[rid]].vertices
            res = count_sssp(g, owner, Mask.internally_avoiding(region_vertices))
            assert entry.d_to[i] == res.dist[b]
            assert entry.c_to[i] == res.counts[b]
            res_in = count_sssp(g, b, Mask.internally_avoiding(region_vertices))
            assert entry.d_from[i] == res_in.dist[owner]
            assert entry.c_from[i] == res_in.counts[owner]
        # item3 replay: one matrix row against G minus owner
        bnd = lab.item3.bnd
        if bnd:
            i = rng.choice_index(len(bnd))
            if bnd[i] != owner:
                res = count_sssp(g, bnd[i], Mask.removing({owner}))
                k = len(bnd)
                for j in range(k):
                    if bnd[j] == owner:
                        continue
                    assert lab.item3.d_mat[i * k + j] == res.dist[bnd[j]]
                    assert lab.item3.c_mat[i * k + j] == res.counts[bnd[j]]


def test_item4_replay():
    g = gen_grid(5, 5, 3, 7)
    tree = build_decomposition(g, 2)
    rdiv = RDivision(tree, 9)
    labels = build_fault_labels(g, tree, rdiv, threads=1)
    old_of_new = sorted(rdiv.truncated)
    rng = SplitMix64(99)
    for _ in range(25):
        owner = rng.choice_index(g.n)
        lab = labels[owner]
        pid = sorted(lab.item4)[rng.choice_index(len(lab.item4))]
        entry = lab.item4[pid]
        if not entry.plist:
            continue
        i = rng.choice_index(len(entry.plist))
        p = entry.plist[i]
        piece = tree.pieces[old_of_new[pid]]
        sibling_new = lab.topo.sibling(pid)
        sib = tree.pieces[old_of_new[sibling_new]]
        both = (set(piece.vertices) | set(sib.vertices)) - {p}
        if owner in both:
            assert entry.d_a[i] == DIST_INFINITY or p == owner
        else:
            res = count_sssp(g, owner, Mask.removing(both))
            assert entry.d_a[i] == res.dist[p]
            assert entry.c_a[i] == res.counts[p]
        if owner in set(sib.vertices):
            assert entry.d_b[i] == DIST_INFINITY or owner == p
        else:
            res = count_sssp(g, p, Mask.removing(set(sib.vertices)))
            assert entry.d_b[i] == res.dist[owner]
            assert entry.c_b[i] == res.counts[owner]


def test_boundary_route_shape():
    g = gen_grid(4, 4, 7, 9)
    labels = build_fault_labels(g, threads=1)
    route = assemble_boundary_route(labels[0], labels[15], labels[5],
                                    counting=True, mod=None)
    assert route.edge_count_per_path() == 3
    for (a, b) in route.middle:
        assert a in route.prefix and b in route.suffix


def test_detour_route_shape():
    g = gen_grid(5, 5, 3, 9)
    labels = build_fault_labels(g, r=6, threads=1)
    lu, lv, lf = labels[0], labels[24], labels[12]
    x_piece, side = lu.topo.lowest_common_with_either(lf.region, lu.region, lv.region)
    route = assemble_detour_route(lu, lv, lf, x_piece, side, counting=True)
    assert route.edge_count_per_path() == 2
    assert set(route.into) == set(route.outof)


def test_label_size_words_item3_lower_bound():
    g = gen_grid(4, 4, 7, 9)
    labels = build_fault_labels(g, threads=1)
    for lab in labels.values():
        words = label_size_words(lab)
        assert words["item3"] >= len(lab.item3.edges) + len(lab.item3.bnd) ** 2
        assert words["total"] == sum(v for k, v in words.items() if k != "total")


def test_parallel_build_matches_serial():
    g = gen_grid(5, 5, 31, 20)
    serial = build_fault_labels(g, threads=1)
    parallel = build_fault_labels(g, threads=2)
    for v in range(g.n):
        assert serial[v].item2 == parallel[v].item2
        assert serial[v].item3 == parallel[v].item3
        assert serial[v].item4 == parallel[v].item4
        assert serial[v].item5 == parallel[v].item5


def test_streaming_iter_matches_dict():
    g = gen_grid(4, 4, 3, 5)
    builder = plan_fault_build(g, threads=1)
    streamed = {lab.owner: lab for lab in builder.iter_labels()}
    direct = build_fault_labels(g, threads=1)
    assert set(streamed) == set(direct)
    for v in range(g.n):
        assert streamed[v].item3 == direct[v].item3
