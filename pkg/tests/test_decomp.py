import itertools

from sepalabel.decomp import RDivision, build_decomposition, find_separator
from sepalabel.generators import gen_grid, gen_random_digraph
from sepalabel.graph import Graph


def undirected_neighbors(g):
    nbrs = [set() for _ in range(g.n)]
    for e in g.edges:
        nbrs[e.tail].add(e.head)
        nbrs[e.head].add(e.tail)
    return nbrs


def reachable_groups(g, vertices, blocked):
    """Connected groups of `vertices` minus `blocked` (undirected)."""
    nbrs = undirected_neighbors(g)
    allowed = set(vertices) - set(blocked)
    groups = []
    seen = set()
    for s in sorted(allowed):
        if s in seen:
            continue
        comp = {s}
        stack = [s]
        seen.add(s)
        while stack:
            u = stack.pop()
            for v in nbrs[u]:
                if v in allowed and v not in seen:
                    seen.add(v)
                    comp.add(v)
                    stack.append(v)
        groups.append(comp)
    return groups


def test_separator_on_path3():
    g = Graph(3, [(0, 1, 1), (1, 0, 1), (1, 2, 1), (2, 1, 1)])
    sep = find_separator(g)
    groups = reachable_groups(g, range(3), sep)
    bound = -((-2 * 3) // 3)
    assert all(len(c) <= bound for c in groups)


def test_separator_grid_balance():
    for k in (5, 7):
        g = gen_grid(k, k, 3, 5)
        sep = find_separator(g)
        assert len(sep) <= 2 * k  # BFS level of a grid stays level-sized
        bound = -((-2 * g.n) // 3)
        for c in reachable_groups(g, range(g.n), sep):
            assert len(c) <= bound


def test_separator_random_postcondition():
    g = gen_random_digraph(40, 90, seed=4)
    sep = find_separator(g)
    bound = -((-2 * g.n) // 3)
    for c in reachable_groups(g, range(g.n), sep):
        assert len(c) <= bound


def check_tree_invariants(g, tree):
    pieces = tree.pieces
    root = pieces[0]
    assert root.boundary == ()
    assert root.vertices == tuple(range(g.n))
    nbrs = undirected_neighbors(g)
    # separator partition
    seen = {}
    for p in pieces:
        assert not (set(p.separator) & set(p.boundary))
        assert set(p.separator) <= set(p.vertices)
        assert set(p.boundary) <= set(p.vertices)
        for v in p.separator:
            assert v not in seen, f"vertex {v} in two separators"
            seen[v] = p.pid
    assert len(seen) == g.n
    for v in range(g.n):
        assert tree.home_piece[v] == seen[v]
    for p in pieces:
        interior = set(p.vertices) - set(p.boundary)
        if p.children:
            assert len(p.children) == 2
            kids = [pieces[c] for c in p.children]
            # children cover the parent and their interiors partition it
            assert set(kids[0].vertices) | set(kids[1].vertices) == set(p.vertices)
            ia = set(kids[0].vertices) - set(kids[0].boundary)
            ib = set(kids[1].vertices) - set(kids[1].boundary)
            assert not (ia & ib)
            bound = -((-2 * len(interior)) // 3)
            assert len(ia) <= bound and len(ib) <= bound
            for kid in kids:
                assert set(kid.boundary) == (set(p.boundary) | set(p.separator)) & set(kid.vertices)
            # every parent edge lands in a child, except edges between two
            # boundary vertices whose incidences pull them to opposite sides
            pv = set(p.vertices)
            bnd = set(p.boundary)
            for e in g.edges:
                if e.tail in pv and e.head in pv:
                    if tree.edge_child(p.pid, e.tail, e.head) is None:
                        assert e.tail in bnd and e.head in bnd
        else:
            assert set(p.separator) == interior
        # confinement: interior vertices keep all their neighbors inside
        for v in interior:
            for w in nbrs[v]:
                assert w in set(p.vertices), (p.pid, v, w)


def test_single_vertex_tree():
    g = Graph(1, [])
    tree = build_decomposition(g, leaf_threshold=1)
    assert len(tree) == 1
    assert tree.pieces[0].separator == (0,)


def test_path4_threshold1_partition():
    g = Graph(4, [(i, i + 1, 1) for i in range(3)] + [(i + 1, i, 1) for i in range(3)])
    tree = build_decomposition(g, leaf_threshold=1)
    check_tree_invariants(g, tree)


def test_grid_tree_invariants():
    for rows, cols, thr in ((4, 4, 1), (5, 5, 2), (8, 8, 2), (6, 7, 3)):
        g = gen_grid(rows, cols, 5, 9)
        tree = build_decomposition(g, thr)
        check_tree_invariants(g, tree)


def test_random_graph_tree_invariants():
    for seed in range(5):
        g = gen_random_digraph(25, 60, seed=seed)
        tree = build_decomposition(g, leaf_threshold=2)
        check_tree_invariants(g, tree)


def test_tree_determinism():
    g = gen_grid(6, 6, 10, 20)
    t1 = build_decomposition(g, 2)
    t2 = build_decomposition(g, 2)
    assert t1.dump() == t2.dump()
    assert t1.fingerprint() == t2.fingerprint()


def test_separator_sum_bound_on_grid():
    g = gen_grid(8, 8, 2, 7)
    tree = build_decomposition(g, 2)
    for p in tree.pieces:
        if not p.children:
            total = sum(len(tree.pieces[a].separator) for a in tree.ancestors(p.pid))
            assert total <= 8 * 8  # geometric-sum sanity bound: 8 * sqrt(64)


def test_ancestors_and_lca():
    g = gen_grid(6, 6, 1, 5)
    tree = build_decomposition(g, 2)
    leaves = [p.pid for p in tree.pieces if not p.children]
    for a, b in itertools.combinations(leaves[:8], 2):
        l = tree.lca(a, b)
        aa, ab = tree.ancestors(a), tree.ancestors(b)
        common = [x for x in aa if x in set(ab)]
        assert common[-1] == l


def test_lowest_common_with_either_brute_force():
    g = gen_grid(6, 6, 8, 5)
    tree = build_decomposition(g, 2)
    leaves = [p.pid for p in tree.pieces if not p.children]
    for rf, ru, rv in itertools.islice(itertools.product(leaves[:6], repeat=3), 120):
        x, side = tree.lowest_common_with_either(rf, ru, rv)
        best = None
        for pid in tree.ancestors(rf):
            if tree.is_ancestor(pid, ru) or tree.is_ancestor(pid, rv):
                if best is None or tree.pieces[pid].depth > tree.pieces[best].depth:
                    best = pid
        assert x == best
        if side == "u":
            assert tree.is_ancestor(x, ru)
        else:
            assert tree.is_ancestor(x, rv)
            assert tree.pieces[tree.lca(rf, ru)].depth < tree.pieces[x].depth


def test_sep_ancestry():
    g = gen_grid(5, 5, 2, 4)
    tree = build_decomposition(g, 2)
    # every vertex appears exactly once across its own ancestry separators
    for v in range(g.n):
        chain = tree.sep_ancestry(v)
        assert chain[0][0] == tree.root
        hits = [pid for pid, sep in chain if v in sep]
        assert hits == [tree.home_piece[v]]
        assert len(chain) == tree.pieces[tree.home_piece[v]].depth + 1


def test_r_division_whole_graph():
    g = gen_grid(3, 3, 1, 3)
    tree = build_decomposition(g, 2)
    rd = RDivision(tree, r=g.n)
    assert rd.regions == (0,)
    assert all(r == 0 for r in rd.region_of)
    assert tree.pieces[0].boundary == ()


def test_r_division_leaves():
    g = Graph(2, [(0, 1, 1), (1, 0, 1)])
    tree = build_decomposition(g, 1)
    rd = RDivision(tree, r=1)
    leaves = tuple(sorted(p.pid for p in tree.pieces if not p.children))
    assert rd.regions == leaves


def test_r_division_grid():
    g = gen_grid(10, 10, 4, 9)
    tree = build_decomposition(g, 2)
    rd = RDivision(tree, r=22)
    for rid in rd.regions:
        p = tree.pieces[rid]
        assert len(p.vertices) <= 22 or not p.children
    for v in range(g.n):
        rid = rd.region_of[v]
        assert rid in rd.regions
        assert v in tree.pieces[rid].vertices
        assert rid == min(r for r in rd.regions if v in set(tree.pieces[r].vertices))
    # interior vertices live in exactly one region
    for v in range(g.n):
        owners = [r for r in rd.regions if v in set(tree.pieces[r].vertices)]
        if len(owners) > 1:
            for r in owners:
                assert v in tree.pieces[r].boundary
