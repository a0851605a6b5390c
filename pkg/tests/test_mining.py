import functools

import pytest

from lagra.graph import Dataset
from lagra.mining import (
    build_roots,
    code_to_graph,
    create_children,
    dump_tree,
    is_min_dfs_code,
    iter_tree,
    min_dfs_code,
)
from lagra.oracle import canonical_form, enumerate_subgraphs_bruteforce, injections_bruteforce

from conftest import TOY_SEEDS, make_graph


# ------------------------------------------------------------ independent DFS-code oracle


def all_dfs_codes(labels, edges):
    """Every DFS code of a small connected graph, by exhaustive traversal choice."""
    adj = {u: set() for u in range(len(labels))}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    n_edges = len(edges)
    out = set()

    def walk(order, stack, used, code):
        if len(code) == n_edges:
            out.add(tuple(code))
            return
        rm = len(order) - 1
        g_rm = order[rm]
        # pending backward edges from the newest vertex must come first, by target index
        for j, g_j in enumerate(order[:-1]):
            e = frozenset((g_rm, g_j))
            if g_j in adj[g_rm] and e not in used:
                walk(order, stack, used | {e},
                     code + [(rm, j, labels[g_rm], 0, labels[g_j])])
                return
        for depth in range(len(stack) - 1, -1, -1):
            i = stack[depth]
            for w in adj[order[i]]:
                if w in order:
                    continue
                walk(order + [w], stack[: depth + 1] + [len(order)],
                     used | {frozenset((order[i], w))},
                     code + [(i, len(order), labels[order[i]], 0, labels[w])])

    for u in adj:
        for v in adj[u]:
            walk([u, v], [0, 1], {frozenset((u, v))}, [(0, 1, labels[u], 0, labels[v])])
    return out


def gspan_less(a, b):
    """gSpan lexicographic order for two codes of the same graph."""
    for x, y in zip(a, b):
        if x == y:
            continue
        if x[:2] == (0, 1) and y[:2] == (0, 1):
            return (x[2], x[3], x[4]) < (y[2], y[3], y[4])
        xb, yb = x[0] > x[1], y[0] > y[1]
        if xb and yb:
            return (x[1], x[3]) < (y[1], y[3])
        if xb != yb:
            return xb
        return (-x[0], x[3], x[4]) < (-y[0], y[3], y[4])
    return len(a) < len(b)


def brute_min(labels, edges):
    codes = sorted(all_dfs_codes(labels, edges))
    cmp = lambda a, b: -1 if gspan_less(a, b) else (1 if gspan_less(b, a) else 0)  # noqa: E731
    return min(codes, key=functools.cmp_to_key(cmp)), codes


SMALL_GRAPHS = [
    ((0, 1), ((0, 1),)),
    ((0, 0, 1), ((0, 1), (1, 2), (0, 2))),
    ((1, 0, 0), ((0, 1), (1, 2), (0, 2))),
    ((0, 0, 0, 0), ((0, 1), (1, 2), (2, 3), (0, 3))),
    ((0, 1, 0, 1), ((0, 1), (1, 2), (2, 3), (0, 3), (0, 2))),
    ((2, 1, 0, 1, 2), ((0, 1), (1, 2), (2, 3), (3, 4), (1, 3))),
    ((0, 0, 0, 1), ((0, 1), (0, 2), (0, 3))),
]


@pytest.mark.parametrize("labels, edges", SMALL_GRAPHS)
def test_min_dfs_code_matches_exhaustive_order(labels, edges):
    expected, codes = brute_min(labels, edges)
    assert min_dfs_code(labels, edges)[0] == expected
    assert [c for c in codes if is_min_dfs_code(c)] == [expected]


def test_single_edge_code_is_min():
    assert is_min_dfs_code(((0, 1, 0, 0, 1),))


def test_reversed_single_edge_not_min():
    assert not is_min_dfs_code(((0, 1, 1, 0, 0),))


def test_triangle_non_minimal_entry():
    # triangle A A B entered from the B node: the minimal code starts at an A-A edge
    code = ((0, 1, 1, 0, 0), (1, 2, 0, 0, 0), (2, 0, 0, 0, 1))
    assert code in all_dfs_codes((0, 0, 1), ((0, 1), (1, 2), (0, 2)))
    assert not is_min_dfs_code(code)
    assert is_min_dfs_code(((0, 1, 0, 0, 0), (1, 2, 0, 0, 1), (2, 0, 1, 0, 0)))


def test_single_node_code():
    assert is_min_dfs_code(())


def test_min_dfs_code_order_realises_code():
    labels, edges = (2, 1, 0, 1, 2), ((0, 1), (1, 2), (2, 3), (3, 4), (1, 3))
    code, order = min_dfs_code(labels, edges)
    lab2, edges2 = code_to_graph(code)
    assert lab2 == tuple(labels[o] for o in order)
    inv = {o: k for k, o in enumerate(order)}
    assert edges2 == tuple(sorted(tuple(sorted((inv[u], inv[v]))) for u, v in edges))


# ------------------------------------------------------------ tree construction


def test_roots_triangle(triangle_dataset):
    roots = build_roots(triangle_dataset)
    assert len(roots) == 1
    assert roots[0].node_labels == (0,)
    assert roots[0].n_embeddings == 3


def test_roots_disjoint_labels():
    ds = Dataset([make_graph([0, 0], [(0, 1)]), make_graph([1], [])], 1)
    roots = build_roots(ds)
    assert [r.node_labels for r in roots] == [(0,), (1,)]
    assert list(roots[0].embeddings) == [0]
    assert list(roots[1].embeddings) == [1]


def test_only_present_patterns():
    # two graphs A-B and B-C: A-C never occurs and must not be generated
    ds = Dataset([make_graph([0, 1], [(0, 1)]), make_graph([1, 2], [(0, 1)])], 1)
    forms = {canonical_form(n.node_labels, n.edges) for n in iter_tree(build_roots(ds), ds, 3)}
    assert forms == {((0,), ()), ((1,), ()), ((2,), ()), ((0, 1), ((0, 1),)), ((1, 2), ((0, 1),))}


def test_single_child():
    ds = Dataset([make_graph([0, 1], [(0, 1)])], 1)
    root_a = build_roots(ds)[0]
    kids = create_children(root_a, ds, 5)
    assert len(kids) == 1
    assert kids[0].node_labels == (0, 1)
    assert kids[0].embeddings[0].tolist() == [[0, 1]]
    assert create_children(root_a, ds, 5) is kids


def test_size_cap_no_children():
    ds = Dataset([make_graph([0, 0, 0], [(0, 1), (1, 2)])], 1)
    root = build_roots(ds)[0]
    edge = create_children(root, ds, 2)[0]
    assert edge.n_nodes == 2
    assert create_children(edge, ds, 2) == []


def test_backward_child_at_size_cap():
    # a 4-cycle has 4 nodes; with maxpat 4 it must still be reachable
    ds = Dataset([make_graph([0] * 4, [(0, 1), (1, 2), (2, 3), (0, 3)])], 1)
    forms = {canonical_form(n.node_labels, n.edges) for n in iter_tree(build_roots(ds), ds, 4)}
    assert canonical_form((0,) * 4, ((0, 1), (1, 2), (2, 3), (0, 3))) in forms


def test_path_edge_embeddings():
    # A-A-A path: pattern A-A maps onto 2 edges in 2 orientations
    ds = Dataset([make_graph([0, 0, 0], [(0, 1), (1, 2)])], 1)
    child = create_children(build_roots(ds)[0], ds, 3)[0]
    rows = child.embeddings[0].tolist()
    expected = injections_bruteforce((0, 0), ((0, 1),), ds[0])
    assert len(rows) == 4
    assert [tuple(r) for r in rows] == expected


def test_dump_lists_expanded_nodes(triangle_dataset):
    roots = build_roots(triangle_dataset)
    nodes = list(iter_tree(roots, triangle_dataset, 3))
    text = dump_tree(roots)
    assert len(text.splitlines()) == len(nodes) == 4
    assert "support=1" in text


# ------------------------------------------------------------ exactness against oracles


@pytest.mark.parametrize("seed", TOY_SEEDS)
@pytest.mark.parametrize("maxpat", [1, 2, 3, 4])
def test_tree_equals_bruteforce(toy_pairs, seed, maxpat):
    train = toy_pairs[seed][0]
    nodes = list(iter_tree(build_roots(train), train, maxpat))
    forms = [canonical_form(n.node_labels, n.edges) for n in nodes]
    assert len(forms) == len(set(forms))
    assert set(forms) == enumerate_subgraphs_bruteforce(train, maxpat)


@pytest.mark.parametrize("seed", TOY_SEEDS[:2])
def test_embeddings_equal_bruteforce(toy_pairs, seed):
    train = toy_pairs[seed][0]
    for node in iter_tree(build_roots(train), train, 4):
        assert is_min_dfs_code(node.code)
        for gi, g in enumerate(train.graphs):
            got = [tuple(r) for r in node.embeddings.get(gi, [])]
            assert got == injections_bruteforce(node.node_labels, node.edges, g)


def test_anti_monotone_occurrence(toy_pairs):
    train = toy_pairs[3][0]

    def check(node, parent_graphs):
        assert set(node.embeddings) <= parent_graphs
        for c in create_children(node, train, 4):
            check(c, set(node.embeddings))

    for r in build_roots(train):
        check(r, set(range(len(train))))
