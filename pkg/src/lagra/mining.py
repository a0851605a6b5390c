"""gSpan-style enumeration tree over connected labeled subgraphs.

A DFS code is a tuple of edge tuples ``(i, j, label_i, edge_label, label_j)``
where ``i``/``j`` are DFS discovery indices. Forward edges have ``i < j``,
backward edges ``i > j``. Edge labels are not modelled, so every edge uses
slot ``EDGE_SLOT``. Single-node patterns have the empty code and are told
apart by their root label.

Embeddings are stored as full node injections: for every graph, an int array
of shape ``(k, n_pattern_nodes)`` whose row ``r`` maps DFS index ``v`` to graph
node ``rows[r, v]``. Rows are kept in lexicographic order, which is the
storage order used for tie-breaking downstream.
"""

from __future__ import annotations

import numpy as np

EDGE_SLOT = 0


def extension_order(ext):
    """Sort key realising gSpan's order among extensions of one code."""
    i, j, _li, el, lj = ext
    if i > j:  # backward: earlier target vertex first
        return (0, j, el, 0)
    return (1, -i, el, lj)  # forward: deepest source vertex first


def rightmost_path(code):
    """DFS indices on the rightmost path, root first."""
    if not code:
        return [0]
    rm = max(max(e[0], e[1]) for e in code)
    parent = {}
    for i, j, *_ in code:
        if i < j:
            parent[j] = i
    path = [rm]
    while path[-1] in parent:
        path.append(parent[path[-1]])
    return path[::-1]


def code_to_graph(code, root_label=None):
    """Return ``(node_labels, edges)`` with nodes numbered by DFS index."""
    if not code:
        if root_label is None:
            raise ValueError("a single-node code needs its root label")
        return (int(root_label),), ()
    labels = {}
    edges = []
    for i, j, li, _el, lj in code:
        labels[i] = li
        labels[j] = lj
        edges.append((min(i, j), max(i, j)))
    n = len(labels)
    return tuple(labels[k] for k in range(n)), tuple(sorted(edges))


def min_dfs_code(labels, edges):
    """Minimal DFS code of a connected labeled graph.

    Returns ``(code, order)`` where ``order[k]`` is the original node at DFS
    index ``k`` in (one) realisation of the minimal code.
    """
    labels = tuple(int(x) for x in labels)
    n = len(labels)
    if n == 0:
        raise ValueError("empty pattern")
    if not edges:
        if n != 1:
            raise ValueError("pattern is not connected")
        return (), (0,)
    adj = [set() for _ in range(n)]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)

    best = None
    projections = []
    for u in range(n):
        for v in adj[u]:
            key = (labels[u], EDGE_SLOT, labels[v])
            if best is None or key < best:
                best = key
                projections = [((u, v), frozenset([frozenset((u, v))]))]
            elif key == best:
                projections.append(((u, v), frozenset([frozenset((u, v))])))
    code = [(0, 1, best[0], EDGE_SLOT, best[2])]
    n_edges = len(edges)

    while len(code) < n_edges:
        path = rightmost_path(code)
        rm = path[-1]
        best_key = None
        best_ext = None
        nxt = []
        for order, used in projections:
            placed = set(order)
            cands = []
            g_rm = order[rm]
            for j in path[:-1]:
                g_j = order[j]
                if g_j in adj[g_rm] and frozenset((g_rm, g_j)) not in used:
                    cands.append(((rm, j, labels[g_rm], EDGE_SLOT, labels[g_j]), None, g_j))
            for i in path:
                g_i = order[i]
                for w in adj[g_i]:
                    if w not in placed:
                        cands.append(((i, len(order), labels[g_i], EDGE_SLOT, labels[w]), w, g_i))
            for ext, w, other in cands:
                key = extension_order(ext)
                if best_key is None or key < best_key:
                    best_key, best_ext = key, ext
                    nxt = []
                if key == best_key:
                    if w is None:
                        nxt.append((order, used | {frozenset((g_rm, other))}))
                    else:
                        nxt.append((order + (w,), used | {frozenset((other, w))}))
        if best_ext is None:
            raise ValueError("pattern is not connected")
        code.append(best_ext)
        projections = nxt
    return tuple(code), projections[0][0]


def is_min_dfs_code(code, root_label=None):
    """True iff ``code`` is the minimal DFS code of the graph it encodes."""
    if not code:
        return True
    labels, edges = code_to_graph(code, root_label)
    return min_dfs_code(labels, edges)[0] == tuple(code)


def _sorted_rows(rows, width):
    arr = np.asarray(rows, dtype=np.int64).reshape(-1, width)
    if len(arr) > 1:
        arr = arr[np.lexsort(arr.T[::-1])]
    return arr


class MiningNode:
    """One labeled pattern in the enumeration tree.

    ``embeddings`` maps training-graph index to the complete set of
    injections of the pattern into that graph.
    """

    __slots__ = ("code", "node_labels", "edges", "embeddings", "children", "depth")

    def __init__(self, code, node_labels, embeddings, depth=0):
        self.code = tuple(code)
        self.node_labels = tuple(node_labels)
        self.edges = code_to_graph(self.code, self.node_labels[0])[1]
        self.embeddings = embeddings
        self.children = None
        self.depth = depth

    @property
    def key(self):
        return (self.node_labels[0], self.code)

    @property
    def n_nodes(self):
        return len(self.node_labels)

    @property
    def support(self):
        return len(self.embeddings)

    @property
    def n_embeddings(self):
        return sum(len(r) for r in self.embeddings.values())

    def __repr__(self):
        return f"MiningNode(labels={self.node_labels}, edges={self.edges}, support={self.support})"


def build_roots(train):
    """One single-node pattern per node label occurring in ``train``, sorted by label."""
    occ = {}
    for gi, g in enumerate(train.graphs):
        for u, lab in enumerate(g.labels.tolist()):
            occ.setdefault(lab, {}).setdefault(gi, []).append((u,))
    return [
        MiningNode((), (lab,), {gi: _sorted_rows(rows, 1) for gi, rows in sorted(occ[lab].items())})
        for lab in sorted(occ)
    ]


def create_children(node, train, maxpat):
    """Canonical one-edge rightmost-path extensions of ``node`` (cached).

    Backward edges never add a node, so a pattern already at ``maxpat``
    nodes can still be extended by them.
    """
    if node.children is not None:
        return node.children
    labels = node.node_labels
    p = len(labels)
    path = rightmost_path(node.code)
    rm = path[-1]
    pattern_edges = set(node.edges)
    back_targets = [j for j in path[:-1] if (j, rm) not in pattern_edges]
    grow = p < maxpat

    found = {}
    for gi, rows in node.embeddings.items():
        g = train.graphs[gi]
        glabels = g.labels
        for row in rows.tolist():
            g_rm = row[rm]
            for j in back_targets:
                if g.has_edge(g_rm, row[j]):
                    ext = (rm, j, labels[rm], EDGE_SLOT, labels[j])
                    found.setdefault(ext, {}).setdefault(gi, []).append(row)
            if not grow:
                continue
            placed = set(row)
            for i in path:
                for w in g.neighbors(row[i]):
                    if w not in placed:
                        ext = (i, p, labels[i], EDGE_SLOT, int(glabels[w]))
                        found.setdefault(ext, {}).setdefault(gi, []).append(row + [w])

    children = []
    for ext in sorted(found, key=extension_order):
        code = node.code + (ext,)
        if not is_min_dfs_code(code):
            continue
        child_labels = labels + ((ext[4],) if ext[1] > ext[0] else ())
        width = len(child_labels)
        emb = {gi: _sorted_rows(rows, width) for gi, rows in sorted(found[ext].items())}
        children.append(MiningNode(code, child_labels, emb, node.depth + 1))
    node.children = children
    return children


def iter_tree(roots, train, maxpat):
    """Depth-first walk over the whole tree, expanding every node."""
    stack = list(reversed(roots))
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(create_children(node, train, maxpat)))


def dump_tree(roots):
    """Text dump of the already-expanded part of the tree."""
    lines = []
    stack = [(r, 0) for r in reversed(roots)]
    while stack:
        node, depth = stack.pop()
        lines.append(
            f"{'  ' * depth}labels={list(node.node_labels)} edges={list(node.edges)} "
            f"support={node.support} embeddings={node.n_embeddings}"
        )
        if node.children:
            stack.extend((c, depth + 1) for c in reversed(node.children))
    return "\n".join(lines)
