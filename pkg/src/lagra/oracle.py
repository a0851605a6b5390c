"""Brute-force reference implementations for the test suite.

Nothing here touches the mining tree: patterns come from exhaustive
connected-edge-subset expansion and are identified by a permutation-minimal
form, injections by filtering the full product of label-compatible nodes.
"""

from __future__ import annotations

import itertools

import numpy as np

from .graph import AttributedGraph, Dataset
from .optimizer import Problem, canonical_candidate, grad_beta, regularization_path


class EnumerationLimitError(RuntimeError):
    pass


def canonical_form(labels, edges):
    """Smallest ``(labels, sorted edges)`` over all node relabelings."""
    n = len(labels)
    best = None
    for perm in itertools.permutations(range(n)):
        # perm[new] = old
        pos = {old: new for new, old in enumerate(perm)}
        lab = tuple(int(labels[old]) for old in perm)
        if best is not None and lab > best[0]:
            continue
        e = tuple(sorted(tuple(sorted((pos[u], pos[v]))) for u, v in edges))
        cand = (lab, e)
        if best is None or cand < best:
            best = cand
    return best


def _connected_edge_sets(graph, maxpat):
    """All connected edge subsets spanning at most ``maxpat`` nodes."""
    seen = set()
    frontier = []
    for e in graph.edges:
        fs = frozenset([e])
        seen.add(fs)
        frontier.append(fs)
    while frontier:
        nxt = []
        for es in frontier:
            nodes = {u for e in es for u in e}
            for u in nodes:
                for w in graph.neighbors(u):
                    e = (min(u, w), max(u, w))
                    if e in es:
                        continue
                    if len(nodes | {w}) > maxpat:
                        continue
                    bigger = es | {e}
                    if bigger not in seen:
                        seen.add(bigger)
                        nxt.append(bigger)
        frontier = nxt
    return seen


def enumerate_subgraphs_bruteforce(train, maxpat, limit=10**6):
    """Canonical forms of every connected labeled subgraph with <= maxpat nodes."""
    out = set()
    work = 0
    for g in train.graphs:
        for u in range(g.n_nodes):
            out.add(((int(g.labels[u]),), ()))
        if maxpat < 2:
            continue
        for es in _connected_edge_sets(g, maxpat):
            work += 1
            if work > limit:
                raise EnumerationLimitError(f"more than {limit} subgraphs to enumerate")
            nodes = sorted({u for e in es for u in e})
            idx = {u: k for k, u in enumerate(nodes)}
            labels = [int(g.labels[u]) for u in nodes]
            edges = [(idx[a], idx[b]) for a, b in es]
            out.add(canonical_form(labels, edges))
    return out


def injections_bruteforce(labels, edges, graph):
    """Every label- and edge-preserving injection, as a sorted list of tuples."""
    pools = [[u for u in range(graph.n_nodes) if graph.labels[u] == lab] for lab in labels]
    out = []
    for combo in itertools.product(*pools):
        if len(set(combo)) != len(combo):
            continue
        if all(graph.has_edge(combo[a], combo[b]) for a, b in edges):
            out.append(tuple(combo))
    return sorted(out)


def contains(small, big):
    """True when pattern ``small`` is a subgraph of pattern ``big`` (both canonical forms)."""
    lab_b, edges_b = big
    g = AttributedGraph(list(lab_b), np.zeros((len(lab_b), 1)), edges_b, 1)
    return bool(injections_bruteforce(small[0], small[1], g))


def fd_gradient(func, x, eps=1e-6):
    """Central finite differences of a scalar function of an array."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for j in range(flat.size):
        old = flat[j]
        flat[j] = old + eps
        hi = func(x)
        flat[j] = old - eps
        lo = func(x)
        flat[j] = old
        gflat[j] = (hi - lo) / (2 * eps)
    return grad


class ExhaustiveSelector:
    """Active-set growth by scanning every enumerated pattern, no bound, no skipping."""

    def __init__(self, problem):
        self.problem = problem
        self.visited = 0
        train = problem.train
        self.candidates = []
        for labels, edges in sorted(enumerate_subgraphs_bruteforce(train, problem.maxpat)):
            emb = {}
            for gi, g in enumerate(train.graphs):
                rows = injections_bruteforce(labels, edges, g)
                if rows:
                    emb[gi] = rows
            cand = canonical_candidate(labels, edges, emb)
            self.candidates.append((cand, problem.initial_scores(cand)))

    def lambda_max(self, state):
        y, f = self.problem.y, state.f
        self.visited += len(self.candidates)
        return max(abs(float(grad_beta(psi, y, f))) for _c, psi in self.candidates)

    def select(self, state, lam):
        y, f = self.problem.y, state.f
        self.visited += len(self.candidates)
        return [
            c for c, psi in self.candidates
            if c.key not in state.keys and abs(float(grad_beta(psi, y, f))) > lam
        ]


def train_without_pruning(train, val, config, monitor=None):
    """The regularization path with exhaustive active-set selection."""
    return regularization_path(train, val, config, selector_factory=ExhaustiveSelector, monitor=monitor)


def exhaustive_problem(train, val, config):
    """Problem plus the full candidate list with initial scores (for bound checks)."""
    problem = Problem(train, val, config)
    return problem, ExhaustiveSelector(problem)


def toy_corpus(seed, n_graphs=20, max_nodes=8, n_labels=3, dim=2, min_nodes=3):
    """Seeded random corpus of small connected simple graphs with both classes.

    Even-indexed graphs are positive; in positive graphs label-0 nodes have
    their attributes shifted up, giving the learner an attribute signal.
    """
    if not (n_graphs >= 2 and max_nodes <= 8 and n_labels <= 3 and dim <= 2):
        raise ValueError("toy corpus limits: n_graphs >= 2, <= 8 nodes, <= 3 labels, d <= 2")
    rng = np.random.default_rng(seed)
    graphs = []
    for i in range(n_graphs):
        n = int(rng.integers(min_nodes, max_nodes + 1))
        labels = rng.integers(0, n_labels, size=n)
        edges = set()
        for v in range(1, n):
            u = int(rng.integers(0, v))
            edges.add((u, v))
        for _ in range(int(rng.integers(0, n))):
            u, v = sorted(int(x) for x in rng.choice(n, size=2, replace=False))
            edges.add((u, v))
        attrs = rng.uniform(0.0, 1.0, size=(n, dim))
        y = 1 if i % 2 == 0 else -1
        if y == 1:
            attrs[labels == 0] += 0.5
        graphs.append(AttributedGraph(labels, attrs, tuple(sorted(edges)), y))
    return Dataset(graphs, dim)


def planted_corpus(seed, n_graphs=30, max_nodes=7, dim=2):
    """Corpus separated by one planted structure: positives contain a label-0 node.

    Background nodes carry labels 1 and 2 only, so the single-node pattern
    with label 0 occurs in exactly the positive graphs.
    """
    rng = np.random.default_rng(seed)
    graphs = []
    for i in range(n_graphs):
        n = int(rng.integers(3, max_nodes + 1))
        labels = rng.integers(1, 3, size=n)
        y = 1 if i % 2 == 0 else -1
        if y == 1:
            labels[int(rng.integers(0, n))] = 0
        edges = {(int(rng.integers(0, v)), v) for v in range(1, n)}
        attrs = rng.uniform(0.0, 1.0, size=(n, dim))
        graphs.append(AttributedGraph(labels, attrs, tuple(sorted(edges)), y))
    return Dataset(graphs, dim)
