"""Attributed-graphlet inclusion score and its gradient.

The score of a graphlet ``H`` in a graph ``G`` is the best soft attribute
match over all label- and edge-preserving injections of ``H`` into ``G``::

    psi(G; H) = max_m exp(-rho * sum_v ||z_v^H - z_{m(v)}^G||^2)

and zero when no injection exists. Ties between injections are broken by
storage order (first wins), which fixes the injection the gradient flows
through.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass
class AttributedGraphlet:
    """A labeled connected pattern with one trainable attribute row per node."""

    node_labels: tuple
    edges: tuple
    attributes: np.ndarray

    def __post_init__(self):
        self.node_labels = tuple(int(x) for x in self.node_labels)
        self.edges = tuple(tuple(int(a) for a in e) for e in self.edges)
        self.attributes = np.asarray(self.attributes, dtype=np.float64)
        if self.attributes.ndim != 2 or len(self.attributes) != len(self.node_labels):
            raise ValueError("attributes must have one row per pattern node")

    @property
    def n_nodes(self):
        return len(self.node_labels)


@dataclass
class AgisResult:
    score: float
    argmax_embedding: Optional[tuple] = None


def find_embeddings(node_labels, edges, graph):
    """All label- and edge-preserving injections, lexicographically ordered.

    Plain backtracking over pattern nodes in index order; returns an int
    array of shape ``(k, n_pattern_nodes)``.
    """
    p = len(node_labels)
    adj = [[] for _ in range(p)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    # constraints checked when node k is placed: edges to already placed nodes
    back = [[w for w in adj[k] if w < k] for k in range(p)]
    glabels = graph.labels.tolist()
    by_label = {}
    for u, lab in enumerate(glabels):
        by_label.setdefault(lab, []).append(u)
    out = []
    current = []
    used = set()

    def extend(k):
        if k == p:
            out.append(tuple(current))
            return
        if back[k]:
            anchor = current[back[k][0]]
            cands = sorted(w for w in graph.neighbors(anchor) if glabels[w] == node_labels[k])
        else:
            cands = by_label.get(node_labels[k], [])
        for u in cands:
            if u in used:
                continue
            if all(graph.has_edge(u, current[w]) for w in back[k]):
                current.append(u)
                used.add(u)
                extend(k + 1)
                used.discard(u)
                current.pop()

    extend(0)
    return np.asarray(out, dtype=np.int64).reshape(len(out), p)


def similarity(ag, graph, m, rho):
    """exp(-rho * squared attribute distance) under the injection ``m``."""
    idx = np.asarray(m, dtype=np.int64)
    diff = ag.attributes - graph.attributes[idx]
    return float(np.exp(-rho * np.sum(diff * diff)))


def agis(ag, graph, rho, embeddings=None):
    """Inclusion score with its maximising injection.

    ``embeddings`` defaults to a fresh search of ``ag`` in ``graph``.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    if embeddings is None:
        embeddings = find_embeddings(ag.node_labels, ag.edges, graph)
    rows = np.asarray(embeddings, dtype=np.int64).reshape(-1, ag.n_nodes)
    if len(rows) == 0:
        return AgisResult(0.0, None)
    diff = graph.attributes[rows] - ag.attributes[None, :, :]
    sims = np.exp(-rho * np.sum(diff * diff, axis=(1, 2)))
    best = int(np.argmax(sims))
    return AgisResult(float(sims[best]), tuple(int(x) for x in rows[best]))


def agis_gradient(ag, graph, rho, embeddings=None):
    """d psi / d z^H through the maximising injection, shape ``(p, d)``."""
    res = agis(ag, graph, rho, embeddings)
    if res.argmax_embedding is None:
        raise ValueError("gradient requested where the graphlet does not occur")
    target = graph.attributes[np.asarray(res.argmax_embedding)]
    return -2.0 * rho * res.score * (ag.attributes - target)


class EmbeddingTable:
    """Injections of one pattern into a fixed list of graphs, flattened.

    ``node_ids`` holds global row indices into the stacked attribute matrix of
    the graph list; ``starts`` are the segment starts per present graph.
    """

    __slots__ = ("graph_index", "node_ids", "starts", "n_graphs")

    def __init__(self, embeddings, offsets, n_graphs, width):
        present = sorted(gi for gi, r in embeddings.items() if len(r))
        if present:
            rows = [np.asarray(embeddings[gi], dtype=np.int64).reshape(-1, width) for gi in present]
            counts = np.array([len(r) for r in rows])
            local = np.concatenate(rows)
            gidx = np.repeat(np.asarray(present, dtype=np.int64), counts)
            self.node_ids = local + offsets[gidx][:, None]
            self.starts = np.concatenate([[0], np.cumsum(counts)[:-1]]).astype(np.int64)
        else:
            self.node_ids = np.zeros((0, width), dtype=np.int64)
            self.starts = np.zeros(0, dtype=np.int64)
        self.graph_index = np.asarray(present, dtype=np.int64)
        self.n_graphs = n_graphs

    def scores(self, z, stacked_attrs, rho):
        """Return ``(psi, best_rows)``; ``psi`` is dense over all graphs."""
        psi = np.zeros(self.n_graphs)
        if len(self.graph_index) == 0:
            return psi, np.zeros(0, dtype=np.int64)
        diff = stacked_attrs[self.node_ids] - z[None, :, :]
        sims = np.exp(-rho * np.sum(diff * diff, axis=(1, 2)))
        seg_max = np.maximum.reduceat(sims, self.starts)
        seg_id = np.repeat(np.arange(len(self.starts)), np.diff(np.append(self.starts, len(sims))))
        hit = np.flatnonzero(sims == seg_max[seg_id])
        _, first = np.unique(seg_id[hit], return_index=True)
        psi[self.graph_index] = seg_max
        return psi, hit[first]

    def weighted_gradient(self, z, stacked_attrs, rho, psi, best_rows, weights):
        """Gradient of ``sum_i weights[i] * psi_i`` with respect to ``z``."""
        w = weights[self.graph_index] * psi[self.graph_index]
        target = stacked_attrs[self.node_ids[best_rows]]
        return -2.0 * rho * np.einsum("k,kpd->pd", w, z[None, :, :] - target)
