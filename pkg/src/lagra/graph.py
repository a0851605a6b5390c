"""Attributed graphs, datasets, and the TUDataset text format."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np


class DataFormatError(ValueError):
    """Malformed dataset input, located by file and (1-based) line."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        self.message = message
        where = self.path if line is None else f"{self.path}:{line}"
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True, eq=False)
class AttributedGraph:
    """A simple undirected graph with categorical node labels and real attributes.

    ``attributes`` has shape ``(n_nodes, d)``; ``edges`` holds ``(u, v)``
    pairs with ``u < v``, sorted.
    """

    labels: np.ndarray
    attributes: np.ndarray
    edges: tuple
    y: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        attrs = np.asarray(self.attributes, dtype=np.float64)
        if attrs.ndim == 1:
            attrs = attrs.reshape(len(labels), -1)
        if attrs.shape[0] != len(labels):
            raise ValueError("one attribute row per node is required")
        n = len(labels)
        norm = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for {n} nodes")
            e = (u, v) if u < v else (v, u)
            if e in norm:
                raise ValueError(f"duplicate edge {e}")
            norm.add(e)
        if self.y not in (-1, 1):
            raise ValueError(f"class label must be -1 or +1, got {self.y}")
        labels.setflags(write=False)
        attrs.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "attributes", attrs)
        object.__setattr__(self, "edges", tuple(sorted(norm)))
        adj = [[] for _ in range(n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        object.__setattr__(self, "_adjacency", tuple(tuple(sorted(a)) for a in adj))
        object.__setattr__(self, "_edge_set", frozenset(self.edges))

    @property
    def n_nodes(self):
        return len(self.labels)

    @property
    def dim(self):
        return self.attributes.shape[1]

    def neighbors(self, u):
        return self._adjacency[u]

    def has_edge(self, u, v):
        return ((u, v) if u < v else (v, u)) in self._edge_set

    def same_as(self, other):
        return (
            self.y == other.y
            and self.edges == other.edges
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.attributes, other.attributes)
        )


@dataclass(frozen=True, eq=False)
class Dataset:
    graphs: tuple
    attribute_dim: int
    label_mapping: dict = field(default_factory=lambda: {-1: -1, 1: 1})

    def __post_init__(self):
        object.__setattr__(self, "graphs", tuple(self.graphs))
        for g in self.graphs:
            if g.dim != self.attribute_dim:
                raise ValueError(
                    f"attribute dimension {g.dim} differs from dataset dimension "
                    f"{self.attribute_dim}"
                )

    def __len__(self):
        return len(self.graphs)

    def __iter__(self):
        return iter(self.graphs)

    def __getitem__(self, i):
        return self.graphs[i]

    @property
    def y(self):
        return np.array([g.y for g in self.graphs], dtype=np.float64)

    @property
    def label_alphabet(self):
        out = set()
        for g in self.graphs:
            out.update(int(x) for x in g.labels)
        return out

    def subset(self, indices):
        return Dataset(
            [self.graphs[i] for i in indices], self.attribute_dim, dict(self.label_mapping)
        )

    def same_as(self, other):
        return (
            len(self) == len(other)
            and self.attribute_dim == other.attribute_dim
            and all(a.same_as(b) for a, b in zip(self.graphs, other.graphs))
        )


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.6
    val_fraction: float = 0.2
    test_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        fr = (self.train_fraction, self.val_fraction, self.test_fraction)
        if not (0 < self.train_fraction < 1 and 0 < self.val_fraction < 1):
            raise ValueError("train and validation fractions must lie in (0, 1)")
        # a zero test fraction is allowed: the CLI then reports no test accuracy
        if not 0 <= self.test_fraction < 1:
            raise ValueError("test fraction must lie in [0, 1)")
        if abs(sum(fr) - 1.0) > 1e-12:
            raise ValueError(f"split fractions must sum to 1, got {sum(fr)!r}")


def map_graph_labels(raw_labels):
    """Return the raw -> {-1, +1} mapping for a set of raw graph labels."""
    values = set(raw_labels)
    if values <= {-1, 1}:
        return {v: v for v in sorted(values)}
    for lo, hi in ((0, 1), (1, 2)):
        if values <= {lo, hi}:
            return {v: (-1 if v == lo else 1) for v in sorted(values)}
    raise ValueError(f"cannot map graph labels {sorted(values)} to {{-1, +1}}")


def _read_lines(path):
    if not os.path.isfile(path):
        raise DataFormatError(path, None, "missing file")
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    while lines and not lines[-1]:
        lines.pop()
    return lines


def _parse_int(path, lineno, text):
    try:
        return int(text.strip())
    except ValueError:
        raise DataFormatError(path, lineno, f"expected an integer, got {text!r}") from None


def load_tudataset(directory, name):
    """Load ``{name}_*.txt`` files from ``directory`` into a :class:`Dataset`."""
    directory = os.fspath(directory)
    if not os.path.isdir(directory):
        raise DataFormatError(directory, None, "data directory does not exist")
    p = lambda suffix: os.path.join(directory, f"{name}_{suffix}.txt")  # noqa: E731

    ind_path = p("graph_indicator")
    indicator = [_parse_int(ind_path, k + 1, s) for k, s in enumerate(_read_lines(ind_path))]
    n_nodes = len(indicator)

    gl_path = p("graph_labels")
    raw_y = [_parse_int(gl_path, k + 1, s) for k, s in enumerate(_read_lines(gl_path))]
    n_graphs = len(raw_y)

    nl_path = p("node_labels")
    nl_lines = _read_lines(nl_path)
    if len(nl_lines) != n_nodes:
        raise DataFormatError(
            nl_path, min(len(nl_lines), n_nodes) + 1,
            f"{len(nl_lines)} node labels but {n_nodes} nodes in {os.path.basename(ind_path)}",
        )
    # some releases carry several label columns; the first is the node label
    node_labels = [
        _parse_int(nl_path, k + 1, s.split(",")[0]) for k, s in enumerate(nl_lines)
    ]

    na_path = p("node_attributes")
    na_lines = _read_lines(na_path)
    if len(na_lines) != n_nodes:
        raise DataFormatError(
            na_path, min(len(na_lines), n_nodes) + 1,
            f"{len(na_lines)} attribute rows but {n_nodes} nodes in {os.path.basename(ind_path)}",
        )
    attrs = []
    dim = None
    for k, s in enumerate(na_lines):
        parts = [t for t in s.split(",")]
        try:
            row = [float(t) for t in parts]
        except ValueError:
            raise DataFormatError(na_path, k + 1, f"non-numeric attribute row {s!r}") from None
        if dim is None:
            dim = len(row)
        elif len(row) != dim:
            raise DataFormatError(
                na_path, k + 1, f"attribute row has {len(row)} values, expected {dim}"
            )
        attrs.append(row)
    if dim is None:
        dim = 0

    prev = 0
    for k, gid in enumerate(indicator):
        if gid < 1 or gid > n_graphs:
            raise DataFormatError(ind_path, k + 1, f"graph id {gid} outside 1..{n_graphs}")
        if gid < prev:
            raise DataFormatError(ind_path, k + 1, "graph ids must be non-decreasing")
        prev = gid
    first = [None] * (n_graphs + 1)
    count = [0] * (n_graphs + 1)
    for k, gid in enumerate(indicator):
        if first[gid] is None:
            first[gid] = k
        count[gid] += 1

    a_path = p("A")
    edges = [set() for _ in range(n_graphs + 1)]
    for k, s in enumerate(_read_lines(a_path)):
        if not s:
            continue
        parts = s.split(",")
        if len(parts) != 2:
            raise DataFormatError(a_path, k + 1, f"expected 'i, j', got {s!r}")
        i, j = (_parse_int(a_path, k + 1, t) - 1 for t in parts)
        if not (0 <= i < n_nodes and 0 <= j < n_nodes):
            raise DataFormatError(a_path, k + 1, f"node id out of range 1..{n_nodes}")
        if i == j:
            raise DataFormatError(a_path, k + 1, f"self-loop on node {i + 1}")
        gid = indicator[i]
        if indicator[j] != gid:
            raise DataFormatError(a_path, k + 1, "edge joins nodes of different graphs")
        u, v = i - first[gid], j - first[gid]
        edges[gid].add((min(u, v), max(u, v)))

    try:
        mapping = map_graph_labels(raw_y)
    except ValueError as exc:
        raise DataFormatError(gl_path, None, str(exc)) from None

    attr_arr = np.asarray(attrs, dtype=np.float64).reshape(n_nodes, dim)
    lab_arr = np.asarray(node_labels, dtype=np.int64)
    graphs = []
    for gid in range(1, n_graphs + 1):
        if count[gid] == 0:
            raise DataFormatError(ind_path, None, f"graph {gid} has no nodes")
        lo, hi = first[gid], first[gid] + count[gid]
        graphs.append(
            AttributedGraph(lab_arr[lo:hi], attr_arr[lo:hi], tuple(edges[gid]), mapping[raw_y[gid - 1]])
        )
    return Dataset(graphs, dim, mapping)


def write_tudataset(dataset, directory, name):
    """Write ``dataset`` in the five-file TUDataset layout (both edge directions)."""
    os.makedirs(directory, exist_ok=True)
    inverse = {v: k for k, v in dataset.label_mapping.items()}
    p = lambda suffix: os.path.join(directory, f"{name}_{suffix}.txt")  # noqa: E731
    with open(p("A"), "w") as fa, open(p("graph_indicator"), "w") as fi, \
            open(p("node_labels"), "w") as fl, open(p("node_attributes"), "w") as fn, \
            open(p("graph_labels"), "w") as fg:
        offset = 0
        for gid, g in enumerate(dataset.graphs, start=1):
            fg.write(f"{inverse.get(g.y, g.y)}\n")
            for u in range(g.n_nodes):
                fi.write(f"{gid}\n")
                fl.write(f"{int(g.labels[u])}\n")
                fn.write(", ".join(repr(float(x)) for x in g.attributes[u]) + "\n")
            for u, v in g.edges:
                fa.write(f"{u + offset + 1}, {v + offset + 1}\n")
                fa.write(f"{v + offset + 1}, {u + offset + 1}\n")
            offset += g.n_nodes


def split_dataset(dataset, spec):
    """Seeded random partition into (train, val, test).

    Each split gets ``floor(n * fraction)`` graphs; the remainder is dealt
    round-robin starting with train. Graphs keep their original relative order.
    """
    n = len(dataset)
    if n == 0:
        raise ValueError("cannot split an empty dataset")
    fracs = (spec.train_fraction, spec.val_fraction, spec.test_fraction)
    sizes = [math.floor(n * f) for f in fracs]
    rem = n - sum(sizes)
    k = 0
    while rem > 0:
        if fracs[k % 3] > 0:
            sizes[k % 3] += 1
            rem -= 1
        k += 1
    if sizes[0] == 0:
        raise ValueError(f"split of {n} graphs leaves the training set empty")
    perm = np.random.default_rng(spec.seed).permutation(n)
    a, b = sizes[0], sizes[0] + sizes[1]
    parts = (np.sort(perm[:a]), np.sort(perm[a:b]), np.sort(perm[b:]))
    return tuple(dataset.subset(idx.tolist()) for idx in parts)


def mean_attributes_by_label(dataset):
    """Per node label, the mean attribute vector over all nodes of the dataset."""
    sums = {}
    counts = {}
    for g in dataset.graphs:
        for lab, row in zip(g.labels.tolist(), g.attributes):
            if lab in sums:
                sums[lab] = sums[lab] + row
                counts[lab] += 1
            else:
                sums[lab] = row.copy()
                counts[lab] = 1
    return {lab: sums[lab] / counts[lab] for lab in sorted(sums)}
