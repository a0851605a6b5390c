"""Frozen LAGRA models: prediction, JSON documents and readable reports.

Model document (JSON, key-addressed, ``format_version`` 1)::

    {
      "format": "lagra-model",
      "format_version": 1,
      "bias": float,
      "rho": float,
      "maxpat": int,
      "lambda": float | null,
      "attribute_dim": int,
      "label_alphabet": [int, ...],
      "label_mapping": [[raw, +-1], ...],
      "graphlets": [
        {"node_labels": [int, ...], "edges": [[u, v], ...],
         "attributes": [[float, ...], ...], "beta": float},
        ...
      ]
    }

Floats are written with ``repr`` so a reloaded model scores bit-identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .agis import AttributedGraphlet, agis

FORMAT = "lagra-model"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


@dataclass
class Graphlet:
    node_labels: tuple
    edges: tuple
    attributes: np.ndarray
    beta: float

    def as_attributed(self):
        return AttributedGraphlet(self.node_labels, self.edges, self.attributes)


@dataclass
class TrainedModel:
    graphlets: list
    bias: float
    rho: float
    maxpat: int
    attribute_dim: int
    label_alphabet: list = field(default_factory=list)
    label_mapping: dict = field(default_factory=dict)
    lam: float = None

    def __post_init__(self):
        for h in self.graphlets:
            if h.beta == 0.0:
                raise ValueError("zero-coefficient graphlets must be dropped")
            if len(h.node_labels) > self.maxpat:
                raise ValueError("graphlet exceeds maxpat")
            if h.attributes.shape != (len(h.node_labels), self.attribute_dim):
                raise ValueError("graphlet attribute shape does not match the model")


def model_from_record(record, rho, maxpat, dataset):
    """Freeze one path record, dropping graphlets whose coefficient is zero."""
    graphlets = [
        Graphlet(tuple(labels), tuple(edges), np.array(z, dtype=np.float64), float(b))
        for _key, labels, edges, z, b in record.graphlets
        if b != 0.0
    ]
    return TrainedModel(
        graphlets=graphlets,
        bias=float(record.beta0),
        rho=float(rho),
        maxpat=int(maxpat),
        attribute_dim=dataset.attribute_dim,
        label_alphabet=sorted(dataset.label_alphabet),
        label_mapping=dict(dataset.label_mapping),
        lam=float(record.lam),
    )


def predict(model, graph):
    """Return ``(score, label, contributions)``; a score of exactly 0 maps to +1."""
    if graph.dim != model.attribute_dim:
        raise ValueError(
            f"graph attribute dimension {graph.dim} does not match model dimension "
            f"{model.attribute_dim}"
        )
    psi = np.array([agis(h.as_attributed(), graph, model.rho).score for h in model.graphlets])
    beta = np.array([h.beta for h in model.graphlets])
    score = float(psi @ beta) + model.bias if len(beta) else model.bias
    return score, (1 if score >= 0 else -1), (beta * psi).tolist()


def predict_scores(model, dataset):
    return np.array([predict(model, g)[0] for g in dataset.graphs])


# ---------------------------------------------------------------- documents


def serialize(model):
    doc = {
        "format": FORMAT,
        "format_version": FORMAT_VERSION,
        "bias": model.bias,
        "rho": model.rho,
        "maxpat": model.maxpat,
        "lambda": model.lam,
        "attribute_dim": model.attribute_dim,
        "label_alphabet": [int(x) for x in model.label_alphabet],
        "label_mapping": [[int(k), int(v)] for k, v in sorted(model.label_mapping.items())],
        "graphlets": [
            {
                "node_labels": [int(x) for x in h.node_labels],
                "edges": [[int(u), int(v)] for u, v in h.edges],
                "attributes": [[float(x) for x in row] for row in h.attributes],
                "beta": h.beta,
            }
            for h in model.graphlets
        ],
    }
    return (json.dumps(doc, indent=1) + "\n").encode("utf-8")


def deserialize(data):
    try:
        doc = json.loads(data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ModelFormatError("not a LAGRA model document")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format version {doc.get('format_version')!r} "
            f"(expected {FORMAT_VERSION})"
        )
    try:
        dim = int(doc["attribute_dim"])
        graphlets = [
            Graphlet(
                tuple(int(x) for x in h["node_labels"]),
                tuple((int(u), int(v)) for u, v in h["edges"]),
                np.array(h["attributes"], dtype=np.float64).reshape(len(h["node_labels"]), dim),
                float(h["beta"]),
            )
            for h in doc["graphlets"]
        ]
        lam = doc.get("lambda")
        return TrainedModel(
            graphlets=graphlets,
            bias=float(doc["bias"]),
            rho=float(doc["rho"]),
            maxpat=int(doc["maxpat"]),
            attribute_dim=dim,
            label_alphabet=[int(x) for x in doc.get("label_alphabet", [])],
            label_mapping={int(k): int(v) for k, v in doc.get("label_mapping", [])},
            lam=None if lam is None else float(lam),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model document: {exc!r}") from None


# ---------------------------------------------------------------- reports


def _ranked(model):
    pos = sorted((h for h in model.graphlets if h.beta > 0), key=lambda h: -abs(h.beta))
    neg = sorted((h for h in model.graphlets if h.beta < 0), key=lambda h: -abs(h.beta))
    return pos, neg


def _render(h, rank):
    lines = [f"  #{rank}  beta = {h.beta:+.6g}"]
    lines.append("      nodes: " + ", ".join(f"{v}:L{lab}" for v, lab in enumerate(h.node_labels)))
    lines.append("      edges: " + (", ".join(f"{u}-{v}" for u, v in h.edges) or "(none)"))
    for v, row in enumerate(h.attributes):
        lines.append(f"      z[{v}] = [" + ", ".join(f"{x:.6g}" for x in row) + "]")
    return lines


def export_report(model, top_k=10):
    """Plain-text listing of the top graphlets by |beta|, split by sign."""
    if top_k < 1:
        raise ValueError("top_k must be at least 1")
    pos, neg = _ranked(model)
    out = [
        f"LAGRA model: {len(model.graphlets)} graphlets, bias = {model.bias:+.6g}, "
        f"rho = {model.rho:g}, maxpat = {model.maxpat}",
        "",
        f"Positive coefficients ({len(pos)}):",
    ]
    for r, h in enumerate(pos[:top_k], 1):
        out.extend(_render(h, r))
    out += ["", f"Negative coefficients ({len(neg)}):"]
    for r, h in enumerate(neg[:top_k], 1):
        out.extend(_render(h, r))
    return "\n".join(out) + "\n"


def agis_scatter(model, dataset):
    """CSV of inclusion scores for the strongest positive and negative graphlet.

    A missing group leaves its column empty.
    """
    pos, neg = _ranked(model)
    hp = pos[0].as_attributed() if pos else None
    hn = neg[0].as_attributed() if neg else None
    lines = ["graph_id,y,psi_pos,psi_neg"]
    for i, g in enumerate(dataset.graphs):
        a = repr(agis(hp, g, model.rho).score) if hp else ""
        b = repr(agis(hn, g, model.rho).score) if hn else ""
        lines.append(f"{i},{g.y},{a},{b}")
    return "\n".join(lines) + "\n"
