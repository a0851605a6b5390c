import json

import numpy as np
import pytest

from lagra.graph import Dataset
from lagra.model import (
    Graphlet,
    ModelFormatError,
    TrainedModel,
    agis_scatter,
    deserialize,
    export_report,
    model_from_record,
    predict,
    predict_scores,
    serialize,
)
from lagra.optimizer import OptimizerConfig, regularization_path
from lagra.oracle import toy_corpus

from conftest import make_graph


def two_graphlet_model():
    return TrainedModel(
        graphlets=[
            Graphlet((0, 1), ((0, 1),), np.array([[0.0], [1.0]]), 2.0),
            Graphlet((2,), (), np.array([[0.5]]), -1.5),
        ],
        bias=-0.25,
        rho=1.0,
        maxpat=3,
        attribute_dim=1,
        label_alphabet=[0, 1, 2],
        label_mapping={0: -1, 1: 1},
        lam=0.125,
    )


def test_bias_only_model():
    m = TrainedModel([], bias=-0.3, rho=0.1, maxpat=2, attribute_dim=1)
    score, label, contrib = predict(m, make_graph([0, 1], [(0, 1)]))
    assert (score, label, contrib) == (-0.3, -1, [])


def test_zero_score_maps_to_positive():
    m = TrainedModel([], bias=0.0, rho=0.1, maxpat=2, attribute_dim=1)
    assert predict(m, make_graph([0], []))[1] == 1


def test_absent_pattern_contributes_zero():
    m = two_graphlet_model()
    score, _, contrib = predict(m, make_graph([1, 1], [(0, 1)], [[3.0], [4.0]]))
    assert contrib == [0.0, 0.0]
    assert score == -0.25


def test_hand_computed_score():
    m = two_graphlet_model()
    g = make_graph([0, 1, 2], [(0, 1), (1, 2)], [[0.0], [2.0], [0.5]])
    # first graphlet: distance 1 -> exp(-1); second: exact match -> 1
    expected = 2.0 * np.exp(-1.0) - 1.5 - 0.25
    score, label, contrib = predict(m, g)
    assert score == pytest.approx(expected, abs=1e-15)
    assert label == (1 if expected >= 0 else -1)
    np.testing.assert_allclose(contrib, [2.0 * np.exp(-1.0), -1.5])


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        predict(two_graphlet_model(), make_graph([0], [], [[1.0, 2.0]], dim=2))


def test_zero_beta_rejected():
    with pytest.raises(ValueError):
        TrainedModel([Graphlet((0,), (), np.zeros((1, 1)), 0.0)], 0.0, 1.0, 2, 1)


def test_roundtrip_bit_identical_scores():
    m = two_graphlet_model()
    back = deserialize(serialize(m))
    rng = np.random.default_rng(0)
    for _ in range(10):
        n = int(rng.integers(2, 6))
        labels = rng.integers(0, 3, size=n)
        edges = [(int(rng.integers(0, v)), v) for v in range(1, n)]
        g = make_graph(labels, edges, rng.normal(size=(n, 1)))
        assert predict(m, g) == predict(back, g)
    assert serialize(back) == serialize(m)
    assert back.label_mapping == m.label_mapping and back.lam == m.lam


def test_truncated_document_rejected():
    data = serialize(two_graphlet_model())
    with pytest.raises(ModelFormatError, match="malformed"):
        deserialize(data[: len(data) // 2])


def test_missing_field_rejected():
    doc = json.loads(serialize(two_graphlet_model()))
    del doc["graphlets"][0]["beta"]
    with pytest.raises(ModelFormatError):
        deserialize(json.dumps(doc))


def test_field_order_irrelevant():
    m = two_graphlet_model()
    doc = json.loads(serialize(m))
    shuffled = {k: doc[k] for k in reversed(list(doc))}
    shuffled["graphlets"] = [{k: h[k] for k in reversed(list(h))} for h in doc["graphlets"]]
    assert serialize(deserialize(json.dumps(shuffled))) == serialize(m)


def test_version_mismatch_named():
    doc = json.loads(serialize(two_graphlet_model()))
    doc["format_version"] = 7
    with pytest.raises(ModelFormatError, match="version 7"):
        deserialize(json.dumps(doc))


def test_wrong_format_tag():
    with pytest.raises(ModelFormatError):
        deserialize(b'{"format": "other"}')


def test_report_groups_and_clamps():
    m = two_graphlet_model()
    text = export_report(m, top_k=50)
    pos = text.index("Positive coefficients (1)")
    neg = text.index("Negative coefficients (1)")
    assert pos < text.index("beta = +2") < neg < text.index("beta = -1.5")
    assert "0-1" in text and "(none)" in text
    with pytest.raises(ValueError):
        export_report(m, top_k=0)


def test_report_orders_by_magnitude():
    gl = [Graphlet((0,), (), np.zeros((1, 1)), b) for b in (0.5, 3.0, -0.1, -2.0)]
    text = export_report(TrainedModel(gl, 0.0, 1.0, 2, 1), top_k=1)
    assert "+3" in text and "+0.5" not in text
    assert "-2" in text and "-0.1" not in text


def test_scatter_columns():
    m = two_graphlet_model()
    ds = Dataset([make_graph([0, 1], [(0, 1)], [[0.0], [1.0]], y=1),
                  make_graph([2], [], [[0.5]], y=-1)], 1)
    lines = agis_scatter(m, ds).splitlines()
    assert lines[0] == "graph_id,y,psi_pos,psi_neg"
    assert lines[1] == "0,1,1.0,0.0"
    assert lines[2] == "1,-1,0.0,1.0"
    only_pos = TrainedModel(m.graphlets[:1], 0.0, 1.0, 3, 1)
    assert agis_scatter(only_pos, ds).splitlines()[1].endswith(",1.0,")


def test_frozen_model_agrees_with_training_state():
    train, val = toy_corpus(4, 20), toy_corpus(1004, 10)
    cfg = OptimizerConfig(maxpat=3, rho=0.5, grid_size=6)
    res = regularization_path(train, val, cfg)
    rec = res.records[-1]
    model = model_from_record(rec, cfg.rho, cfg.maxpat, train)
    assert all(h.beta != 0 for h in model.graphlets)
    assert len(model.graphlets) == len(rec.support)
    scores = predict_scores(model, train)
    beta = np.array([b for *_rest, b in rec.graphlets])
    # recompute scores from the record directly
    from lagra.agis import AttributedGraphlet, agis
    ref = []
    for g in train.graphs:
        psi = [agis(AttributedGraphlet(lab, ed, z), g, cfg.rho).score for _k, lab, ed, z, _b in rec.graphlets]
        ref.append(float(np.dot(psi, beta)) + rec.beta0)
    np.testing.assert_allclose(scores, ref, atol=1e-10)
