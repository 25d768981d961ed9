import itertools
import math

import numpy as np
import pytest

from attnot.analysis import (
    TrajectoryRecord,
    accuracy_instancewise,
    accuracy_pointwise,
    compute_report,
    efficiency,
    matching_fraction,
    monge_gap,
    optimality,
    ot_reference,
    recall_per_class,
    transformer_cost,
    transformer_distance,
    wasserstein_distance,
)
from attnot.errors import DimensionMismatchError, ParameterError


def record(inputs, epochs, labels, best=None):
    epochs = np.asarray(epochs, dtype=float)
    return TrajectoryRecord.from_arrays(inputs, epochs, labels, best or epochs.shape[0])


def brute_force_sum(x, y):
    c = np.sqrt(((x[:, None] - y[None]) ** 2).sum(-1))
    n = len(x)
    return min(c[np.arange(n), list(p)].sum() for p in itertools.permutations(range(n)))


def onehot(labels, k, t):
    return np.repeat(np.eye(k)[labels][:, None], t, axis=1)


def test_identity_trace_report():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(4, 3, 2))
    labels = np.array([0, 1, 0, 1])
    rec = record(x, np.stack([x, x]), labels)
    ot = ot_reference(rec)
    assert all(a.sigma.tolist() == list(range(6)) and a.total_cost == 0 for a in ot.values())
    rep = compute_report(rec, onehot(labels, 2, 3), labels)
    assert rep.accuracy_pointwise == rep.accuracy_instancewise == 1.0
    assert rep.matching == 1.0
    assert rep.wasserstein_distance == rep.transformer_distance == rep.transformer_cost == rep.monge_gap == 0.0
    assert rep.efficiency == 1.0 and rep.optimality == 1.0 and rep.degenerate
    assert rep.recall == (1.0, 1.0)


def test_translated_cloud_keeps_identity_optimal():
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = rng.normal(size=(6, 1, 2))
        rec = record(x, [x + rng.normal(size=2) * 3], np.zeros(6, dtype=int))
        ot = ot_reference(rec)
        ident = transformer_distance(rec)
        assert wasserstein_distance(ot) == pytest.approx(ident, abs=1e-9)
        assert wasserstein_distance(ot) == pytest.approx(brute_force_sum(rec.inputs, rec.best), abs=1e-9)
        assert monge_gap(rec, ot) == pytest.approx(0.0, abs=1e-9)
        assert optimality(rec, ot) == pytest.approx(1.0, abs=1e-12)


def test_random_epoch_cloud_matches_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(30):
        x = rng.normal(size=(5, 2, 2))
        labels = np.array([0, 1, 1, 0, 1])
        rec = record(x, rng.normal(size=(2, 5, 2, 2)), labels, best=int(rng.integers(1, 3)))
        ot = ot_reference(rec)
        ref = sum(brute_force_sum(rec.inputs[rec.class_index(k)], rec.best[rec.class_index(k)]) for k in (0, 1))
        assert abs(wasserstein_distance(ot) - ref) <= 1e-9


def test_matching_extremes():
    x = np.random.default_rng(5).normal(size=(4, 1, 2)) * 5
    rec = record(x, [x], np.zeros(4, int))
    assert matching_fraction(rec, ot_reference(rec)) == 1.0
    # every point lands exactly where another one started, so OT undoes a full derangement
    rec = record(x, [x[[1, 2, 3, 0]]], np.zeros(4, int))
    ot = ot_reference(rec)
    assert ot[0].sigma.tolist() == [3, 0, 1, 2]
    assert matching_fraction(rec, ot) == 0.0


def test_distance_and_cost_examples():
    x = np.zeros((2, 1, 2))
    moved = x.copy()
    moved[1, 0] = [3.0, 0.0]
    rec = record(x, [moved], [0, 1])
    assert transformer_distance(rec) == 3.0
    assert transformer_cost(rec) == 3.0
    assert efficiency(rec) == 1.0
    still = record(x, [x, x], [0, 1])
    assert transformer_cost(still) == 0.0


def test_zig_zag_path_costs_more():
    x = np.zeros((1, 1, 2))
    v = np.array([1.0, 2.0])
    rec = record(x, [x + v, x, x + v], [0])
    assert transformer_cost(rec) == pytest.approx(3 * np.linalg.norm(v))
    assert transformer_cost(rec) > transformer_distance(rec)
    assert efficiency(rec) == pytest.approx(1 / 3)
    # the path is only followed up to the best epoch
    assert transformer_cost(record(x, [x + v, x, x + v], [0], best=1)) == pytest.approx(np.linalg.norm(v))


def test_record_validation():
    x = np.zeros((2, 3, 2))
    with pytest.raises(DimensionMismatchError):
        record(x, np.zeros((1, 2, 2, 2)), [0, 1])
    with pytest.raises(ParameterError):
        record(x, np.zeros((1, 2, 3, 2)), [0, 1], best=2)


def test_tie_rule_and_recall():
    probs = np.full((4, 3, 2), 0.5)
    labels = np.array([0, 0, 1, 1])
    assert recall_per_class(probs, labels).tolist() == [1.0, 0.0]
    assert accuracy_pointwise(probs, labels) == 0.5
    rec = recall_per_class(onehot(np.array([0, 0]), 3, 2), np.array([0, 0]))
    assert rec[0] == 1.0 and math.isnan(rec[1]) and math.isnan(rec[2])


def test_instance_averaging():
    probs = np.array([[[0.8, 0.2]] * 3 + [[0.2, 0.8]] * 2])
    assert accuracy_pointwise(probs, [0]) == pytest.approx(0.6)
    assert accuracy_instancewise(probs, [0]) == 1.0


def confusion_oracle(pred, labels, k):
    m = np.zeros((k, k), int)
    for p, y in zip(pred, labels):
        m[y, p] += 1
    return m


def test_accuracy_against_confusion_matrix():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n, t, k = 7, 4, 3
        probs = rng.dirichlet(np.ones(k), size=(n, t))
        labels = rng.integers(0, k, n)
        point = confusion_oracle(probs.argmax(-1).ravel(), np.repeat(labels, t), k)
        inst = confusion_oracle(probs.mean(1).argmax(-1), labels, k)
        assert accuracy_pointwise(probs, labels) == pytest.approx(np.trace(point) / point.sum())
        assert accuracy_instancewise(probs, labels) == pytest.approx(np.trace(inst) / inst.sum())
        rows = inst.sum(1)
        expect = [inst[c, c] / rows[c] if rows[c] else math.nan for c in range(k)]
        np.testing.assert_allclose(recall_per_class(probs, labels), expect)


def test_metric_inequalities_on_fuzzed_traces():
    rng = np.random.default_rng(4)
    for _ in range(100):
        n, t, e = int(rng.integers(2, 6)), int(rng.integers(1, 4)), int(rng.integers(1, 5))
        labels = np.arange(n) % 2
        x = rng.normal(size=(n, t, 2))
        steps = np.cumsum(rng.normal(scale=rng.uniform(0.01, 2), size=(e, n, t, 2)), axis=0)
        rec = record(x, x + steps, labels, best=int(rng.integers(1, e + 1)))
        ot = ot_reference(rec)
        assert wasserstein_distance(ot) <= transformer_distance(rec) + 1e-9
        assert monge_gap(rec, ot) >= -1e-9
        assert optimality(rec, ot) <= 1 + 1e-12
        assert transformer_cost(rec) >= transformer_distance(rec) - 1e-9
        assert efficiency(rec) <= 1 + 1e-12


def test_report_without_trajectory():
    labels = np.array([1, 0])
    rep = compute_report(None, onehot(labels, 2, 3), labels, elapsed_s=0.5)
    assert rep.accuracy_pointwise == 1.0 and rep.computational_time_s == 0.5
    assert math.isnan(rep.matching) and math.isnan(rep.efficiency)
    assert "computational_time_s" not in rep.as_dict(include_time=False)
    assert list(rep.as_dict())[-2:] == ["recall_class_0", "recall_class_1"]
