"""Optimal-transport diagnostics of a recorded encoder trajectory.

Inputs and their per-epoch encoder images are compared class by class.
Within a class, point ``i`` of the input cloud and point ``i`` of a
projection cloud are the same (instance, timestep), so the encoder itself
induces the identity pairing; the exact assignment between the input cloud
and the best-epoch cloud is the reference it is measured against. All
distances use the Euclidean ground metric with exponent 1 and are summed
over points and classes.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DimensionMismatchError, ParameterError
from .ot import build_cost_matrix, solve_assignment

__all__ = [
    "TrajectoryRecord",
    "MetricsReport",
    "REPORT_COLUMNS",
    "ot_reference",
    "matching_fraction",
    "wasserstein_distance",
    "transformer_distance",
    "transformer_cost",
    "monge_gap",
    "optimality",
    "efficiency",
    "accuracy_pointwise",
    "accuracy_instancewise",
    "recall_per_class",
    "compute_report",
]


@dataclass(frozen=True)
class TrajectoryRecord:
    """Flattened trajectory: ``inputs`` (N, p), ``epochs`` (E, N, p), ``classes`` (N,).

    ``point_ids[j] = (instance, timestep)`` identifies point ``j`` in every
    epoch. ``best_epoch`` is 1-based; epoch 0 is the input itself.
    """

    inputs: np.ndarray
    epochs: np.ndarray
    classes: np.ndarray
    point_ids: np.ndarray
    best_epoch: int

    def __post_init__(self):
        if self.epochs.ndim != 3 or self.epochs.shape[1:] != self.inputs.shape:
            raise DimensionMismatchError(
                f"projections {self.epochs.shape} do not match inputs {self.inputs.shape}",
                self.epochs.shape,
                self.inputs.shape,
            )
        if self.classes.shape != (self.inputs.shape[0],):
            raise DimensionMismatchError("one class label per point is required")
        if not 1 <= self.best_epoch <= self.epochs.shape[0]:
            raise ParameterError(f"best_epoch {self.best_epoch} outside 1..{self.epochs.shape[0]}")

    @classmethod
    def from_arrays(cls, inputs, projections, labels, best_epoch):
        """Build from an (n, t, p) input cube, (E, n, t, p) projections and per-instance labels."""
        inputs = np.asarray(inputs, dtype=float)
        projections = np.asarray(projections, dtype=float)
        n, t, p = inputs.shape
        if projections.ndim != 4 or projections.shape[1:] != inputs.shape:
            raise DimensionMismatchError(
                f"projections {projections.shape} do not match inputs {inputs.shape}",
                projections.shape,
                inputs.shape,
            )
        labels = np.asarray(labels)
        ids = np.stack(np.meshgrid(np.arange(n), np.arange(t), indexing="ij"), -1).reshape(-1, 2)
        return cls(
            inputs=inputs.reshape(-1, p),
            epochs=projections.reshape(projections.shape[0], -1, p),
            classes=np.repeat(labels, t),
            point_ids=ids,
            best_epoch=int(best_epoch),
        )

    @classmethod
    def from_trace(cls, trace):
        if trace.epochs < 1:
            raise ParameterError("trajectory needs at least one epoch")
        return cls.from_arrays(trace.inputs, trace.projections, trace.labels, trace.best_epoch)

    @property
    def n_epochs(self):
        return self.epochs.shape[0]

    def labels(self):
        return np.unique(self.classes)

    def class_index(self, k):
        return np.flatnonzero(self.classes == k)

    def projection(self, epoch):
        return self.inputs if epoch == 0 else self.epochs[epoch - 1]

    @property
    def best(self):
        return self.projection(self.best_epoch)


def ot_reference(record):
    """Exact exponent-1 assignment, per class, from inputs to best-epoch projections."""
    out = {}
    best = record.best
    for k in record.labels():
        idx = record.class_index(k)
        out[int(k)] = solve_assignment(build_cost_matrix(record.inputs[idx], best[idx], 1.0))
    return out


def matching_fraction(record, ot):
    """Share of points whose OT partner is their own best-epoch image."""
    hits = sum(int(np.sum(a.sigma == np.arange(a.n))) for a in ot.values())
    total = sum(a.n for a in ot.values())
    return hits / total


def wasserstein_distance(ot):
    """Summed optimal cost over classes (``n_k`` times each per-class mean cost)."""
    return float(sum(a.n * a.total_cost for a in ot.values()))


def _displacement(a, b):
    return np.sqrt(((a - b) ** 2).sum(-1))


def transformer_distance(record):
    """Total straight-line displacement from each input to its best-epoch image."""
    return float(_displacement(record.inputs, record.best).sum())


def transformer_cost(record):
    """Path length of every point through epochs ``0..best_epoch``."""
    if record.n_epochs < 1:
        raise ParameterError("transformer cost needs at least one epoch")
    path = np.concatenate([record.inputs[None], record.epochs[: record.best_epoch]])
    return float(_displacement(path[1:], path[:-1]).sum())


def monge_gap(record, ot):
    return transformer_distance(record) - wasserstein_distance(ot)


def _ratio(num, den):
    if den <= 0.0:
        return 1.0, True
    return num / den, False


def optimality(record, ot):
    """Wasserstein distance over transformer distance; 1.0 when nothing moved."""
    return _ratio(wasserstein_distance(ot), transformer_distance(record))[0]


def efficiency(record):
    """Transformer distance over transformer cost; 1.0 for a stationary trace."""
    return _ratio(transformer_distance(record), transformer_cost(record))[0]


def _argmax(probs):
    # np.argmax returns the first maximum, i.e. ties go to the lowest class index
    return np.argmax(probs, axis=-1)


def accuracy_pointwise(probs, labels):
    probs = np.asarray(probs)
    n, t, _ = probs.shape
    y = np.broadcast_to(np.asarray(labels).reshape(n, -1), (n, t))
    return float(np.mean(_argmax(probs) == y))


def instance_predictions(probs):
    return _argmax(np.asarray(probs).mean(axis=1))


def accuracy_instancewise(probs, labels):
    return float(np.mean(instance_predictions(probs) == np.asarray(labels)))


def recall_per_class(probs, labels, n_classes=None):
    """Instance-wise recall for each class; NaN for a class with no instances."""
    probs = np.asarray(probs)
    labels = np.asarray(labels)
    k = probs.shape[-1] if n_classes is None else n_classes
    pred = instance_predictions(probs)
    out = np.full(k, np.nan)
    for c in range(k):
        mask = labels == c
        if mask.any():
            out[c] = float(np.mean(pred[mask] == c))
    return out


REPORT_COLUMNS = (
    "accuracy_pointwise",
    "computational_time_s",
    "matching",
    "wasserstein_distance",
    "transformer_distance",
    "transformer_cost",
    "monge_gap",
    "efficiency",
    "optimality",
    "best_epoch",
    "accuracy_instancewise",
)


@dataclass
class MetricsReport:
    """One repetition's metrics. Trajectory fields are NaN for pipelines without a trace."""

    accuracy_pointwise: float
    accuracy_instancewise: float
    computational_time_s: float = math.nan
    matching: float = math.nan
    wasserstein_distance: float = math.nan
    transformer_distance: float = math.nan
    transformer_cost: float = math.nan
    monge_gap: float = math.nan
    efficiency: float = math.nan
    optimality: float = math.nan
    best_epoch: float = math.nan
    recall: tuple = ()
    degenerate: bool = False
    extra: dict = field(default_factory=dict)

    def columns(self, include_time=True):
        cols = [c for c in REPORT_COLUMNS if include_time or c != "computational_time_s"]
        return cols + [f"recall_class_{k}" for k in range(len(self.recall))]

    def as_dict(self, include_time=True):
        d = asdict(self)
        out = {c: d[c] for c in REPORT_COLUMNS if include_time or c != "computational_time_s"}
        for k, r in enumerate(self.recall):
            out[f"recall_class_{k}"] = float(r)
        return out


def compute_report(record, probs, labels, elapsed_s=math.nan):
    """Assemble every metric for one trained model and its trajectory.

    ``record`` may be None for models without a trajectory (only accuracy
    and recall are then filled in).
    """
    k = np.asarray(probs).shape[-1]
    rep = MetricsReport(
        accuracy_pointwise=accuracy_pointwise(probs, labels),
        accuracy_instancewise=accuracy_instancewise(probs, labels),
        computational_time_s=float(elapsed_s),
        recall=tuple(recall_per_class(probs, labels, k)),
    )
    if record is None:
        return rep
    ot = ot_reference(record)
    td = transformer_distance(record)
    wd = wasserstein_distance(ot)
    tc = transformer_cost(record)
    opt, deg1 = _ratio(wd, td)
    eff, deg2 = _ratio(td, tc)
    rep.matching = matching_fraction(record, ot)
    rep.wasserstein_distance = wd
    rep.transformer_distance = td
    rep.transformer_cost = tc
    rep.monge_gap = td - wd
    rep.optimality = opt
    rep.efficiency = eff
    rep.best_epoch = float(record.best_epoch)
    rep.degenerate = deg1 or deg2
    return rep
