"""Gaussian-cloud classification datasets.

A dataset is an ``(n, t, p)`` cube: ``n`` instances, each a sequence of
``t`` i.i.d. draws from its class Gaussian in ``p`` features. Classes are
unit-covariance Gaussians whose means are laid out so that the Gaussian W2
separation between classes equals a single scalar.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatchError, ParameterError, ParseError
from .ot import GaussianSpec, gaussian_wasserstein2

__all__ = [
    "DatasetTensor",
    "ClassLayout",
    "DummyLayout",
    "Standardizer",
    "make_layout",
    "equidistant_means",
    "sample_dataset",
    "standardize",
    "rotate_layout",
    "make_dummy_dataset",
    "rng_for",
    "write_dataset_csv",
    "read_dataset_csv",
]


def rng_for(seed, *keys):
    """Independent generator for ``seed`` and optional stream keys (e.g. a repetition index).

    ``seed`` may itself be a tuple of integers.
    """
    base = list(seed) if isinstance(seed, (tuple, list)) else [seed]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(s) for s in (*base, *keys)])))


@dataclass(frozen=True)
class DatasetTensor:
    data: np.ndarray
    labels: np.ndarray
    n_classes: int = None

    def __post_init__(self):
        x = np.asarray(self.data, dtype=float)
        y = np.asarray(self.labels).astype(np.int64)
        if x.ndim != 3 or min(x.shape) < 1:
            raise ParameterError(f"data must be (n, t, p) with all sizes >= 1, got {x.shape}")
        if y.shape != (x.shape[0],):
            raise DimensionMismatchError(f"{x.shape[0]} instances but labels of shape {y.shape}")
        if y.size and y.min() < 0:
            raise ParameterError("labels must be non-negative")
        k = int(y.max()) + 1 if self.n_classes is None else int(self.n_classes)
        if y.size and y.max() >= k:
            raise ParameterError(f"label {y.max()} out of range for {k} classes")
        object.__setattr__(self, "data", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "n_classes", k)

    @property
    def shape(self):
        return self.data.shape

    def point_labels(self):
        """Label of each (instance, timestep) point, shape (n, t)."""
        return np.broadcast_to(self.labels[:, None], self.data.shape[:2])


@dataclass(frozen=True)
class ClassLayout:
    specs: tuple
    target_separation: float

    @property
    def k(self):
        return len(self.specs)

    @property
    def dim(self):
        return self.specs[0].dim

    @property
    def means(self):
        return np.stack([s.mean for s in self.specs])

    def pairwise_w2(self):
        return np.array(
            [
                [gaussian_wasserstein2(a, b) for b in self.specs]
                for a in self.specs
            ]
        )


@dataclass(frozen=True)
class DummyLayout:
    base: ClassLayout
    rotation_degrees: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "rotation_degrees", float(self.rotation_degrees) % 360.0)

    def resolve(self):
        return rotate_layout(self.base, self.rotation_degrees)


def equidistant_means(k, distance, dim):
    """``k`` means with all pairwise distances equal to ``distance`` where possible.

    k = 2 is collinear on the first axis, k = 3 an equilateral triangle in the
    first two axes. Larger k uses a regular simplex when ``dim >= k - 1`` and
    otherwise a regular polygon in the first two axes, which is not
    equidistant.
    """
    if k < 1:
        raise ParameterError("need at least one class")
    if distance <= 0:
        raise ParameterError(f"separation must be positive, got {distance}")
    if dim < 1 or (k > 2 and dim < 2):
        raise ParameterError(f"dimension {dim} too small for {k} classes")
    means = np.zeros((k, dim))
    if k == 1:
        return means
    if k == 2:
        means[1, 0] = distance
        return means
    if k == 3:
        means[1, 0] = distance
        means[2, 0] = distance / 2.0
        means[2, 1] = distance * np.sqrt(3.0) / 2.0
        return means
    if dim >= k - 1:
        # regular simplex: scaled standard basis vertices, projected to k-1 dims
        e = np.eye(k) * (distance / np.sqrt(2.0))
        centered = e - e.mean(0)
        _, _, vt = np.linalg.svd(centered)
        means[:, : k - 1] = centered @ vt[: k - 1].T
        return means
    angles = 2 * np.pi * np.arange(k) / k
    radius = distance / (2 * np.sin(np.pi / k))
    means[:, 0] = radius * np.cos(angles)
    means[:, 1] = radius * np.sin(angles)
    return means


def make_layout(k, separation, dim=2, covariance_scale=1.0):
    """Unit-covariance class Gaussians separated by ``separation`` in W2."""
    means = equidistant_means(k, separation, dim)
    cov = np.eye(dim) * covariance_scale
    return ClassLayout(tuple(GaussianSpec(m, cov) for m in means), float(separation))


def rotate_layout(layout, degrees):
    """Rotate class means in the first two axes about the centroid of all means."""
    if degrees % 360.0 == 0.0:
        return layout
    if layout.dim < 2:
        raise ParameterError("rotation needs at least two feature dimensions")
    theta = np.deg2rad(degrees)
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    means = layout.means
    centroid = means.mean(0)
    rotated = means.copy()
    rotated[:, :2] = (means[:, :2] - centroid[:2]) @ rot.T + centroid[:2]
    specs = tuple(replace(spec, mean=m) for spec, m in zip(layout.specs, rotated))
    return ClassLayout(specs, layout.target_separation)


def _check_counts(layout, n, t):
    if n < 1 or t < 1:
        raise ParameterError(f"need n, t >= 1, got n={n}, t={t}")
    if n % layout.k:
        raise ParameterError(f"n={n} is not divisible by the class count {layout.k}")


def sample_dataset(layout, n, t, seed):
    """Balanced dataset: ``n / K`` instances per class, instance ``i`` has label ``i // (n / K)``."""
    _check_counts(layout, n, t)
    rng = rng_for(seed)
    per = n // layout.k
    labels = np.repeat(np.arange(layout.k), per)
    data = np.empty((n, t, layout.dim))
    for k, spec in enumerate(layout.specs):
        data[labels == k] = spec.sample(rng, per * t).reshape(per, t, layout.dim)
    return DatasetTensor(data, labels, layout.k)


def make_dummy_dataset(layout, n, t, seed):
    """Sample from a (possibly rotated) dummy layout."""
    if isinstance(layout, DummyLayout):
        layout = layout.resolve()
    return sample_dataset(layout, n, t, seed)


@dataclass(frozen=True)
class Standardizer:
    """Per-feature z-score transform pooled over all instances and timesteps."""

    means: np.ndarray
    sds: np.ndarray

    @classmethod
    def fit(cls, data):
        x = np.asarray(data, dtype=float)
        flat = x.reshape(-1, x.shape[-1])
        mu = flat.mean(0)
        sd = flat.std(0)
        bad = np.flatnonzero(~(sd > 0))
        if bad.size:
            raise ParameterError(f"feature {int(bad[0])} has zero variance; cannot standardize")
        return cls(mu, sd)

    def transform(self, data):
        return (np.asarray(data, dtype=float) - self.means) / self.sds

    def inverse(self, data):
        return np.asarray(data, dtype=float) * self.sds + self.means


def standardize(d, scaler=None):
    """Z-score every feature over all ``n * t`` points.

    Returns the standardized dataset and the fitted :class:`Standardizer`;
    pass ``scaler`` to reuse training parameters on test data.
    """
    if scaler is None:
        scaler = Standardizer.fit(d.data)
    return replace(d, data=scaler.transform(d.data)), scaler


def write_dataset_csv(d, path):
    """Long format: ``instance,timestep,label,f1..fp``, one row per point."""
    n, t, p = d.shape
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["instance", "timestep", "label", *[f"f{j + 1}" for j in range(p)]])
        for i in range(n):
            for s in range(t):
                w.writerow([i, s, int(d.labels[i]), *(repr(float(v)) for v in d.data[i, s])])


def read_dataset_csv(path, n_classes=None):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:3] != ["instance", "timestep", "label"] or len(header) < 4:
            raise ParseError("expected header instance,timestep,label,f1..fp", path, 1)
        p = len(header) - 3
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != p + 3:
                raise ParseError(f"expected {p + 3} fields, got {len(row)}", path, lineno)
            try:
                rows.append((int(row[0]), int(row[1]), int(row[2]), [float(v) for v in row[3:]]))
            except ValueError as exc:
                raise ParseError(str(exc), path, lineno) from None
    if not rows:
        raise ParseError("no data rows", path, 2)
    n = max(r[0] for r in rows) + 1
    t = max(r[1] for r in rows) + 1
    if len(rows) != n * t:
        raise ParseError(f"{len(rows)} rows do not form a complete {n}x{t} grid", path, len(rows) + 1)
    data = np.empty((n, t, p))
    labels = np.full(n, -1, dtype=np.int64)
    for lineno, (i, s, y, feats) in enumerate(rows, start=2):
        if labels[i] not in (-1, y):
            raise ParseError(f"instance {i} has inconsistent labels", path, lineno)
        labels[i] = y
        data[i, s] = feats
    return DatasetTensor(data, labels, n_classes)
