"""Transport-based classifier for (instance, timestep, feature) data.

Fitting:

1. draw one dummy point per real point from a well-separated Gaussian for
   that point's label;
2. match real to dummy points exactly, label by label (optionally in
   chunks of ``ot_batch_size`` points);
3. fit an MLP regression ``f: R^p -> R^p`` on the matched pairs.

Prediction remaps each point through ``f`` and scores label ``k`` by the
distance to its dummy centroid ``c_k``: a point gets ``softmax(-d_k)``, an
instance gets ``softmax(-sum_t d_k)``.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from .data import Standardizer, equidistant_means, rng_for
from .errors import AttnOTError, DimensionMismatchError, ParameterError
from .nn import MLP, fit_regressor, load_checkpoint, save_checkpoint, softmax
from .ot import build_cost_matrix, solve_assignment

__all__ = ["OTFitConfig", "OTClassifier", "NotFittedError", "default_dummy_means", "label_probabilities"]


class NotFittedError(AttnOTError, RuntimeError):
    pass


@dataclass
class OTFitConfig:
    """Parameters of the transport classifier.

    ``dummy_means`` overrides the default layout (K equidistant means at
    pairwise distance ``dummy_separation``, centred on the origin).
    ``ot_batch_size = 0`` solves one assignment per label.
    """

    mlp_epochs: int = 50
    mlp_units: tuple = (32, 32)
    dropout: float = 0.3
    learning_rate: float = 0.01
    batch_size: int = 32
    ot_batch_size: int = 0
    dummy_separation: float = 10.0
    dummy_covariance_scale: float = 1.0
    dummy_means: object = None
    seed: int = 0

    def __post_init__(self):
        self.mlp_units = tuple(int(u) for u in np.atleast_1d(self.mlp_units))
        if self.mlp_epochs < 1 or any(u < 1 for u in self.mlp_units):
            raise ParameterError("mlp_epochs and mlp_units must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ParameterError("dropout must be in [0, 1)")
        if self.learning_rate <= 0 or self.batch_size < 0 or self.ot_batch_size < 0:
            raise ParameterError("learning_rate must be positive and batch sizes non-negative")
        if self.dummy_separation <= 0 or self.dummy_covariance_scale <= 0:
            raise ParameterError("dummy layout parameters must be positive")
        if self.dummy_means is not None:
            self.dummy_means = np.asarray(self.dummy_means, dtype=float)

    def to_dict(self):
        d = asdict(self)
        d["mlp_units"] = list(self.mlp_units)
        d["dummy_means"] = None if self.dummy_means is None else np.asarray(self.dummy_means).tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown OT model parameters: {sorted(unknown)}")
        return cls(**d)


def default_dummy_means(k, p, separation=10.0):
    """Equidistant label means centred on the origin."""
    means = equidistant_means(k, separation, p)
    return means - means.mean(0)


def label_probabilities(distances):
    """``softmax(-d)`` over the last axis."""
    return softmax(-np.asarray(distances, dtype=float))


class OTClassifier:
    """Fit with :meth:`fit`, then :meth:`remap` / :meth:`predict_proba` / :meth:`predict`."""

    def __init__(self, config=None):
        self.config = config or OTFitConfig()
        self.centroids = None
        self.mlp = None
        self.params = None
        self.scaler = None
        self.labels_ = None
        self.best_epoch = None
        self.history = None
        self.assignments = None
        self.fit_time_s = None

    @property
    def fitted(self):
        return self.params is not None

    def _dummy_means(self, k, p):
        cfg = self.config
        if cfg.dummy_means is None:
            return default_dummy_means(k, p, cfg.dummy_separation)
        means = np.asarray(cfg.dummy_means, dtype=float)
        if means.shape != (k, p):
            raise DimensionMismatchError(f"dummy_means has shape {means.shape}, expected {(k, p)}")
        if k > 1:
            gaps = np.sqrt(((means[:, None] - means[None]) ** 2).sum(-1))[~np.eye(k, dtype=bool)]
            if gaps.min() <= 0:
                raise ParameterError("dummy means must be pairwise distinct")
        return means

    def fit(self, data, scaler=None):
        """Fit on a standardized :class:`~attnot.data.DatasetTensor`.

        ``scaler`` is stored only so it can be persisted with the model.
        """
        cfg = self.config
        start = time.perf_counter()
        x = np.asarray(data.data, dtype=float)
        n, t, p = x.shape
        k = data.n_classes
        if k < 2:
            raise ParameterError("need at least two labels")
        means = self._dummy_means(k, p)
        rng = rng_for(cfg.seed, 3)

        points = x.reshape(-1, p)
        point_labels = np.repeat(data.labels, t)
        # noise is drawn in point order so relabelling the classes leaves the geometry unchanged
        chol = np.sqrt(cfg.dummy_covariance_scale)
        dummy = means[point_labels] + chol * rng.standard_normal(points.shape)
        order = rng.permutation(points.shape[0])

        targets = np.empty_like(points)
        assignments = {}
        for label in range(k):
            idx = np.flatnonzero(point_labels == label)
            if idx.size == 0:
                continue
            pairs = self._match(points, dummy, idx, order)
            targets[pairs[:, 0]] = dummy[pairs[:, 1]]
            assignments[label] = pairs
        self.mlp, self.params, self.history, self.best_epoch = fit_regressor(
            points,
            targets,
            units=cfg.mlp_units,
            dropout=cfg.dropout,
            learning_rate=cfg.learning_rate,
            epochs=cfg.mlp_epochs,
            batch_size=cfg.batch_size,
            seed=cfg.seed,
        )
        self.centroids = means
        self.scaler = scaler
        self.labels_ = np.arange(k)
        self.assignments = assignments
        self.fit_time_s = time.perf_counter() - start
        return self

    def _match(self, points, dummy, idx, order):
        """Matched (real, dummy) global index pairs for one label."""
        bs = self.config.ot_batch_size
        if not bs or bs >= idx.size:
            chunks = [idx]
            dummy_chunks = [idx]
        else:
            in_label = np.zeros(points.shape[0], dtype=bool)
            in_label[idx] = True
            shuffled = order[in_label[order]]
            chunks = [shuffled[i : i + bs] for i in range(0, idx.size, bs)]
            # each real chunk gets its own, disjoint chunk of dummy points
            dummy_chunks = [idx[i : i + bs] for i in range(0, idx.size, bs)]
        out = []
        for real_chunk, dummy_chunk in zip(chunks, dummy_chunks):
            a = solve_assignment(build_cost_matrix(points[real_chunk], dummy[dummy_chunk], 1.0))
            out.append(np.column_stack([real_chunk, dummy_chunk[a.sigma]]))
        return np.concatenate(out)

    def _require_fitted(self):
        if not self.fitted:
            raise NotFittedError("model is not fitted; call fit() first")

    def remap(self, x):
        """Apply the learned transport map pointwise; shape is preserved."""
        self._require_fitted()
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.centroids.shape[1]:
            raise DimensionMismatchError(f"input has {x.shape[-1]} features, model expects {self.centroids.shape[1]}")
        out, _ = self.mlp.forward(self.params, x.reshape(-1, x.shape[-1]))
        return out.reshape(x.shape)

    def distances(self, x_remapped):
        diff = np.asarray(x_remapped)[..., None, :] - self.centroids
        return np.sqrt((diff**2).sum(-1))

    def predict_proba(self, x):
        """Point probabilities (n, t, K) and instance probabilities (n, K)."""
        self._require_fitted()
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            x = x[:, None, :]
        d = self.distances(self.remap(x))
        return label_probabilities(d), label_probabilities(d.sum(axis=1))

    def predict(self, x):
        """Instance labels (argmax of instance probabilities, ties to the lowest label)."""
        return np.argmax(self.predict_proba(x)[1], axis=-1)

    def save(self, path):
        self._require_fitted()
        header = {
            "kind": "ot-model",
            "config": self.config.to_dict(),
            "units": list(self.mlp.units),
            "n_features": int(self.centroids.shape[1]),
            "centroids": self.centroids.tolist(),
            "best_epoch": int(self.best_epoch),
            "scaler": None
            if self.scaler is None
            else {"means": self.scaler.means.tolist(), "sds": self.scaler.sds.tolist()},
        }
        save_checkpoint(path, self.params, header)

    @classmethod
    def load(cls, path):
        params, header = load_checkpoint(path)
        if header.get("kind") != "ot-model":
            raise ParameterError(f"{path} is not an OT model checkpoint")
        model = cls(OTFitConfig.from_dict(header["config"]))
        p = header["n_features"]
        model.mlp = MLP(p, header["units"], p, model.config.dropout, output=None, prefix="map.")
        model.params = params
        model.centroids = np.asarray(header["centroids"], dtype=float)
        model.labels_ = np.arange(model.centroids.shape[0])
        model.best_epoch = header["best_epoch"]
        if header["scaler"] is not None:
            model.scaler = Standardizer(np.asarray(header["scaler"]["means"]), np.asarray(header["scaler"]["sds"]))
        return model
