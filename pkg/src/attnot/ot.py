"""Exact discrete optimal transport.

Cost matrices under the Euclidean ground metric, the optimal assignment
problem (uniform measures of equal size), the Kantorovich linear program for
arbitrary discrete marginals, Wasserstein distances between point clouds, the
closed-form 2-Wasserstein distance between Gaussians and the discrete
push-forward of a measure through an assignment.

All functions are pure. Assignments are solved with a shortest augmenting
path (Jonker-Volgenant type) solver and couplings with a dual simplex, so
both are exact optima rather than entropic approximations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog
from scipy.sparse import coo_matrix

from .errors import DimensionMismatchError, ParameterError, SolverError

__all__ = [
    "PointCloud",
    "Assignment",
    "Coupling",
    "GaussianSpec",
    "build_cost_matrix",
    "solve_assignment",
    "solve_kantorovich",
    "wasserstein",
    "gaussian_wasserstein2",
    "push_forward",
    "sqrtm_psd",
]

SIMPLEX_TOL = 1e-9
_EIG_CLAMP = 1e-12


def _check_simplex(w, name):
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ParameterError(f"{name} must be a non-empty 1-D probability vector")
    if np.any(w < -SIMPLEX_TOL) or abs(w.sum() - 1.0) > SIMPLEX_TOL:
        raise ParameterError(f"{name} is not on the probability simplex (sum={w.sum()!r})")
    return w


@dataclass(frozen=True)
class PointCloud:
    """Weighted discrete measure ``sum_i w_i * delta(x_i)``.

    ``points`` is (n, p). ``weights`` defaults to uniform ``1/n``.
    """

    points: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise ParameterError(f"points must be an (n, p) array with n, p >= 1, got {pts.shape}")
        if self.weights is None:
            w = np.full(pts.shape[0], 1.0 / pts.shape[0])
        else:
            w = _check_simplex(self.weights, "weights")
            if w.shape[0] != pts.shape[0]:
                raise DimensionMismatchError(
                    f"{pts.shape[0]} points but {w.shape[0]} weights", pts.shape[0], w.shape[0]
                )
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def is_uniform(self):
        return bool(np.all(self.weights == self.weights[0]))


def _as_cloud(x):
    return x if isinstance(x, PointCloud) else PointCloud(x)


@dataclass(frozen=True)
class Assignment:
    """Optimal bijection. ``sigma[i]`` is the target index of source ``i``.

    ``total_cost`` is the mean matched cost ``(1/n) sum_i C[i, sigma[i]]``.
    """

    sigma: np.ndarray
    total_cost: float

    @property
    def n(self):
        return self.sigma.shape[0]

    def pairs(self):
        return set(zip(range(self.n), self.sigma.tolist()))


@dataclass(frozen=True)
class Coupling:
    plan: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray
    total_cost: float


@dataclass(frozen=True)
class GaussianSpec:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise DimensionMismatchError(
                f"covariance {cov.shape} does not match mean dimension {mean.size}",
                cov.shape,
                mean.size,
            )
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12):
            raise ParameterError("covariance is not symmetric")
        if np.linalg.eigvalsh(cov).min() < -1e-10:
            raise ParameterError("covariance is not positive semi-definite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self):
        return self.mean.size

    def sample(self, rng, size):
        return rng.multivariate_normal(self.mean, self.covariance, size=size, method="eigh")


def build_cost_matrix(a, b, exponent=1.0):
    """Pairwise Euclidean costs ``C[i, j] = ||a_i - b_j||**exponent``.

    ``a`` and ``b`` may be point clouds or (n, p) arrays.
    """
    if exponent < 1:
        raise ParameterError(f"ground exponent must be >= 1, got {exponent}")
    x = _as_cloud(a).points
    y = _as_cloud(b).points
    if x.shape[1] != y.shape[1]:
        raise DimensionMismatchError(
            f"point dimensions differ: {x.shape[1]} vs {y.shape[1]}", x.shape[1], y.shape[1]
        )
    diff = x[:, None, :] - y[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    if exponent == 1:
        return dist
    return dist**exponent


def solve_assignment(cost):
    """Exact minimum-cost bijection on a square cost matrix."""
    c = np.asarray(cost, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise DimensionMismatchError(f"assignment needs a square cost matrix, got {c.shape}", *c.shape[:2])
    rows, cols = linear_sum_assignment(c)
    sigma = np.empty(c.shape[0], dtype=np.intp)
    sigma[rows] = cols
    return Assignment(sigma=sigma, total_cost=float(c[rows, cols].mean()))


def solve_kantorovich(a, b, cost):
    """Vertex-optimal coupling of ``min <C, P>`` over ``U(a, b)``.

    Solved as a transportation LP with the HiGHS dual simplex at tight
    feasibility tolerances; the returned plan is clipped at zero and the
    residual marginal error is checked before returning.
    """
    a = _check_simplex(a, "a")
    b = _check_simplex(b, "b")
    c = np.asarray(cost, dtype=float)
    n, m = a.size, b.size
    if c.shape != (n, m):
        raise DimensionMismatchError(f"cost {c.shape} does not match marginals ({n}, {m})", c.shape, (n, m))
    if n == 1 or m == 1:
        plan = np.outer(a, b)
        return Coupling(plan, a, b, float((c * plan).sum()))

    idx = np.arange(n * m)
    rows = np.concatenate([idx // m, n + idx % m])
    a_eq = coo_matrix((np.ones(2 * n * m), (rows, np.concatenate([idx, idx]))), shape=(n + m, n * m))
    b_eq = np.concatenate([a, b])
    res = linprog(
        c.ravel(),
        A_eq=a_eq.tocsr(),
        b_eq=b_eq,
        bounds=(0, None),
        method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise SolverError(f"transportation LP failed: {res.message}")
    plan = np.clip(res.x.reshape(n, m), 0.0, None)
    err = max(np.abs(plan.sum(1) - a).max(), np.abs(plan.sum(0) - b).max())
    if err > 1e-8:
        raise SolverError(f"transportation LP marginal residual {err:.3e} exceeds 1e-8")
    return Coupling(plan, a, b, float((c * plan).sum()))


def wasserstein(a, b, order=1.0):
    """p-Wasserstein distance between two weighted point clouds.

    Uniform clouds of equal size go through the assignment solver (an
    optimal coupling is then a permutation); everything else through the
    Kantorovich LP.
    """
    if order < 1:
        raise ParameterError(f"Wasserstein order must be >= 1, got {order}")
    ca, cb = _as_cloud(a), _as_cloud(b)
    c = build_cost_matrix(ca, cb, order)
    if ca.n == cb.n and ca.is_uniform and cb.is_uniform:
        cost = solve_assignment(c).total_cost
    else:
        cost = solve_kantorovich(ca.weights, cb.weights, c).total_cost
    return float(max(cost, 0.0) ** (1.0 / order))


def sqrtm_psd(m):
    """Symmetric PSD square root via eigendecomposition, clamping tiny negative eigenvalues."""
    m = 0.5 * (m + m.T)
    vals, vecs = np.linalg.eigh(m)
    vals = np.where(vals < _EIG_CLAMP, 0.0, vals)
    return (vecs * np.sqrt(vals)) @ vecs.T


def gaussian_wasserstein2(g1, g2):
    """Closed-form W2 between two Gaussians (Bures metric on covariances)."""
    if g1.dim != g2.dim:
        raise DimensionMismatchError(f"Gaussian dimensions differ: {g1.dim} vs {g2.dim}", g1.dim, g2.dim)
    mean_term = float(np.sum((g1.mean - g2.mean) ** 2))
    s1 = sqrtm_psd(g1.covariance)
    cross = sqrtm_psd(s1 @ g2.covariance @ s1)
    bures = float(np.trace(g1.covariance + g2.covariance - 2.0 * cross))
    return float(np.sqrt(max(mean_term + max(bures, 0.0), 0.0)))


def push_forward(assignment, source, target):
    """Discrete push-forward ``T#mu = sum_i a_i delta(T(x_i))`` with ``T(x_i) = y_{sigma(i)}``."""
    src, tgt = _as_cloud(source), _as_cloud(target)
    sigma = np.asarray(assignment.sigma)
    if sigma.shape[0] != src.n:
        raise DimensionMismatchError(f"assignment has {sigma.shape[0]} entries, source has {src.n} points")
    if sigma.size and (sigma.min() < 0 or sigma.max() >= tgt.n):
        raise IndexError(f"assignment index out of range for target of size {tgt.n}")
    return PointCloud(tgt.points[sigma], src.weights.copy())
