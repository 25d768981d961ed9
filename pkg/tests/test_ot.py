import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attnot.errors import DimensionMismatchError, ParameterError
from attnot.ot import (
    GaussianSpec,
    PointCloud,
    build_cost_matrix,
    gaussian_wasserstein2,
    push_forward,
    solve_assignment,
    solve_kantorovich,
    wasserstein,
)


def brute_force_mean_cost(c):
    n = c.shape[0]
    return min(c[np.arange(n), list(perm)].mean() for perm in itertools.permutations(range(n)))


def test_cost_matrix_examples():
    a = PointCloud([[0.0, 0.0], [1.0, 0.0]])
    b = PointCloud([[0.0, 1.0], [2.0, 0.0]])
    np.testing.assert_allclose(build_cost_matrix(a, b, 1.0), [[1.0, 2.0], [np.sqrt(2.0), 1.0]])
    assert build_cost_matrix([[0.0]], [[3.0]], 2.0).tolist() == [[9.0]]
    x = np.random.default_rng(0).normal(size=(5, 3))
    assert np.all(np.diag(build_cost_matrix(x, x, 2.0)) == 0.0)


def test_cost_matrix_errors():
    with pytest.raises(DimensionMismatchError) as info:
        build_cost_matrix(np.zeros((2, 2)), np.zeros((3, 3)))
    assert (info.value.left, info.value.right) == (2, 3)
    with pytest.raises(ParameterError):
        build_cost_matrix(np.zeros((2, 2)), np.zeros((2, 2)), 0.5)


def test_assignment_diagonal_and_monotone():
    c = np.full((4, 4), 5.0)
    np.fill_diagonal(c, 1.0)
    assert solve_assignment(c).sigma.tolist() == [0, 1, 2, 3]
    a = np.array([[0.0], [1.0], [2.0]])
    c = build_cost_matrix(a, a + 0.1, 2.0)
    assert solve_assignment(c).sigma.tolist() == [0, 1, 2]
    assert solve_assignment(c).total_cost == pytest.approx(brute_force_mean_cost(c), abs=1e-12)


def test_assignment_matches_exhaustive_search():
    for seed in range(50):
        c = np.random.default_rng(seed).random((6, 6))
        a = solve_assignment(c)
        assert sorted(a.sigma.tolist()) == list(range(6))
        assert abs(a.total_cost - brute_force_mean_cost(c)) <= 1e-9
        assert a.total_cost == pytest.approx(c[np.arange(6), a.sigma].mean(), abs=0)


def test_assignment_rejects_rectangular():
    with pytest.raises(DimensionMismatchError):
        solve_assignment(np.zeros((2, 3)))


def test_kantorovich_examples():
    k = solve_kantorovich([1.0], [1.0], [[2.5]])
    assert k.plan.tolist() == [[1.0]] and k.total_cost == 2.5
    k = solve_kantorovich([1.0], [0.5, 0.5], [[1.0, 3.0]])
    np.testing.assert_allclose(k.plan, [[0.5, 0.5]])
    assert k.total_cost == pytest.approx(2.0)


def test_kantorovich_equals_assignment_on_uniform():
    rng = np.random.default_rng(1)
    u = np.full(5, 0.2)
    for _ in range(30):
        c = rng.random((5, 5))
        assert abs(solve_kantorovich(u, u, c).total_cost - solve_assignment(c).total_cost) <= 1e-9


def test_kantorovich_rejects_off_simplex():
    with pytest.raises(ParameterError):
        solve_kantorovich([0.5, 0.6], [1.0], np.zeros((2, 1)))
    with pytest.raises(DimensionMismatchError):
        solve_kantorovich([1.0], [1.0], np.zeros((2, 2)))


def test_kantorovich_against_generic_lp():
    # a dense LP in a different formulation (inequality-free, scipy default method) as the oracle
    from scipy.optimize import linprog

    rng = np.random.default_rng(2)
    for _ in range(10):
        n, m = rng.integers(2, 6, size=2)
        a = rng.random(n) + 0.1
        a /= a.sum()
        b = rng.random(m) + 0.1
        b /= b.sum()
        c = rng.random((n, m))
        a_eq = np.vstack([np.kron(np.eye(n), np.ones(m)), np.kron(np.ones(n), np.eye(m))])
        ref = linprog(c.ravel(), A_eq=a_eq, b_eq=np.concatenate([a, b]), bounds=(0, None))
        assert solve_kantorovich(a, b, c).total_cost == pytest.approx(ref.fun, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 10_000))
def test_coupling_marginals(n, m, seed):
    rng = np.random.default_rng(seed)
    a = rng.random(n) + 1e-3
    a /= a.sum()
    b = rng.random(m) + 1e-3
    b /= b.sum()
    k = solve_kantorovich(a, b, rng.random((n, m)))
    assert np.all(k.plan >= 0)
    assert np.abs(k.plan.sum(1) - a).max() <= 1e-8
    assert np.abs(k.plan.sum(0) - b).max() <= 1e-8


def test_wasserstein_simple_cases():
    x = np.random.default_rng(3).normal(size=(4, 2))
    assert wasserstein(x, x, 2.0) == 0.0
    for order in (1.0, 2.0, 3.0):
        assert wasserstein([[0.0, 0.0]], [[3.0, 4.0]], order) == pytest.approx(5.0)


def test_wasserstein_brute_force_and_weighted_route():
    rng = np.random.default_rng(4)
    for order in (1.0, 2.0):
        x, y = rng.normal(size=(6, 2)), rng.normal(size=(6, 2))
        ref = brute_force_mean_cost(build_cost_matrix(x, y, order)) ** (1 / order)
        assert wasserstein(x, y, order) == pytest.approx(ref, abs=1e-12)
        # a weighted cloud with a duplicated atom takes the LP route to the same value
        xd = np.vstack([x, x[:1]])
        w = np.r_[np.full(6, 1 / 6), 0.0]
        w[0] = w[-1] = 1 / 12
        assert wasserstein(PointCloud(xd, w), PointCloud(y), order) == pytest.approx(ref, abs=1e-8)


def test_wasserstein_metric_axioms():
    rng = np.random.default_rng(5)
    for _ in range(100):
        a, b, c = (PointCloud(rng.normal(size=(int(rng.integers(2, 6)), 2))) for _ in range(3))
        for p in (1.0, 2.0):
            ab = wasserstein(a, b, p)
            assert ab == pytest.approx(wasserstein(b, a, p), abs=1e-12)
            assert wasserstein(a, c, p) <= ab + wasserstein(b, c, p) + 1e-9


def test_gaussian_w2_examples():
    g0 = GaussianSpec(np.zeros(2), np.eye(2))
    assert gaussian_wasserstein2(g0, g0) == 0.0
    assert gaussian_wasserstein2(g0, GaussianSpec([4.0, 0.0], np.eye(2))) == pytest.approx(4.0, abs=1e-12)
    cov = np.array([[2.0, 0.3], [0.3, 0.5]])
    d = gaussian_wasserstein2(GaussianSpec([1.0, 2.0], cov), GaussianSpec([-1.0, 0.5], cov))
    assert abs(d - np.hypot(2.0, 1.5)) <= 1e-9


def test_gaussian_w2_one_dimensional_closed_form():
    # in 1-D the Bures term is (s1 - s2)^2
    d = gaussian_wasserstein2(GaussianSpec([0.0], [[4.0]]), GaussianSpec([3.0], [[1.0]]))
    assert d == pytest.approx(np.sqrt(9.0 + 1.0))


def test_gaussian_spec_validation():
    with pytest.raises(ParameterError):
        GaussianSpec([0.0, 0.0], [[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(ParameterError):
        GaussianSpec([0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(DimensionMismatchError):
        GaussianSpec([0.0], np.eye(2))


def test_gaussian_w2_against_samples():
    rng = np.random.default_rng(6)
    for _ in range(3):
        specs = []
        for _ in range(2):
            a = rng.normal(size=(2, 2))
            specs.append(GaussianSpec(rng.normal(scale=3, size=2), a @ a.T + 0.2 * np.eye(2)))
        closed = gaussian_wasserstein2(*specs)
        x, y = (s.sample(rng, 1000) for s in specs)
        assert abs(wasserstein(x, y, 2.0) - closed) / closed <= 0.05


def test_push_forward():
    src = PointCloud([[0.0], [1.0], [2.0]], [0.5, 0.3, 0.2])
    tgt = PointCloud([[10.0], [11.0], [12.0]])
    sigma = solve_assignment(np.array([[1.0, 0.0, 1.0], [1.0, 1.0, 0.0], [0.0, 1.0, 1.0]]))
    assert sigma.sigma.tolist() == [1, 2, 0]
    out = push_forward(sigma, src, tgt)
    assert out.points[:, 0].tolist() == [11.0, 12.0, 10.0]
    assert out.weights.tolist() == [0.5, 0.3, 0.2]
    assert out.weights.sum() == src.weights.sum()
    ident = solve_assignment(1 - np.eye(3))
    assert np.array_equal(push_forward(ident, PointCloud(np.zeros((3, 1))), tgt).points, tgt.points)


def test_push_forward_out_of_range():
    from attnot.ot import Assignment

    with pytest.raises(IndexError):
        push_forward(Assignment(np.array([0, 5]), 0.0), np.zeros((2, 1)), np.zeros((2, 1)))
