import numpy as np
import pytest

from smoothq.kernels import KERNELS, SmoothingSpec, check_loss
from smoothq.objective import (CumSumDesign, Dataset, DenseDesign,
                               check_loss_total, gradient, loss_and_gradient,
                               loss_value, residuals)
from smoothq.rng import make_generator

import oracles


def _instance(gen, n=40, d=8):
    X = np.column_stack([np.ones(n), gen.standard_normal((n, d - 1))])
    beta_true = gen.uniform(-1, 1, size=d)
    y = X @ beta_true + 0.5 * gen.standard_normal(n)
    return Dataset.from_arrays(y, X)


def test_gradient_matches_finite_differences():
    # light version of the 50-instance acceptance run
    gen = make_generator(21)
    for kernel in KERNELS:
        spec = SmoothingSpec(tau=0.3, h=0.25, kernel=kernel)
        for _ in range(5):
            data = _instance(gen)
            beta = gen.uniform(-1, 1, size=data.dim)
            g = gradient(data, beta, spec)
            fd = oracles.fd_gradient(data, beta, spec)
            rel = np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-10)
            assert rel <= 1e-6, kernel


def test_loss_and_gradient_consistent_with_parts():
    gen = make_generator(3)
    data = _instance(gen)
    spec = SmoothingSpec(tau=0.7, h=0.4)
    beta = gen.uniform(-1, 1, size=data.dim)
    q, g = loss_and_gradient(data, beta, spec)
    assert q == loss_value(data, beta, spec)
    assert np.array_equal(g, gradient(data, beta, spec))


def test_loss_is_convex_in_beta():
    gen = make_generator(11)
    data = _instance(gen)
    spec = SmoothingSpec(tau=0.4, h=0.3)
    for _ in range(25):
        b1 = gen.uniform(-2, 2, size=data.dim)
        b2 = gen.uniform(-2, 2, size=data.dim)
        t = gen.uniform(0.05, 0.95)
        mid = loss_value(data, t * b1 + (1 - t) * b2, spec)
        chord = t * loss_value(data, b1, spec) + (1 - t) * loss_value(data, b2, spec)
        assert mid <= chord + 1e-12


def test_dense_design_adjoint_identity():
    gen = make_generator(5)
    X = gen.standard_normal((30, 7))
    design = DenseDesign(X)
    for _ in range(10):
        b = gen.standard_normal(7)
        v = gen.standard_normal(30)
        lhs = design.matvec(b) @ v
        rhs = b @ design.rmatvec(v)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_cumsum_design_matches_dense_construction():
    gen = make_generator(9)
    n = 50
    x = gen.standard_normal(n)
    perm = np.argsort(x, kind="stable")
    design = CumSumDesign(perm)
    # explicit P' T with T lower-triangular ones
    T = np.tril(np.ones((n, n)))
    P = np.zeros((n, n))
    P[np.arange(n), perm] = 1.0
    M = P.T @ T
    for _ in range(5):
        z = gen.standard_normal(n)
        v = gen.standard_normal(n)
        assert np.allclose(design.matvec(z), M @ z, rtol=0, atol=1e-12)
        assert np.allclose(design.rmatvec(v), M.T @ v, rtol=0, atol=1e-12)
        lhs = design.matvec(z) @ v
        rhs = z @ design.rmatvec(v)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_cumsum_design_scaling_is_linear():
    # structured multiply is O(n): doubling n roughly doubles the time
    import time
    gen = make_generator(13)

    def time_matvec(n, reps=200):
        perm = gen.permutation(n)
        design = CumSumDesign(perm)
        z = gen.standard_normal(n)
        design.matvec(z)  # warm up
        t0 = time.perf_counter()
        for _ in range(reps):
            design.matvec(z)
        return (time.perf_counter() - t0) / reps

    t1 = time_matvec(200_000)
    t2 = time_matvec(400_000)
    assert t2 / t1 <= 2.0 * 1.5


def test_dataset_validation():
    X = np.column_stack([np.ones(5), np.arange(5.0)])
    y = np.arange(5.0)
    data = Dataset.from_arrays(y, X)
    assert data.n == 5 and data.dim == 2

    with pytest.raises(ValueError):
        Dataset.from_arrays(y, X[:, ::-1])  # intercept column not ones
    with pytest.raises(ValueError):
        Dataset.from_arrays(np.array([1.0, np.nan, 2, 3, 4]), X)
    with pytest.raises(ValueError):
        Dataset.from_arrays(y[:4], X)


def test_residuals_and_check_loss_total():
    gen = make_generator(17)
    data = _instance(gen, n=25, d=4)
    beta = gen.uniform(-1, 1, size=4)
    r = residuals(data, beta)
    assert np.allclose(r, data.y - data.X @ beta, rtol=0, atol=1e-14)
    total = check_loss_total(data, beta, 0.3)
    assert abs(total - check_loss(r, 0.3).mean()) <= 1e-12


def test_gradient_shape_mismatch_error():
    gen = make_generator(19)
    data = _instance(gen, n=10, d=3)
    spec = SmoothingSpec(tau=0.5, h=0.3)
    with pytest.raises(ValueError):
        gradient(data, np.zeros(5), spec)
