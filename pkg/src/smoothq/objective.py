"""Empirical smoothed quantile objective, its gradient, and design views.

The solver only touches the design through ``matvec`` (coefficients to
fitted values) and ``rmatvec`` (its adjoint), so a structured operator can
stand in for a dense matrix.  ``CumSumDesign`` implements the
permuted-cumulative-sum operator used by the fused-lasso additive model;
its first column is identically one, matching the dense convention that
column 0 is the intercept.
"""

from dataclasses import dataclass, field

import numpy as np

from .kernels import SmoothingSpec, check_loss, kernel_cdf, smoothed_loss


class DenseDesign:
    """Row-major dense covariate block with an explicit intercept column."""

    def __init__(self, X: np.ndarray):
        X = np.ascontiguousarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError("design matrix must be 2-dimensional")
        self.X = X

    @property
    def n_obs(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def matvec(self, beta: np.ndarray) -> np.ndarray:
        return self.X @ beta

    def rmatvec(self, v: np.ndarray) -> np.ndarray:
        return self.X.T @ v


class CumSumDesign:
    """Operator z -> theta with theta[perm] = cumsum(z).

    Columns are step functions along the permutation order: column 0 is
    all ones, column j is the indicator of positions j..n-1 (in sorted
    order).  Both products cost O(n).
    """

    def __init__(self, perm: np.ndarray):
        perm = np.asarray(perm, dtype=np.intp)
        if perm.ndim != 1 or not np.array_equal(np.sort(perm), np.arange(perm.size)):
            raise ValueError("perm must be a permutation of range(n)")
        self.perm = perm

    @property
    def n_obs(self) -> int:
        return self.perm.size

    @property
    def dim(self) -> int:
        return self.perm.size

    def matvec(self, z: np.ndarray) -> np.ndarray:
        out = np.empty_like(z, dtype=float)
        out[self.perm] = np.cumsum(z)
        return out

    def rmatvec(self, v: np.ndarray) -> np.ndarray:
        w = np.asarray(v, dtype=float)[self.perm]
        return np.cumsum(w[::-1])[::-1]


@dataclass(frozen=True)
class Dataset:
    """Response vector plus a design whose first column is the intercept."""

    y: np.ndarray
    design: object = field(repr=False)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1 or y.size < 1:
            raise ValueError("response must be a non-empty 1-d vector")
        if not np.all(np.isfinite(y)):
            raise ValueError("response contains non-finite entries")
        if self.design.n_obs != y.size:
            raise ValueError(
                f"design has {self.design.n_obs} rows but response has {y.size}"
            )
        object.__setattr__(self, "y", y)

    @classmethod
    def from_arrays(cls, y, X) -> "Dataset":
        X = np.ascontiguousarray(X, dtype=float)
        if not np.all(np.isfinite(X)):
            raise ValueError("covariates contain non-finite entries")
        if X.ndim != 2 or not np.all(X[:, 0] == 1.0):
            raise ValueError("first design column must be identically 1 (intercept)")
        return cls(y=np.asarray(y, dtype=float), design=DenseDesign(X))

    @property
    def X(self) -> np.ndarray:
        return self.design.X

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def dim(self) -> int:
        return self.design.dim


def _check_dim(data: Dataset, beta: np.ndarray) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (data.dim,):
        raise ValueError(f"expected coefficient vector of length {data.dim}, got shape {beta.shape}")
    return beta


def residuals(data: Dataset, beta: np.ndarray) -> np.ndarray:
    beta = _check_dim(data, beta)
    return data.y - data.design.matvec(beta)


def loss_value(data: Dataset, beta, spec: SmoothingSpec) -> float:
    """Average smoothed check loss of the residuals."""
    return float(np.mean(smoothed_loss(residuals(data, beta), spec)))


def gradient_from_residuals(data: Dataset, r: np.ndarray, spec: SmoothingSpec) -> np.ndarray:
    w = kernel_cdf(spec.kernel, -r / spec.h) - spec.tau
    return data.design.rmatvec(w) / data.n


def gradient(data: Dataset, beta, spec: SmoothingSpec) -> np.ndarray:
    """Gradient of the smoothed objective: one matvec plus one rmatvec."""
    return gradient_from_residuals(data, residuals(data, beta), spec)


def loss_and_gradient(data: Dataset, beta, spec: SmoothingSpec):
    """Fused evaluation sharing one residual pass; returns (value, grad)."""
    r = residuals(data, beta)
    value = float(np.mean(smoothed_loss(r, spec)))
    return value, gradient_from_residuals(data, r, spec)


def check_loss_total(data: Dataset, beta, tau: float) -> float:
    """Average unsmoothed check loss; the cross-validation score."""
    return float(np.mean(check_loss(residuals(data, beta), tau)))
