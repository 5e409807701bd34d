"""Convex penalties and their closed-form proximal updates.

Four penalties are supported, all leaving the intercept (coordinate 0)
unpenalized: a weighted lasso with per-coordinate levels, the elastic net
``lam * alpha * l1 + lam * (1 - alpha) * squared-l2``, the group lasso with
per-group weights, and the sparse group lasso.  ``prox_step`` returns the
exact minimizer of ``phi/2 * ||b - u||^2 + P(b)`` at ``u = v - grad/phi``,
which is what guarantees descent inside the majorize-minimization loop.

For the sparse group lasso the exact proximal map soft-thresholds first and
group-shrinks using the norm of the thresholded block.  A variant that
group-shrinks by the norm of the unthresholded block is kept behind
``exact_prox=False`` for compatibility with implementations that use that
form; only the default satisfies the prox-optimality property.
"""

from dataclasses import dataclass, field

import numpy as np


def soft_threshold(a, b):
    """Shrinkage operator sign(a) * max(|a| - b, 0); b must be >= 0."""
    a = np.asarray(a, dtype=float)
    if np.any(np.asarray(b) < 0):
        raise ValueError("threshold must be non-negative")
    return np.sign(a) * np.maximum(np.abs(a) - b, 0.0)


@dataclass(frozen=True)
class GroupStructure:
    """Contiguous disjoint groups over the non-intercept coordinates.

    ``sizes[g]`` coordinates belong to group g; weights default to
    sqrt(group size).
    """

    sizes: tuple
    weights: tuple = None

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes or any(s <= 0 for s in sizes):
            raise ValueError("group sizes must be positive")
        object.__setattr__(self, "sizes", sizes)
        if self.weights is None:
            object.__setattr__(self, "weights", tuple(np.sqrt(s) for s in sizes))
        else:
            weights = tuple(float(w) for w in self.weights)
            if len(weights) != len(sizes) or any(w <= 0 for w in weights):
                raise ValueError("need one positive weight per group")
            object.__setattr__(self, "weights", weights)

    @property
    def n_groups(self) -> int:
        return len(self.sizes)

    @property
    def total(self) -> int:
        return sum(self.sizes)

    def slices(self, offset: int = 1):
        """Index ranges of each group inside the full coefficient vector."""
        out = []
        start = offset
        for s in self.sizes:
            out.append(slice(start, start + s))
            start += s
        return out

    def check_dim(self, dim: int):
        if self.total != dim - 1:
            raise ValueError(
                f"groups cover {self.total} coordinates but the model has "
                f"{dim - 1} non-intercept coordinates"
            )


@dataclass(frozen=True)
class WeightedLasso:
    """Per-coordinate l1 penalty; lam[0] must be 0 (free intercept)."""

    lam: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lam, dtype=float)
        if lam.ndim != 1 or np.any(lam < 0):
            raise ValueError("per-coordinate penalties must be non-negative")
        if lam[0] != 0.0:
            raise ValueError("the intercept is never penalized: lam[0] must be 0")
        object.__setattr__(self, "lam", lam)


@dataclass(frozen=True)
class ElasticNet:
    lam: float
    alpha: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")


@dataclass(frozen=True)
class GroupLasso:
    lam: float
    groups: GroupStructure

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be non-negative")


@dataclass(frozen=True)
class SparseGroupLasso:
    lam: float
    groups: GroupStructure
    exact_prox: bool = True

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be non-negative")


def penalty_value(beta, spec) -> float:
    """P(beta), excluding the intercept coordinate."""
    beta = np.asarray(beta, dtype=float)
    tail = beta[1:]
    if isinstance(spec, WeightedLasso):
        if spec.lam.shape != beta.shape:
            raise ValueError("per-coordinate penalty length must match beta")
        return float(np.sum(spec.lam * np.abs(beta)))
    if isinstance(spec, ElasticNet):
        l1 = np.sum(np.abs(tail))
        return float(spec.lam * spec.alpha * l1 + spec.lam * (1.0 - spec.alpha) * np.dot(tail, tail))
    if isinstance(spec, GroupLasso):
        spec.groups.check_dim(beta.size)
        total = 0.0
        for sl, w in zip(spec.groups.slices(), spec.groups.weights):
            total += w * np.linalg.norm(beta[sl])
        return float(spec.lam * total)
    if isinstance(spec, SparseGroupLasso):
        spec.groups.check_dim(beta.size)
        total = np.sum(np.abs(tail))
        for sl, w in zip(spec.groups.slices(), spec.groups.weights):
            total += w * np.linalg.norm(beta[sl])
        return float(spec.lam * total)
    raise TypeError(f"unknown penalty spec {type(spec).__name__}")


def _group_shrink(block: np.ndarray, threshold: float, norm: float) -> np.ndarray:
    # factor is 0 when the norm is 0: the block stays at zero
    if norm <= threshold:
        return np.zeros_like(block)
    return block * (1.0 - threshold / norm)


def prox_step(v, grad, phi: float, spec) -> np.ndarray:
    """Exact minimizer of phi/2 ||b - u||^2 + P(b) at u = v - grad / phi.

    The intercept coordinate takes the pure gradient step u[0].
    """
    if phi <= 0:
        raise ValueError(f"phi must be positive, got {phi}")
    v = np.asarray(v, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if v.shape != grad.shape:
        raise ValueError("v and grad must have the same shape")
    u = v - grad / phi
    out = u.copy()
    if isinstance(spec, WeightedLasso):
        if spec.lam.shape != v.shape:
            raise ValueError("per-coordinate penalty length must match beta")
        out[1:] = soft_threshold(u[1:], spec.lam[1:] / phi)
        return out
    if isinstance(spec, ElasticNet):
        shrunk = soft_threshold(u[1:], spec.lam * spec.alpha / phi)
        out[1:] = shrunk / (1.0 + 2.0 * spec.lam * (1.0 - spec.alpha) / phi)
        return out
    if isinstance(spec, GroupLasso):
        spec.groups.check_dim(v.size)
        for sl, w in zip(spec.groups.slices(), spec.groups.weights):
            block = u[sl]
            out[sl] = _group_shrink(block, spec.lam * w / phi, np.linalg.norm(block))
        return out
    if isinstance(spec, SparseGroupLasso):
        spec.groups.check_dim(v.size)
        for sl, w in zip(spec.groups.slices(), spec.groups.weights):
            block = soft_threshold(u[sl], spec.lam / phi)
            ref = block if spec.exact_prox else u[sl]
            out[sl] = _group_shrink(block, spec.lam * w / phi, np.linalg.norm(ref))
        return out
    raise TypeError(f"unknown penalty spec {type(spec).__name__}")


@dataclass(frozen=True)
class PenaltyTemplate:
    """Penalty family with everything fixed except the regularization level.

    ``concrete(lam, dim)`` instantiates the penalty for a model with ``dim``
    coefficients (intercept included).
    """

    kind: str
    alpha: float = 1.0
    groups: GroupStructure = None
    exact_prox: bool = True

    KINDS = ("lasso", "elastic_net", "group_lasso", "sparse_group_lasso")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown penalty kind {self.kind!r}; choose from {self.KINDS}")
        if self.kind in ("group_lasso", "sparse_group_lasso"):
            if self.groups is None:
                raise ValueError(f"{self.kind} requires a group structure")
        elif self.groups is not None:
            raise ValueError(f"{self.kind} does not take a group structure")
        if self.kind == "elastic_net" and not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")

    def concrete(self, lam: float, dim: int):
        if self.kind == "lasso":
            weights = np.full(dim, float(lam))
            weights[0] = 0.0
            return WeightedLasso(weights)
        if self.kind == "elastic_net":
            return ElasticNet(lam=float(lam), alpha=self.alpha)
        self.groups.check_dim(dim)
        if self.kind == "group_lasso":
            return GroupLasso(lam=float(lam), groups=self.groups)
        return SparseGroupLasso(lam=float(lam), groups=self.groups, exact_prox=self.exact_prox)
