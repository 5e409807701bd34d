"""Majorize-minimization solver for penalized smoothed quantile loss.

Each iteration builds the isotropic quadratic surrogate

    F(b | phi, anchor) = Q(anchor) + <grad Q(anchor), b - anchor>
                         + (phi / 2) * ||b - anchor||^2,

minimizes F + P in closed form (``prox_step``), and inflates phi by gamma
until the surrogate majorizes the loss at the candidate.  phi deflates by
1/gamma at the start of every iteration (never below phi0), so the local
curvature adapts in both directions.

Acceptance additionally requires the recorded objective Q+P not to exceed
the previous accepted value.  Exact arithmetic makes that automatic
(the candidate minimizes the majorizing surrogate), but the final steps of
a tight-tolerance fit can sit below floating-point resolution; one extra
inflation restores monotonicity, keeping the non-increasing trace a hard
guarantee rather than an up-to-rounding one.
"""

from dataclasses import dataclass, field

import numpy as np

from .kernels import SmoothingSpec, smoothed_loss
from .objective import Dataset, gradient_from_residuals, residuals
from .penalties import penalty_value, prox_step


class SolverError(RuntimeError):
    """Fit could not proceed (non-finite objective or inflation cap)."""


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the majorize-minimization loop.

    phi0 : float
        Floor for the quadratic coefficient (default 0.01).
    gamma : float
        Inflation/deflation factor (default 1.2).
    epsilon : float
        Stop when the l2 norm of the accepted step is <= epsilon.
    max_iter : int
        Outer-iteration cap.
    max_inflate : int
        Cap on inflations within one iteration; exceeding it raises
        SolverError (it indicates non-finite or diverging data).
    """

    phi0: float = 0.01
    gamma: float = 1.2
    epsilon: float = 1e-4
    max_iter: int = 5000
    max_inflate: int = 200

    def __post_init__(self):
        if self.phi0 <= 0:
            raise ValueError("phi0 must be positive")
        if self.gamma <= 1:
            raise ValueError("gamma must exceed 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 1 or self.max_inflate < 1:
            raise ValueError("iteration caps must be at least 1")


@dataclass
class FitResult:
    """Solution plus convergence diagnostics.

    objective_trace[0] is Q+P at the starting point; each later entry is
    the value at an accepted iterate, and the sequence is non-increasing.
    surrogate_gaps holds F - Q >= 0 at each accepted iterate.
    """

    beta: np.ndarray
    iterations: int
    objective_trace: np.ndarray
    converged: bool
    final_phi: float
    surrogate_gaps: np.ndarray = field(default=None)

    @property
    def objective(self) -> float:
        return float(self.objective_trace[-1])


def surrogate_value(beta, anchor, phi, q_anchor, grad_anchor) -> float:
    """F(beta | phi, anchor) built from precomputed anchor quantities."""
    if phi <= 0:
        raise ValueError("phi must be positive")
    delta = np.asarray(beta, dtype=float) - np.asarray(anchor, dtype=float)
    return float(q_anchor + grad_anchor @ delta + 0.5 * phi * (delta @ delta))


def lamm_fit(data: Dataset, spec: SmoothingSpec, penalty, config: SolverConfig = None,
             init=None) -> FitResult:
    """Minimize mean smoothed loss plus penalty from ``init`` (default 0)."""
    cfg = config if config is not None else SolverConfig()
    if init is None:
        beta = np.zeros(data.dim)
    else:
        beta = np.array(init, dtype=float)
        if beta.shape != (data.dim,):
            raise ValueError(f"init has shape {beta.shape}, expected ({data.dim},)")

    r = residuals(data, beta)
    q_anchor = float(np.mean(smoothed_loss(r, spec)))
    obj = q_anchor + penalty_value(beta, penalty)
    if not np.isfinite(obj):
        raise SolverError("objective is not finite at the starting point")
    grad = gradient_from_residuals(data, r, spec)

    trace = [obj]
    gaps = []
    phi = cfg.phi0
    converged = False
    iterations = 0

    for _ in range(cfg.max_iter):
        phi = max(cfg.phi0, phi / cfg.gamma)
        inflations = 0
        while True:
            candidate = prox_step(beta, grad, phi, penalty)
            r_cand = residuals(data, candidate)
            q_cand = float(np.mean(smoothed_loss(r_cand, spec)))
            obj_cand = q_cand + penalty_value(candidate, penalty)
            if not np.isfinite(obj_cand):
                raise SolverError("objective became non-finite during the fit")
            f_cand = surrogate_value(candidate, beta, phi, q_anchor, grad)
            if f_cand >= q_cand and obj_cand <= trace[-1]:
                break
            inflations += 1
            if inflations > cfg.max_inflate:
                raise SolverError(
                    f"surrogate failed to majorize after {cfg.max_inflate} "
                    f"inflations (phi={phi:.3e}); data may be ill-posed"
                )
            phi *= cfg.gamma

        step = float(np.linalg.norm(candidate - beta))
        beta = candidate
        trace.append(obj_cand)
        gaps.append(f_cand - q_cand)
        iterations += 1
        if step <= cfg.epsilon:
            converged = True
            break
        q_anchor = q_cand
        grad = gradient_from_residuals(data, r_cand, spec)

    return FitResult(
        beta=beta,
        iterations=iterations,
        objective_trace=np.asarray(trace),
        converged=converged,
        final_phi=phi,
        surrogate_gaps=np.asarray(gaps),
    )


def _interval_distance(value: float, lo: float, hi: float) -> float:
    if value < lo:
        return lo - value
    if value > hi:
        return value - hi
    return 0.0


def kkt_residual(data: Dataset, beta, spec: SmoothingSpec, penalty) -> float:
    """Max distance of -grad Q(beta) from the penalty subdifferential.

    Zero at an exact minimizer; small after a converged fit.  The intercept
    always contributes |grad_0 Q|.
    """
    from .objective import gradient
    from .penalties import (ElasticNet, GroupLasso, SparseGroupLasso, WeightedLasso,
                            soft_threshold)

    beta = np.asarray(beta, dtype=float)
    g = gradient(data, beta, spec)
    worst = abs(g[0])

    if isinstance(penalty, WeightedLasso):
        for j in range(1, beta.size):
            lam_j = penalty.lam[j]
            if beta[j] != 0.0:
                res = abs(g[j] + lam_j * np.sign(beta[j]))
            else:
                res = _interval_distance(-g[j], -lam_j, lam_j)
            worst = max(worst, res)
        return float(worst)

    if isinstance(penalty, ElasticNet):
        lam1 = penalty.lam * penalty.alpha
        for j in range(1, beta.size):
            # subgradient: 2 lam (1-alpha) beta_j + lam alpha sign(beta_j)
            base = g[j] + 2.0 * penalty.lam * (1.0 - penalty.alpha) * beta[j]
            if beta[j] != 0.0:
                res = abs(base + lam1 * np.sign(beta[j]))
            else:
                res = _interval_distance(-base, -lam1, lam1)
            worst = max(worst, res)
        return float(worst)

    if isinstance(penalty, GroupLasso):
        penalty.groups.check_dim(beta.size)
        for sl, w in zip(penalty.groups.slices(), penalty.groups.weights):
            block, gb = beta[sl], g[sl]
            thr = penalty.lam * w
            nb = np.linalg.norm(block)
            if nb > 0:
                res = np.linalg.norm(gb + thr * block / nb)
            else:
                res = max(np.linalg.norm(gb) - thr, 0.0)
            worst = max(worst, res)
        return float(worst)

    if isinstance(penalty, SparseGroupLasso):
        penalty.groups.check_dim(beta.size)
        for sl, w in zip(penalty.groups.slices(), penalty.groups.weights):
            block, gb = beta[sl], g[sl]
            thr_g = penalty.lam * w
            nb = np.linalg.norm(block)
            if nb > 0:
                res = 0.0
                for bj, gj in zip(block, gb):
                    grp = thr_g * bj / nb
                    if bj != 0.0:
                        res = max(res, abs(gj + penalty.lam * np.sign(bj) + grp))
                    else:
                        res = max(res, _interval_distance(-gj - grp, -penalty.lam, penalty.lam))
            else:
                # whole block at zero: -g must lie within lam*B_inf + thr_g*B_2
                slack = soft_threshold(gb, penalty.lam)
                res = max(np.linalg.norm(slack) - thr_g, 0.0)
            worst = max(worst, res)
        return float(worst)

    raise TypeError(f"unknown penalty spec {type(penalty).__name__}")
