"""Fused-lasso additive model for smoothed quantile loss.

Each covariate j contributes a mean-zero step function, represented by its
fitted value theta_{ij} at every observation.  The fit cycles through
covariates: solve a one-covariate fused-lasso subproblem against the partial
residual, absorb the block mean into the intercept, and center the block.

The subproblem is not solved in theta directly.  With P_j the ascending sort
permutation of x_j and T the cumulative-sum operator, writing
theta_j = P_j' T z turns the fused penalty on sorted adjacent differences
into a plain weighted-lasso penalty on z with weights (0, lam, ..., lam) --
so each block solve is an ordinary lamm_fit against a structured design
whose matvec costs O(n).
"""

from dataclasses import dataclass

import numpy as np

from .kernels import SmoothingSpec, smoothed_loss
from .objective import CumSumDesign, Dataset
from .penalties import WeightedLasso
from .solver import SolverConfig, lamm_fit


@dataclass
class FlamFit:
    """Fitted additive model.

    theta0 : float
        Intercept.
    theta : (n, p) array
        Per-observation fitted value of each covariate's step function;
        every column has mean zero.
    sorted_x, sorted_theta : (n, p) arrays
        Column j of sorted_x is x_j ascending; sorted_theta holds the
        matching fitted values (the step function's breakpoints and levels).
    lam : float
        Fusion penalty level.
    spec : SmoothingSpec
        Loss smoothing used for the fit.
    cycles : int
        Full coordinate cycles performed.
    converged : bool
    objective_trace : array
        Smoothed objective (loss + penalty) after each full cycle, starting
        with the all-zero initialization; non-increasing.
    """

    theta0: float
    theta: np.ndarray
    sorted_x: np.ndarray
    sorted_theta: np.ndarray
    lam: float
    spec: SmoothingSpec
    cycles: int
    converged: bool
    objective_trace: np.ndarray


def difference_design(x_j) -> tuple:
    """Sort permutation of x_j and the structured design mapping z to theta.

    Returns (perm, design) with design.matvec(z)[perm] equal to cumsum(z):
    theta values are cumulative sums of z laid out in sorted-x order, so the
    fused penalty on sorted adjacent theta differences is sum_{i>=2} |z_i|
    while z_1 (the base level) stays unpenalized.  Ties keep their original
    relative order.
    """
    x_j = np.asarray(x_j, dtype=float)
    if x_j.ndim != 1:
        raise ValueError("covariate column must be 1-D")
    perm = np.argsort(x_j, kind="stable")
    return perm, CumSumDesign(perm)


def fused_penalty(theta_j, perm) -> float:
    """lam=1 fusion penalty: l1 norm of adjacent differences in sorted order."""
    sorted_theta = np.asarray(theta_j, dtype=float)[perm]
    return float(np.sum(np.abs(np.diff(sorted_theta))))


def _theta_to_z(theta_j, perm) -> np.ndarray:
    s = theta_j[perm]
    z = np.empty_like(s)
    z[0] = s[0]
    z[1:] = np.diff(s)
    return z


def _block_weights(n: int, lam: float) -> WeightedLasso:
    w = np.full(n, float(lam))
    w[0] = 0.0
    return WeightedLasso(w)


def _solve_block(residual, perm, design, lam, spec, config, init_theta=None):
    data = Dataset(y=np.asarray(residual, dtype=float), design=design)
    init = None if init_theta is None else _theta_to_z(init_theta, perm)
    fit = lamm_fit(data, spec, _block_weights(residual.size, lam), config, init=init)
    return design.matvec(fit.beta)


def solve_fused_block(residual, x_j, lam, spec: SmoothingSpec,
                      config: SolverConfig = None, init_theta=None) -> np.ndarray:
    """Minimize (1/n) sum l(r_i - theta_i) + lam * fused penalty over theta.

    init_theta warm-starts the solve (its sorted differences seed z).
    """
    residual = np.asarray(residual, dtype=float)
    perm, design = difference_design(x_j)
    if residual.shape != (perm.size,):
        raise ValueError("residual and covariate lengths differ")
    return _solve_block(residual, perm, design, lam, spec, config, init_theta)


def flam_objective(y, theta0, theta, perms, lam, spec: SmoothingSpec) -> float:
    """Full smoothed objective: mean loss of the additive fit plus penalty."""
    resid = y - theta0 - theta.sum(axis=1)
    value = float(np.mean(smoothed_loss(resid, spec)))
    for j in range(theta.shape[1]):
        value += lam * fused_penalty(theta[:, j], perms[j])
    return value


def fit_flam(y, X, lam: float, spec: SmoothingSpec, config: SolverConfig = None,
             max_cycles: int = 200) -> FlamFit:
    """Block coordinate descent over per-covariate fused-lasso fits.

    X holds raw covariates (no intercept column).  Stops when the total
    movement |theta0 change| + sum_j ||theta_j change||_2 over a full cycle
    is at most config.epsilon; block subproblems are solved to epsilon / p.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.size:
        raise ValueError("X must be (n, p) with one row per response value")
    n, p = X.shape
    if n < 2:
        raise ValueError("need at least 2 observations")
    if lam < 0:
        raise ValueError("lam must be non-negative")
    cfg = config if config is not None else SolverConfig()
    inner = SolverConfig(phi0=cfg.phi0, gamma=cfg.gamma, epsilon=cfg.epsilon / p,
                         max_iter=cfg.max_iter, max_inflate=cfg.max_inflate)

    perms, designs = [], []
    for j in range(p):
        perm, design = difference_design(X[:, j])
        perms.append(perm)
        designs.append(design)

    theta0 = 0.0
    theta = np.zeros((n, p))
    fitted = np.zeros(n)       # sum over j of theta_j, maintained incrementally
    trace = [flam_objective(y, theta0, theta, perms, lam, spec)]
    converged = False
    cycles = 0

    for _ in range(max_cycles):
        theta0_prev = theta0
        theta_prev = theta.copy()
        for j in range(p):
            r_j = y - theta0 - (fitted - theta[:, j])
            new_j = _solve_block(r_j, perms[j], designs[j], lam, spec, inner,
                                 init_theta=theta[:, j])
            mean_j = float(np.mean(new_j))
            theta0 += mean_j
            new_j = new_j - mean_j
            fitted += new_j - theta[:, j]
            theta[:, j] = new_j
        cycles += 1
        trace.append(flam_objective(y, theta0, theta, perms, lam, spec))
        movement = abs(theta0 - theta0_prev) + float(
            np.sum(np.linalg.norm(theta - theta_prev, axis=0)))
        if movement <= cfg.epsilon:
            converged = True
            break

    sorted_x = np.column_stack([X[perms[j], j] for j in range(p)])
    sorted_theta = np.column_stack([theta[perms[j], j] for j in range(p)])
    return FlamFit(
        theta0=theta0,
        theta=theta,
        sorted_x=sorted_x,
        sorted_theta=sorted_theta,
        lam=float(lam),
        spec=spec,
        cycles=cycles,
        converged=converged,
        objective_trace=np.asarray(trace),
    )


def predict_flam(fit: FlamFit, x_new) -> np.ndarray:
    """Evaluate the fitted additive step functions at new covariate rows.

    Between two training values of x_j the left point's level applies; below
    or above the training range the boundary level applies.  A single row
    returns a scalar.
    """
    x_new = np.asarray(x_new, dtype=float)
    single = x_new.ndim == 1
    rows = np.atleast_2d(x_new)
    p = fit.sorted_x.shape[1]
    if rows.shape[1] != p:
        raise ValueError(f"expected rows of {p} covariates, got {rows.shape[1]}")
    if not np.all(np.isfinite(rows)):
        raise ValueError("covariate values must be finite")
    out = np.full(rows.shape[0], fit.theta0)
    last = fit.sorted_x.shape[0] - 1
    for j in range(p):
        idx = np.searchsorted(fit.sorted_x[:, j], rows[:, j], side="right") - 1
        out += fit.sorted_theta[np.clip(idx, 0, last), j]
    return float(out[0]) if single else out
