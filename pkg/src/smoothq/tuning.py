"""Regularization paths and k-fold cross-validation.

``lambda_max`` computes the smallest penalty level whose solution keeps every
non-intercept coefficient at zero, anchored at a tightly solved
intercept-only fit.  Paths are geometric grids fitted from largest to
smallest penalty with warm starts; the first entry is warm-started from the
same intercept-only fit, which makes the all-zero solution an exact fixed
point of the proximal update at lambda_max (the fitted tail is bitwise
zero, not merely small).

Cross-validation scores held-out folds with the unsmoothed check loss, never
the smoothed surrogate: smoothing is a device for fitting, not a measure of
predictive quality.  Folds are contiguous blocks of a seeded Fisher-Yates
permutation so any implementation with the same generator reproduces the
split.
"""

import warnings
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .kernels import SmoothingSpec
from .objective import Dataset, DenseDesign, check_loss_total, gradient
from .penalties import (PenaltyTemplate, WeightedLasso, prox_step,
                        soft_threshold)
from .rng import FOLD_STREAM_BASE, fisher_yates, make_generator
from .solver import FitResult, SolverConfig, SolverError, lamm_fit

#: solver tolerance for the intercept-only anchor fits
_TIGHT_EPS = 1e-8


@dataclass(frozen=True)
class LambdaPath:
    """Strictly decreasing, positive sequence of penalty levels."""

    values: np.ndarray

    def __post_init__(self):
        values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if values.ndim != 1 or values.size == 0:
            raise ValueError("path must be a non-empty 1-D sequence")
        if np.any(values <= 0) or not np.all(np.isfinite(values)):
            raise ValueError("penalty levels must be positive and finite")
        if values.size > 1 and np.any(np.diff(values) >= 0):
            raise ValueError("penalty levels must be strictly decreasing")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    @classmethod
    def geometric(cls, lam_max, count: int = 50, min_ratio: float = 0.01) -> "LambdaPath":
        """Geometric grid from lam_max down to min_ratio * lam_max."""
        if lam_max <= 0:
            raise ValueError("lam_max must be positive")
        if count < 1:
            raise ValueError("count must be at least 1")
        if not 0.0 < min_ratio < 1.0:
            raise ValueError("min_ratio must lie in (0, 1)")
        if count == 1:
            return cls(np.array([float(lam_max)]))
        return cls(np.geomspace(lam_max, lam_max * min_ratio, count))


@dataclass
class CvResult:
    """Cross-validation summary.

    mean_loss and se_loss are per-lambda averages (per held-out observation)
    and standard errors of the fold scores; refit is the full-data fit at the
    selected lambda and path_fits holds the full-data fit at every lambda
    (so refit is path_fits[selected_index]); seed reproduces the fold
    assignment.
    """

    lambdas: np.ndarray
    mean_loss: np.ndarray
    se_loss: np.ndarray
    selected_index: int
    selected_lambda: float
    refit: FitResult
    seed: int
    path_fits: tuple = ()


def one_se_index(result: CvResult) -> int:
    """Index of the sparsest-direction penalty within one SE of the CV minimum.

    Returns the first index (the largest lambda, since paths are decreasing)
    whose mean validation loss is at most the minimal mean loss plus the
    standard error at the minimizer.  This is the usual parsimony rule for
    flat validation curves; the plain minimizer remains selected_index.
    """
    low = result.mean_loss[result.selected_index]
    cutoff = low + result.se_loss[result.selected_index]
    return int(np.argmax(result.mean_loss <= cutoff))


def intercept_only(data: Dataset, spec: SmoothingSpec, config: SolverConfig = None) -> np.ndarray:
    """Full-dimension coefficient vector with only the intercept fitted.

    The 1-D problem is solved to a tight tolerance so that gradients taken at
    the returned point are reliable anchors for lambda_max and path starts.
    """
    cfg = config if config is not None else SolverConfig(epsilon=_TIGHT_EPS)
    ones = Dataset(y=data.y, design=DenseDesign(np.ones((data.n, 1))))
    fit = lamm_fit(ones, spec, WeightedLasso(np.zeros(1)), cfg)
    beta = np.zeros(data.dim)
    beta[0] = fit.beta[0]
    return beta


def _sgl_zero_threshold(g_block: np.ndarray, weight: float) -> float:
    """Smallest lam with ||S(g_block, lam)||_2 <= lam * weight (bisection)."""
    norm = float(np.linalg.norm(g_block))
    if norm == 0.0:
        return 0.0
    hi = norm / weight          # group-lasso level: always sufficient
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= 0.0 or mid == lo or mid == hi:
            break
        if np.linalg.norm(soft_threshold(g_block, mid)) <= mid * weight:
            hi = mid
        else:
            lo = mid
    return hi


def lambda_max(data: Dataset, spec: SmoothingSpec, template: PenaltyTemplate) -> float:
    """Smallest penalty level at which the fitted model is intercept-only.

    Computed from the gradient at a tight intercept-only fit: the largest
    absolute coordinate for the l1 penalties (scaled by 1/alpha for the
    elastic net), the largest weighted group norm for the group lasso, and a
    per-group bisection for the sparse group lasso, whose zero-solution
    condition ||S(g_g, lam)||_2 <= lam * w_g is not available in closed form.
    """
    y = data.y
    if np.all(y == y[0]):
        warnings.warn("response is constant; returning the degenerate level 1.0")
        return 1.0
    beta0 = intercept_only(data, spec)
    g = gradient(data, beta0, spec)
    tail = g[1:]

    if template.kind == "lasso":
        value = float(np.max(np.abs(tail)))
    elif template.kind == "elastic_net":
        value = float(np.max(np.abs(tail)))
        if template.alpha > 0.0:
            value /= template.alpha
    else:
        template.groups.check_dim(data.dim)
        slices = template.groups.slices()
        weights = template.groups.weights
        if template.kind == "group_lasso":
            value = max(float(np.linalg.norm(g[sl])) / w for sl, w in zip(slices, weights))
        else:
            value = max(_sgl_zero_threshold(g[sl], w) for sl, w in zip(slices, weights))

    if not value > 0.0:
        warnings.warn("gradient vanishes at the intercept-only fit; "
                      "returning the degenerate level 1.0")
        return 1.0

    # verify at float level that the proximal step at the anchor kills every
    # non-intercept coordinate (division and sqrt-weight rounding can land a
    # hair short); nudge up in 1e-12 relative steps until it does.  A pure
    # ridge penalty never produces exact zeros, so skip it.
    if not (template.kind == "elastic_net" and template.alpha == 0.0):
        for _ in range(64):
            penalty = template.concrete(value, data.dim)
            step = prox_step(beta0, g, 1.0, penalty)
            if np.all(step[1:] == 0.0):
                break
            value *= 1.0 + 1e-12
    return value


def fit_path(data: Dataset, spec: SmoothingSpec, template: PenaltyTemplate,
             path: LambdaPath, config: SolverConfig = None) -> list:
    """Fit each penalty level from largest to smallest with warm starts.

    The first entry starts from the tight intercept-only fit; each later
    entry starts from the previous solution.
    """
    results = []
    warm = intercept_only(data, spec)
    for i, lam in enumerate(path.values):
        penalty = template.concrete(lam, data.dim)
        try:
            res = lamm_fit(data, spec, penalty, config, init=warm)
        except SolverError as err:
            raise SolverError(f"path entry {i} (lambda={lam:.6g}): {err}") from err
        results.append(res)
        warm = res.beta
    return results


def _fold_sizes(n: int, k: int) -> list:
    base, extra = divmod(n, k)
    return [base + (1 if i < extra else 0) for i in range(k)]


def make_folds(n: int, k: int, seed: int) -> list:
    """Validation index arrays: contiguous blocks of a seeded permutation."""
    if k < 2:
        raise ValueError("need at least 2 folds")
    if n < k:
        raise ValueError(f"cannot split {n} observations into {k} folds")
    perm = fisher_yates(n, make_generator(seed, FOLD_STREAM_BASE))
    folds = []
    start = 0
    for size in _fold_sizes(n, k):
        folds.append(np.sort(perm[start:start + size]))
        start += size
    return folds


def cross_validate(data: Dataset, spec: SmoothingSpec, template: PenaltyTemplate,
                   path: LambdaPath = None, k: int = 10, seed: int = 0,
                   config: SolverConfig = None, threads: int = 1) -> CvResult:
    """k-fold cross-validation over a penalty path, scored by check loss.

    Ties in the mean validation loss resolve toward the larger (sparser)
    penalty level.  The refit is the full-data path fit at the selected
    level.  With threads > 1 folds run concurrently; aggregation is by fold
    index, so the result does not depend on completion order.
    """
    n = data.n
    folds = make_folds(n, k, seed)
    for val_idx in folds:
        if n - val_idx.size < 2:
            raise ValueError("each fold must leave at least 2 training observations")
    if path is None:
        path = LambdaPath.geometric(lambda_max(data, spec, template))

    X, y = data.X, data.y

    def score_fold(val_idx):
        mask = np.ones(n, dtype=bool)
        mask[val_idx] = False
        train = Dataset.from_arrays(y[mask], X[mask])
        X_val, y_val = X[val_idx], y[val_idx]
        fits = fit_path(train, spec, template, path, config)
        val = Dataset.from_arrays(y_val, X_val)
        return np.array([
            check_loss_total(val, fit.beta, spec.tau) for fit in fits
        ])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            scores = np.vstack(list(pool.map(score_fold, folds)))
    else:
        scores = np.vstack([score_fold(v) for v in folds])

    mean_loss = scores.mean(axis=0)
    se_loss = scores.std(axis=0, ddof=1) / np.sqrt(len(folds))
    selected = int(np.argmin(mean_loss))  # first minimum = largest lambda

    full_fits = fit_path(data, spec, template, path, config)
    return CvResult(
        lambdas=path.values.copy(),
        mean_loss=mean_loss,
        se_loss=se_loss,
        selected_index=selected,
        selected_lambda=float(path.values[selected]),
        refit=full_fits[selected],
        seed=seed,
        path_fits=tuple(full_fits),
    )
