"""Synthetic heteroscedastic designs and support-recovery metrics.

The generator draws correlated Gaussian covariates and responses

    y_i = x_i' beta* + (0.5 * x_{i,last} + 1) * (eps_i - F_eps^{-1}(tau)),

so the conditional tau-quantile of y given x is exactly x' beta*.  Three
coefficient patterns (sparse, dense, grouped), two covariance structures
(AR(1) with rate 0.7, block-exchangeable), and two noise laws (N(0, 2),
Student-t with 1.5 degrees of freedom) cover the benchmark grid.

All randomness flows through counter-based generator streams: replication i
draws from stream i of the master seed, so replications are independent and
any subset can be regenerated in isolation.
"""

from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.special import betainc, ndtri
from scipy.optimize import brentq

from .kernels import SmoothingSpec, default_bandwidth
from .objective import Dataset
from .penalties import GroupStructure, PenaltyTemplate
from .rng import make_generator
from .tuning import LambdaPath, cross_validate, lambda_max, one_se_index

#: exchangeable-block sizes fixed by the grouped design (before the
#: (p - 40) / 10 remainder blocks)
_GROUP_HEAD = (5, 5, 10, 10, 10)

PATTERNS = ("sparse", "dense", "grouped")
NOISES = ("normal", "t")
CORRELATIONS = ("ar1", "block")


@dataclass(frozen=True)
class SimDesign:
    """One cell of the benchmark grid.

    correlation defaults to the pattern's own convention: block-exchangeable
    for the grouped pattern, AR(1) otherwise.
    """

    n: int
    p: int
    pattern: str = "sparse"
    noise: str = "normal"
    tau: float = 0.5
    seed: int = 0
    correlation: str = None
    ar_rate: float = 0.7
    block_corr: float = 0.6
    df: float = 1.5

    def __post_init__(self):
        if self.n < 2 or self.p < 1:
            raise ValueError("need n >= 2 and p >= 1")
        if self.pattern not in PATTERNS:
            raise ValueError(f"pattern must be one of {PATTERNS}")
        if self.noise not in NOISES:
            raise ValueError(f"noise must be one of {NOISES}")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must lie in (0, 1)")
        if self.correlation is None:
            object.__setattr__(
                self, "correlation", "block" if self.pattern == "grouped" else "ar1")
        if self.correlation not in CORRELATIONS:
            raise ValueError(f"correlation must be one of {CORRELATIONS}")
        if self.pattern == "grouped" or self.correlation == "block":
            if self.p <= 40 or (self.p - 40) % 10 != 0:
                raise ValueError(
                    "block design needs p > 40 with p - 40 a multiple of 10")
        if self.pattern == "sparse" and self.p < 19:
            raise ValueError("sparse pattern needs at least 19 covariates")
        if self.pattern == "dense" and self.p < 99:
            raise ValueError("dense pattern needs at least 99 covariates")
        if self.df <= 0:
            raise ValueError("df must be positive")


def block_sizes(p: int) -> list:
    """Exchangeable-block sizes: 5, 5, 10, 10, 10, then ten equal blocks."""
    if p <= 40 or (p - 40) % 10 != 0:
        raise ValueError("block design needs p > 40 with p - 40 a multiple of 10")
    return list(_GROUP_HEAD) + [(p - 40) // 10] * 10


def group_structure(p: int) -> GroupStructure:
    """Group layout matching the grouped design's covariance blocks."""
    return GroupStructure(tuple(block_sizes(p)))


def covariance_matrix(p: int, correlation: str = "ar1", ar_rate: float = 0.7,
                      block_corr: float = 0.6) -> np.ndarray:
    """Covariate covariance: AR(1) rates or exchangeable diagonal blocks."""
    if correlation == "ar1":
        idx = np.arange(p)
        return ar_rate ** np.abs(idx[:, None] - idx[None, :])
    if correlation != "block":
        raise ValueError(f"correlation must be one of {CORRELATIONS}")
    sigma = np.zeros((p, p))
    start = 0
    for size in block_sizes(p):
        block = np.full((size, size), block_corr)
        np.fill_diagonal(block, 1.0)
        sigma[start:start + size, start:start + size] = block
        start += size
    return sigma


def _covariance(design: SimDesign) -> np.ndarray:
    return covariance_matrix(design.p, design.correlation, design.ar_rate,
                             design.block_corr)


def true_beta(design: SimDesign) -> np.ndarray:
    """Coefficient vector (intercept first) for the design's pattern."""
    beta = np.zeros(design.p + 1)
    beta[0] = 4.0
    if design.pattern == "sparse":
        beta[[1, 3, 5, 7, 9]] = [1.8, 1.6, 1.4, 1.2, 1.0]
        beta[[11, 13, 15, 17, 19]] = [-1.0, -1.2, -1.4, -1.6, -1.8]
    elif design.pattern == "dense":
        beta[1:100] = 0.8
    else:
        values = (2.0, 1.6, -2.0, 1.0, 0.6)
        start = 1
        for size, value in zip(block_sizes(design.p), values):
            beta[start:start + size] = value
            start += size
    return beta


def t_quantile(tau: float, df: float = 1.5) -> float:
    """Student-t quantile for fractional degrees of freedom.

    Inverts the CDF written through the regularized incomplete beta
    function; accurate to ~1e-12.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie strictly between 0 and 1")
    if df <= 0:
        raise ValueError("df must be positive")
    if tau == 0.5:
        return 0.0
    if tau < 0.5:
        return -t_quantile(1.0 - tau, df)

    def cdf_minus_tau(t):
        return 1.0 - 0.5 * betainc(df / 2.0, 0.5, df / (df + t * t)) - tau

    hi = 1.0
    while cdf_minus_tau(hi) < 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("quantile bracketing failed")
    return float(brentq(cdf_minus_tau, 0.0, hi, xtol=1e-13, rtol=8.9e-16))


def noise_quantile(design: SimDesign) -> float:
    """tau-quantile of the design's noise distribution."""
    if design.noise == "normal":
        return float(np.sqrt(2.0) * ndtri(design.tau))
    return t_quantile(design.tau, design.df)


def generate(design: SimDesign, stream: int = 0):
    """Draw one dataset; returns (Dataset, true coefficient vector).

    stream selects an independent substream of the design's seed, used by
    run_replications to give each replication its own draw.
    """
    gen = make_generator(design.seed, stream)
    chol = np.linalg.cholesky(_covariance(design))
    x = gen.standard_normal((design.n, design.p)) @ chol.T
    if design.noise == "normal":
        eps = np.sqrt(2.0) * gen.standard_normal(design.n)
    else:
        z = gen.standard_normal(design.n)
        g = gen.gamma(design.df / 2.0, 2.0 / design.df, size=design.n)
        eps = z / np.sqrt(g)
    beta = true_beta(design)
    X = np.column_stack([np.ones(design.n), x])
    scale = 0.5 * x[:, -1] + 1.0
    y = X @ beta + scale * (eps - noise_quantile(design))
    return Dataset.from_arrays(y, X), beta


@dataclass(frozen=True)
class Metrics:
    """Estimation error and support recovery for one fitted vector.

    tpr/fpr are None when their denominator is empty (no true nonzeros or
    no true zeros among the non-intercept coordinates); the group fields are
    None for ungrouped runs.
    """

    l2_error: float
    tpr: float = None
    fpr: float = None
    group_tpr: float = None
    group_fpr: float = None

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


def compute_metrics(beta_hat, beta_star, groups: GroupStructure = None) -> Metrics:
    """Support recovery over non-intercept coordinates; l2 over everything.

    A coordinate counts as selected only if it is exactly nonzero -- the
    proximal updates produce true zeros, so no threshold is applied.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta_star = np.asarray(beta_star, dtype=float)
    if beta_hat.shape != beta_star.shape:
        raise ValueError("fitted and true vectors must have the same length")
    err = float(np.linalg.norm(beta_hat - beta_star))

    hat_nz = beta_hat[1:] != 0.0
    star_nz = beta_star[1:] != 0.0
    n_pos = int(star_nz.sum())
    n_neg = int((~star_nz).sum())
    tpr = float((hat_nz & star_nz).sum() / n_pos) if n_pos else None
    fpr = float((hat_nz & ~star_nz).sum() / n_neg) if n_neg else None

    group_tpr = group_fpr = None
    if groups is not None:
        groups.check_dim(beta_star.size)
        hat_g = np.array([np.any(beta_hat[sl] != 0.0) for sl in groups.slices()])
        star_g = np.array([np.any(beta_star[sl] != 0.0) for sl in groups.slices()])
        g_pos = int(star_g.sum())
        g_neg = int((~star_g).sum())
        group_tpr = float((hat_g & star_g).sum() / g_pos) if g_pos else None
        group_fpr = float((hat_g & ~star_g).sum() / g_neg) if g_neg else None
    return Metrics(l2_error=err, tpr=tpr, fpr=fpr,
                   group_tpr=group_tpr, group_fpr=group_fpr)


@dataclass(frozen=True)
class MethodSpec:
    """How each replication is fitted: penalty family plus tuning choices.

    selection picks the reported penalty level off the validation curve:
    "min" takes the curve minimizer, "1se" the largest level within one
    standard error of it (sparser; steadier when the curve bottom is flat).
    """

    template: PenaltyTemplate
    kernel: str = "gaussian"
    bandwidth: float = None     # None: bandwidth rule from (n, p, tau)
    folds: int = 10
    n_lambda: int = 50
    min_ratio: float = 0.01
    selection: str = "min"

    def __post_init__(self):
        if self.selection not in ("min", "1se"):
            raise ValueError('selection must be "min" or "1se"')

    def smoothing(self, n: int, p: int, tau: float) -> SmoothingSpec:
        h = self.bandwidth if self.bandwidth is not None else default_bandwidth(n, p, tau)
        return SmoothingSpec(tau=tau, h=h, kernel=self.kernel)


@dataclass
class ReplicationSummary:
    """Aggregate of run_replications: per-metric means and standard errors.

    se values are None when only one replication ran; per_rep keeps each
    replication's Metrics in replication order.
    """

    reps: int
    mean: dict
    se: dict
    per_rep: list


def _metric_groups(method: MethodSpec):
    if method.template.kind in ("group_lasso", "sparse_group_lasso"):
        return method.template.groups
    return None


def run_replication(design: SimDesign, method: MethodSpec, stream: int,
                    seed: int = None) -> Metrics:
    """Generate stream's dataset, cross-validate, refit, and score."""
    data, beta_star = generate(design, stream)
    spec = method.smoothing(design.n, design.p, design.tau)
    fold_seed = design.seed if seed is None else seed
    lam_hi = lambda_max(data, spec, method.template)
    path = LambdaPath.geometric(lam_hi, method.n_lambda, method.min_ratio)
    cv = cross_validate(data, spec, method.template, path,
                        k=method.folds, seed=fold_seed)
    idx = cv.selected_index if method.selection == "min" else one_se_index(cv)
    beta_hat = cv.path_fits[idx].beta
    return compute_metrics(beta_hat, beta_star, groups=_metric_groups(method))


def run_replications(design: SimDesign, method: MethodSpec, reps: int,
                     seed: int = None, threads: int = 1) -> ReplicationSummary:
    """Independent replications on streams 0..reps-1 of the master seed.

    seed overrides the design's seed for fold assignment only (replication
    data always comes from the design seed's streams).  Aggregation is in
    replication order regardless of thread count.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")

    def one(i):
        try:
            return run_replication(design, method, stream=i, seed=seed)
        except Exception as err:
            raise RuntimeError(f"replication {i} failed: {err}") from err

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_rep = list(pool.map(one, range(reps)))
    else:
        per_rep = [one(i) for i in range(reps)]

    keys = [k for k in ("l2_error", "tpr", "fpr", "group_tpr", "group_fpr")
            if getattr(per_rep[0], k) is not None]
    mean, se = {}, {}
    for key in keys:
        values = np.array([getattr(m, key) for m in per_rep], dtype=float)
        mean[key] = float(values.mean())
        se[key] = float(values.std(ddof=1) / np.sqrt(reps)) if reps > 1 else None
    return ReplicationSummary(reps=reps, mean=mean, se=se, per_rep=per_rep)
