"""Check loss, smoothing kernels, and the convolution-smoothed quantile loss.

The check loss ``rho_tau(u) = u * (tau - 1{u < 0})`` is convex but has a
kink at zero.  Convolving it with a scaled kernel density ``K_h`` yields a
differentiable convex surrogate

    smoothed_loss(u) = E rho_tau(u + h * Z),   Z ~ K,

which this module evaluates in closed form for five kernels.  Writing
``rho_tau(v) = |v|/2 + (tau - 1/2) * v`` and using that each kernel is
symmetric with mean zero gives

    smoothed_loss(u) = (tau - 1/2) * u + (h / 2) * A(u / h),

where ``A(x) = E|x + Z|`` depends only on the kernel.  The derivative is
``Kbar(u / h) - (1 - tau)`` with ``Kbar`` the kernel's cumulative function.
Every closed form below is certified against adaptive quadrature of the
defining convolution integral in the test suite.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special

KERNELS = ("uniform", "gaussian", "logistic", "epanechnikov", "triangular")

_SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class SmoothingSpec:
    """Quantile level, bandwidth and kernel for the smoothed loss."""

    tau: float
    h: float
    kernel: str = "gaussian"

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if not self.h > 0.0:
            raise ValueError(f"bandwidth must be positive, got {self.h}")
        if self.kernel not in KERNELS:
            raise ValueError(
                f"unknown kernel {self.kernel!r}; choose from {KERNELS}"
            )


def check_loss(u, tau):
    """Quantile (check) loss ``u * (tau - 1{u < 0})``; vectorized in u."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    u = np.asarray(u, dtype=float)
    return u * (tau - (u < 0))


def kernel_density(kernel: str, z):
    """Density K(z) of the standardized kernel."""
    z = np.asarray(z, dtype=float)
    if kernel == "uniform":
        return np.where(np.abs(z) <= 1.0, 0.5, 0.0)
    if kernel == "gaussian":
        return np.exp(-0.5 * z * z) / _SQRT_2PI
    if kernel == "logistic":
        # e^{-|z|} / (1 + e^{-|z|})^2, written to avoid overflow for large |z|
        e = np.exp(-np.abs(z))
        return e / (1.0 + e) ** 2
    if kernel == "epanechnikov":
        return np.where(np.abs(z) <= 1.0, 0.75 * (1.0 - z * z), 0.0)
    if kernel == "triangular":
        return np.maximum(1.0 - np.abs(z), 0.0)
    raise ValueError(f"unknown kernel {kernel!r}")


def kernel_cdf(kernel: str, z):
    """Cumulative function Kbar(z) = integral of K up to z; Kbar(0) = 1/2."""
    z = np.asarray(z, dtype=float)
    if kernel == "uniform":
        return np.clip(0.5 * (z + 1.0), 0.0, 1.0)
    if kernel == "gaussian":
        return special.ndtr(z)
    if kernel == "logistic":
        return special.expit(z)
    if kernel == "epanechnikov":
        zc = np.clip(z, -1.0, 1.0)
        return 0.5 + 0.75 * zc - 0.25 * zc**3
    if kernel == "triangular":
        zc = np.clip(z, -1.0, 1.0)
        return 0.5 + zc - np.sign(zc) * 0.5 * zc * zc
    raise ValueError(f"unknown kernel {kernel!r}")


def _softplus(t):
    # log(1 + e^t) = max(t, 0) + log1p(e^{-|t|}), stable for large |t|
    return np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))


def _mean_abs_shifted(kernel: str, x):
    """A(x) = E|x + Z| for standardized Z ~ K; used by smoothed_loss."""
    ax = np.abs(x)
    if kernel == "gaussian":
        return x * (2.0 * special.ndtr(x) - 1.0) + 2.0 * np.exp(-0.5 * x * x) / _SQRT_2PI
    if kernel == "uniform":
        inner = 0.5 * (x * x + 1.0)
    elif kernel == "epanechnikov":
        inner = 0.375 + 0.75 * x * x - 0.125 * x**4
    elif kernel == "triangular":
        inner = 1.0 / 3.0 + x * x - ax**3 / 3.0
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    # both branches agree at |x| = 1, so the boundary needs no tolerance
    return np.where(ax <= 1.0, inner, ax)


def smoothed_loss(u, spec: SmoothingSpec):
    """Convolution-smoothed check loss; vectorized in u.

    Always at least ``check_loss(u, tau)``, with the gap vanishing as the
    bandwidth shrinks.
    """
    u = np.asarray(u, dtype=float)
    tau, h = spec.tau, spec.h
    x = u / h
    if spec.kernel == "logistic":
        return (tau - 1.0) * u + h * _softplus(x)
    return (tau - 0.5) * u + 0.5 * h * _mean_abs_shifted(spec.kernel, x)


def smoothed_loss_derivative(u, spec: SmoothingSpec):
    """First derivative Kbar(u/h) - (1 - tau); takes values in [tau-1, tau]."""
    u = np.asarray(u, dtype=float)
    return kernel_cdf(spec.kernel, u / spec.h) - (1.0 - spec.tau)


def default_bandwidth(n: int, p: int, tau: float) -> float:
    """Default bandwidth max{0.05, sqrt(tau(1-tau)) * (log p / n)^(1/4)}."""
    if n < 2:
        raise ValueError(f"need at least 2 observations, got {n}")
    if p < 1:
        raise ValueError(f"covariate dimension must be >= 1, got {p}")
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    return max(0.05, np.sqrt(tau * (1.0 - tau)) * (np.log(p) / n) ** 0.25)
