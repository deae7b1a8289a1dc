"""Normal, sinh-normal and Birnbaum-Saunders kernels.

The array functions (``*_logpdf_array`` etc.) take location and scale as
broadcastable arrays and never raise; they are what the likelihood uses.
The kernel classes and the module-level operations wrap them with
argument validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG2 = math.log(2.0)

#: Fixed scale of the sinh-normal distribution.
SINH_NORMAL_SCALE = 2.0


# -- standard normal ---------------------------------------------------------

def std_normal_cdf(z):
    """Standard normal CDF, evaluated through erfc for both tails."""
    return special.ndtr(z)


def std_normal_sf(z):
    return special.ndtr(-np.asarray(z, dtype=float))


def std_normal_logcdf(z):
    return special.log_ndtr(z)


def std_normal_logsf(z):
    return special.log_ndtr(-np.asarray(z, dtype=float))


def std_normal_ppf(p):
    return special.ndtri(p)


def _log_cosh(x):
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - _LOG2


# -- array kernels -----------------------------------------------------------

def normal_logpdf_array(y, mu, sigma):
    z = (y - mu) / sigma
    return -_LOG_SQRT_2PI - np.log(sigma) - 0.5 * z * z


def normal_logsf_array(y, mu, sigma):
    return std_normal_logsf((y - mu) / sigma)


def sinh_normal_z(y, mu, alpha):
    with np.errstate(over="ignore"):
        return (2.0 / alpha) * np.sinh((y - mu) / SINH_NORMAL_SCALE)


def sinh_normal_logpdf_array(y, mu, alpha):
    u = (y - mu) / SINH_NORMAL_SCALE
    z = (2.0 / alpha) * np.sinh(u)
    return -_LOG_SQRT_2PI - np.log(alpha) + _log_cosh(u) - 0.5 * z * z


def sinh_normal_logsf_array(y, mu, alpha):
    return std_normal_logsf(sinh_normal_z(y, mu, alpha))


def bs_z(y, mu, alpha):
    """Standardized BS argument; y must be positive."""
    r = np.sqrt(y / mu)
    return (r - 1.0 / r) / alpha


def bs_logpdf_array(y, mu, alpha):
    """BS log-density; -inf for y <= 0."""
    y = np.asarray(y, dtype=float)
    pos = y > 0
    ys = np.where(pos, y, 1.0)
    z = bs_z(ys, mu, alpha)
    out = (
        -_LOG_SQRT_2PI
        + np.log(ys + mu)
        - _LOG2
        - np.log(alpha)
        - 0.5 * np.log(mu)
        - 1.5 * np.log(ys)
        - 0.5 * z * z
    )
    return np.where(pos, out, -np.inf)


def bs_logsf_array(y, mu, alpha):
    """BS log-survival; 0 for y <= 0."""
    y = np.asarray(y, dtype=float)
    pos = y > 0
    z = bs_z(np.where(pos, y, 1.0), mu, alpha)
    return np.where(pos, std_normal_logsf(z), 0.0)


# -- kernels -----------------------------------------------------------------

def _check_positive(name, value):
    if not np.all(np.asarray(value) > 0):
        raise ValueError(f"{name} must be positive, got {value!r}")


@dataclass(frozen=True)
class NormalKernel:
    mu: float
    sigma: float

    def __post_init__(self):
        _check_positive("sigma", self.sigma)

    def logpdf(self, y):
        return normal_logpdf_array(y, self.mu, self.sigma)

    def logsf(self, y):
        return normal_logsf_array(y, self.mu, self.sigma)

    def sf(self, y):
        return std_normal_sf((y - self.mu) / self.sigma)

    def cdf(self, y):
        return std_normal_cdf((y - self.mu) / self.sigma)

    def ppf(self, p):
        return self.mu + self.sigma * std_normal_ppf(p)


@dataclass(frozen=True)
class SinhNormalKernel:
    """Sinh-normal law with shape ``alpha``, location ``mu`` and scale 2."""

    alpha: float
    mu: float

    def __post_init__(self):
        _check_positive("alpha", self.alpha)

    def logpdf(self, y):
        return sinh_normal_logpdf_array(y, self.mu, self.alpha)

    def logsf(self, y):
        return sinh_normal_logsf_array(y, self.mu, self.alpha)

    def sf(self, y):
        return std_normal_sf(sinh_normal_z(y, self.mu, self.alpha))

    def cdf(self, y):
        return std_normal_cdf(sinh_normal_z(y, self.mu, self.alpha))

    def ppf(self, p):
        return self.mu + SINH_NORMAL_SCALE * np.arcsinh(self.alpha * std_normal_ppf(p) / 2.0)


@dataclass(frozen=True)
class BirnbaumSaundersKernel:
    """Birnbaum-Saunders law with shape ``alpha`` and median ``mu``."""

    alpha: float
    mu: float

    def __post_init__(self):
        _check_positive("alpha", self.alpha)
        _check_positive("mu", self.mu)

    def logpdf(self, y):
        return bs_logpdf_array(y, self.mu, self.alpha)

    def logsf(self, y):
        return bs_logsf_array(y, self.mu, self.alpha)

    def sf(self, y):
        y = np.asarray(y, dtype=float)
        pos = y > 0
        z = bs_z(np.where(pos, y, 1.0), self.mu, self.alpha)
        return np.where(pos, std_normal_sf(z), 1.0)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        pos = y > 0
        z = bs_z(np.where(pos, y, 1.0), self.mu, self.alpha)
        return np.where(pos, std_normal_cdf(z), 0.0)

    def ppf(self, p):
        w = self.alpha * std_normal_ppf(p) / 2.0
        return self.mu * (w + np.sqrt(w * w + 1.0)) ** 2


Kernel = NormalKernel | SinhNormalKernel | BirnbaumSaundersKernel


# -- operations --------------------------------------------------------------

def normal_logpdf(y, k: NormalKernel):
    return k.logpdf(y)


def sinh_normal_logpdf(y, k: SinhNormalKernel):
    return k.logpdf(y)


def sinh_normal_survival(y, k: SinhNormalKernel):
    return k.sf(y)


def bs_logpdf(y, k: BirnbaumSaundersKernel):
    _check_positive("y", y)
    return k.logpdf(y)


def bs_survival(y, k: BirnbaumSaundersKernel):
    _check_positive("y", y)
    return k.sf(y)


def quantile(p, kernel: Kernel):
    """Closed-form quantile of any of the three kernels.

    Raises
    ------
    ValueError
        If ``p`` is not strictly inside (0, 1).
    """
    pa = np.asarray(p, dtype=float)
    if not np.all((pa > 0) & (pa < 1)):
        raise ValueError(f"probability must lie in (0, 1), got {p!r}")
    return kernel.ppf(pa)
