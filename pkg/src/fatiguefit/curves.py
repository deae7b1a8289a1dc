"""S-N quantile curves, survival curves and probability-plot coordinates."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from . import distributions as dist
from .core import FatigueDataset, FatigueObservation
from .likelihood import ModelSpec, location_mu, scale_value
from .mle import FittedModel
from .stress import StressTransform, equivalent_stress


def _kernel(spec: ModelSpec, mu, scale):
    if spec.family == "I":
        return dist.NormalKernel(mu, scale)
    if spec.family == "II":
        return dist.SinhNormalKernel(scale, mu)
    return dist.BirnbaumSaundersKernel(scale, mu)


def _life_base(spec: ModelSpec) -> float:
    return math.e if spec.family == "II" else spec.base


@dataclass(frozen=True)
class QuantileCurve:
    p: float
    s_eq: np.ndarray
    cycles: np.ndarray  # inf at or below the fatigue limit
    model: str

    @property
    def infinite_life(self) -> np.ndarray:
        return ~np.isfinite(self.cycles)


def quantile_curve(fit: FittedModel, p: float, s_grid: Sequence[float]) -> QuantileCurve:
    """Life quantile ``p`` as a function of equivalent stress.

    Grid points at or below A3 get infinite life.
    """
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    spec, prm = fit.spec, fit.params
    s = np.asarray(s_grid, dtype=float)
    cycles = np.full(s.shape, np.inf)
    above = s > prm.A3
    if np.any(above):
        sa = s[above]
        mu = np.atleast_1d(location_mu(sa, prm, spec.log_base))
        scale = np.broadcast_to(scale_value(sa, prm, spec), mu.shape)
        y = np.full(mu.shape, np.nan)
        for i, (m_, sc) in enumerate(zip(mu, scale)):
            if spec.family == "III" and m_ <= 0:
                continue
            y[i] = dist.quantile(p, _kernel(spec, m_, sc))
        with np.errstate(over="ignore"):
            cycles[above] = _life_base(spec) ** y
    return QuantileCurve(p, s, cycles, spec.name)


def write_quantile_csv(fit: FittedModel, s_grid, path: str | Path, probs=(0.05, 0.5, 0.95)) -> None:
    curves = [quantile_curve(fit, p, s_grid) for p in probs]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s_eq"] + [f"cycles_p{round(100 * p):02d}" for p in probs] + ["infinite_life"])
        for i, s in enumerate(curves[0].s_eq):
            w.writerow(
                [repr(float(s))]
                + [repr(float(c.cycles[i])) for c in curves]
                + [int(curves[0].infinite_life[i])]
            )


@dataclass(frozen=True)
class SurvivalCurve:
    s_max: float | None
    stress_ratio: float | None
    s_eq: float
    cycles: np.ndarray
    survival: np.ndarray

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["cycles", "survival"])
            for n, s in zip(self.cycles, self.survival):
                w.writerow([repr(float(n)), repr(float(s))])


def loading_stress(fit: FittedModel, s_max=None, stress_ratio=None, s_eq=None) -> float:
    """Equivalent stress of a loading under the fitted transform.

    A directly supplied ``s_eq`` is used as is.
    """
    if s_eq is not None:
        if s_max is not None or stress_ratio is not None:
            raise ValueError("give either s_eq or (s_max, stress_ratio), not both")
        if not s_eq > 0:
            raise ValueError("s_eq must be positive")
        return float(s_eq)
    obs = FatigueObservation(s_max, stress_ratio, 1.0, False, None, s_eq)
    return equivalent_stress(obs, StressTransform(fit.spec.transform, fit.params.q))


def survival_at(fit: FittedModel, s_eq: float, cycles) -> np.ndarray:
    spec, prm = fit.spec, fit.params
    n = np.asarray(cycles, dtype=float)
    if s_eq <= prm.A3:
        return np.ones_like(n)
    mu = float(location_mu(s_eq, prm, spec.log_base))
    scale = float(scale_value(s_eq, prm, spec))
    y = np.log(n) / math.log(_life_base(spec))
    if spec.family == "III":
        if mu <= 0:
            raise ValueError("BS location is not positive at this stress")
        return dist.BirnbaumSaundersKernel(scale, mu).sf(y)
    return _kernel(spec, mu, scale).sf(y)


def survival_curve(
    fit: FittedModel,
    s_max: float | None,
    stress_ratio: float | None,
    cycle_grid: Sequence[float],
    s_eq: float | None = None,
) -> SurvivalCurve:
    """Probability of surviving each grid cycle count at a fixed loading.

    Constant 1 when the loading lies at or below the fatigue limit.
    """
    seq = loading_stress(fit, s_max, stress_ratio, s_eq)
    n = np.asarray(cycle_grid, dtype=float)
    return SurvivalCurve(s_max, stress_ratio, seq, n, survival_at(fit, seq, n))


# -- probability plots -------------------------------------------------------

PLOT_FAMILIES = ("normal", "sinh-normal", "bs")
PLOT_TRANSFORMS = ("identity", "log")


def plotting_positions(n: int) -> np.ndarray:
    """Blom positions ``(i - 0.375) / (n + 0.25)``, i = 1..n."""
    i = np.arange(1, n + 1)
    return (i - 0.375) / (n + 0.25)


@dataclass(frozen=True)
class ProbabilityPlot:
    family: str
    transform: str
    position: np.ndarray
    empirical: np.ndarray
    fitted: np.ndarray
    location: float
    scale: float

    @property
    def correlation(self) -> float:
        return float(np.corrcoef(self.empirical, self.fitted)[0, 1])

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["position", "empirical", "fitted"])
            for row in zip(self.position, self.empirical, self.fitted):
                w.writerow([repr(float(v)) for v in row])


def _single_population_kernel(family: str, y, run):
    """Censored ML fit of one location/scale law to transformed lives."""
    yf = y[~run]
    loc0 = float(np.median(yf))
    if family == "normal":
        s0 = max(float(np.std(yf)), 1e-6 * max(abs(loc0), 1.0))
        x0 = [loc0, math.log(s0)]

        def make(x):
            return dist.NormalKernel(x[0], math.exp(x[1]))
    elif family == "sinh-normal":
        s0 = max(float(np.std(yf)), 1e-6)
        x0 = [loc0, math.log(s0)]

        def make(x):
            return dist.SinhNormalKernel(math.exp(x[1]), x[0])
    else:
        if np.any(y <= 0):
            raise ValueError("BS probability plot needs positive transformed lives")
        s0 = max(float(np.std(np.log(yf))), 1e-6)
        x0 = [math.log(loc0), math.log(s0)]

        def make(x):
            return dist.BirnbaumSaundersKernel(math.exp(x[1]), math.exp(x[0]))

    def nll(x):
        k = make(x)
        with np.errstate(all="ignore"):
            v = np.sum(k.logpdf(yf)) + np.sum(k.logsf(y[run]))
        return -v if np.isfinite(v) else math.inf

    res = minimize(nll, x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000})
    return make(res.x)


def probability_plot(data: FatigueDataset, family: str, transform: str = "log") -> ProbabilityPlot:
    """Probability-plot coordinates for the failure lives of ``data``.

    Lives are transformed (``identity`` or natural ``log``), a single
    distribution of ``family`` is fitted by censored ML, and the sorted
    failure values are paired with fitted quantiles at Blom positions.
    """
    if family not in PLOT_FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {PLOT_FAMILIES}")
    if transform not in PLOT_TRANSFORMS:
        raise ValueError(f"unknown transform {transform!r}; choose from {PLOT_TRANSFORMS}")
    a = data.arrays
    run = a["runout"]
    if int(np.sum(~run)) < 3:
        raise ValueError("probability plot needs at least 3 failures")
    y = np.log(a["cycles"]) if transform == "log" else a["cycles"].copy()
    k = _single_population_kernel(family, y, run)
    emp = np.sort(y[~run])
    pos = plotting_positions(emp.size)
    fitted = np.asarray(dist.quantile(pos, k), dtype=float)
    loc = k.mu
    scale = k.sigma if family == "normal" else k.alpha
    return ProbabilityPlot(family, transform, pos, emp, fitted, float(loc), float(scale))
