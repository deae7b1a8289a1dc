"""Information criteria, profile likelihood of the fatigue limit, and
stratified bootstrap intervals."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import FatigueDataset
from .likelihood import Design, ModelSpec, ParamVector, design_for
from .mle import FitConfig, FitError, FittedModel, fit_design

log = logging.getLogger(__name__)

#: exp(-chi2_{1,0.95}/2): relative-likelihood cut for an approximate 95% interval
REL_LIK_95 = math.exp(-0.5 * 3.841458820694124)


# -- information criteria ------------------------------------------------------

@dataclass(frozen=True)
class ICReport:
    loglik: float
    k: int
    m: int
    aic: float
    bic: float
    aicc: float | None  # None when m <= k + 1

    def as_dict(self) -> dict:
        return {"loglik": self.loglik, "k": self.k, "m": self.m, "aic": self.aic, "bic": self.bic, "aicc": self.aicc}


def information_criteria(fit_or_loglik, k: int | None = None, m: int | None = None) -> ICReport:
    """AIC, BIC and AICc.

    Accepts a :class:`FittedModel` or the raw ``(loglik, k, m)`` triple.
    ``m`` counts every observation, run-outs included.
    """
    if isinstance(fit_or_loglik, FittedModel):
        loglik, k, m = fit_or_loglik.loglik, fit_or_loglik.k, fit_or_loglik.m
    else:
        loglik = float(fit_or_loglik)
        if k is None or m is None:
            raise TypeError("k and m are required with a raw log-likelihood")
    aic = 2 * k - 2 * loglik
    bic = k * math.log(m) - 2 * loglik if m > 0 else math.nan
    aicc = aic + 2 * k * (k + 1) / (m - k - 1) if m > k + 1 else None
    return ICReport(loglik, k, m, aic, bic, aicc)


def rank_models(fits: Sequence[FittedModel]) -> list[tuple[FittedModel, ICReport]]:
    """Sort fits by AIC, breaking ties with the smaller parameter count."""
    rows = [(f, information_criteria(f)) for f in fits]
    return sorted(rows, key=lambda r: (r[1].aic, r[1].k))


# -- profile likelihood --------------------------------------------------------

@dataclass(frozen=True)
class ProfileCurve:
    grid: np.ndarray
    profile_loglik: np.ndarray  # NaN where no feasible fit exists
    loglik_max: float
    mle_a3: float
    threshold: float = REL_LIK_95

    @property
    def feasible(self) -> np.ndarray:
        return np.isfinite(self.profile_loglik)

    @property
    def normalized(self) -> np.ndarray:
        return np.exp(self.profile_loglik - self.loglik_max)

    def interval(self, threshold: float | None = None) -> tuple[float, float]:
        """A3 range where the relative profile likelihood stays above ``threshold``.

        Takes the connected region around the grid maximum; edges are
        linearly interpolated between grid points. An end that never drops
        below the threshold is reported at the grid boundary.
        """
        thr = self.threshold if threshold is None else threshold
        r = np.where(self.feasible, self.normalized, 0.0)
        g = self.grid
        j = int(np.argmax(r))
        lo_i = j
        while lo_i > 0 and r[lo_i - 1] >= thr:
            lo_i -= 1
        hi_i = j
        while hi_i < r.size - 1 and r[hi_i + 1] >= thr:
            hi_i += 1

        def cross(i_in, i_out):
            a, b = r[i_out], r[i_in]
            t = (thr - a) / (b - a)
            return g[i_out] + t * (g[i_in] - g[i_out])

        lo = cross(lo_i, lo_i - 1) if lo_i > 0 else g[0]
        hi = cross(hi_i, hi_i + 1) if hi_i < r.size - 1 else g[-1]
        return float(lo), float(hi)

    def width(self, threshold: float | None = None) -> float:
        lo, hi = self.interval(threshold)
        return hi - lo

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["A3", "profile_loglik", "relative_likelihood", "feasible"])
            for a, v, r, ok in zip(self.grid, self.profile_loglik, self.normalized, self.feasible):
                w.writerow([repr(float(a)), repr(float(v)), repr(float(r)), int(ok)])

    def to_dict(self) -> dict:
        lo, hi = self.interval()
        return {
            "grid": self.grid.tolist(),
            "profile_loglik": [None if not math.isfinite(v) else v for v in self.profile_loglik.tolist()],
            "loglik_max": self.loglik_max,
            "mle_A3": self.mle_a3,
            "threshold": self.threshold,
            "interval": [lo, hi],
        }


def make_grid(lo: float, hi: float, count: int) -> np.ndarray:
    if count < 2 or not hi > lo:
        raise ValueError("grid needs hi > lo and at least 2 points")
    return np.linspace(lo, hi, count)


def profile_fatigue_limit(
    data: FatigueDataset,
    spec: ModelSpec,
    cfg: FitConfig | None = None,
    grid: Sequence[float] | tuple[float, float, int] | None = None,
    fit: FittedModel | None = None,
) -> ProfileCurve:
    """Profile log-likelihood of A3 over a grid.

    Each grid value is a re-maximization with A3 held fixed. The sweep
    starts at the grid point nearest the MLE and moves outward in both
    directions, warm-starting from the neighbouring solution.

    Parameters
    ----------
    grid : array or (lo, hi, count), optional
        Fatigue-limit values. Defaults to 41 points spanning 50% to 100%
        of the smallest failure equivalent stress at the MLE.
    fit : FittedModel, optional
        Global fit; computed when omitted.
    """
    cfg = cfg or FitConfig()
    design = design_for(data, spec.transform)
    if fit is None:
        fit = fit_design(design, spec, cfg)
    if grid is None:
        seq_min = float(np.exp(design.stress.log_seq(fit.params.q)[design.fail_idx]).min())
        grid = np.linspace(0.5 * fit.params.A3, 0.999 * seq_min, 41)
    elif isinstance(grid, tuple) and len(grid) == 3:
        grid = make_grid(*grid)
    grid = np.sort(np.asarray(grid, dtype=float))

    values = np.full(grid.size, np.nan)
    point_cfg = replace(cfg, n_starts=max(2, min(cfg.n_starts, 4)))
    j0 = int(np.argmin(np.abs(grid - fit.params.A3)))
    for sweep in (range(j0, grid.size), range(j0 - 1, -1, -1)):
        warm = fit.params
        for j in sweep:
            try:
                r = fit_design(design, spec, point_cfg, init=warm, fixed={"A3": float(grid[j])})
            except FitError:
                log.info("profile point A3=%g infeasible", grid[j])
                continue
            if math.isfinite(r.loglik):
                values[j] = r.loglik
                warm = r.params

    best = float(np.nanmax(values)) if np.any(np.isfinite(values)) else -math.inf
    loglik_max = fit.loglik
    if best > fit.loglik + 1e-6:
        log.warning("profile exceeds the reported maximum by %.3g; the global fit missed an optimum", best - fit.loglik)
        loglik_max = best
    return ProfileCurve(grid, values, loglik_max, fit.params.A3)


# -- stratified bootstrap --------------------------------------------------------

@dataclass(frozen=True)
class BootstrapSummary:
    names: tuple[str, ...]
    estimate: tuple[float, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    reps: int
    level: float
    seed: int
    n_failed: int
    replicates: np.ndarray  # successful refits, one row per replicate

    def interval(self, name: str) -> tuple[float, float]:
        i = self.names.index(name)
        return self.lower[i], self.upper[i]

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["param", "estimate", "lo", "hi"])
            for row in zip(self.names, self.estimate, self.lower, self.upper):
                w.writerow([row[0]] + [repr(float(v)) for v in row[1:]])

    def to_dict(self) -> dict:
        return {
            "params": list(self.names),
            "estimate": list(self.estimate),
            "lower": list(self.lower),
            "upper": list(self.upper),
            "reps": self.reps,
            "level": self.level,
            "seed": self.seed,
            "n_failed": self.n_failed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def stratified_indices(codes: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Resample row indices with replacement inside each stratum.

    Row slots keep their stratum, so every resample has exactly the
    original per-stratum counts.
    """
    idx = np.empty(codes.size, dtype=np.intp)
    for c in np.unique(codes):
        pos = np.flatnonzero(codes == c)
        idx[pos] = pos[rng.integers(0, pos.size, pos.size)]
    return idx


def _strata_codes(data: FatigueDataset, strata) -> np.ndarray:
    if strata is None:
        return np.zeros(data.m, dtype=np.intp)
    if isinstance(strata, str):
        if strata != "group":
            raise ValueError(f"can only stratify by 'group', got {strata!r}")
        labels = ["" if g is None else g for g in data.groups]
    else:
        labels = list(strata)
        if len(labels) != data.m:
            raise ValueError("strata labels must match the dataset length")
    _, codes = np.unique(np.asarray(labels, dtype=str), return_inverse=True)
    return codes


def _replicate(design: Design, spec, cfg, init, codes, seed, i):
    rng = np.random.default_rng([seed, i])
    idx = stratified_indices(codes, rng)
    sub = design.take(idx)
    if sub.fail_idx.size == 0:
        return None
    try:
        r = fit_design(sub, spec, cfg, init=init)
    except FitError:
        return None
    if not (r.converged and math.isfinite(r.loglik)):
        return None
    return r.params.values(spec)


def _replicate_chunk(args):
    design, spec, cfg, init, codes, seed, ids = args
    return [_replicate(design, spec, cfg, init, codes, seed, i) for i in ids]


def n_workers() -> int:
    """Worker cap: ``FATIGUEFIT_THREADS`` if set, else the CPU count."""
    env = os.environ.get("FATIGUEFIT_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def bootstrap_ci(
    data: FatigueDataset,
    spec: ModelSpec,
    cfg: FitConfig | None = None,
    reps: int = 2000,
    level: float = 0.90,
    strata="group",
    fit: FittedModel | None = None,
    seed: int = 0,
    refit_starts: int = 1,
    workers: int | None = None,
) -> BootstrapSummary:
    """Percentile intervals from stratified bootstrap refits.

    Each replicate draws rows with replacement inside every stratum and
    refits the model, warm-started at the full-data MLE. Replicate ``i``
    uses the random stream seeded by ``(seed, i)``, so serial and parallel
    runs agree. Failed refits are dropped and counted in ``n_failed``.

    Parameters
    ----------
    strata : "group", label sequence, or None
        ``None`` resamples the whole dataset as one stratum.
    refit_starts : int
        Start points per refit (the warm start counts as one).
    """
    if reps < 100:
        raise ValueError("bootstrap needs at least 100 replicates")
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    cfg = cfg or FitConfig()
    design = design_for(data, spec.transform)
    codes = _strata_codes(data, strata)
    if fit is None:
        fit = fit_design(design, spec, cfg)
    refit_cfg = replace(cfg, n_starts=refit_starts)

    workers = n_workers() if workers is None else workers
    ids = list(range(reps))
    if workers <= 1:
        results = [_replicate(design, spec, refit_cfg, fit.params, codes, seed, i) for i in ids]
    else:
        chunks = [ids[w::workers] for w in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_replicate_chunk, [(design, spec, refit_cfg, fit.params, codes, seed, c) for c in chunks]))
        results = [None] * reps
        for c, part in zip(chunks, parts):
            for i, r in zip(c, part):
                results[i] = r

    ok = [r for r in results if r is not None]
    names = spec.param_names
    if not ok:
        raise FitError("every bootstrap refit failed")
    est = np.array(ok, dtype=float)
    alpha = 1.0 - level
    lo, hi = np.percentile(est, [100 * alpha / 2, 100 * (1 - alpha / 2)], axis=0)
    return BootstrapSummary(
        names=names,
        estimate=tuple(float(v) for v in fit.params.values(spec)),
        lower=tuple(float(v) for v in lo),
        upper=tuple(float(v) for v in hi),
        reps=reps,
        level=level,
        seed=seed,
        n_failed=reps - len(ok),
        replicates=est,
    )
