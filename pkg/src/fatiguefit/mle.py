"""Maximum-likelihood fitting with multi-start Nelder-Mead."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .core import FatigueDataset
from .likelihood import (
    Design,
    ModelSpec,
    ParamVector,
    check_domain,
    design_for,
    design_loglik,
    fast_loglik,
    life_variable,
)

log = logging.getLogger(__name__)

DEFAULT_BOUNDS: dict[str, tuple[float, float]] = {
    "A1": (-100.0, 100.0),
    "A2": (-100.0, 100.0),
    "A3": (0.0, math.inf),  # upper end enforced by feasibility
    "q": (-2.0, 2.0),
    "tau_or_alpha": (1e-8, 1e4),
    "B1": (-50.0, 50.0),
    "B2": (-20.0, 20.0),
}

# initial simplex edge per parameter, in optimizer coordinates
_STEP = {"A1": 0.5, "A2": 0.2, "A3": None, "q": 0.05, "tau_or_alpha": 0.2, "B1": 0.3, "B2": 0.2}


class FitError(RuntimeError):
    """No feasible start point could be found."""


@dataclass(frozen=True)
class FitConfig:
    n_starts: int = 24
    max_iters: int = 5000
    rel_tol: float = 1e-9
    seed: int = 0
    bounds: Mapping[str, tuple[float, float]] | None = None
    max_restarts: int = 10

    def __post_init__(self):
        if self.n_starts < 1:
            raise ValueError("n_starts must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")

    def box(self) -> dict[str, tuple[float, float]]:
        b = dict(DEFAULT_BOUNDS)
        if self.bounds:
            b.update(self.bounds)
        return b

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bounds"] = None if self.bounds is None else {k: list(v) for k, v in self.bounds.items()}
        return d


@dataclass(frozen=True)
class FittedModel:
    spec: ModelSpec
    params: ParamVector
    loglik: float
    k: int
    m: int
    converged: bool
    n_restarts_used: int = 0
    seed: int = 0
    data_hash: str | None = None

    def ic(self):
        from .inference import information_criteria

        return information_criteria(self.loglik, self.k, self.m)

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "model": self.spec.name,
            "params": self.params.as_dict(self.spec),
            "loglik": self.loglik,
            "k": self.k,
            "m": self.m,
            "converged": self.converged,
            "n_restarts_used": self.n_restarts_used,
            "seed": self.seed,
            "data_hash": self.data_hash,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: Mapping) -> "FittedModel":
        return cls(
            spec=ModelSpec(**d["spec"]),
            params=ParamVector(**d["params"]),
            loglik=float(d["loglik"]),
            k=int(d["k"]),
            m=int(d["m"]),
            converged=bool(d["converged"]),
            n_restarts_used=int(d.get("n_restarts_used", 0)),
            seed=int(d.get("seed", 0)),
            data_hash=d.get("data_hash"),
        )

    @classmethod
    def from_json(cls, text: str) -> "FittedModel":
        return cls.from_dict(json.loads(text))


def param_count(spec: ModelSpec) -> int:
    """Number of free parameters: location (3), exponent q, scale (1 or 2)."""
    return 3 + int(spec.has_q) + (1 if spec.scale_model == "a" else 2)


class _Objective:
    """Negative log-likelihood over the free parameters.

    A constant scale is optimized on the log scale. Points outside the box
    or infeasible under the model evaluate to +inf, which Nelder-Mead
    treats as a rejected vertex.
    """

    def __init__(self, design: Design, spec: ModelSpec, box, fixed: Mapping[str, float]):
        self.design = design
        self.spec = spec
        self.fixed = dict(fixed)
        self.names = [n for n in spec.param_names if n not in self.fixed]
        lo, hi = [], []
        for n in self.names:
            a, b = box[n]
            if n == "tau_or_alpha":
                a, b = math.log(a), math.log(b)
            lo.append(a)
            hi.append(b)
        self.lo = np.array(lo)
        self.hi = np.array(hi)
        self.n_evals = 0

    def params(self, theta) -> ParamVector:
        vals = dict(self.fixed)
        for n, v in zip(self.names, theta):
            vals[n] = math.exp(v) if n == "tau_or_alpha" else float(v)
        return ParamVector(**vals)

    def theta(self, p: ParamVector) -> np.ndarray:
        return np.array(
            [math.log(getattr(p, n)) if n == "tau_or_alpha" else getattr(p, n) for n in self.names]
        )

    def __call__(self, theta) -> float:
        self.n_evals += 1
        if np.any(theta < self.lo) or np.any(theta > self.hi):
            return math.inf
        with np.errstate(all="ignore"):
            s = fast_loglik(self.design, self.params(theta), self.spec)
        return -s if math.isfinite(s) else math.inf

    def simplex(self, theta: np.ndarray, shrink: float = 1.0) -> np.ndarray:
        sim = np.tile(theta, (theta.size + 1, 1))
        for i, n in enumerate(self.names):
            step = _STEP[n]
            if step is None:  # A3: relative step
                step = 0.02 * max(abs(theta[i]), 1.0)
            sim[i + 1, i] += shrink * step
        return sim


def _heuristic_start(design: Design, spec: ModelSpec, frac: float, q: float | None, fixed) -> ParamVector:
    """Least-squares seed for a given fatigue-limit fraction and exponent."""
    q = fixed.get("q", q) if spec.has_q else None
    fi = design.fail_idx
    log_seq = design.stress.log_seq(q)[fi]
    seq = np.exp(log_seq)
    a3 = fixed.get("A3", frac * seq.min())
    lb = spec.ln_base
    d = seq - a3
    keep = d > 0
    if not np.any(keep):
        keep = np.ones_like(d, dtype=bool)
        d = np.abs(d) + 1e-9
    x = np.log(d[keep]) / lb
    y, _ = life_variable(design.log_n[fi][keep], spec)
    if x.size >= 2 and np.ptp(x) > 1e-12:
        a2, a1 = np.polyfit(x, y, 1)
        resid = y - (a1 + a2 * x)
    else:
        a2, a1 = -1.0, float(np.mean(y + x))
        resid = y - np.mean(y)
    sd = max(float(np.std(resid)), 1e-2 * max(float(np.std(y)), 1e-3), 1e-3)
    if spec.family == "III":
        scale = sd / max(float(np.mean(y)), 1e-3)
    else:
        scale = sd
    a1 = float(np.clip(a1, -99.0, 99.0))
    a2 = float(np.clip(a2, -99.0, 99.0))
    vals = {"A1": a1, "A2": a2, "A3": float(a3), "q": q}
    if spec.scale_model == "a":
        vals["tau_or_alpha"] = scale
    else:
        vals["B1"] = math.log(scale) / lb
        vals["B2"] = 0.0
    vals.update(fixed)
    return ParamVector(**vals)


def _start_points(design, spec, cfg: FitConfig, init, fixed) -> list[ParamVector]:
    starts = []
    if init is not None:
        starts.append(replace(init, **fixed))
    if len(starts) < cfg.n_starts:
        starts.append(_heuristic_start(design, spec, 0.5, 0.5, fixed))
    n_more = cfg.n_starts - len(starts)
    if n_more > 0:
        sampler = qmc.LatinHypercube(d=2, seed=cfg.seed)
        u = sampler.random(n_more)
        for frac, uq in u:
            starts.append(_heuristic_start(design, spec, 0.05 + 0.9 * frac, -1.0 + 2.5 * uq, fixed))
    return starts


def _nelder_mead(obj: _Objective, theta0: np.ndarray, cfg: FitConfig):
    f = obj(theta0)
    theta = theta0
    converged = False
    restarts = -1
    for restarts in range(cfg.max_restarts + 1):
        fatol = cfg.rel_tol * (1.0 + abs(f))
        res = minimize(
            obj,
            theta,
            method="Nelder-Mead",
            options={
                "maxiter": cfg.max_iters,
                "xatol": math.inf,
                "fatol": fatol,
                "adaptive": True,
                "initial_simplex": obj.simplex(theta, 1.0 if restarts == 0 else 0.5),
            },
        )
        gain = f - res.fun
        if res.fun <= f:
            theta, f = res.x, float(res.fun)
        converged = bool(res.success)
        if converged and gain <= fatol:
            break
    return theta, f, converged, max(restarts, 0)


def fit_design(
    design: Design,
    spec: ModelSpec,
    cfg: FitConfig | None = None,
    init: ParamVector | None = None,
    fixed: Mapping[str, float] | None = None,
) -> FittedModel:
    """Fit prepared design arrays; see :func:`fit`."""
    cfg = cfg or FitConfig()
    fixed = dict(fixed or {})
    check_domain(design, spec)
    obj = _Objective(design, spec, cfg.box(), fixed)

    best = None
    for i, p0 in enumerate(_start_points(design, spec, cfg, init, fixed)):
        theta0 = obj.theta(p0)
        if not math.isfinite(obj(theta0)):
            continue
        theta, f, conv, restarts = _nelder_mead(obj, theta0, cfg)
        # strict comparison keeps the lowest start index on ties
        if best is None or f < best[1]:
            best = (theta, f, conv, restarts, i)
    if best is None:
        raise FitError(f"no feasible start point for model {spec.name}")

    theta, f, conv, restarts, i = best
    params = obj.params(theta)
    loglik = design_loglik(design, params, spec)
    if not conv:
        log.warning("model %s did not converge within %d iterations", spec.name, cfg.max_iters)
    return FittedModel(
        spec=spec,
        params=params,
        loglik=loglik,
        k=param_count(spec) - len(fixed),
        m=design.m,
        converged=conv,
        n_restarts_used=restarts,
        seed=cfg.seed,
    )


def fit(
    data: FatigueDataset,
    spec: ModelSpec,
    cfg: FitConfig | None = None,
    init: ParamVector | None = None,
    fixed: Mapping[str, float] | None = None,
) -> FittedModel:
    """Maximize the censored log-likelihood of ``spec`` on ``data``.

    Parameters
    ----------
    data : FatigueDataset
    spec : ModelSpec
    cfg : FitConfig, optional
        Start count, iteration cap, tolerance, seed and bounds.
    init : ParamVector, optional
        Extra start point tried first (warm start).
    fixed : mapping, optional
        Parameters held constant, e.g. ``{"A3": 20.0}`` for a profile.

    Returns
    -------
    FittedModel
        Best optimum over all feasible starts. ``converged`` is False when
        the iteration cap was hit.

    Raises
    ------
    FitError
        If every start point is infeasible.
    """
    return fit_design(design_for(data, spec.transform), spec, cfg, init, fixed)
