"""Censored log-likelihood of the six fatigue-limit models.

Families
--------
I    log_b(N) ~ Normal(mu, sigma)
II   ln(N)    ~ SinhNormal(alpha, mu), scale 2
III  log_b(N) ~ BirnbaumSaunders(alpha, mu)

with location ``mu(S) = A1 + A2 log_b(S - A3)`` for ``S > A3`` and a scale
that is either constant (variant ``a``) or ``b**(B1 + B2 log_b(S))``
(variant ``b``). Below the fatigue limit the life is infinite: failures
there are impossible and run-outs contribute zero.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import cached_property

import numpy as np

from . import distributions as dist
from .core import DataError, FatigueDataset, FatigueObservation
from .stress import KINDS, LogStress, has_exponent

#: Returned by the likelihood for parameters that give zero probability to
#: the data (a failure below the fatigue limit, a nonpositive BS location).
INFEASIBLE = -math.inf

FAMILIES = ("I", "II", "III")
SCALE_MODELS = ("a", "b")
LOG_BASES = {"10": 10.0, "e": math.e}


@dataclass(frozen=True)
class ModelSpec:
    family: str
    scale_model: str = "a"
    transform: str = "walker"
    log_base: str = "10"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.scale_model not in SCALE_MODELS:
            raise ValueError(f"unknown scale model {self.scale_model!r}")
        if self.transform not in KINDS:
            raise ValueError(f"unknown stress transform {self.transform!r}")
        if self.log_base not in LOG_BASES:
            raise ValueError(f"log base must be '10' or 'e', got {self.log_base!r}")

    @classmethod
    def from_name(cls, name: str, transform: str = "walker", log_base: str = "10") -> "ModelSpec":
        """``ModelSpec.from_name("IIIb", "swalker")``."""
        if len(name) < 2 or name[-1] not in SCALE_MODELS or name[:-1] not in FAMILIES:
            raise ValueError(f"unknown model {name!r}; expected one of Ia, Ib, IIa, IIb, IIIa, IIIb")
        return cls(name[:-1], name[-1], transform, log_base)

    @property
    def name(self) -> str:
        return self.family + self.scale_model

    @property
    def base(self) -> float:
        return LOG_BASES[self.log_base]

    @property
    def ln_base(self) -> float:
        return math.log(self.base)

    @property
    def has_q(self) -> bool:
        return has_exponent(self.transform)

    @property
    def param_names(self) -> tuple[str, ...]:
        names = ["A1", "A2", "A3"]
        if self.has_q:
            names.append("q")
        names += ["tau_or_alpha"] if self.scale_model == "a" else ["B1", "B2"]
        return tuple(names)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ParamVector:
    A1: float
    A2: float
    A3: float
    q: float | None = None
    tau_or_alpha: float | None = None
    B1: float | None = None
    B2: float | None = None

    def check(self, spec: ModelSpec) -> None:
        if spec.has_q and self.q is None:
            raise ValueError(f"{spec.transform} transform needs q")
        if spec.scale_model == "a":
            if self.tau_or_alpha is None or not self.tau_or_alpha > 0:
                raise ValueError("constant scale must be positive")
        elif self.B1 is None or self.B2 is None:
            raise ValueError("log-linear scale needs B1 and B2")

    def values(self, spec: ModelSpec) -> tuple[float, ...]:
        return tuple(getattr(self, n) for n in spec.param_names)

    def as_dict(self, spec: ModelSpec | None = None) -> dict[str, float]:
        if spec is None:
            return {k: v for k, v in asdict(self).items() if v is not None}
        return {n: getattr(self, n) for n in spec.param_names}


@dataclass(frozen=True)
class Design:
    """Dataset columns pre-arranged for fast repeated evaluation."""

    stress: LogStress
    log_n: np.ndarray
    runout: np.ndarray

    @cached_property
    def fail_idx(self) -> np.ndarray:
        return np.flatnonzero(~self.runout)

    @cached_property
    def run_idx(self) -> np.ndarray:
        return np.flatnonzero(self.runout)

    @property
    def m(self) -> int:
        return self.log_n.size

    def take(self, idx) -> "Design":
        return Design(self.stress.take(idx), self.log_n[idx], self.runout[idx])

    def parts(self, spec: ModelSpec) -> "_Parts":
        cache = self.__dict__.setdefault("_parts", {})
        key = (spec.family, spec.log_base)
        if key not in cache:
            cache[key] = _Parts.build(self, spec)
        return cache[key]


@dataclass(frozen=True)
class _Parts:
    """Failure and run-out rows split apart, with ``log S_eq = c0 + c1*q``."""

    f_c0: np.ndarray
    f_c1: np.ndarray
    f_y: np.ndarray
    f_jac: float
    r_c0: np.ndarray
    r_c1: np.ndarray
    r_y: np.ndarray

    @classmethod
    def build(cls, design: Design, spec: ModelSpec) -> "_Parts":
        st = design.stress
        c0 = st.log_s + st.log_base * st.a
        c1 = st.log_base * st.b
        y, jac = life_variable(design.log_n, spec)
        f, r = design.fail_idx, design.run_idx
        return cls(c0[f], c1[f], y[f], math.fsum(jac[f].tolist()), c0[r], c1[r], y[r])


def design_for(data: FatigueDataset, transform: str) -> Design:
    cache = data.__dict__.setdefault("_design_cache", {})
    if transform not in cache:
        a = data.arrays
        cache[transform] = Design(
            LogStress.build(a["s_max"], a["stress_ratio"], a["s_eq"], transform),
            np.log(a["cycles"]),
            a["runout"],
        )
    return cache[transform]


def check_domain(design: Design, spec: ModelSpec) -> None:
    """Family III needs log_b(N) > 0, i.e. more than one cycle."""
    if spec.family == "III":
        bad = np.flatnonzero(design.log_n <= 0)
        if bad.size:
            raise DataError("BS-on-log models need more than one cycle", int(bad[0]) + 1)


def location_mu(s_eq, p: ParamVector, base: str | float = "10"):
    """Location ``A1 + A2 log_b(s_eq - A3)``; NaN at or below the fatigue limit."""
    b = LOG_BASES[base] if isinstance(base, str) else float(base)
    s = np.asarray(s_eq, dtype=float)
    above = s > p.A3
    d = np.where(above, s - p.A3, 1.0)
    mu = np.where(above, p.A1 + p.A2 * np.log(d) / math.log(b), np.nan)
    return mu if mu.ndim else float(mu)


def scale_value(s_eq, p: ParamVector, spec: ModelSpec):
    """Constant scale, or ``b**(B1 + B2 log_b(s_eq))`` for the log-linear variant."""
    s = np.asarray(s_eq, dtype=float)
    if spec.scale_model == "a":
        out = np.full_like(s, p.tau_or_alpha)
    else:
        out = np.exp(spec.ln_base * p.B1 + p.B2 * np.log(s))
    return out if out.ndim else float(out)


def life_variable(log_n, spec: ModelSpec):
    """Transformed life and the log-Jacobian ``-log(dy/dn)`` term."""
    if spec.family == "II":
        return log_n, -log_n
    lb = spec.ln_base
    return log_n / lb, -log_n - math.log(lb)


def _kernels(spec: ModelSpec):
    if spec.family == "I":
        return dist.normal_logpdf_array, dist.normal_logsf_array
    if spec.family == "II":
        return dist.sinh_normal_logpdf_array, dist.sinh_normal_logsf_array
    return dist.bs_logpdf_array, dist.bs_logsf_array


def loglik_terms(design: Design, p: ParamVector, spec: ModelSpec) -> np.ndarray:
    """Per-observation log-likelihood contributions (``-inf`` marks impossibility)."""
    log_seq = design.stress.log_seq(p.q)
    seq = np.exp(log_seq)
    terms = np.zeros(design.m)
    fi, ri = design.fail_idx, design.run_idx
    ok = seq[fi] > p.A3
    terms[fi[~ok]] = -np.inf
    fi = fi[ok]
    ri = ri[seq[ri] > p.A3]

    lb = spec.ln_base
    logpdf, logsf = _kernels(spec)
    for rows, failed in ((fi, True), (ri, False)):
        if rows.size == 0:
            continue
        mu = p.A1 + (p.A2 / lb) * np.log(seq[rows] - p.A3)
        if spec.scale_model == "a":
            scale = p.tau_or_alpha
        else:
            scale = np.exp(lb * p.B1 + p.B2 * log_seq[rows])
        y, log_jac = life_variable(design.log_n[rows], spec)
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            vals = log_jac + logpdf(y, mu, scale) if failed else logsf(y, mu, scale)
        if spec.family == "III":
            vals = np.where(mu > 0, vals, -np.inf)
        terms[rows] = np.where(np.isnan(vals), -np.inf, vals)
    return terms


def _kernel_sum(spec, y, mu, scale, failed: bool) -> float:
    if spec.family == "I":
        z = (y - mu) / scale
        if failed:
            return -0.5 * float(z @ z) - y.size * dist._LOG_SQRT_2PI - float(np.sum(np.log(scale)))
        return float(np.sum(dist.std_normal_logsf(z)))
    if spec.family == "II":
        fn = dist.sinh_normal_logpdf_array if failed else dist.sinh_normal_logsf_array
        return float(np.sum(fn(y, mu, scale)))
    if np.any(mu <= 0):
        return -math.inf
    fn = dist.bs_logpdf_array if failed else dist.bs_logsf_array
    return float(np.sum(fn(y, mu, scale)))


def fast_loglik(design: Design, p: ParamVector, spec: ModelSpec) -> float:
    """Summed log-likelihood for the optimizer loop.

    Same value as ``sum(loglik_terms(...))`` up to rounding, but avoids
    per-row bookkeeping. Returns ``INFEASIBLE`` (or NaN on overflow).
    """
    pt = design.parts(spec)
    lb = spec.ln_base
    q = p.q if p.q is not None else 0.0
    total = pt.f_jac

    ls = pt.f_c0 + pt.f_c1 * q
    d = np.exp(ls) - p.A3
    if d.size:
        if d.min() <= 0:
            return INFEASIBLE
        mu = p.A1 + (p.A2 / lb) * np.log(d)
        scale = p.tau_or_alpha if spec.scale_model == "a" else np.exp(lb * p.B1 + p.B2 * ls)
        if spec.scale_model == "a":
            scale = np.full_like(mu, scale)
        total += _kernel_sum(spec, pt.f_y, mu, scale, True)

    if pt.r_y.size:
        ls = pt.r_c0 + pt.r_c1 * q
        d = np.exp(ls) - p.A3
        above = d > 0
        y = pt.r_y
        if not above.all():
            ls, d, y = ls[above], d[above], y[above]
        if y.size:
            mu = p.A1 + (p.A2 / lb) * np.log(d)
            if spec.scale_model == "a":
                scale = p.tau_or_alpha
            else:
                scale = np.exp(lb * p.B1 + p.B2 * ls)
            total += _kernel_sum(spec, y, mu, scale, False)
    return total


def _sum(terms: np.ndarray) -> float:
    if np.any(terms == -np.inf):
        return INFEASIBLE
    return math.fsum(terms.tolist())


def observation_loglik(obs: FatigueObservation, p: ParamVector, spec: ModelSpec) -> float:
    """Contribution of a single record."""
    p.check(spec)
    nan = np.nan

    def col(v):
        return np.array([nan if v is None else v], dtype=float)

    design = Design(
        LogStress.build(col(obs.s_max), col(obs.stress_ratio), col(obs.s_eq_direct), spec.transform),
        np.log(col(obs.cycles)),
        np.array([obs.is_runout]),
    )
    check_domain(design, spec)
    return float(loglik_terms(design, p, spec)[0])


def total_loglik(data: FatigueDataset, p: ParamVector, spec: ModelSpec) -> float:
    """Sum of the per-record contributions, or ``INFEASIBLE``."""
    p.check(spec)
    design = design_for(data, spec.transform)
    check_domain(design, spec)
    return _sum(loglik_terms(design, p, spec))


def design_loglik(design: Design, p: ParamVector, spec: ModelSpec) -> float:
    return _sum(loglik_terms(design, p, spec))


__all__ = [
    "INFEASIBLE",
    "Design",
    "ModelSpec",
    "ParamVector",
    "check_domain",
    "design_for",
    "design_loglik",
    "location_mu",
    "fast_loglik",
    "loglik_terms",
    "observation_loglik",
    "scale_value",
    "total_loglik",
]
