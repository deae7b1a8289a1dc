"""Equivalent-stress transforms combining maximum stress and cycle ratio."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DataError, FatigueObservation

#: walker:   S_max (1 - R)^q
#: nwalker:  S_max ((1 - R)/2)^(1 + q)
#: swalker:  S_max ((1 - R)/2)^(1 - sign(R) q), sign(0) = 0
#: identity: supplied equivalent stress, else S_max
KINDS = ("walker", "nwalker", "swalker", "identity")


def has_exponent(kind: str) -> bool:
    return kind != "identity"


@dataclass(frozen=True)
class StressTransform:
    kind: str
    q: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown stress transform {self.kind!r}; choose from {KINDS}")
        if has_exponent(self.kind):
            if self.q is None or not math.isfinite(self.q):
                raise ValueError(f"transform {self.kind!r} needs a finite exponent q")


def equivalent_stress(obs: FatigueObservation, t: StressTransform) -> float:
    lin = LogStress.build(
        np.array([np.nan if obs.s_max is None else obs.s_max]),
        np.array([np.nan if obs.stress_ratio is None else obs.stress_ratio]),
        np.array([np.nan if obs.s_eq_direct is None else obs.s_eq_direct]),
        t.kind,
    )
    return float(lin.seq(t.q)[0])


@dataclass(frozen=True)
class LogStress:
    """Log equivalent stress written as ``log_s + log_base * (a + b*q)``.

    Every transform is linear in ``q`` on the log scale, which lets the
    likelihood recompute the stresses for a new exponent with one fused
    array expression.
    """

    log_s: np.ndarray
    log_base: np.ndarray
    a: np.ndarray
    b: np.ndarray
    kind: str

    @classmethod
    def build(cls, s_max, stress_ratio, s_eq, kind: str) -> "LogStress":
        if kind not in KINDS:
            raise ValueError(f"unknown stress transform {kind!r}; choose from {KINDS}")
        s_max = np.asarray(s_max, dtype=float)
        ratio = np.asarray(stress_ratio, dtype=float)
        s_eq = np.asarray(s_eq, dtype=float)
        zeros = np.zeros_like(s_max)

        if kind == "identity":
            bad = np.flatnonzero(~np.isnan(ratio) & np.isnan(s_eq))
            if bad.size:
                raise DataError(
                    "identity transform would ignore the stress ratio; "
                    "supply s_eq or choose a Walker-type transform",
                    int(bad[0]) + 1,
                )
            s = np.where(np.isnan(s_eq), s_max, s_eq)
            if np.any(np.isnan(s)):
                raise DataError("identity transform needs s_max or s_eq on every row")
            return cls(np.log(s), zeros, zeros, zeros, kind)

        bad = np.flatnonzero(np.isnan(ratio) | np.isnan(s_max))
        if bad.size:
            raise DataError(
                f"stress transform {kind!r} needs s_max and stress_ratio", int(bad[0]) + 1
            )
        bad = np.flatnonzero(ratio >= 1)
        if bad.size:
            raise DataError("stress ratio must be < 1", int(bad[0]) + 1)

        if kind == "walker":
            return cls(np.log(s_max), np.log1p(-ratio), zeros, np.ones_like(ratio), kind)
        half = np.log1p(-ratio) - math.log(2.0)
        if kind == "nwalker":
            return cls(np.log(s_max), half, np.ones_like(ratio), np.ones_like(ratio), kind)
        return cls(np.log(s_max), half, np.ones_like(ratio), -np.sign(ratio), kind)

    def log_seq(self, q: float | None) -> np.ndarray:
        if self.kind == "identity":
            return self.log_s
        return self.log_s + self.log_base * (self.a + self.b * q)

    def seq(self, q: float | None) -> np.ndarray:
        return np.exp(self.log_seq(q))

    def take(self, idx) -> "LogStress":
        return LogStress(self.log_s[idx], self.log_base[idx], self.a[idx], self.b[idx], self.kind)
