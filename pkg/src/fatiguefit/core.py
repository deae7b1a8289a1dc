"""Fatigue test records and CSV ingestion."""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

#: Canonical column names. A schema maps these to the headers found in a file.
COLUMNS = ("s_max", "stress_ratio", "cycles", "runout", "group", "s_eq")

_TRUE = {"1", "true", "t", "yes", "y"}
_FALSE = {"0", "false", "f", "no", "n"}


class DataError(ValueError):
    """Raised for invalid fatigue records, optionally tagged with a row number."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class FatigueObservation:
    """One constant-amplitude fatigue test.

    Parameters
    ----------
    s_max : float or None
        Maximum stress. May be omitted when ``s_eq_direct`` is given.
    stress_ratio : float or None
        Minimum-to-maximum stress ratio R, must be < 1.
    cycles : float
        Cycles at failure, or at test stop for a run-out.
    is_runout : bool
        True when the specimen was unbroken when the test stopped.
    group : str or None
        Stratum label (specimen type, diameter, ...).
    s_eq_direct : float or None
        Equivalent stress supplied directly by the data source.
    """

    s_max: float | None
    stress_ratio: float | None
    cycles: float
    is_runout: bool = False
    group: str | None = None
    s_eq_direct: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.cycles) and self.cycles > 0):
            raise DataError(f"cycles must be positive, got {self.cycles!r}")
        if self.stress_ratio is not None and not self.stress_ratio < 1:
            raise DataError(f"stress ratio must be < 1, got {self.stress_ratio!r}")
        if self.stress_ratio is not None and self.s_eq_direct is not None:
            raise DataError("give either a stress ratio or a direct equivalent stress, not both")
        if self.s_max is None and self.s_eq_direct is None:
            raise DataError("a stress value (s_max or s_eq) is required")
        for name in ("s_max", "s_eq_direct"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise DataError(f"{name} must be positive, got {v!r}")

    @property
    def failed(self) -> bool:
        return not self.is_runout


@dataclass(frozen=True)
class FatigueDataset:
    """Ordered, immutable collection of fatigue tests."""

    observations: tuple[FatigueObservation, ...]
    unit: str = ""
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "observations", tuple(self.observations))
        if not self.observations:
            raise DataError("dataset is empty")
        if all(o.is_runout for o in self.observations):
            raise DataError("dataset has no failures; the likelihood is unbounded")

    def __len__(self) -> int:
        return len(self.observations)

    def __iter__(self):
        return iter(self.observations)

    @property
    def m(self) -> int:
        return len(self.observations)

    @property
    def n_runouts(self) -> int:
        return sum(o.is_runout for o in self.observations)

    @property
    def n_failures(self) -> int:
        return self.m - self.n_runouts

    @cached_property
    def arrays(self) -> dict[str, np.ndarray]:
        """Column arrays with NaN for absent optional values."""
        obs = self.observations

        def col(attr):
            return np.array(
                [np.nan if getattr(o, attr) is None else getattr(o, attr) for o in obs],
                dtype=float,
            )

        return {
            "s_max": col("s_max"),
            "stress_ratio": col("stress_ratio"),
            "cycles": col("cycles"),
            "runout": np.array([o.is_runout for o in obs], dtype=bool),
            "s_eq": col("s_eq_direct"),
        }

    @property
    def groups(self) -> list[str | None]:
        return [o.group for o in self.observations]

    def subset(self, indices: Iterable[int]) -> "FatigueDataset":
        obs = self.observations
        return FatigueDataset(tuple(obs[i] for i in indices), unit=self.unit, name=self.name)

    def to_csv(self, path: str | Path) -> None:
        """Write the dataset with canonical column names."""
        write_dataset(self, path)


def _parse_float(text: str, column: str, row: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataError(f"cannot parse {column} value {text!r}", row) from None


def _parse_bool(text: str, row: int) -> bool:
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise DataError(f"cannot parse runout flag {text!r}", row)


def load_dataset(
    path: str | Path,
    schema: Mapping[str, str] | None = None,
    unit: str = "",
    name: str | None = None,
) -> FatigueDataset:
    """Read a fatigue dataset from CSV.

    Parameters
    ----------
    path : str or Path
        CSV file with a header row.
    schema : mapping, optional
        Canonical column name -> header used in the file, e.g.
        ``{"s_max": "Smax (ksi)", "runout": "RO"}``. Unmapped columns are
        looked up under their canonical name.
    unit : str
        Stress unit label, carried along untouched.
    name : str, optional
        Dataset label, defaults to the file stem.

    Raises
    ------
    DataError
        On a missing required column or an invalid row; row numbers count
        data rows from 1.
    """
    path = Path(path)
    schema = dict(schema or {})
    unknown = set(schema) - set(COLUMNS)
    if unknown:
        raise DataError(f"unknown schema keys: {sorted(unknown)}")
    header_of = {c: schema.get(c, c) for c in COLUMNS}

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = [f.strip() for f in (reader.fieldnames or [])]
        reader.fieldnames = fields
        for required in ("cycles", "runout"):
            if header_of[required] not in fields:
                raise DataError(f"missing required column {header_of[required]!r}")
        if header_of["s_max"] not in fields and header_of["s_eq"] not in fields:
            raise DataError(
                f"missing stress column: need {header_of['s_max']!r} or {header_of['s_eq']!r}"
            )

        observations = []
        for row_no, rec in enumerate(reader, start=1):
            def cell(c):
                v = rec.get(header_of[c])
                v = v.strip() if v is not None else ""
                return v or None

            def num(c):
                v = cell(c)
                return None if v is None else _parse_float(v, c, row_no)

            cycles_text = cell("cycles")
            if cycles_text is None:
                raise DataError("cycles is empty", row_no)
            runout_text = cell("runout")
            if runout_text is None:
                raise DataError("runout flag is empty", row_no)
            try:
                observations.append(
                    FatigueObservation(
                        s_max=num("s_max"),
                        stress_ratio=num("stress_ratio"),
                        cycles=_parse_float(cycles_text, "cycles", row_no),
                        is_runout=_parse_bool(runout_text, row_no),
                        group=cell("group"),
                        s_eq_direct=num("s_eq"),
                    )
                )
            except DataError as exc:
                if exc.row is not None:
                    raise
                raise DataError(str(exc), row_no) from None

    return FatigueDataset(tuple(observations), unit=unit, name=path.stem if name is None else name)


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def write_dataset(data: FatigueDataset, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for o in data.observations:
            w.writerow(
                [
                    _fmt(o.s_max),
                    _fmt(o.stress_ratio),
                    _fmt(o.cycles),
                    int(o.is_runout),
                    "" if o.group is None else o.group,
                    _fmt(o.s_eq_direct),
                ]
            )


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def make_dataset(
    s_max: Sequence[float] | None,
    cycles: Sequence[float],
    runout: Sequence[bool],
    stress_ratio: Sequence[float] | None = None,
    group: Sequence[str] | None = None,
    s_eq: Sequence[float] | None = None,
    unit: str = "",
    name: str = "",
) -> FatigueDataset:
    """Build a dataset from parallel columns (``None`` for absent columns)."""
    m = len(cycles)

    def get(seq, i):
        if seq is None:
            return None
        v = seq[i]
        if v is None or (isinstance(v, float) and math.isnan(v)):
            return None
        return v

    obs = []
    for i in range(m):
        g = get(group, i)
        obs.append(
            FatigueObservation(
                s_max=None if get(s_max, i) is None else float(s_max[i]),
                stress_ratio=None if get(stress_ratio, i) is None else float(stress_ratio[i]),
                cycles=float(cycles[i]),
                is_runout=bool(runout[i]),
                group=None if g is None else str(g),
                s_eq_direct=None if get(s_eq, i) is None else float(s_eq[i]),
            )
        )
    return FatigueDataset(tuple(obs), unit=unit, name=name)
