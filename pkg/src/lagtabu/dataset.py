"""Time-series containers, CSV ingestion, imputation and lagged design matrices."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

MISSING_TOKENS = frozenset({"", "na", "nan"})


class VariableKind(str, enum.Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


class DatasetError(ValueError):
    """Raised for malformed or unusable input data."""


class InadmissibleCandidate(ValueError):
    """A parent set that cannot be scored (too few rows, singular fit, ...)."""


@dataclass(frozen=True)
class TimeSeriesDataset:
    """N named series observed over T time points.

    ``values`` is stored variable-major with shape ``(N, T)``. Entries where
    ``missing`` is true carry no information (they are NaN after loading).
    """

    names: tuple[str, ...]
    kinds: tuple[VariableKind, ...]
    values: np.ndarray
    missing: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise DatasetError("values must be a 2-d (N, T) array")
        n, t = values.shape
        missing = self.missing
        if missing is None:
            missing = ~np.isfinite(values)
        missing = np.asarray(missing, dtype=bool)
        if missing.shape != values.shape:
            raise DatasetError("missing mask shape differs from values")
        if len(self.names) != n or len(self.kinds) != n:
            raise DatasetError("names/kinds length must equal the number of series")
        if len(set(self.names)) != n:
            raise DatasetError("variable names must be unique")
        if n < 1 or t < 2:
            raise DatasetError(f"need N >= 1 and T >= 2, got N={n}, T={t}")
        if not np.all(np.isfinite(values[~missing])):
            raise DatasetError("non-finite value in an observed cell")
        # read-only inputs without gaps are shared as-is (worker processes map them)
        if values.flags.writeable or missing.any():
            values = values.copy()
            values[missing] = np.nan
            values.setflags(write=False)
        if missing.flags.writeable:
            missing = missing.copy()
            missing.setflags(write=False)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "kinds", tuple(VariableKind(k) for k in self.kinds))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "missing", missing)

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def T(self) -> int:
        return self.values.shape[1]

    @property
    def is_complete(self) -> bool:
        return not self.missing.any()

    def index(self, name: str) -> int:
        return self.names.index(name)

    def window(self, start: int, stop: int) -> "TimeSeriesDataset":
        """Return the time slice ``[start, stop)`` as a new dataset."""
        return TimeSeriesDataset(self.names, self.kinds,
                                 self.values[:, start:stop], self.missing[:, start:stop])


@dataclass(frozen=True)
class DesignMatrix:
    child: int
    rows: np.ndarray
    response: np.ndarray
    start: int  # first usable 1-based time index

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def p(self) -> int:
        return self.rows.shape[1]


def _parse_cell(text: str, row: int, col: str) -> float:
    token = text.strip()
    if token.lower() in MISSING_TOKENS:
        return math.nan
    try:
        value = float(token)
    except ValueError:
        raise DatasetError(f"non-numeric cell {text!r} in column {col!r}, row {row}") from None
    if not math.isfinite(value):
        raise DatasetError(f"non-finite cell {text!r} in column {col!r}, row {row}")
    return value


def infer_kind(column: np.ndarray) -> VariableKind:
    observed = column[np.isfinite(column)]
    if observed.size and np.all((observed == 0) | (observed == 1)):
        return VariableKind.BINARY
    return VariableKind.CONTINUOUS


def load_csv(path, kind_overrides: Mapping[str, VariableKind | str] | None = None
             ) -> TimeSeriesDataset:
    """Read a header-plus-rows CSV, one column per variable, one row per time point.

    Empty cells (and ``NA``/``NaN`` tokens) are recorded as missing. Columns
    whose observed values all lie in {0, 1} are treated as binary unless
    ``kind_overrides`` says otherwise.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        try:
            rows = list(csv.reader(fh, strict=True))
        except csv.Error as exc:
            raise DatasetError(f"malformed CSV {path}: {exc}") from None
    rows = [r for r in rows if r]  # tolerate a trailing blank line
    if not rows:
        raise DatasetError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise DatasetError(f"duplicate column names in header of {path}")
    body = rows[1:]
    if len(body) < 2:
        raise DatasetError(f"{path} has fewer than 2 data rows")
    data = np.empty((len(header), len(body)))
    for t, row in enumerate(body):
        if len(row) != len(header):
            raise DatasetError(f"row {t + 2} of {path} has {len(row)} fields, "
                               f"expected {len(header)}")
        for i, cell in enumerate(row):
            data[i, t] = _parse_cell(cell, t + 2, header[i])

    overrides = dict(kind_overrides or {})
    unknown = set(overrides) - set(header)
    if unknown:
        raise DatasetError(f"kind override for unknown column(s): {sorted(unknown)}")
    kinds = [VariableKind(overrides[name]) if name in overrides else infer_kind(data[i])
             for i, name in enumerate(header)]
    for i, kind in enumerate(kinds):
        obs = data[i][np.isfinite(data[i])]
        if kind is VariableKind.BINARY and not np.all((obs == 0) | (obs == 1)):
            raise DatasetError(f"column {header[i]!r} declared binary but has non-0/1 values")
    return TimeSeriesDataset(tuple(header), tuple(kinds), data)


def write_csv(ds: TimeSeriesDataset, path) -> None:
    """Write ``ds`` in the layout read by :func:`load_csv`; missing cells are left empty."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ds.names)
        for t in range(ds.T):
            writer.writerow(
                "" if ds.missing[i, t]
                else (str(int(ds.values[i, t])) if ds.kinds[i] is VariableKind.BINARY
                      else repr(float(ds.values[i, t])))
                for i in range(ds.N))


def impute(ds: TimeSeriesDataset) -> TimeSeriesDataset:
    """Fill gaps with the column mean (continuous) or mode (binary, ties go to 0)."""
    values = np.array(ds.values, dtype=float)
    for i in range(ds.N):
        miss = ds.missing[i]
        if not miss.any():
            continue
        observed = values[i, ~miss]
        if observed.size == 0:
            raise DatasetError(f"variable {ds.names[i]!r} has no observed values")
        if ds.kinds[i] is VariableKind.BINARY:
            ones = int(np.count_nonzero(observed == 1))
            fill = 1.0 if ones > observed.size - ones else 0.0
        else:
            fill = float(observed.mean())
        values[i, miss] = fill
    return TimeSeriesDataset(ds.names, ds.kinds, values, np.zeros_like(ds.missing))


def build_design(ds: TimeSeriesDataset, child: int,
                 parents: Sequence[tuple[int, int]], l_max: int | None = None) -> DesignMatrix:
    """Stack ``[1, v_{i1,t-l1}, v_{i2,t-l2}, ...]`` rows for t = tau..T.

    ``tau`` is one plus the largest parent lag (an empty parent set uses all T
    rows). Raises :class:`InadmissibleCandidate` when fewer rows than columns
    remain.
    """
    T = ds.T
    max_lag = 0
    for i, lag in parents:
        if lag < 1 or (l_max is not None and lag > l_max):
            raise ValueError(f"lag {lag} of parent {i} outside [1, {l_max}]")
        if not 0 <= i < ds.N:
            raise ValueError(f"parent index {i} out of range")
        max_lag = max(max_lag, lag)
    n = T - max_lag
    p = 1 + len(parents)
    if n < 1 or n < p:
        raise InadmissibleCandidate(f"n={n} usable rows < p={p} columns for child {child}")
    X = np.empty((n, p))
    X[:, 0] = 1.0
    for c, (i, lag) in enumerate(parents, start=1):
        X[:, c] = ds.values[i, max_lag - lag:T - lag]
    y = np.array(ds.values[child, max_lag:])
    return DesignMatrix(child=child, rows=X, response=y, start=max_lag + 1)
