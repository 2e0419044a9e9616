"""Observation storage, CSV ingestion, and structural validation.

A :class:`Dataset` holds one row per unit: outcome ``y``, binary source
indicator ``s`` (1 = trial, 0 = target), binary treatment ``a``, a shared
covariate matrix ``x`` and an optional target-only covariate matrix ``w``.
``w`` values are only meaningful on target rows; trial rows may leave the
``w`` columns blank and any value there is ignored.

Scenario support is structural:

* scenario 1 requires every target row to be on control,
* scenario 2 requires only the base ``(x, s, a, y)`` layout,
* scenario 3 additionally requires ``w`` on every target row.

Empirical positivity (empty ``(s, a)`` cells, constant covariates within a
fitting stratum) is screened by :func:`validate`, which reports rather than
fails except for a structural scenario mismatch.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ScenarioMismatchError, SchemaError, StructuralError

DEFAULT_Y = "y"
DEFAULT_S = "s"
DEFAULT_A = "a"


@dataclass(frozen=True)
class Observation:
    """One unit; mainly a convenience view over Dataset rows."""

    y: float
    s: int
    a: int
    x: tuple[float, ...]
    w: tuple[float, ...] | None = None


@dataclass(frozen=True)
class Dataset:
    """Immutable table of observations with per-scenario validity flags."""

    y: np.ndarray
    s: np.ndarray
    a: np.ndarray
    x: np.ndarray
    w: np.ndarray | None = None
    scenario_flags: dict = field(default_factory=dict)

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        s = np.asarray(self.s, dtype=int)
        a = np.asarray(self.a, dtype=int)
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(len(y), -1) if x.size else np.zeros((len(y), 0))
        w = None if self.w is None else np.asarray(self.w, dtype=float)
        n = len(y)
        if not (len(s) == len(a) == x.shape[0] == n):
            raise StructuralError("column lengths differ", module="data")
        if not np.all((s == 0) | (s == 1)):
            raise ParseError("s must be 0/1", module="data")
        if not np.all((a == 0) | (a == 1)):
            raise ParseError("a must be 0/1", module="data")
        if int(np.sum(s == 1)) < 1 or int(np.sum(s == 0)) < 1:
            raise StructuralError("both sources must be non-empty", module="data")
        if w is not None:
            if w.ndim == 1:
                w = w.reshape(n, -1)
            if w.shape[0] != n:
                raise StructuralError("w length differs from y", module="data")
            target_nan = np.isnan(w[s == 0])
            if target_nan.all():
                w = None  # w structurally absent
            elif target_nan.any():
                raise StructuralError(
                    "w present for some but not all target rows", module="data"
                )
        for arr, name in ((y, "y"),):
            if np.isnan(arr).any():
                raise ParseError(f"missing value in column {name}", module="data")
        if np.isnan(x).any():
            raise ParseError("missing value in covariates", module="data")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "w", w)
        flags = {
            1: bool(np.all(a[s == 0] == 0)),
            2: True,
            3: w is not None,
        }
        object.__setattr__(self, "scenario_flags", flags)
        y.setflags(write=False)
        s.setflags(write=False)
        a.setflags(write=False)
        x.setflags(write=False)
        if w is not None:
            w.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def n1(self) -> int:
        return int(np.sum(self.s == 1))

    @property
    def n0(self) -> int:
        return int(np.sum(self.s == 0))

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def q(self) -> int:
        return 0 if self.w is None else self.w.shape[1]

    def xw(self) -> np.ndarray:
        """Concatenated (x, w) matrix for target-only models."""
        if self.w is None:
            raise StructuralError("dataset has no w columns", module="data")
        return np.hstack([self.x, self.w])

    def rows(self) -> list[Observation]:
        return [
            Observation(
                float(self.y[i]),
                int(self.s[i]),
                int(self.a[i]),
                tuple(self.x[i]),
                None if self.w is None else tuple(self.w[i]),
            )
            for i in range(self.n)
        ]

    def stratum_indices(self, s: int, a: int | None = None) -> np.ndarray:
        mask = self.s == s
        if a is not None:
            mask &= self.a == a
        return np.flatnonzero(mask)

    def subset(self, indices: np.ndarray) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(
            self.y[idx],
            self.s[idx],
            self.a[idx],
            self.x[idx],
            None if self.w is None else self.w[idx],
        )


def _default_schema(header: list[str]) -> dict:
    """Infer the column map: y, s, a plus x1..xp / w1..wq by name."""
    xs = sorted(
        (c for c in header if re.fullmatch(r"x\d+", c)), key=lambda c: int(c[1:])
    )
    ws = sorted(
        (c for c in header if re.fullmatch(r"w\d+", c)), key=lambda c: int(c[1:])
    )
    return {"y": DEFAULT_Y, "s": DEFAULT_S, "a": DEFAULT_A, "x": xs, "w": ws}


def _parse_number(token: str, column: str, line: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(
            f"cannot parse {token!r} in column {column} (line {line})", module="data"
        ) from None


def load_csv(path, schema: dict | None = None) -> Dataset:
    """Read a UTF-8, comma-separated, header-row CSV into a Dataset.

    ``schema`` maps logical names to column names: keys ``y``, ``s``, ``a``
    (strings) and ``x``, ``w`` (lists of strings).  Without a schema the
    default names ``y, s, a, x1..xp, w1..wq`` are used.  Blank cells are
    only allowed in ``w`` columns (absent target-only covariates).
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise StructuralError(f"cannot read {path}: {exc}", module="data") from exc
    with fh:
        return _load_csv_stream(fh, schema)


def _load_csv_stream(fh, schema: dict | None) -> Dataset:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise StructuralError("empty file", module="data") from None
    header = [h.strip() for h in header]
    if schema is None:
        schema = _default_schema(header)
    for key in ("y", "s", "a"):
        col = schema.get(key)
        if col is None or col not in header:
            raise SchemaError(f"missing column for {key!r}", module="data")
    x_cols = list(schema.get("x", []))
    w_cols = list(schema.get("w", []))
    for col in x_cols + w_cols:
        if col not in header:
            raise SchemaError(f"covariate column {col!r} not in header", module="data")
    pos = {c: i for i, c in enumerate(header)}
    y_list, s_list, a_list, x_list, w_list = [], [], [], [], []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"wrong field count on line {line_no}", module="data")
        y_list.append(_parse_number(row[pos[schema["y"]]], schema["y"], line_no))
        s_val = _parse_number(row[pos[schema["s"]]], schema["s"], line_no)
        a_val = _parse_number(row[pos[schema["a"]]], schema["a"], line_no)
        if s_val not in (0.0, 1.0):
            raise ParseError(f"non-binary s on line {line_no}", module="data")
        if a_val not in (0.0, 1.0):
            raise ParseError(f"non-binary a on line {line_no}", module="data")
        s_list.append(int(s_val))
        a_list.append(int(a_val))
        x_row = []
        for col in x_cols:
            cell = row[pos[col]].strip()
            if cell == "":
                raise ParseError(f"blank {col} cell on line {line_no}", module="data")
            x_row.append(_parse_number(cell, col, line_no))
        x_list.append(x_row)
        w_row = []
        for col in w_cols:
            cell = row[pos[col]].strip()
            w_row.append(np.nan if cell == "" else _parse_number(cell, col, line_no))
        w_list.append(w_row)
    if not y_list:
        raise StructuralError("no data rows", module="data")
    w_arr = np.array(w_list, dtype=float) if w_cols else None
    return Dataset(
        np.array(y_list), np.array(s_list), np.array(a_list),
        np.array(x_list, dtype=float).reshape(len(y_list), len(x_cols)),
        w_arr,
    )


def write_csv(data: Dataset, path, schema: dict | None = None) -> None:
    """Write a Dataset; numbers carry 17 significant digits for round-trip."""
    if schema is None:
        schema = {
            "y": DEFAULT_Y,
            "s": DEFAULT_S,
            "a": DEFAULT_A,
            "x": [f"x{j + 1}" for j in range(data.p)],
            "w": [f"w{j + 1}" for j in range(data.q)],
        }
    header = [schema["y"], schema["s"], schema["a"], *schema["x"], *schema["w"]]

    def fmt(v: float) -> str:
        return "" if np.isnan(v) else format(v, ".17g")

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(data.n):
            row = [fmt(data.y[i]), str(int(data.s[i])), str(int(data.a[i]))]
            row += [fmt(v) for v in data.x[i]]
            if data.w is not None:
                row += [fmt(v) for v in data.w[i]]
            elif schema["w"]:
                row += ["" for _ in schema["w"]]
            writer.writerow(row)


def loads_csv(text: str, schema: dict | None = None) -> Dataset:
    return _load_csv_stream(io.StringIO(text), schema)


@dataclass(frozen=True)
class ValidationReport:
    scenario: int
    violations: tuple[str, ...]
    warnings: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(data: Dataset, scenario: int) -> ValidationReport:
    """Empirical positivity screen for the requested scenario.

    Raises :class:`ScenarioMismatchError` when the structural flag is
    unset; otherwise returns a report of empty-cell violations plus
    warnings for covariates that are constant within a fitting stratum.
    """
    if scenario not in (1, 2, 3):
        raise ScenarioMismatchError(f"unknown scenario {scenario}", module="data")
    if not data.scenario_flags[scenario]:
        raise ScenarioMismatchError(
            f"data does not structurally support scenario {scenario}", module="data"
        )
    violations = []
    if len(data.stratum_indices(1, 1)) == 0:
        violations.append("treated arm empty in trial")
    if len(data.stratum_indices(1, 0)) == 0:
        violations.append("control arm empty in trial")
    if scenario in (2, 3):
        if len(data.stratum_indices(0, 0)) == 0:
            violations.append("control arm empty in target")
        if len(data.stratum_indices(0, 1)) == 0:
            violations.append("treated arm empty in target")
    warnings = []
    strata = [("s=1,a=1", data.stratum_indices(1, 1)), ("s=1,a=0", data.stratum_indices(1, 0))]
    strata.append(("s=0", data.stratum_indices(0)))
    for label, idx in strata:
        if len(idx) < 2:
            continue
        block = data.x[idx]
        for j in range(data.p):
            if np.ptp(block[:, j]) == 0.0:
                warnings.append(f"covariate x{j + 1} constant within {label}")
    return ValidationReport(scenario, tuple(violations), tuple(warnings))
