"""Balanced panel containers and CSV ingestion.

The on-disk format is a long CSV with header ``unit,time,y,<covariates...>``,
UTF-8, ``.`` decimal separator.  Panels must be balanced; missing cells are
rejected, never imputed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import (
    DuplicateKeyError,
    InputError,
    PanelParseError,
    UnbalancedPanelError,
)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PanelData:
    """A balanced panel: outcomes y (N x T) and covariates x (N x T x Q)."""

    y: np.ndarray
    x: np.ndarray
    unit_ids: tuple[str, ...]
    time_ids: tuple[str, ...]
    covariate_names: tuple[str, ...]

    def __post_init__(self):
        y = _freeze(self.y)
        x = _freeze(self.x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "unit_ids", tuple(str(u) for u in self.unit_ids))
        object.__setattr__(self, "time_ids", tuple(str(t) for t in self.time_ids))
        object.__setattr__(self, "covariate_names", tuple(str(c) for c in self.covariate_names))
        if y.ndim != 2 or x.ndim != 3:
            raise InputError("y must be N x T and x must be N x T x Q")
        n, t = y.shape
        if x.shape[:2] != (n, t):
            raise InputError(f"x shape {x.shape} inconsistent with y shape {y.shape}")
        q = x.shape[2]
        if n < 2 or t < 2 or q < 1:
            raise InputError(f"panel too small: N={n}, T={t}, Q={q} (need N>=2, T>=2, Q>=1)")
        if len(self.unit_ids) != n or len(self.time_ids) != t:
            raise InputError("label lengths inconsistent with array shapes")
        if len(self.covariate_names) != q:
            raise InputError("covariate_names length inconsistent with x")
        if not np.all(np.isfinite(y)) or not np.all(np.isfinite(x)):
            raise InputError("panel contains non-finite values")

    @property
    def n_units(self) -> int:
        return self.y.shape[0]

    @property
    def n_periods(self) -> int:
        return self.y.shape[1]

    @property
    def n_covariates(self) -> int:
        return self.x.shape[2]


@dataclass(frozen=True)
class CovariateAverages:
    """Per-unit time averages of the covariates (N x Q)."""

    xbar: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xbar", _freeze(self.xbar))


def compute_time_averages(panel: PanelData) -> CovariateAverages:
    """Average each covariate over time, one row per unit."""
    return CovariateAverages(xbar=panel.x.mean(axis=1))


DEFAULT_SCHEMA = {"unit": "unit", "time": "time", "y": "y"}


def _time_sort_key(labels):
    # Sort times numerically when every label parses as a number, else lexically.
    try:
        keyed = sorted(labels, key=lambda s: float(s))
        return keyed
    except ValueError:
        return sorted(labels)


def load_panel_csv(path: str | Path, schema: dict | None = None) -> PanelData:
    """Read a long-format CSV into a :class:`PanelData`.

    ``schema`` maps the roles ``unit``, ``time``, ``y`` to column names and may
    carry ``covariates`` (ordered list); unnamed remaining columns are treated
    as covariates in header order.
    """
    path = Path(path)
    schema = {**DEFAULT_SCHEMA, **(schema or {})}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        for role in ("unit", "time", "y"):
            if schema[role] not in header:
                raise InputError(f"{path}: missing required column {schema[role]!r}")
        unit_col = header.index(schema["unit"])
        time_col = header.index(schema["time"])
        y_col = header.index(schema["y"])
        if "covariates" in schema:
            cov_names = list(schema["covariates"])
            missing = [c for c in cov_names if c not in header]
            if missing:
                raise InputError(f"{path}: missing covariate columns {missing}")
        else:
            cov_names = [h for i, h in enumerate(header) if i not in (unit_col, time_col, y_col)]
        if not cov_names:
            raise InputError(f"{path}: no covariate columns found")
        cov_cols = [header.index(c) for c in cov_names]

        cells: dict[tuple[str, str], tuple[float, list[float]]] = {}
        units: list[str] = []
        seen_units: set[str] = set()
        times: set[str] = set()
        for rownum, row in enumerate(reader, start=2):
            if not row or all(not f.strip() for f in row):
                continue
            if len(row) != len(header):
                raise PanelParseError(rownum, f"expected {len(header)} fields, got {len(row)}")
            unit = row[unit_col].strip()
            time = row[time_col].strip()
            try:
                yval = float(row[y_col])
                xvals = [float(row[c]) for c in cov_cols]
            except ValueError as exc:
                raise PanelParseError(rownum, str(exc)) from None
            key = (unit, time)
            if key in cells:
                raise DuplicateKeyError(unit, time)
            cells[key] = (yval, xvals)
            if unit not in seen_units:
                seen_units.add(unit)
                units.append(unit)
            times.add(time)

    if not cells:
        raise InputError(f"{path}: no data rows")
    time_order = _time_sort_key(times)
    n, t, q = len(units), len(time_order), len(cov_names)
    y = np.empty((n, t))
    x = np.empty((n, t, q))
    for i, u in enumerate(units):
        for j, tt in enumerate(time_order):
            try:
                yval, xvals = cells[(u, tt)]
            except KeyError:
                raise UnbalancedPanelError(u, tt) from None
            y[i, j] = yval
            x[i, j, :] = xvals
    return PanelData(y=y, x=x, unit_ids=tuple(units), time_ids=tuple(time_order),
                     covariate_names=tuple(cov_names))


def write_panel_csv(panel: PanelData, path: str | Path) -> None:
    """Write a panel back to long CSV, numbers at 17 significant digits."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["unit", "time", "y", *panel.covariate_names])
        for i, u in enumerate(panel.unit_ids):
            for j, tt in enumerate(panel.time_ids):
                row = [u, tt, f"{panel.y[i, j]:.17g}"]
                row.extend(f"{v:.17g}" for v in panel.x[i, j, :])
                writer.writerow(row)
