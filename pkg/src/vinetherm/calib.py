"""Measurement tables and the curve fits used to calibrate scenes."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .errors import DomainError, SchemaError, ValidationError

FAMILIES = ("inverse-square", "exponential", "power-law")


# ---------------------------------------------------------------------------
# CSV tables

@dataclass
class CsvTable:
    header: list[str]
    rows: np.ndarray
    comments: list[str] = field(default_factory=list)

    def column(self, name):
        return self.rows[:, self.header.index(name)]


def read_csv(source) -> CsvTable:
    """Parse a numeric CSV with ``#`` comment lines and one header row.

    ``source`` is a path or text.  Malformed rows raise :class:`SchemaError`
    carrying the 1-based line number.
    """
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source
    comments, header, rows = [], None, []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            comments.append(stripped.lstrip("#").strip())
            continue
        cells = next(csv.reader([stripped]))
        if header is None:
            header = [c.strip() for c in cells]
            continue
        if len(cells) != len(header):
            raise SchemaError(f"expected {len(header)} fields, got {len(cells)}", line=lineno)
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise SchemaError(f"non-numeric field in row {cells!r}", line=lineno) from None
    if header is None:
        raise SchemaError("missing header row")
    arr = np.array(rows, dtype=float).reshape(-1, len(header))
    return CsvTable(header, arr, comments)


def format_float(x) -> str:
    """9 significant digits, the package-wide CSV float format."""
    return f"{float(x):.9g}"


def write_csv(path, header, rows, comments=()):
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else format_float(v) for v in row) + "\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


@dataclass(frozen=True)
class MeasurementTable:
    abscissa: np.ndarray
    ordinate: np.ndarray
    units: tuple[str, str] = ("", "")
    source: str = ""

    def __post_init__(self):
        x = np.asarray(self.abscissa, dtype=float)
        y = np.asarray(self.ordinate, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValidationError("abscissa and ordinate must be 1-D of equal length")
        if len(x) < 2:
            raise ValidationError("a measurement table needs at least 2 rows")
        if np.any(np.diff(x) <= 0):
            raise ValidationError("abscissa must be strictly increasing")
        object.__setattr__(self, "abscissa", x)
        object.__setattr__(self, "ordinate", y)

    @classmethod
    def from_csv(cls, source):
        tab = read_csv(source)
        if tab.header != ["abscissa", "ordinate"]:
            raise SchemaError(f"header must be 'abscissa,ordinate', got {','.join(tab.header)!r}")
        units, src = ("", ""), ""
        for c in tab.comments:
            key, _, val = c.partition(":")
            key = key.strip().lower()
            if key == "units":
                parts = [p.strip() for p in val.split(",")]
                if len(parts) == 2:
                    units = (parts[0], parts[1])
            elif key == "source":
                src = val.strip()
        try:
            return cls(tab.rows[:, 0], tab.rows[:, 1], units, src)
        except ValidationError as exc:
            raise SchemaError(str(exc)) from None

    def to_csv(self, path):
        comments = [f"units: {self.units[0]}, {self.units[1]}"]
        if self.source:
            comments.append(f"source: {self.source}")
        write_csv(path, ["abscissa", "ordinate"], zip(self.abscissa, self.ordinate), comments)


# ---------------------------------------------------------------------------
# Fits

@dataclass(frozen=True)
class FitResult:
    """``params`` are ``(c,)`` for ``c/x^2``, ``(a, b)`` for ``a exp(-b x)``
    and ``(a, p)`` for ``a x^-p``."""

    family: str
    params: tuple[float, ...]
    rss: float
    residuals: np.ndarray

    def predict(self, x):
        return decay_curve(self.family, self.params, x)


def decay_curve(family, params, x):
    x = np.asarray(x, dtype=float)
    if family == "inverse-square":
        return params[0] / x ** 2
    if family == "exponential":
        return params[0] * np.exp(-params[1] * x)
    if family == "power-law":
        return params[0] * x ** (-params[1])
    raise ValueError(f"unknown family {family!r}")


def _fit_arrays(x, y, family):
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}")
    if len(x) < 3:
        raise ValidationError("fit needs at least 3 points")
    if family == "inverse-square":
        basis = 1.0 / x ** 2
        if np.all(basis == 0):
            raise DomainError("rank-deficient design")
        params = (float(basis @ y / (basis @ basis)),)
    else:
        if np.any(y <= 0):
            raise DomainError(f"{family} fit needs positive ordinates")
        if family == "power-law" and np.any(x <= 0):
            raise DomainError("power-law fit needs positive abscissae")
        feature = x if family == "exponential" else np.log(x)
        design = np.column_stack([np.ones_like(x), feature])
        coef, _, rank, _ = np.linalg.lstsq(design, np.log(y), rcond=None)
        if rank < 2:
            raise DomainError("rank-deficient design: abscissae are not distinct")
        params = (float(math.exp(coef[0])), float(-coef[1]))
    resid = y - decay_curve(family, params, x)
    return FitResult(family, params, float(resid @ resid), resid)


def fit_decay(table: MeasurementTable, family: str) -> FitResult:
    """Least-squares fit of a decay law to ``table``.

    Exponential and power-law fits regress ``log y`` linearly; the
    inverse-square fit estimates only the scale.  Residuals and RSS are
    reported in the original units.
    """
    return _fit_arrays(table.abscissa, table.ordinate, family)


class DecayCurveRegressor(RegressorMixin, BaseEstimator):
    """Estimator wrapper around :func:`fit_decay` for use in pipelines.

    Parameters
    ----------
    family : {"inverse-square", "exponential", "power-law"}
    """

    def __init__(self, family="power-law"):
        self.family = family

    def fit(self, X, y):
        X, y = check_X_y(X, y, ensure_min_samples=3)
        if X.shape[1] != 1:
            raise ValueError("DecayCurveRegressor takes a single feature (distance)")
        order = np.argsort(X[:, 0], kind="stable")
        self.result_ = _fit_arrays(X[order, 0], y[order], self.family)
        self.params_ = np.asarray(self.result_.params)
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "result_")
        X = check_array(X)
        return self.result_.predict(X[:, 0])


def interp_gamma(table: MeasurementTable, query):
    """Piecewise-linear interpolation; refuses to extrapolate."""
    q = np.asarray(query, dtype=float)
    x = table.abscissa
    if np.any(q < x[0]) or np.any(q > x[-1]):
        raise DomainError(f"query outside table range [{x[0]:g}, {x[-1]:g}]")
    out = np.interp(q, x, table.ordinate)
    return float(out) if out.ndim == 0 else out


def fit_time_constant(response_time, fraction=0.99):
    """First-order time constant that completes ``fraction`` of a step in ``response_time``."""
    if not 0.0 < fraction < 1.0:
        raise DomainError("fraction must lie in (0, 1)")
    if not response_time > 0:
        raise DomainError("response_time must be positive")
    return -response_time / math.log(1.0 - fraction)
