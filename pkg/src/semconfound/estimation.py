"""Least-squares fitting of recursive observed-variable path models.

Each endogenous variable is regressed on its parents plus an intercept.
Standard errors use the classical homoskedastic formula and intervals
use the normal multiplier :data:`Z95`.
"""

from __future__ import annotations

import csv
import io
import os
import re
from dataclasses import dataclass, field
from typing import IO, Mapping, Sequence

import numpy as np
from scipy import linalg

from .model import ModelError, PathModel

__all__ = [
    "Z95",
    "Dataset",
    "DataError",
    "SingularDesignError",
    "Equation",
    "FitResult",
    "load_csv",
    "dump_csv",
    "standardize",
    "fit_equations",
    "fit_sem",
    "parse_formula",
    "spec_from_model",
]

Z95 = 1.96


class DataError(ValueError):
    pass


class SingularDesignError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    columns: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[1] != len(self.columns):
            raise DataError("values must be an n x p matrix matching the columns")
        if len(set(self.columns)) != len(self.columns):
            raise DataError("duplicate column name")
        if not np.all(np.isfinite(values)):
            raise DataError("missing or non-finite values")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.columns.index(name)]
        except ValueError:
            raise KeyError(f"no column named {name!r}") from None

    def select(self, names: Sequence[str]) -> "Dataset":
        idx = []
        for n in names:
            if n not in self.columns:
                raise KeyError(f"no column named {n!r}")
            idx.append(self.columns.index(n))
        return Dataset(tuple(names), self.values[:, idx])

    def drop(self, names) -> "Dataset":
        gone = set(names)
        return self.select([c for c in self.columns if c not in gone])


_NUMBER = re.compile(r"\s*[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?\s*")


def load_csv(source: str | os.PathLike | IO) -> Dataset:
    """Read a numeric CSV with a header row of variable names."""
    if hasattr(source, "read"):
        raw = source.read()
    else:
        with open(source, "rb") as fh:
            raw = fh.read()
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise DataError(f"not UTF-8: {exc}") from None
    rows = [r for r in csv.reader(io.StringIO(raw, newline=""))]
    while rows and not any(cell.strip() for cell in rows[-1]):
        rows.pop()
    if not rows:
        raise DataError("empty file")
    header = [h.strip() for h in rows[0]]
    if any(not h for h in header):
        raise DataError("empty column name in header")
    dupes = sorted({h for h in header if header.count(h) > 1})
    if dupes:
        raise DataError(f"duplicate header: {', '.join(dupes)}")
    values = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"row {i}: expected {len(header)} fields, got {len(row)}")
        for j, cell in enumerate(row):
            if not _NUMBER.fullmatch(cell):
                raise DataError(f"row {i}, column {header[j]!r}: non-numeric value {cell!r}")
            values[i - 2, j] = float(cell)
    return Dataset(tuple(header), values)


def dump_csv(data: Dataset, dest: str | os.PathLike | IO | None = None) -> str:
    """Write ``data`` as CSV using shortest round-trip decimals; returns the text."""
    lines = [",".join(data.columns)]
    lines.extend(",".join(repr(float(x)) for x in row) for row in data.values)
    text = "\n".join(lines) + "\n"
    if dest is None:
        return text
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


def standardize(data: Dataset) -> Dataset:
    """z-score every column with the n-1 sample standard deviation."""
    mean = data.values.mean(axis=0)
    sd = data.values.std(axis=0, ddof=1)
    flat = [c for c, s in zip(data.columns, sd) if not s > 0]
    if flat:
        raise DataError(f"constant column: {', '.join(flat)}")
    return Dataset(data.columns, (data.values - mean) / sd)


@dataclass(frozen=True, eq=False)
class Equation:
    target: str
    regressors: tuple[str, ...]
    coefficients: np.ndarray
    se: np.ndarray
    intercept: float
    intercept_se: float
    residual_variance: float

    def ci(self) -> np.ndarray:
        """(k, 2) array of 95% intervals."""
        return np.column_stack([self.coefficients - Z95 * self.se, self.coefficients + Z95 * self.se])

    def coefficient(self, regressor: str) -> float:
        return float(self.coefficients[self.regressors.index(regressor)])

    def standard_error(self, regressor: str) -> float:
        return float(self.se[self.regressors.index(regressor)])


@dataclass(frozen=True, eq=False)
class FitResult:
    n: int
    equations: dict[str, Equation] = field(default_factory=dict)

    def _eq(self, source: str, target: str) -> Equation:
        eq = self.equations.get(target)
        if eq is None or source not in eq.regressors:
            raise KeyError(f"edge {source}->{target} was not fitted")
        return eq

    def has(self, source: str, target: str) -> bool:
        eq = self.equations.get(target)
        return eq is not None and source in eq.regressors

    def coefficient(self, source: str, target: str) -> float:
        return self._eq(source, target).coefficient(source)

    def standard_error(self, source: str, target: str) -> float:
        return self._eq(source, target).standard_error(source)

    def rows(self) -> list[dict]:
        out = []
        for eq in self.equations.values():
            for k, reg in enumerate(eq.regressors):
                lo, hi = eq.ci()[k]
                out.append({
                    "target": eq.target,
                    "regressor": reg,
                    "estimate": float(eq.coefficients[k]),
                    "se": float(eq.se[k]),
                    "ci_low": float(lo),
                    "ci_high": float(hi),
                })
        return out


def _ols(y: np.ndarray, X: np.ndarray, target: str) -> tuple[np.ndarray, np.ndarray, float]:
    n, k = X.shape
    if n <= k:
        raise SingularDesignError(f"equation for {target}: {n} rows for {k} parameters")
    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-10 * diag.max():
        raise SingularDesignError(f"equation for {target}: singular design matrix")
    beta = linalg.solve_triangular(R, Q.T @ y)
    resid = y - X @ beta
    sigma2 = float(resid @ resid) / (n - k)
    Rinv = linalg.solve_triangular(R, np.eye(k))
    se = np.sqrt(sigma2 * np.sum(Rinv**2, axis=1))
    return beta, se, sigma2


def fit_equations(data: Dataset, spec: Mapping[str, Sequence[str]]) -> FitResult:
    """Fit every ``target ~ regressors`` equation in ``spec`` by OLS with an intercept."""
    equations = {}
    for target, regressors in spec.items():
        regressors = tuple(regressors)
        if not regressors:
            continue
        y = data.column(target)
        X = np.column_stack([np.ones(data.n)] + [data.column(r) for r in regressors])
        beta, se, sigma2 = _ols(y, X, target)
        equations[target] = Equation(
            target, regressors, beta[1:], se[1:], float(beta[0]), float(se[0]), sigma2
        )
    return FitResult(data.n, equations)


def spec_from_model(model: PathModel) -> dict[str, tuple[str, ...]]:
    """One equation per variable with parents, regressors in declaration order."""
    rank = {n: i for i, n in enumerate(model.names)}
    return {
        n: tuple(sorted(model.parents(n), key=rank.__getitem__))
        for n in model.names
        if model.parents(n)
    }


def fit_sem(model: PathModel, data: Dataset) -> FitResult:
    """Fit ``model``'s topology to ``data``; coefficients on the model are ignored."""
    model.check()
    for v in model.variables:
        if v.latent:
            raise ModelError(
                f"latent variable {v.name} is not supported by least-squares fitting; "
                "use the covariance oracle or sensitivity tools instead"
            )
        if not v.measured:
            raise ModelError(
                f"unmeasured variable {v.name} cannot be fitted; drop it (PathModel.fitted_model) "
                "or use the covariance oracle for its asymptotic effect"
            )
    missing = [n for n in model.names if n not in data.columns]
    if missing:
        raise DataError(f"data lacks columns: {', '.join(missing)}")
    return fit_equations(data, spec_from_model(model))


_FORMULA = re.compile(r"^\s*([^\W\d][\w.]*)\s*~\s*(.*?)\s*$")
_TERM = re.compile(r"[^\W\d][\w.]*")


def parse_formula(text: str) -> tuple[str, tuple[str, ...]]:
    """``"Y ~ C + A + M"`` -> ``("Y", ("C", "A", "M"))``."""
    m = _FORMULA.match(text)
    if not m:
        raise ValueError(f"expected 'target ~ x1 + x2 ...', got {text!r}")
    target, rhs = m.groups()
    terms = [t.strip() for t in rhs.split("+")] if rhs else []
    if not terms or any(not _TERM.fullmatch(t) for t in terms):
        raise ValueError(f"bad right-hand side in {text!r}")
    if len(set(terms)) != len(terms) or target in terms:
        raise ValueError(f"repeated variable in {text!r}")
    return target, tuple(terms)
