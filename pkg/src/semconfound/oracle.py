"""Model-implied covariance and population regression coefficients.

For a recursive model ``x = B x + e`` with independent errors of variance
``psi``, the reduced form is ``x = (I - B)^-1 e`` so that
``Sigma = (I - B)^-1 diag(psi) (I - B)^-T``. Regressions computed from
``Sigma`` are the probability limits of least-squares fits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from scipy import linalg

from .model import ModelError, PathModel, topological_order

__all__ = [
    "ImpliedCovariance",
    "SingularCovarianceError",
    "EdgeBias",
    "coefficient_matrix",
    "reduced_form",
    "implied_covariance",
    "population_regression",
    "asymptotic_edge_bias",
    "partial_correlation",
]


class SingularCovarianceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ImpliedCovariance:
    names: tuple[str, ...]
    matrix: np.ndarray

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown variable: {name}") from None

    def __getitem__(self, pair: tuple[str, str]) -> float:
        a, b = pair
        return float(self.matrix[self.index(a), self.index(b)])

    def block(self, rows: Sequence[str], cols: Sequence[str]) -> np.ndarray:
        r = [self.index(n) for n in rows]
        c = [self.index(n) for n in cols]
        return self.matrix[np.ix_(r, c)]


def coefficient_matrix(model: PathModel) -> tuple[list[str], np.ndarray]:
    """Topological order and ``B`` with ``B[i, j]`` the coefficient of edge j -> i.

    ``B`` is strictly lower triangular in the returned order.
    """
    model.check()
    model.require_coefficients()
    order = topological_order(model)
    pos = {n: i for i, n in enumerate(order)}
    B = np.zeros((len(order), len(order)))
    for e in model.edges:
        B[pos[e.target], pos[e.source]] = e.coefficient
    return order, B


def reduced_form(model: PathModel) -> tuple[list[str], np.ndarray]:
    """``(I - B)^-1`` in topological order, by unit-lower-triangular forward substitution."""
    order, B = coefficient_matrix(model)
    eye = np.eye(len(order))
    T = linalg.solve_triangular(eye - B, eye, lower=True, unit_diagonal=True)
    return order, T


def implied_covariance(model: PathModel) -> ImpliedCovariance:
    order, T = reduced_form(model)
    psi = np.array([model.error_variance(n) for n in order])
    sigma = (T * psi) @ T.T
    sigma = (sigma + sigma.T) / 2
    perm = [order.index(n) for n in model.names]
    return ImpliedCovariance(model.names, sigma[np.ix_(perm, perm)])


def _solve_spd(block: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    if block.size == 0:
        return np.zeros((0,) + rhs.shape[1:])
    if np.linalg.cond(block) > 1e12:
        raise SingularCovarianceError(f"singular covariance of {what}")
    try:
        factor = linalg.cho_factor(block)
    except linalg.LinAlgError:
        raise SingularCovarianceError(f"singular covariance of {what}") from None
    return linalg.cho_solve(factor, rhs)


def population_regression(
    sigma: ImpliedCovariance, target: str, regressors: Sequence[str]
) -> dict[str, float]:
    """Coefficients of the population least-squares regression of ``target``."""
    regressors = list(regressors)
    if target in regressors:
        raise ValueError("target may not be among the regressors")
    if len(set(regressors)) != len(regressors):
        raise ValueError("duplicate regressor")
    sss = sigma.block(regressors, regressors)
    sst = sigma.block(regressors, [target])[:, 0]
    beta = _solve_spd(sss, sst, "regressors " + ", ".join(regressors))
    return dict(zip(regressors, map(float, beta)))


class EdgeBias(NamedTuple):
    population: float
    true: float
    bias: float


def asymptotic_edge_bias(
    model: PathModel, fitted_spec: Mapping[str, Sequence[str]]
) -> dict[tuple[str, str], EdgeBias]:
    """Limit of each fitted coefficient against its true value (0 if the edge is absent)."""
    sigma = implied_covariance(model)
    hidden = set(model.unmeasured_names)
    out = {}
    for target, regressors in fitted_spec.items():
        bad = hidden & ({target} | set(regressors))
        if bad:
            raise ModelError(f"fitted specification uses unmeasured variables: {sorted(bad)}")
        beta = population_regression(sigma, target, regressors)
        for reg, value in beta.items():
            true = model.edge(reg, target).coefficient if model.has_edge(reg, target) else 0.0
            out[(reg, target)] = EdgeBias(value, float(true), value - float(true))
    return out


def partial_correlation(sigma: ImpliedCovariance, x: str, y: str, z: Sequence[str] = ()) -> float:
    """Partial correlation of x and y given z from the Schur complement of Sigma."""
    z = [n for n in z]
    if x == y:
        raise ValueError("x and y must differ")
    if x in z or y in z:
        raise ValueError("x and y may not be conditioned on")
    xy = [x, y]
    s = sigma.block(xy, xy)
    if z:
        cross = sigma.block(xy, z)
        s = s - cross @ _solve_spd(sigma.block(z, z), cross.T, "conditioning set")
    return float(s[0, 1] / np.sqrt(s[0, 0] * s[1, 1]))
