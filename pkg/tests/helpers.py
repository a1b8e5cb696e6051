"""Independent oracles and model generators shared by the tests.

The covariance oracle here never forms (I - B)^-1: it expands the
structural equations recursively, one covariance at a time, so it checks
the library's matrix route rather than repeating it.
"""

from __future__ import annotations

import functools
import itertools

import numpy as np

from semconfound.model import PathModel, topological_order


def recursive_covariance(model: PathModel) -> dict[tuple[str, str], float]:
    order = {v: i for i, v in enumerate(topological_order(model))}
    coef = {e.key: float(e.coefficient) for e in model.edges}

    @functools.lru_cache(maxsize=None)
    def cov(u: str, v: str) -> float:
        if order[u] > order[v]:
            u, v = v, u
        if u == v:
            ps = model.parents(v)
            total = model.error_variance(v)
            for p, q in itertools.product(ps, ps):
                total += coef[(p, v)] * coef[(q, v)] * cov(p, q)
            return total
        # v comes later, so its own error is independent of u
        return sum(coef[(p, v)] * cov(u, p) for p in model.parents(v))

    return {(a, b): cov(a, b) for a in model.names for b in model.names}


def cov_matrix(model: PathModel, names) -> np.ndarray:
    c = recursive_covariance(model)
    return np.array([[c[(a, b)] for b in names] for a in names])


def regression_oracle(model: PathModel, target: str, regressors) -> dict[str, float]:
    regressors = list(regressors)
    c = recursive_covariance(model)
    s = np.array([[c[(a, b)] for b in regressors] for a in regressors])
    r = np.array([c[(a, target)] for a in regressors])
    beta = np.linalg.solve(s, r)
    return dict(zip(regressors, beta.tolist()))


def pcor_oracle(model: PathModel, x: str, y: str, z) -> float:
    names = [x, y, *z]
    prec = np.linalg.inv(cov_matrix(model, names))
    return float(-prec[0, 1] / np.sqrt(prec[0, 0] * prec[1, 1]))


def random_model(rng: np.random.Generator, max_nodes: int = 8, density: float | None = None) -> PathModel:
    """Random recursive model, coefficients uniform on +-[0.3, 0.9], shuffled declaration order."""
    k = int(rng.integers(2, max_nodes + 1))
    names = [f"V{i}" for i in range(k)]
    p = rng.uniform(0.2, 0.7) if density is None else density
    edges = []
    for i, j in itertools.combinations(range(k), 2):
        if rng.random() < p:
            c = float(rng.uniform(0.3, 0.9) * rng.choice([-1.0, 1.0]))
            edges.append((names[i], names[j], c))
    declared = list(rng.permutation(names))
    rng.shuffle(edges)
    errvars = {n: float(rng.uniform(0.5, 1.5)) for n in names if rng.random() < 0.3}
    return PathModel.build(declared, edges, errvars)


def random_query(rng: np.random.Generator, model: PathModel):
    x, y = rng.choice(model.names, size=2, replace=False)
    rest = [n for n in model.names if n not in (x, y)]
    z = [n for n in rest if rng.random() < 0.4]
    return str(x), str(y), [str(n) for n in z]
