"""Gaussian data generation and misspecification experiments.

Randomness comes from numpy's PCG64 generator seeded with a 64-bit
integer; each variable receives ``n`` standard normal draws, in
topological order, scaled by its error standard deviation. Replications
derive their seeds with ``numpy.random.SeedSequence(master_seed).spawn``,
taking the first 64-bit word of each child's state, so replication ``i``
always sees the same stream whatever else runs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .estimation import Z95, Dataset, fit_equations, spec_from_model
from .model import ModelError, PathModel, topological_order
from .oracle import implied_covariance, population_regression

__all__ = [
    "generate",
    "replication_seeds",
    "SimulationConfig",
    "ReportRow",
    "ExperimentReport",
    "run_experiment",
    "SummaryRow",
    "ReplicationSummary",
    "replicate",
    "default_spec",
]

REPORT_FIELDS = ("spec", "target", "regressor", "estimate", "se", "ci_low", "ci_high", "true", "asymptotic")


def generate(model: PathModel, n: int, seed: int) -> Dataset:
    """Draw ``n`` observations of every variable of a fully annotated model."""
    model.check()
    model.require_coefficients()
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    cols: dict[str, np.ndarray] = {}
    for v in topological_order(model):
        x = rng.standard_normal(n) * math.sqrt(model.error_variance(v))
        for p in model.parents(v):
            x = x + float(model.edge(p, v).coefficient) * cols[p]
        cols[v] = x
    return Dataset(model.names, np.column_stack([cols[v] for v in model.names]))


def replication_seeds(master_seed: int, count: int) -> list[int]:
    children = np.random.SeedSequence(int(master_seed)).spawn(count)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def default_spec(model: PathModel) -> dict[str, tuple[str, ...]]:
    """The specification an analyst fits when the unmeasured variables are omitted."""
    return spec_from_model(model.fitted_model())


@dataclass(frozen=True)
class SimulationConfig:
    model: PathModel
    n: int
    seed: int
    fitted_specs: Sequence[tuple[str, Mapping[str, Sequence[str]]]] = ()
    exclude_from_data: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "exclude_from_data", frozenset(self.exclude_from_data))
        specs = [(label, {t: tuple(r) for t, r in spec.items()}) for label, spec in self.fitted_specs]
        if not specs:
            specs = [("fitted", default_spec(self.model))]
        object.__setattr__(self, "fitted_specs", tuple(specs))

    def check(self) -> "SimulationConfig":
        if self.n < 2:
            raise ValueError("n must be at least 2")
        retained = set(self.model.names) - self.exclude_from_data
        for label, spec in self.fitted_specs:
            for target, regs in spec.items():
                for name in (target, *regs):
                    if name not in self.model:
                        raise ModelError(f"spec {label!r} names unknown variable {name}")
                    if name not in retained:
                        raise ModelError(f"spec {label!r} uses excluded variable {name}")
        return self


@dataclass(frozen=True)
class ReportRow:
    spec: str
    target: str
    regressor: str
    estimate: float
    se: float
    ci_low: float
    ci_high: float
    true: float
    asymptotic: float

    def as_dict(self) -> dict:
        return {f: getattr(self, f) for f in REPORT_FIELDS}


def _csv(rows: list[dict], fields: Sequence[str]) -> str:
    def cell(v):
        return repr(float(v)) if isinstance(v, float) else str(v)

    lines = [",".join(fields)]
    lines.extend(",".join(cell(r[f]) for f in fields) for r in rows)
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ExperimentReport:
    n: int
    seed: int
    rows: list[ReportRow] = field(default_factory=list)

    def row(self, spec: str, regressor: str, target: str) -> ReportRow:
        for r in self.rows:
            if (r.spec, r.regressor, r.target) == (spec, regressor, target):
                return r
        raise KeyError(f"no row for {regressor}->{target} in spec {spec!r}")

    def to_dict(self) -> dict:
        return {"n": self.n, "seed": self.seed, "rows": [r.as_dict() for r in self.rows]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        return _csv([r.as_dict() for r in self.rows], REPORT_FIELDS)


def _true_coefficient(model: PathModel, source: str, target: str) -> float:
    return float(model.edge(source, target).coefficient) if model.has_edge(source, target) else 0.0


def run_experiment(config: SimulationConfig, data: Dataset | None = None) -> ExperimentReport:
    """Simulate, drop excluded columns, fit every spec and line up truth and limits."""
    config.check()
    model = config.model
    if data is None:
        data = generate(model, config.n, config.seed)
    data = data.drop(config.exclude_from_data)
    sigma = implied_covariance(model)
    rows = []
    for label, spec in config.fitted_specs:
        fit = fit_equations(data, spec)
        for target, eq in fit.equations.items():
            limit = population_regression(sigma, target, eq.regressors)
            for k, reg in enumerate(eq.regressors):
                est, se = float(eq.coefficients[k]), float(eq.se[k])
                rows.append(ReportRow(
                    label, target, reg, est, se, est - Z95 * se, est + Z95 * se,
                    _true_coefficient(model, reg, target), limit[reg],
                ))
    return ExperimentReport(config.n, config.seed, rows)


@dataclass(frozen=True)
class SummaryRow:
    spec: str
    target: str
    regressor: str
    mean: float
    mc_se: float
    coverage: float
    true: float
    asymptotic: float

    def as_dict(self) -> dict:
        return {f: getattr(self, f) for f in SUMMARY_FIELDS}


SUMMARY_FIELDS = ("spec", "target", "regressor", "mean", "mc_se", "coverage", "true", "asymptotic")


@dataclass(frozen=True)
class ReplicationSummary:
    n: int
    master_seed: int
    replications: int
    rows: list[SummaryRow] = field(default_factory=list)

    def row(self, spec: str, regressor: str, target: str) -> SummaryRow:
        for r in self.rows:
            if (r.spec, r.regressor, r.target) == (spec, regressor, target):
                return r
        raise KeyError(f"no row for {regressor}->{target} in spec {spec!r}")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "master_seed": self.master_seed,
            "replications": self.replications,
            "rows": [r.as_dict() for r in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        return _csv([r.as_dict() for r in self.rows], SUMMARY_FIELDS)


def replicate(config: SimulationConfig, replications: int, master_seed: int) -> ReplicationSummary:
    """Repeat :func:`run_experiment` over independent streams and summarise.

    Coverage is the share of per-replication 95% intervals containing the
    asymptotic (oracle) value, not the true coefficient.
    """
    if replications < 2:
        raise ValueError("need at least two replications")
    reports = []
    for seed in replication_seeds(master_seed, replications):
        cfg = SimulationConfig(config.model, config.n, seed, config.fitted_specs, config.exclude_from_data)
        reports.append(run_experiment(cfg))
    rows = []
    for i, first in enumerate(reports[0].rows):
        est = np.array([rep.rows[i].estimate for rep in reports])
        covered = [rep.rows[i].ci_low <= first.asymptotic <= rep.rows[i].ci_high for rep in reports]
        rows.append(SummaryRow(
            first.spec, first.target, first.regressor,
            float(est.mean()), float(est.std(ddof=1) / math.sqrt(replications)),
            float(np.mean(covered)), first.true, first.asymptotic,
        ))
    return ReplicationSummary(config.n, int(master_seed), replications, rows)
