"""Path-model data structures for recursive linear SEMs.

A :class:`PathModel` is an immutable DAG of variables joined by directed
edges, each optionally carrying a path coefficient, plus one error
variance per variable. Validation is reported as data (a list of
:class:`Violation`) so callers can show every problem at once; operations
that need a valid model call :meth:`PathModel.check`, which raises.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

__all__ = [
    "Kind",
    "Variable",
    "Edge",
    "PathModel",
    "RoleAssignment",
    "Violation",
    "ModelError",
    "RolesError",
    "Position",
    "validate",
    "topological_order",
    "position_class",
]


class ModelError(ValueError):
    """Raised when a model is used in a way its invariants do not allow."""

    def __init__(self, message: str, violations: list["Violation"] | None = None):
        super().__init__(message)
        self.violations = violations or []


class RolesError(ModelError):
    """Raised for an invalid exposure/mediator/outcome assignment."""


class Kind(str, enum.Enum):
    OBSERVED = "observed"
    LATENT = "latent"


@dataclass(frozen=True)
class Variable:
    name: str
    kind: Kind = Kind.OBSERVED
    measured: bool = True

    @property
    def latent(self) -> bool:
        return self.kind is Kind.LATENT


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    coefficient: float | None = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.source, self.target)

    def __str__(self) -> str:
        return f"{self.source}->{self.target}"


@dataclass(frozen=True)
class Violation:
    rule: str
    element: str
    message: str

    def __str__(self) -> str:
        return self.message


def _valid_name(name: str) -> bool:
    return bool(name) and not any(ch.isspace() for ch in name)


@dataclass(frozen=True, eq=False)
class PathModel:
    """A recursive path model.

    ``variables`` and ``edges`` keep declaration order, which is used to
    break ties deterministically. ``error_variances`` only needs entries
    that differ from the default of 1.0.
    """

    variables: tuple[Variable, ...]
    edges: tuple[Edge, ...] = ()
    error_variances: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "error_variances", dict(self.error_variances))

    @classmethod
    def build(
        cls,
        variables: Iterable[str | Variable],
        edges: Iterable[tuple] | Iterable[Edge] = (),
        error_variances: Mapping[str, float] | None = None,
        unmeasured: Iterable[str] = (),
        latent: Iterable[str] = (),
    ) -> "PathModel":
        """Convenience constructor from names and ``(source, target[, coef])`` tuples."""
        unmeasured, latent = set(unmeasured), set(latent)
        vs = []
        for v in variables:
            if isinstance(v, Variable):
                vs.append(v)
            elif v in latent:
                vs.append(Variable(v, Kind.LATENT, measured=False))
            else:
                vs.append(Variable(v, Kind.OBSERVED, measured=v not in unmeasured))
        es = [e if isinstance(e, Edge) else Edge(*e) for e in edges]
        return cls(tuple(vs), tuple(es), dict(error_variances or {}))

    def __eq__(self, other):
        if not isinstance(other, PathModel):
            return NotImplemented
        return (
            self.variables == other.variables
            and self._edge_map == other._edge_map
            and self.all_error_variances() == other.all_error_variances()
        )

    __hash__ = None

    # -- lookups -----------------------------------------------------------

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @cached_property
    def _rank(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.names)}

    @cached_property
    def _by_name(self) -> dict[str, Variable]:
        return {v.name: v for v in self.variables}

    @cached_property
    def _edge_map(self) -> dict[tuple[str, str], Edge]:
        return {e.key: e for e in self.edges}

    @cached_property
    def _parents(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {n: [] for n in self.names}
        for e in self.edges:
            out.setdefault(e.target, []).append(e.source)
        return {k: tuple(sorted(v, key=self._rank.get)) for k, v in out.items()}

    @cached_property
    def _children(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {n: [] for n in self.names}
        for e in self.edges:
            out.setdefault(e.source, []).append(e.target)
        return {k: tuple(sorted(v, key=self._rank.get)) for k, v in out.items()}

    @cached_property
    def _descendants(self) -> dict[str, frozenset[str]]:
        return {n: frozenset(self._reach(n, self._children)) for n in self.names}

    @cached_property
    def _ancestors(self) -> dict[str, frozenset[str]]:
        return {n: frozenset(self._reach(n, self._parents)) for n in self.names}

    def _reach(self, start: str, step: Mapping[str, tuple[str, ...]]) -> set[str]:
        seen: set[str] = set()
        stack = list(step.get(start, ()))
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(step.get(v, ()))
        seen.discard(start)
        return seen

    def variable(self, name: str) -> Variable:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"unknown variable: {name}") from None

    def __contains__(self, name: object) -> bool:
        return name in self._by_name

    def require(self, *names: str) -> None:
        for n in names:
            if n not in self._by_name:
                raise KeyError(f"unknown variable: {n}")

    def parents(self, name: str) -> tuple[str, ...]:
        self.require(name)
        return self._parents[name]

    def children(self, name: str) -> tuple[str, ...]:
        self.require(name)
        return self._children[name]

    def descendants(self, name: str) -> frozenset[str]:
        """Strict descendants of ``name``."""
        self.require(name)
        return self._descendants[name]

    def ancestors(self, name: str) -> frozenset[str]:
        self.require(name)
        return self._ancestors[name]

    def has_edge(self, source: str, target: str) -> bool:
        return (source, target) in self._edge_map

    def edge(self, source: str, target: str) -> Edge:
        try:
            return self._edge_map[(source, target)]
        except KeyError:
            raise KeyError(f"unknown edge: {source}->{target}") from None

    def error_variance(self, name: str) -> float:
        self.require(name)
        return float(self.error_variances.get(name, 1.0))

    def all_error_variances(self) -> dict[str, float]:
        return {n: float(self.error_variances.get(n, 1.0)) for n in self.names}

    @property
    def measured_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.measured)

    @property
    def unmeasured_names(self) -> tuple[str, ...]:
        """Observed-in-principle variables missing from the data (latent ones excluded)."""
        return tuple(v.name for v in self.variables if not v.measured and not v.latent)

    @property
    def latent_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.latent)

    # -- derived models ------------------------------------------------------

    def without_edges(self, keys: Iterable[tuple[str, str]]) -> "PathModel":
        drop = set(keys)
        return PathModel(
            self.variables,
            tuple(e for e in self.edges if e.key not in drop),
            self.error_variances,
        )

    def with_edges(self, edges: Iterable[Edge]) -> "PathModel":
        return PathModel(self.variables, self.edges + tuple(edges), self.error_variances)

    def with_coefficients(self, coefficients: Mapping[tuple[str, str], float]) -> "PathModel":
        edges = tuple(
            Edge(e.source, e.target, coefficients.get(e.key, e.coefficient)) for e in self.edges
        )
        return PathModel(self.variables, edges, self.error_variances)

    def restricted_to(self, names: Iterable[str]) -> "PathModel":
        """Sub-model on ``names``: edges touching any other variable are dropped."""
        keep = set(names)
        return PathModel(
            tuple(v for v in self.variables if v.name in keep),
            tuple(e for e in self.edges if e.source in keep and e.target in keep),
            {k: v for k, v in self.error_variances.items() if k in keep},
        )

    def fitted_model(self) -> "PathModel":
        """The specification an analyst without the unmeasured variables would fit."""
        hidden = set(self.unmeasured_names)
        return self.restricted_to(n for n in self.names if n not in hidden)

    # -- validity --------------------------------------------------------------

    def check(self) -> "PathModel":
        problems = validate(self)
        if problems:
            raise ModelError("; ".join(str(p) for p in problems), problems)
        return self

    def require_coefficients(self, edges: Iterable[Edge] | None = None) -> None:
        for e in self.edges if edges is None else edges:
            if e.coefficient is None:
                raise ModelError(f"missing coefficient on edge {e}")


def _find_cycle(model: PathModel) -> list[str] | None:
    white, grey, black = 0, 1, 2
    color = {n: white for n in model.names}
    children: dict[str, list[str]] = {n: [] for n in model.names}
    for e in model.edges:
        if e.source in children and e.target in children:
            children[e.source].append(e.target)

    for root in model.names:
        if color[root] != white:
            continue
        stack = [(root, iter(children[root]))]
        path = [root]
        color[root] = grey
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = black
                stack.pop()
                path.pop()
            elif color[nxt] == grey:
                return path[path.index(nxt):] + [nxt]
            elif color[nxt] == white:
                color[nxt] = grey
                stack.append((nxt, iter(children[nxt])))
                path.append(nxt)
    return None


def validate(model: PathModel) -> list[Violation]:
    """Every invariant violation in ``model``; an empty list means valid."""
    out: list[Violation] = []
    seen: set[str] = set()
    for v in model.variables:
        if not _valid_name(v.name):
            out.append(Violation("name", repr(v.name), f"invalid variable name: {v.name!r}"))
        if v.name in seen:
            out.append(Violation("unique", v.name, f"duplicate variable: {v.name}"))
        seen.add(v.name)
        if v.kind is Kind.LATENT and v.measured:
            out.append(Violation("latent", v.name, f"latent variable marked measured: {v.name}"))

    pairs: set[tuple[str, str]] = set()
    for e in model.edges:
        for end in (e.source, e.target):
            if end not in seen:
                out.append(Violation("endpoint", str(e), f"undeclared variable in edge {e}: {end}"))
        if e.source == e.target:
            out.append(Violation("self-loop", str(e), f"self-loop: {e}"))
        if e.key in pairs:
            out.append(Violation("duplicate-edge", str(e), f"duplicate edge: {e}"))
        pairs.add(e.key)
        if e.coefficient is not None and not _finite(e.coefficient):
            out.append(Violation("coefficient", str(e), f"non-finite coefficient: {e}"))

    for name, value in model.error_variances.items():
        if name not in seen:
            out.append(Violation("endpoint", name, f"error variance for undeclared variable: {name}"))
        elif not (_finite(value) and value > 0):
            out.append(Violation("errvar", name, f"nonpositive error variance: {name}"))

    if not any(p.rule == "self-loop" for p in out):
        cycle = _find_cycle(model)
        if cycle:
            out.append(Violation("cycle", f"{cycle[0]}->{cycle[1]}", "cycle: " + "->".join(cycle)))
    return out


def _finite(x) -> bool:
    try:
        return abs(float(x)) != float("inf") and float(x) == float(x)
    except (TypeError, ValueError):
        return False


def topological_order(model: PathModel) -> list[str]:
    """Kahn's algorithm; among ready variables the earliest declared goes first."""
    indegree = {n: 0 for n in model.names}
    for e in model.edges:
        indegree[e.target] += 1
    rank = {n: i for i, n in enumerate(model.names)}
    ready = sorted((n for n, d in indegree.items() if d == 0), key=rank.__getitem__)
    order: list[str] = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        for child in model.children(node):
            indegree[child] -= 1
            if indegree[child] == 0:
                ready.append(child)
        ready.sort(key=rank.__getitem__)
    if len(order) != len(model.names):
        cycle = _find_cycle(model) or []
        raise ModelError("cycle: " + "->".join(cycle))
    return order


@dataclass(frozen=True)
class RoleAssignment:
    exposure: str
    outcome: str
    mediator: str | None = None
    covariates: frozenset[str] = frozenset()
    unmeasured: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "covariates", frozenset(self.covariates))
        object.__setattr__(self, "unmeasured", frozenset(self.unmeasured))

    def check(self, model: PathModel) -> "RoleAssignment":
        named = [self.exposure, self.outcome] + ([self.mediator] if self.mediator else [])
        if len(set(named)) != len(named):
            raise RolesError("exposure, mediator and outcome must be distinct")
        for n in named + sorted(self.covariates) + sorted(self.unmeasured):
            if n not in model:
                raise RolesError(f"role names undeclared variable: {n}")
        for n in named:
            v = model.variable(n)
            if n in self.unmeasured or not (v.measured or v.latent):
                raise RolesError(f"exposure/mediator/outcome may not be unmeasured: {n}")
        for n in sorted(self.covariates):
            if not model.variable(n).measured:
                raise RolesError(f"covariate must be measured: {n}")
            if n in named:
                raise RolesError(f"covariate also holds another role: {n}")
        for n in sorted(self.unmeasured):
            if model.variable(n).measured:
                raise RolesError(f"unmeasured role on a measured variable: {n}")
            if n in named:
                raise RolesError(f"unmeasured role on the exposure, mediator or outcome: {n}")
        return self

    def hidden(self, model: PathModel) -> frozenset[str]:
        """Variables left out of the fitted model: the declared set plus anything unmeasured."""
        return self.unmeasured | frozenset(model.unmeasured_names)


class Position(str, enum.Enum):
    PRE_EXPOSURE = "pre-exposure"
    EXPOSURE = "exposure"
    MEDIATOR = "mediator"
    OUTCOME = "outcome"
    POST_OUTCOME = "post-outcome"
    OTHER = "other"


def _strictly_between(model: PathModel, v: str, start: str, end: str) -> bool:
    return v in model.descendants(start) and v in model.ancestors(end)


def position_class(model: PathModel, roles: RoleAssignment, v: str) -> Position:
    """Where ``v`` sits relative to the exposure -> mediator -> outcome pathway.

    Variables strictly between the exposure and the mediator count as
    mediators, and those strictly between the mediator and the outcome as
    outcomes. Descendants of the exposure that feed neither are ``OTHER``.
    """
    model.require(v)
    a, m, y = roles.exposure, roles.mediator, roles.outcome
    if v == a:
        return Position.EXPOSURE
    if v == m:
        return Position.MEDIATOR
    if v == y:
        return Position.OUTCOME
    if m is not None:
        if _strictly_between(model, v, a, m):
            return Position.MEDIATOR
        if _strictly_between(model, v, m, y):
            return Position.OUTCOME
    elif _strictly_between(model, v, a, y):
        return Position.MEDIATOR
    if v in model.descendants(y):
        return Position.POST_OUTCOME
    if v not in model.descendants(a):
        return Position.PRE_EXPOSURE
    return Position.OTHER
