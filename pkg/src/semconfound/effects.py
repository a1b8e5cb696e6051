"""Total, direct and indirect effects.

Model-based effects are plain floats computed from path coefficients.
Reported estimates (:class:`EffectEstimate`) hold decimal point values
and interval limits so that sensitivity corrections, which only add and
subtract constants, are exact.
"""

from __future__ import annotations

import decimal
import math
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterator

from .estimation import Z95, FitResult
from .model import ModelError, PathModel, RoleAssignment, RolesError, topological_order

__all__ = [
    "EFFECT_KINDS",
    "EffectEstimate",
    "EffectTriple",
    "to_decimal",
    "direct_effect",
    "total_effect",
    "indirect_effect",
    "path_effects",
    "effect_triple_from_fit",
    "infer_triple",
]

EFFECT_KINDS = ("total", "direct", "indirect")

# Wide enough that sums and products of float-derived decimals never round.
CONTEXT = decimal.Context(prec=80, traps=[decimal.InvalidOperation, decimal.DivisionByZero, decimal.Overflow])


def to_decimal(x) -> Decimal:
    """Exact decimal for a user-facing number; floats go through their shortest repr."""
    if isinstance(x, Decimal):
        d = x
    elif isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    elif isinstance(x, int):
        d = Decimal(x)
    elif isinstance(x, float):
        d = Decimal(repr(x))
    elif isinstance(x, str):
        try:
            d = Decimal(x.strip())
        except decimal.InvalidOperation:
            raise ValueError(f"not a number: {x!r}") from None
    else:
        raise TypeError(f"not a number: {x!r}")
    if not d.is_finite():
        raise ValueError(f"not a finite number: {x!r}")
    return d


@dataclass(frozen=True)
class EffectEstimate:
    kind: str
    point: Decimal
    ci_low: Decimal
    ci_high: Decimal

    def __post_init__(self):
        if self.kind not in EFFECT_KINDS:
            raise ValueError(f"unknown effect kind {self.kind!r}")
        for name in ("point", "ci_low", "ci_high"):
            object.__setattr__(self, name, to_decimal(getattr(self, name)))
        if not self.ci_low <= self.point <= self.ci_high:
            raise ValueError(
                f"{self.kind} estimate {self.point} outside its interval ({self.ci_low}, {self.ci_high})"
            )

    @classmethod
    def exact(cls, kind: str, point) -> "EffectEstimate":
        return cls(kind, point, point, point)

    def shifted(self, delta: Decimal) -> "EffectEstimate":
        with decimal.localcontext(CONTEXT):
            return EffectEstimate(self.kind, self.point + delta, self.ci_low + delta, self.ci_high + delta)

    @property
    def width(self) -> Decimal:
        with decimal.localcontext(CONTEXT):
            return self.ci_high - self.ci_low

    def as_floats(self) -> dict:
        return {
            "kind": self.kind,
            "point": float(self.point),
            "ci_low": float(self.ci_low),
            "ci_high": float(self.ci_high),
        }

    def __str__(self) -> str:
        return f"{self.point} ({self.ci_low}, {self.ci_high})"


@dataclass(frozen=True)
class EffectTriple:
    total: EffectEstimate
    direct: EffectEstimate
    indirect: EffectEstimate

    def __post_init__(self):
        for kind in EFFECT_KINDS:
            if getattr(self, kind).kind != kind:
                raise ValueError(f"{kind} slot holds a {getattr(self, kind).kind} estimate")
        with decimal.localcontext(CONTEXT):
            gap = abs(self.total.point - (self.direct.point + self.indirect.point))
        if gap > Decimal("1e-12"):
            raise ValueError(f"total {self.total.point} != direct + indirect (gap {gap})")

    def __iter__(self) -> Iterator[EffectEstimate]:
        return iter((self.total, self.direct, self.indirect))

    def get(self, kind: str) -> EffectEstimate:
        return getattr(self, kind)

    def replace(self, **changes: EffectEstimate) -> "EffectTriple":
        parts = {k: changes.get(k, self.get(k)) for k in EFFECT_KINDS}
        return EffectTriple(**parts)

    def as_floats(self) -> dict:
        return {k: self.get(k).as_floats() for k in EFFECT_KINDS}


def _coefficient(model: PathModel, source: str, target: str) -> float:
    c = model.edge(source, target).coefficient
    if c is None:
        raise ModelError(f"missing coefficient on edge {source}->{target}")
    return float(c)


def direct_effect(model: PathModel, a: str, y: str) -> float:
    model.require(a, y)
    return _coefficient(model, a, y) if model.has_edge(a, y) else 0.0


def total_effect(model: PathModel, a: str, y: str) -> float:
    """Sum over directed a -> ... -> y paths of the product of their coefficients."""
    model.require(a, y)
    if a == y:
        raise ValueError("exposure and outcome must differ")
    if y not in model.descendants(a):
        return 0.0
    between = (model.descendants(a) & model.ancestors(y)) | {a, y}
    reach = {a: 1.0}
    for v in topological_order(model):
        if v == a or v not in between:
            continue
        reach[v] = sum(
            reach[p] * _coefficient(model, p, v) for p in model.parents(v) if p in between and p in reach
        )
    return reach[y]


def indirect_effect(model: PathModel, a: str, m: str, y: str) -> float:
    """Total minus direct effect; ``m`` must be a declared variable."""
    model.require(m)
    return total_effect(model, a, y) - direct_effect(model, a, y)


def path_effects(model: PathModel, a: str, y: str) -> list[tuple[tuple[str, ...], float]]:
    """Each directed path from a to y with its coefficient product."""
    model.require(a, y)
    out = []

    def walk(path: list[str], product: float) -> None:
        here = path[-1]
        if here == y:
            out.append((tuple(path), product))
            return
        for child in model.children(here):
            if child == y or child in model.ancestors(y):
                walk(path + [child], product * _coefficient(model, here, child))

    walk([a], 1.0)
    return out


def _estimate(kind: str, point: float, se: float) -> EffectEstimate:
    p = to_decimal(point)
    half = to_decimal(Z95 * se)
    with decimal.localcontext(CONTEXT):
        return EffectEstimate(kind, p, p - half, p + half)


def effect_triple_from_fit(fit: FitResult, roles: RoleAssignment) -> EffectTriple:
    """Effects for a single-mediator fit.

    The indirect effect is the product of the exposure->mediator and
    mediator->outcome coefficients with a first-order delta-method SE;
    the total SE treats direct and indirect as independent.
    """
    a, m, y = roles.exposure, roles.mediator, roles.outcome
    if m is None:
        raise RolesError("effect decomposition needs a mediator")
    for s, t in ((a, y), (a, m), (m, y)):
        if not fit.has(s, t):
            raise KeyError(f"fit lacks the {s}->{t} coefficient")
    c, se_c = fit.coefficient(a, y), fit.standard_error(a, y)
    alpha, se_alpha = fit.coefficient(a, m), fit.standard_error(a, m)
    beta, se_beta = fit.coefficient(m, y), fit.standard_error(m, y)

    direct = _estimate("direct", c, se_c)
    se_ind = math.sqrt(beta**2 * se_alpha**2 + alpha**2 * se_beta**2)
    indirect = _estimate("indirect", alpha * beta, se_ind)
    se_tot = math.sqrt(se_c**2 + se_ind**2)
    with decimal.localcontext(CONTEXT):
        point = direct.point + indirect.point
        half = to_decimal(Z95 * se_tot)
        total = EffectEstimate("total", point, point - half, point + half)
    return EffectTriple(total, direct, indirect)


def infer_triple(
    total: EffectEstimate | None = None,
    direct: EffectEstimate | None = None,
    indirect: EffectEstimate | None = None,
    tolerance: Decimal = Decimal("1e-6"),
) -> EffectTriple:
    """Complete a triple from two members; with all three, check they add up.

    The inferred member's interval assumes independent, normal-theory
    intervals for the two given members (half-widths add in quadrature);
    without intervals it is degenerate.
    """
    given = {"total": total, "direct": direct, "indirect": indirect}
    missing = [k for k, v in given.items() if v is None]
    if len(missing) > 1:
        raise ValueError("at least two of total, direct and indirect are needed")
    with decimal.localcontext(CONTEXT):
        if not missing:
            gap = abs(total.point - direct.point - indirect.point)
            if gap > tolerance:
                raise ValueError(f"total - direct - indirect = {gap}, exceeds {tolerance}")
            # Rebuild the total from its parts so the triple is exactly additive.
            point = direct.point + indirect.point
            return EffectTriple(
                total.shifted(point - total.point) if gap else total, direct, indirect
            )
        kind = missing[0]
        a, b = (v for v in given.values() if v is not None)
        if kind == "total":
            point = a.point + b.point
        else:
            point = total.point - (direct or indirect).point
        ha, hb = a.width / 2, b.width / 2
        # 34 digits leaves the working precision room for later shifts to stay exact
        half = (ha * ha + hb * hb).sqrt(decimal.Context(prec=34))
        given[kind] = EffectEstimate(kind, point, point - half, point + half)
    return EffectTriple(**given)
