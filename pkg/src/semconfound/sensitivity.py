"""Bias-factor corrections for an unmeasured confounder.

The additive bias factor is ``gamma * shift``: ``gamma`` is the effect of
U on the outcome and ``shift`` the difference in the mean of U between
the two exposure levels compared (conditional on the mediator in the
mediator-outcome case). Which effects absorb the factor, and with which
sign, depends on where U's two arrows point:

=================  =====================  ===================
scenario           subtract from           add to
=================  =====================  ===================
exposure-mediator  total, indirect         -
exposure-outcome   total, direct           -
mediator-outcome   direct                  indirect
=================  =====================  ===================

Corrections shift the point estimate and both interval limits by the same
constant. They rest on two untestable assumptions, recorded in
:data:`ASSUMPTIONS`: U does not interact with the exposure in its effect
on the outcome, and the mean of U is additive in the exposure and the
other conditioning variables.
"""

from __future__ import annotations

import decimal
import enum
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Sequence

from .effects import CONTEXT, EFFECT_KINDS, EffectEstimate, EffectTriple, to_decimal, total_effect
from .model import ModelError, PathModel, Position, RoleAssignment, position_class
from .oracle import implied_covariance, population_regression

__all__ = [
    "Scenario",
    "SensitivityParams",
    "SweepVerdict",
    "ASSUMPTIONS",
    "UnbiasedEffectError",
    "bias_factor",
    "correction_signs",
    "biased_kinds",
    "correct",
    "explain_away",
    "ExplainAway",
    "inclusive_range",
    "sweep",
    "Sweep",
    "SweepPoint",
    "EffectVerdict",
    "scenario_from_model",
    "implied_params",
]

ASSUMPTIONS = (
    "no interaction between U and the exposure in their effects on the outcome",
    "the mean of U is additive in the exposure and in the other conditioning variables",
)


class UnbiasedEffectError(ValueError):
    """The scenario does not bias the requested effect, so it has no correction."""


class Scenario(str, enum.Enum):
    EXPOSURE_MEDIATOR = "exposure-mediator"
    EXPOSURE_OUTCOME = "exposure-outcome"
    MEDIATOR_OUTCOME = "mediator-outcome"


# sign applied to the bias factor: corrected = estimate + sign * B
_SIGNS = {
    Scenario.EXPOSURE_MEDIATOR: {"total": -1, "direct": 0, "indirect": -1},
    Scenario.EXPOSURE_OUTCOME: {"total": -1, "direct": -1, "indirect": 0},
    Scenario.MEDIATOR_OUTCOME: {"total": 0, "direct": -1, "indirect": 1},
}


def correction_signs(scenario: Scenario | str) -> dict[str, int]:
    return dict(_SIGNS[Scenario(scenario)])


def biased_kinds(scenario: Scenario | str) -> tuple[str, ...]:
    signs = _SIGNS[Scenario(scenario)]
    return tuple(k for k in EFFECT_KINDS if signs[k])


@dataclass(frozen=True)
class SensitivityParams:
    gamma: Decimal
    shift: Decimal
    definition: str = ""

    def __post_init__(self):
        object.__setattr__(self, "gamma", to_decimal(self.gamma))
        object.__setattr__(self, "shift", to_decimal(self.shift))


def bias_factor(params: SensitivityParams) -> Decimal:
    with decimal.localcontext(CONTEXT):
        return params.gamma * params.shift


def _as_bias(params_or_bias) -> Decimal:
    if isinstance(params_or_bias, SensitivityParams):
        return bias_factor(params_or_bias)
    return to_decimal(params_or_bias)


def correct(triple: EffectTriple, scenario: Scenario | str, params: SensitivityParams | Decimal) -> EffectTriple:
    """Remove the bias factor from the effects the scenario biases.

    ``params`` may also be a bias factor given directly.
    """
    b = _as_bias(params)
    signs = _SIGNS[Scenario(scenario)]
    with decimal.localcontext(CONTEXT):
        parts = {
            k: triple.get(k).shifted(signs[k] * b) if signs[k] else triple.get(k)
            for k in EFFECT_KINDS
        }
    return EffectTriple(**parts)


@dataclass(frozen=True)
class ExplainAway:
    bias: Decimal
    factorizations: tuple[tuple[Decimal, Decimal], ...] = ()

    def gamma_for(self, shift) -> Decimal:
        shift = to_decimal(shift)
        if shift == 0:
            raise ValueError("shift must be nonzero")
        with decimal.localcontext(CONTEXT):
            return self.bias / shift


def explain_away(
    effect: EffectEstimate,
    scenario: Scenario | str,
    kind: str | None = None,
    shifts: Iterable = (),
) -> ExplainAway:
    """Bias factor that moves ``effect``'s point estimate to exactly zero.

    Every ``(shift, gamma)`` with ``gamma * shift`` equal to the returned
    bias does the job; one pair is listed per requested shift.
    """
    kind = kind or effect.kind
    sign = _SIGNS[Scenario(scenario)][kind]
    if not sign:
        raise UnbiasedEffectError(f"{Scenario(scenario).value} confounding does not bias the {kind} effect")
    with decimal.localcontext(CONTEXT):
        bias = -effect.point / sign
        bias = bias + 0  # normalise -0
    result = ExplainAway(bias)
    pairs = tuple((to_decimal(s), result.gamma_for(s)) for s in shifts)
    return ExplainAway(bias, pairs)


def inclusive_range(lo, hi, step) -> list[Decimal]:
    """lo, lo + step, ... up to hi; hi is kept when it is within 1e-9 steps of the grid."""
    lo, hi, step = to_decimal(lo), to_decimal(hi), to_decimal(step)
    if not step > 0:
        raise ValueError("step must be positive")
    if hi < lo:
        raise ValueError("empty range: hi < lo")
    with decimal.localcontext(CONTEXT):
        count = int(((hi - lo) / step + Decimal("1e-9")).to_integral_value(rounding=decimal.ROUND_FLOOR)) + 1
        return [lo + k * step for k in range(count)]


class SweepVerdict(str, enum.Enum):
    CONTAINS_ZERO = "contains-zero"
    SAME_DIRECTION = "same-direction"
    DIRECTION_REVERSED = "direction-reversed"


@dataclass(frozen=True)
class EffectVerdict:
    primary: SweepVerdict
    contains_zero: bool
    reversed: bool

    def to_dict(self) -> dict:
        return {"verdict": self.primary.value, "contains_zero": self.contains_zero, "reversed": self.reversed}


@dataclass(frozen=True)
class SweepPoint:
    gamma: Decimal
    shift: Decimal
    bias: Decimal
    triple: EffectTriple


@dataclass(frozen=True)
class Sweep:
    scenario: Scenario
    original: EffectTriple
    points: list[SweepPoint] = field(default_factory=list)
    verdicts: dict[str, EffectVerdict] = field(default_factory=dict)


def _sign(x: Decimal) -> int:
    return (x > 0) - (x < 0)


def _verdict(original: EffectEstimate, corrected: Sequence[EffectEstimate]) -> EffectVerdict:
    zero = any(e.ci_low <= 0 <= e.ci_high for e in corrected)
    s0 = _sign(original.point)
    flipped = s0 != 0 and any(_sign(e.point) == -s0 for e in corrected)
    if zero:
        primary = SweepVerdict.CONTAINS_ZERO
    elif flipped:
        primary = SweepVerdict.DIRECTION_REVERSED
    else:
        primary = SweepVerdict.SAME_DIRECTION
    return EffectVerdict(primary, zero, flipped)


def sweep(
    triple: EffectTriple,
    scenario: Scenario | str,
    gamma_range: tuple,
    shift_range: tuple,
) -> Sweep:
    """Correct ``triple`` at every (gamma, shift) grid point, gamma varying slowest."""
    scenario = Scenario(scenario)
    gammas = inclusive_range(*gamma_range)
    shifts = inclusive_range(*shift_range)
    points = []
    for g in gammas:
        for s in shifts:
            params = SensitivityParams(g, s)
            points.append(SweepPoint(g, s, bias_factor(params), correct(triple, scenario, params)))
    verdicts = {
        k: _verdict(triple.get(k), [p.triple.get(k) for p in points]) for k in EFFECT_KINDS
    }
    return Sweep(scenario, triple, points, verdicts)


def scenario_from_model(model: PathModel, roles: RoleAssignment) -> Scenario | None:
    """Scenario implied by where the unmeasured variables point.

    Intermediate variables count as the role they lie in front of. Returns
    None when no hidden variable reaches two of exposure, mediator and
    outcome.
    """
    found = set()
    for u in sorted(roles.hidden(model)):
        hits = {position_class(model, roles, c) for c in model.children(u)}
        hits &= {Position.EXPOSURE, Position.MEDIATOR, Position.OUTCOME}
        found.add(frozenset(hits))
    table = {
        frozenset({Position.EXPOSURE, Position.MEDIATOR}): Scenario.EXPOSURE_MEDIATOR,
        frozenset({Position.EXPOSURE, Position.OUTCOME}): Scenario.EXPOSURE_OUTCOME,
        frozenset({Position.MEDIATOR, Position.OUTCOME}): Scenario.MEDIATOR_OUTCOME,
    }
    matches = {table[h] for h in found if h in table}
    if len(matches) == 1:
        return matches.pop()
    return None


def implied_params(
    model: PathModel, roles: RoleAssignment, kind: str, confounder: str | None = None
) -> SensitivityParams:
    """Sensitivity parameters implied by a fully annotated model.

    For the direct effect, gamma is the U -> outcome coefficient and the
    shift is the coefficient of the exposure in the population regression
    of U on exposure, mediator and covariates. For the total effect, gamma
    is U's total effect on the outcome along paths avoiding the exposure
    and the shift conditions on exposure and covariates only.
    """
    a, m, y = roles.exposure, roles.mediator, roles.outcome
    hidden = sorted(roles.hidden(model))
    u = confounder or (hidden[0] if len(hidden) == 1 else None)
    if u is None:
        raise ModelError("name the confounder when the model hides more than one variable")
    sigma = implied_covariance(model)
    covs = sorted(roles.covariates)
    if kind == "direct":
        if m is None:
            raise ModelError("direct-effect parameters need a mediator")
        gamma = model.edge(u, y).coefficient if model.has_edge(u, y) else 0.0
        shift = population_regression(sigma, u, [a, m] + covs)[a]
        definition = f"gamma: {u}->{y} coefficient; shift: E[{u} | {a}+1, {m}, C] - E[{u} | {a}, {m}, C]"
    elif kind == "total":
        cut = model.without_edges([(a, c) for c in model.children(a)])
        gamma = total_effect(cut, u, y)
        shift = population_regression(sigma, u, [a] + covs)[a]
        definition = f"gamma: total effect of {u} on {y} avoiding {a}; shift: E[{u} | {a}+1, C] - E[{u} | {a}, C]"
    else:
        raise ValueError("kind must be 'direct' or 'total'")
    return SensitivityParams(to_decimal(float(gamma)), to_decimal(float(shift)), definition)
