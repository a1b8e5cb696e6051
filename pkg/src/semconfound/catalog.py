"""Ready-made model documents for the standard confounding scenarios."""

from __future__ import annotations

from .dsl import ModelDocument, parse

__all__ = ["SOURCES", "load_builtin", "names"]

_BASE = """\
var C
var U unmeasured
var A
var M
var Y
edge C -> A
edge C -> M
edge C -> Y
edge A -> M
edge A -> Y
edge M -> Y
"""

_ROLES = """\
role exposure A
role mediator M
role outcome Y
role covariate C
role unmeasured U
"""

SOURCES: dict[str, str] = {
    # U confounds exposure and mediator.
    "exposure-mediator": _BASE + "edge U -> A\nedge U -> M\n" + _ROLES,
    # U confounds exposure and outcome.
    "exposure-outcome": _BASE + "edge U -> A\nedge U -> Y\n" + _ROLES,
    # U confounds mediator and outcome.
    "mediator-outcome": _BASE + "edge U -> M\nedge U -> Y\n" + _ROLES,
    # Mediator-outcome confounding with every path at 0.6 except C -> Y,
    # which is present in the graph but truly zero.
    "scenario3": """\
var C
var U unmeasured
var A
var M
var Y
edge C -> A = 0.6
edge C -> M = 0.6
edge A -> M = 0.6
edge U -> M = 0.6
edge C -> Y = 0
edge A -> Y = 0.6
edge M -> Y = 0.6
edge U -> Y = 0.6
""" + _ROLES,
    # Two measured covariates, an exposure, a mediator and an outcome.
    "example": """\
var C1
var C2
var U unmeasured
var A
var M
var Y
edge C1 -> A
edge C1 -> M
edge C1 -> Y
edge C2 -> A
edge C2 -> M
edge C2 -> Y
edge A -> M
edge A -> Y
edge M -> Y
edge U -> M
edge U -> Y
role exposure A
role mediator M
role outcome Y
role covariate C1 C2
role unmeasured U
""",
    # Age -> white-matter diffusivity -> general cognitive factor, standardized,
    # with a hidden confounder of diffusivity and the g factor.
    "ageing": """\
var Age
var DTI
var g latent
var Speed
var WorkingMemory
var Flexibility
var FluidIntelligence
var U unmeasured
edge Age -> g = -0.65
edge Age -> DTI = 0.77
edge DTI -> g = 0.01
edge g -> Speed
edge g -> WorkingMemory
edge g -> Flexibility
edge g -> FluidIntelligence
edge U -> DTI
edge U -> g
role exposure Age
role mediator DTI
role outcome g
role unmeasured U
""",
}

_ALIASES = {"fig3a": "exposure-mediator", "fig3b": "exposure-outcome", "fig3c": "mediator-outcome", "fig2": "example"}


def names() -> list[str]:
    return sorted(SOURCES)


def load_builtin(name: str) -> ModelDocument:
    key = _ALIASES.get(name, name)
    try:
        return parse(SOURCES[key])
    except KeyError:
        raise KeyError(f"no built-in model {name!r}; choose from {', '.join(names())}") from None
