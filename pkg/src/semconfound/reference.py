"""Published bias tables, transcribed as printed.

``TABLE1_PRINTED`` keeps the two sub-tables' cell text; ``TABLE1`` decodes
each cell into (total, direct, indirect) verdicts. ``TABLE3`` maps
(effect, scenario, missing edge) to the printed verdict. ``TABLE2`` holds
the printed simulation estimates with their intervals.
"""

from __future__ import annotations

__all__ = ["TABLE1_PRINTED", "TABLE1", "TABLE2", "TABLE3", "describe", "decode"]

_POS = ("pre-exposure", "exposure", "mediator", "outcome", "post-outcome")

# (left, right) -> (total-effects text, direct/indirect text); blank cells omitted.
TABLE1_PRINTED: dict[tuple[str, str], tuple[str, str]] = {
    **{("pre-exposure", r): ("Not Biased", "Not Biased") for r in _POS},
    ("exposure", "mediator"): ("Biased", "Indirect Biased"),
    ("exposure", "outcome"): ("Biased", "Direct Biased"),
    ("exposure", "post-outcome"): ("Not Biased", "Not Biased"),
    ("mediator", "outcome"): ("Not Biased", "Direct and Indirect Biased"),
    ("mediator", "post-outcome"): ("Not Biased", "Not Biased"),
    ("outcome", "post-outcome"): ("Not Biased", "Not Biased"),
    ("post-outcome", "post-outcome"): ("Not Biased", "Not Biased"),
}

_DI = {
    "Not Biased": ("unbiased", "unbiased"),
    "Indirect Biased": ("unbiased", "biased"),
    "Direct Biased": ("biased", "unbiased"),
    "Direct and Indirect Biased": ("biased", "biased"),
}


def decode(total_text: str, split_text: str) -> tuple[str, str, str]:
    total = {"Biased": "biased", "Not Biased": "unbiased"}[total_text]
    return (total, *_DI[split_text])


def describe(total: str, direct: str, indirect: str) -> tuple[str, str]:
    """Printed-style labels for a verdict triple."""
    t = "Biased" if total == "biased" else "Not Biased"
    for text, pair in _DI.items():
        if pair == (direct, indirect):
            return t, text
    raise ValueError(f"bad verdicts {direct!r}, {indirect!r}")


TABLE1: dict[tuple[str, str], tuple[str, str, str] | None] = {
    (l, r): (decode(*TABLE1_PRINTED[(l, r)]) if (l, r) in TABLE1_PRINTED else None)
    for l in _POS for r in _POS
}

_T3_ROWS = {
    "total": {
        "exposure-mediator": ("biased", "biased", "unbiased"),
        "exposure-outcome": ("biased", "biased", "biased"),
        "mediator-outcome": ("unbiased", "unbiased", "unbiased"),
    },
    "direct": {
        "exposure-mediator": ("unbiased", "unbiased", "unbiased"),
        "exposure-outcome": ("biased", "biased", "biased"),
        "mediator-outcome": ("biased", "biased", "unbiased"),
    },
    "indirect": {
        "exposure-mediator": ("biased", "biased", "unbiased"),
        "exposure-outcome": ("unbiased", "unbiased", "unbiased"),
        "mediator-outcome": ("biased", "unbiased", "biased"),
    },
}

TABLE3: dict[tuple[str, str, str], str] = {
    (effect, scenario, missing): row[i]
    for effect, rows in _T3_ROWS.items()
    for scenario, row in rows.items()
    for i, missing in enumerate(("A->Y", "A->M", "M->Y"))
}

# edge -> (estimate, ci_low, ci_high) per fitted specification
TABLE2: dict[str, dict[str, tuple[float, float, float]]] = {
    "true": {"C->A": (0.6,) * 3, "C->M": (0.6,) * 3, "A->M": (0.6,) * 3,
             "C->Y": (0.0,) * 3, "A->Y": (0.6,) * 3, "M->Y": (0.6,) * 3},
    "with C->Y": {
        "C->A": (0.59, 0.58, 0.61),
        "C->M": (0.61, 0.59, 0.63),
        "A->M": (0.58, 0.56, 0.60),
        "C->Y": (-0.17, -0.19, -0.15),
        "A->Y": (0.44, 0.42, 0.45),
        "M->Y": (0.87, 0.86, 0.88),
    },
    "without C->Y": {
        "C->A": (0.60, 0.58, 0.61),
        "C->M": (0.61, 0.59, 0.63),
        "A->M": (0.58, 0.56, 0.60),
        "A->Y": (0.40, 0.39, 0.42),
        "M->Y": (0.82, 0.81, 0.83),
    },
}
