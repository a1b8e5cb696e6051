"""Command-line interface.

Exit codes: 0 on success, 1 for domain errors (bad model, roles or
parameters), 2 for usage errors. Results go to stdout; stderr carries
diagnostics only.
"""

from __future__ import annotations

import argparse
import json
import sys
from decimal import Decimal
from typing import Sequence

from . import catalog, reference
from .dsl import DSLError, ModelDocument, load
from .effects import EFFECT_KINDS, EffectEstimate, EffectTriple, infer_triple, to_decimal
from .estimation import DataError, SingularDesignError, fit_sem, load_csv, parse_formula, standardize
from .effects import effect_triple_from_fit
from .graph import TABLE1_POSITIONS, BiasReport, classify_bias, table1_grid
from .model import ModelError
from .oracle import SingularCovarianceError, asymptotic_edge_bias
from .sensitivity import (
    ASSUMPTIONS,
    Scenario,
    SensitivityParams,
    UnbiasedEffectError,
    bias_factor,
    biased_kinds,
    correct,
    explain_away,
    sweep,
)
from .simulation import SimulationConfig, generate, replicate, run_experiment

__all__ = ["main", "build_parser"]

DOMAIN_ERRORS = (
    DSLError, ModelError, DataError, SingularDesignError, SingularCovarianceError,
    UnbiasedEffectError, KeyError, ValueError, OSError,
)


class UsageError(Exception):
    pass


def _num(d) -> str:
    if isinstance(d, Decimal):
        d = d.normalize()
        return "0" if d.is_zero() else format(d, "f")
    if isinstance(d, float):
        return f"{d:.6g}"
    return str(d)


def _fnum(d) -> float:
    return float(d)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _load_model(spec: str) -> ModelDocument:
    if spec.startswith("builtin:"):
        return catalog.load_builtin(spec.split(":", 1)[1])
    return load(spec)


def _need_roles(doc: ModelDocument):
    if doc.roles is None:
        raise ModelError("the model file declares no roles (role exposure/outcome ...)")
    return doc.roles


def _parse_range(text: str) -> tuple[Decimal, Decimal, Decimal]:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"range must be lo:hi:step, got {text!r}")
    try:
        lo, hi, step = (to_decimal(p) for p in parts)
    except (ValueError, TypeError):
        raise UsageError(f"range must be lo:hi:step, got {text!r}") from None
    if not step > 0 or hi < lo:
        raise UsageError(f"range {text!r} is empty or has a nonpositive step")
    return lo, hi, step


# -- classify ----------------------------------------------------------------

def _report_dict(report: BiasReport) -> dict:
    return report.to_dict()


def _report_text(report: BiasReport, header: str = "") -> list[str]:
    lines = [header] if header else []
    for kind in EFFECT_KINDS:
        v = report.verdict(kind)
        if v is None:
            continue
        w = report.witnesses.get(kind)
        lines.append(f"  {kind:<9}{v.value:<10}{'  via ' + str(w) if w else ''}")
    return lines


def cmd_classify(args) -> str:
    doc = _load_model(args.model)
    roles = _need_roles(doc)
    runs: list[tuple[str, BiasReport]] = []
    if args.all_missing:
        a, m, y = roles.exposure, roles.mediator, roles.outcome
        if m is None:
            raise ModelError("--all-missing needs a mediator role")
        for e in (f"{a}->{y}", f"{a}->{m}", f"{m}->{y}"):
            runs.append((e, classify_bias(doc.model, roles, [e], with_edges=args.edges)))
    else:
        effects = EFFECT_KINDS if roles.mediator else ("total",)
        rep = classify_bias(doc.model, roles, args.missing_edge or (), effects=effects, with_edges=args.edges)
        runs.append((",".join(args.missing_edge or []) or "", rep))

    if args.format == "json":
        out = []
        for missing, rep in runs:
            d = _report_dict(rep)
            if not args.edges:
                d.pop("biased_edges")
            d["missing"] = missing or None
            out.append(d)
        return _dump_json(out if args.all_missing else out[0])
    if args.format == "csv":
        lines = ["missing,effect,verdict,witness"]
        for missing, rep in runs:
            for kind in EFFECT_KINDS:
                v = rep.verdict(kind)
                if v is not None:
                    w = rep.witnesses.get(kind)
                    lines.append(f"{missing},{kind},{v.value},{w or ''}")
        return "\n".join(lines) + "\n"
    lines = []
    for missing, rep in runs:
        lines += _report_text(rep, f"missing {missing}:" if missing else "effects:")
        if args.edges:
            lines.append("  biased edges:")
            lines += [f"    {e}  via {w}" for e, w in rep.biased_edges] or ["    (none)"]
    return "\n".join(lines) + "\n"


# -- tables --------------------------------------------------------------------

def _cell_label(rep: BiasReport | None) -> tuple[str, str]:
    if rep is None:
        return ("", "")
    return reference.describe(rep.total.value, rep.direct.value, rep.indirect.value)


def cmd_table1(args) -> tuple[str, int]:
    grid = table1_grid()
    mismatches = []
    for key, rep in grid.items():
        want = reference.TABLE1.get((key[0].value, key[1].value))
        got = None if rep is None else (rep.total.value, rep.direct.value, rep.indirect.value)
        if want != got:
            mismatches.append((key, want, got))
    code = 1 if (args.check and mismatches) else 0

    if args.format == "json":
        cells = []
        for (left, right), rep in grid.items():
            cells.append({
                "left": left.value,
                "right": right.value,
                "applicable": rep is not None,
                "total": rep.total.value if rep else None,
                "direct": rep.direct.value if rep else None,
                "indirect": rep.indirect.value if rep else None,
            })
        return _dump_json({"cells": cells, "matches_reference": not mismatches}), code

    width = 28
    head = "left \\ right".ljust(14) + "".join(p.value.ljust(width) for p in TABLE1_POSITIONS)
    lines = ["Total effects", head]
    for left in TABLE1_POSITIONS:
        row = left.value.ljust(14)
        for right in TABLE1_POSITIONS:
            row += _cell_label(grid[(left, right)])[0].ljust(width)
        lines.append(row.rstrip())
    lines += ["", "Direct / indirect effects", head]
    for left in TABLE1_POSITIONS:
        row = left.value.ljust(14)
        for right in TABLE1_POSITIONS:
            row += _cell_label(grid[(left, right)])[1].ljust(width)
        lines.append(row.rstrip())
    if args.check:
        lines.append("")
        lines.append("check: " + ("ok" if not mismatches else f"{len(mismatches)} cells differ"))
    return "\n".join(lines) + "\n", code


def cmd_table3(args) -> tuple[str, int]:
    rows = []
    mismatches = 0
    for scenario in Scenario:
        doc = catalog.load_builtin(scenario.value)
        for missing in ("A->Y", "A->M", "M->Y"):
            rep = classify_bias(doc.model, doc.roles, [missing], with_edges=False)
            for kind in EFFECT_KINDS:
                got = rep.verdict(kind).value
                printed = reference.TABLE3[(kind, scenario.value, missing)]
                mismatches += got != printed
                rows.append({"effect": kind, "scenario": scenario.value, "missing": missing,
                             "verdict": got, "reference": printed})
    code = 1 if (args.check and mismatches) else 0
    if args.format == "json":
        return _dump_json({"cells": rows, "mismatches": mismatches}), code
    if args.format == "csv":
        lines = ["effect,scenario,missing,verdict,reference"]
        lines += [f"{r['effect']},{r['scenario']},{r['missing']},{r['verdict']},{r['reference']}" for r in rows]
        return "\n".join(lines) + "\n", code
    lines = []
    for kind in EFFECT_KINDS:
        lines.append(f"{kind} effect".ljust(22) + "".join(m.ljust(12) for m in ("A->Y", "A->M", "M->Y")))
        for scenario in Scenario:
            cells = [r for r in rows if r["effect"] == kind and r["scenario"] == scenario.value]
            text = ""
            for r in cells:
                flag = "" if r["verdict"] == r["reference"] else "*"
                text += (r["verdict"] + flag).ljust(12)
            lines.append(scenario.value.ljust(22) + text.rstrip())
        lines.append("")
    lines.append(f"{mismatches} cells differ from the reference table (marked *)")
    return "\n".join(lines) + "\n", code


# -- corrections -----------------------------------------------------------------

def _given_effect(args, kind: str) -> EffectEstimate | None:
    point = getattr(args, kind)
    ci = getattr(args, f"{kind}_ci")
    if point is None:
        if ci is not None:
            raise UsageError(f"--{kind}-ci needs --{kind}")
        return None
    p = to_decimal(point)
    if ci is None:
        return EffectEstimate.exact(kind, p)
    lo, hi = (to_decimal(x) for x in ci)
    return EffectEstimate(kind, p, lo, hi)


def _triple_from_args(args) -> tuple[EffectTriple, list[str]]:
    given = {k: _given_effect(args, k) for k in EFFECT_KINDS}
    triple = infer_triple(**given)
    supplied = [k for k, v in given.items() if v is not None]
    return triple, supplied


def _warn_unbiased(scenario: Scenario, supplied: Sequence[str]) -> None:
    for kind in supplied:
        if kind not in biased_kinds(scenario):
            print(
                f"warning: {scenario.value} confounding does not bias the {kind} effect; passed through unchanged",
                file=sys.stderr,
            )


def _triple_json(t: EffectTriple) -> dict:
    return {k: {"point": _fnum(e.point), "ci_low": _fnum(e.ci_low), "ci_high": _fnum(e.ci_high)} for k, e in
            zip(EFFECT_KINDS, t)}


def _triple_text(t: EffectTriple) -> list[str]:
    return [f"  {e.kind:<9}{_num(e.point)} ({_num(e.ci_low)}, {_num(e.ci_high)})" for e in t]


def cmd_correct(args) -> str:
    scenario = Scenario(args.scenario)
    triple, supplied = _triple_from_args(args)
    params = SensitivityParams(to_decimal(args.gamma), to_decimal(args.shift), args.definition or "")
    b = bias_factor(params)
    fixed = correct(triple, scenario, params)
    _warn_unbiased(scenario, supplied)
    if args.format == "json":
        return _dump_json({
            "scenario": scenario.value,
            "gamma": _fnum(params.gamma),
            "shift": _fnum(params.shift),
            "bias": _fnum(b),
            "gamma_definition": params.definition or None,
            "assumptions": list(ASSUMPTIONS),
            "original": _triple_json(triple),
            "corrected": _triple_json(fixed),
        })
    if args.format == "csv":
        lines = ["effect,point,ci_low,ci_high"]
        lines += [f"{e.kind},{_num(e.point)},{_num(e.ci_low)},{_num(e.ci_high)}" for e in fixed]
        return "\n".join(lines) + "\n"
    lines = [f"scenario: {scenario.value}",
             f"bias factor: {_num(b)} (gamma {_num(params.gamma)} x shift {_num(params.shift)})",
             "corrected:"]
    lines += _triple_text(fixed)
    return "\n".join(lines) + "\n"


def cmd_sweep(args) -> str:
    scenario = Scenario(args.scenario)
    triple, supplied = _triple_from_args(args)
    result = sweep(triple, scenario, _parse_range(args.gamma_range), _parse_range(args.shift_range))
    _warn_unbiased(scenario, supplied)
    verdicts = {k: v.to_dict() for k, v in result.verdicts.items()}
    if args.summary:
        return _dump_json({"scenario": scenario.value, "points": len(result.points), "verdicts": verdicts})
    if args.format == "json":
        return _dump_json({
            "scenario": scenario.value,
            "rows": [
                {"gamma": _fnum(p.gamma), "shift": _fnum(p.shift), "bias": _fnum(p.bias), **_triple_json(p.triple)}
                for p in result.points
            ],
            "verdicts": verdicts,
        })
    fields = ["gamma", "shift", "bias"]
    for k in EFFECT_KINDS:
        fields += [k, f"{k}_ci_low", f"{k}_ci_high"]
    lines = [",".join(fields)]
    for p in result.points:
        cells = [p.gamma, p.shift, p.bias]
        for e in p.triple:
            cells += [e.point, e.ci_low, e.ci_high]
        lines.append(",".join(_num(c) for c in cells))
    for k, v in result.verdicts.items():
        print(f"{k}: {v.primary.value}", file=sys.stderr)
    return "\n".join(lines) + "\n"


def cmd_solve(args) -> str:
    scenario = Scenario(args.scenario)
    effect = EffectEstimate.exact(args.effect, to_decimal(args.point))
    result = explain_away(effect, scenario, args.effect, [to_decimal(s) for s in args.shift or []])
    if args.format == "json":
        return _dump_json({
            "scenario": scenario.value,
            "effect": args.effect,
            "bias": _fnum(result.bias),
            "pairs": [{"shift": _fnum(s), "gamma": _fnum(g)} for s, g in result.factorizations],
        })
    lines = [f"bias factor needed: {_num(result.bias)} (any gamma x shift = {_num(result.bias)})"]
    lines += [f"  shift {_num(s)} -> gamma {_num(g.quantize(Decimal('1e-12')))}" for s, g in result.factorizations]
    return "\n".join(lines) + "\n"


# -- oracle / simulation / fitting --------------------------------------------------

def cmd_oracle(args) -> str:
    doc = _load_model(args.model)
    rows = []
    for formula in args.fit:
        target, regs = parse_formula(formula)
        doc.model.require(target, *regs)
        for (s, t), b in asymptotic_edge_bias(doc.model, {target: regs}).items():
            rows.append({"formula": formula, "target": t, "regressor": s,
                         "population": b.population, "true": b.true, "bias": b.bias})
    if args.format == "json":
        return _dump_json({"rows": rows})
    if args.format == "csv":
        lines = ["target,regressor,population,true,bias"]
        lines += [f"{r['target']},{r['regressor']},{r['population']!r},{r['true']!r},{r['bias']!r}" for r in rows]
        return "\n".join(lines) + "\n"
    lines = ["target    regressor  population        true        bias"]
    lines += [f"{r['target']:<10}{r['regressor']:<10}{r['population']:>11.6f}{r['true']:>12.6f}{r['bias']:>12.6f}"
              for r in rows]
    return "\n".join(lines) + "\n"


def _parse_spec(text: str, index: int) -> tuple[str, dict]:
    label, sep, body = text.partition(":")
    if not sep or "~" in label:
        label, body = f"spec{index}", text
    eqs = dict(parse_formula(chunk) for chunk in body.split(";") if chunk.strip())
    if not eqs:
        raise UsageError(f"empty specification {text!r}")
    return label.strip(), eqs


def _simulation_config(args, doc: ModelDocument) -> SimulationConfig:
    specs = [_parse_spec(s, i + 1) for i, s in enumerate(args.spec or [])]
    specs += [(f, dict([parse_formula(f)])) for f in args.fit or []]
    exclude = set(args.exclude or [])
    if args.exclude is None and doc.roles is not None:
        exclude = set(doc.roles.hidden(doc.model))
    elif args.exclude is None:
        exclude = set(doc.model.unmeasured_names)
    return SimulationConfig(doc.model, args.n, args.seed, specs, frozenset(exclude)).check()


def cmd_simulate(args) -> str:
    doc = _load_model(args.model)
    config = _simulation_config(args, doc)
    if args.data_out:
        from .estimation import dump_csv
        dump_csv(generate(config.model, config.n, config.seed).drop(config.exclude_from_data), args.data_out)
    if args.replications:
        result = replicate(config, args.replications, args.seed)
    else:
        result = run_experiment(config)
    if args.format == "json":
        return result.to_json()
    if args.format == "csv":
        return result.to_csv()
    return _report_table(result)


def _report_table(result) -> str:
    d = result.to_dict()
    rows = d["rows"]
    if not rows:
        return "(no fitted coefficients)\n"
    fields = list(rows[0])
    widths = {f: max(len(f), *(len(_cell(r[f])) for r in rows)) for f in fields}
    lines = ["  ".join(f.ljust(widths[f]) for f in fields).rstrip()]
    for r in rows:
        lines.append("  ".join(_cell(r[f]).ljust(widths[f]) for f in fields).rstrip())
    return "\n".join(lines) + "\n"


def _cell(v) -> str:
    return f"{v:.4f}" if isinstance(v, float) else str(v)


def cmd_table2(args) -> str:
    doc = catalog.load_builtin("scenario3")
    config = SimulationConfig(
        doc.model, args.n, args.seed,
        [("with C->Y", {"A": ("C",), "M": ("C", "A"), "Y": ("C", "A", "M")}),
         ("without C->Y", {"A": ("C",), "M": ("C", "A"), "Y": ("A", "M")})],
        frozenset({"U"}),
    )
    report = run_experiment(config)
    if args.format == "json":
        return report.to_json()
    if args.format == "csv":
        return report.to_csv()
    return _report_table(report)


def cmd_generate(args) -> str:
    from .estimation import dump_csv
    doc = _load_model(args.model)
    data = generate(doc.model, args.n, args.seed).drop(args.exclude or [])
    return dump_csv(data)


def cmd_fit(args) -> str:
    doc = _load_model(args.model)
    for v in doc.model.variables:
        if v.latent:
            raise ModelError(
                f"latent variable {v.name}: least-squares fitting handles observed variables only; "
                "use 'oracle' for population values or 'correct' with published estimates"
            )
    model = doc.model.fitted_model()
    data = load_csv(args.data)
    if args.standardize:
        data = standardize(data)
    fit = fit_sem(model, data)
    triple = None
    if doc.roles is not None and doc.roles.mediator is not None:
        triple = effect_triple_from_fit(fit, doc.roles)
    if args.format == "json":
        out = {"n": fit.n, "coefficients": fit.rows()}
        if triple is not None:
            out["effects"] = _triple_json(triple)
        return _dump_json(out)
    if args.format == "csv":
        fields = ["target", "regressor", "estimate", "se", "ci_low", "ci_high"]
        lines = [",".join(fields)]
        lines += [",".join(repr(r[f]) if isinstance(r[f], float) else r[f] for f in fields) for r in fit.rows()]
        return "\n".join(lines) + "\n"
    lines = [f"n = {fit.n}", "target    regressor   estimate        se              95% CI"]
    for r in fit.rows():
        lines.append(f"{r['target']:<10}{r['regressor']:<10}{r['estimate']:>10.4f}{r['se']:>10.4f}"
                     f"   ({r['ci_low']:.4f}, {r['ci_high']:.4f})")
    if triple is not None:
        lines.append("effects:")
        lines += [f"  {e.kind:<9}{float(e.point):.4f} ({float(e.ci_low):.4f}, {float(e.ci_high):.4f})"
                  for e in triple]
    return "\n".join(lines) + "\n"


# -- parser -------------------------------------------------------------------------

def _add_format(p, default="text", choices=("text", "json", "csv")):
    p.add_argument("--format", choices=choices, default=default)


def _add_effect_flags(p):
    for kind in EFFECT_KINDS:
        p.add_argument(f"--{kind}", metavar="X")
        p.add_argument(f"--{kind}-ci", nargs=2, metavar=("LO", "HI"), dest=f"{kind}_ci")
    p.add_argument("--scenario", required=True, choices=[s.value for s in Scenario])


def _add_simulation_flags(p):
    p.add_argument("-n", type=int, default=20000)
    p.add_argument("--seed", type=int, default=2014)
    p.add_argument("--exclude", action="append", metavar="VAR",
                   help="drop this column before fitting (default: the unmeasured variables)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semconfound",
        description="Bias classification and sensitivity analysis for unmeasured confounding in linear SEMs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="which effect estimates an unmeasured confounder biases")
    p.add_argument("model", help="model file, or builtin:NAME")
    p.add_argument("--missing-edge", action="append", metavar="X->Y")
    p.add_argument("--all-missing", action="store_true")
    p.add_argument("--edges", action="store_true", help="also list every biased edge")
    _add_format(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("table1", help="bias verdicts for every placement of the confounder")
    p.add_argument("--check", action="store_true")
    _add_format(p, choices=("text", "json"))
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("table3", help="bias verdicts when one effect path is truly absent")
    p.add_argument("--check", action="store_true")
    _add_format(p)
    p.set_defaults(func=cmd_table3)

    p = sub.add_parser("table2", help="simulate omitted mediator-outcome confounding")
    p.add_argument("-n", type=int, default=20000)
    p.add_argument("--seed", type=int, default=2014)
    _add_format(p)
    p.set_defaults(func=cmd_table2)

    p = sub.add_parser("correct", help="apply a bias-factor correction")
    _add_effect_flags(p)
    p.add_argument("--gamma", required=True)
    p.add_argument("--shift", required=True)
    p.add_argument("--definition", help="how gamma was defined, echoed in JSON output")
    _add_format(p)
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("sweep", help="corrections over a (gamma, shift) grid")
    _add_effect_flags(p)
    p.add_argument("--gamma-range", required=True, metavar="LO:HI:STEP")
    p.add_argument("--shift-range", required=True, metavar="LO:HI:STEP")
    p.add_argument("--summary", action="store_true", help="print only the JSON verdicts")
    _add_format(p, default="csv", choices=("csv", "json"))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("solve", help="bias factor that explains an effect away")
    p.add_argument("--scenario", required=True, choices=[s.value for s in Scenario])
    p.add_argument("--effect", required=True, choices=EFFECT_KINDS)
    p.add_argument("--point", required=True)
    p.add_argument("--shift", action="append", metavar="S")
    _add_format(p, choices=("text", "json"))
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="population regression coefficients of fitted equations")
    p.add_argument("model")
    p.add_argument("--fit", action="append", required=True, metavar='"Y ~ X1 + X2"')
    _add_format(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("simulate", help="simulate data and fit misspecified models")
    p.add_argument("model")
    _add_simulation_flags(p)
    p.add_argument("--spec", action="append", metavar='"LABEL: Y ~ A + M; M ~ A"')
    p.add_argument("--fit", action="append", metavar='"Y ~ X1 + X2"')
    p.add_argument("--replications", type=int)
    p.add_argument("--data-out", metavar="FILE.csv")
    _add_format(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("generate", help="write simulated data as CSV")
    p.add_argument("model")
    _add_simulation_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="least-squares fit of a model to CSV data")
    p.add_argument("model")
    p.add_argument("--data", required=True)
    p.add_argument("--standardize", action="store_true")
    _add_format(p)
    p.set_defaults(func=cmd_fit)
    return parser


_RANGE_FLAGS = ("--gamma-range", "--shift-range")


def _glue_ranges(argv: list[str]) -> list[str]:
    # "--gamma-range -1:1:0.5" would read the range as an option
    out, i = [], 0
    while i < len(argv):
        if argv[i] in _RANGE_FLAGS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(_glue_ranges(list(sys.argv[1:] if argv is None else argv)))
    try:
        result = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except DOMAIN_ERRORS as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 1
    out, code = result if isinstance(result, tuple) else (result, 0)
    sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
