"""Line-oriented text format for path models and role assignments.

One directive per line::

    var <name> [latent] [unmeasured]
    edge <name> -> <name> [= <real>]
    errvar <name> = <positive real>
    role exposure|mediator|outcome <name>
    role covariate|unmeasured <name> [<name> ...]

``#`` starts a comment. Blank lines are ignored. LF and CRLF are both
accepted; :func:`serialize` always writes LF.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .model import Edge, Kind, PathModel, RoleAssignment, RolesError, Variable, validate

__all__ = ["ModelDocument", "DSLError", "DSLSyntaxError", "DSLSemanticError", "parse", "serialize", "load"]

_NAME = re.compile(r"[^\W\d][\w.]*")
_REAL = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_SINGLE_ROLES = ("exposure", "mediator", "outcome")
_MULTI_ROLES = ("covariate", "unmeasured")


class DSLError(ValueError):
    """A parse failure with a 1-based source position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class DSLSyntaxError(DSLError):
    pass


class DSLSemanticError(DSLError):
    pass


@dataclass(frozen=True, eq=False)
class ModelDocument:
    model: PathModel
    roles: RoleAssignment | None = None
    spans: dict[str, tuple[int, int]] = field(default_factory=dict)

    def __eq__(self, other):
        if not isinstance(other, ModelDocument):
            return NotImplemented
        return self.model == other.model and self.roles == other.roles

    __hash__ = None


class _Tokens:
    """Whitespace-separated tokens of one line, with their columns."""

    def __init__(self, text: str, lineno: int):
        self.lineno = lineno
        self.items = [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", text)]
        self.pos = 0
        self.end_col = len(text) + 1

    def col(self) -> int:
        return self.items[self.pos][1] if self.pos < len(self.items) else self.end_col

    def error(self, message: str) -> DSLSyntaxError:
        return DSLSyntaxError(message, self.lineno, self.col())

    def take(self, what: str) -> tuple[str, int]:
        if self.pos >= len(self.items):
            raise self.error(f"expected {what}")
        tok = self.items[self.pos]
        self.pos += 1
        return tok

    def name(self) -> tuple[str, int]:
        tok, col = self.take("a variable name")
        if not _NAME.fullmatch(tok):
            self.pos -= 1
            raise self.error(f"invalid variable name {tok!r}")
        return tok, col

    def literal(self, expected: str) -> None:
        tok, _ = self.take(f"'{expected}'")
        if tok != expected:
            self.pos -= 1
            raise self.error(f"expected '{expected}', found {tok!r}")

    def real(self) -> float:
        tok, _ = self.take("a number")
        if not _REAL.fullmatch(tok):
            self.pos -= 1
            raise self.error(f"invalid number {tok!r}")
        value = float(tok)
        if not math.isfinite(value):
            self.pos -= 1
            raise self.error(f"number out of range {tok!r}")
        return value

    def done(self) -> bool:
        return self.pos >= len(self.items)

    def finish(self) -> None:
        if not self.done():
            raise self.error(f"unexpected {self.items[self.pos][0]!r}")


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def parse(text: str | bytes) -> ModelDocument:
    """Parse a model document; raises :class:`DSLError` on any problem."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            before = bytes(text)[: exc.start]
            line = before.count(b"\n") + 1
            col = exc.start - (before.rfind(b"\n") + 1) + 1
            raise DSLSyntaxError("invalid UTF-8", line, col) from None
    if text.startswith("\ufeff"):
        text = text[1:]

    variables: list[Variable] = []
    var_spans: dict[str, tuple[int, int]] = {}
    edges: list[Edge] = []
    edge_spans: dict[tuple[str, str], tuple[int, int]] = {}
    errvars: dict[str, float] = {}
    errvar_spans: dict[str, tuple[int, int]] = {}
    single: dict[str, str] = {}
    multi: dict[str, list[str]] = {k: [] for k in _MULTI_ROLES}
    role_spans: dict[tuple[str, str], tuple[int, int]] = {}

    def undeclared(name: str, line: int, col: int) -> None:
        if name not in var_spans:
            raise DSLSemanticError(f"undeclared variable {name!r}", line, col)

    for lineno, raw in enumerate(text.split("\n"), start=1):
        if raw.endswith("\r"):
            raw = raw[:-1]
        if "\r" in raw:
            raise DSLSyntaxError("stray carriage return", lineno, raw.index("\r") + 1)
        toks = _Tokens(_strip_comment(raw), lineno)
        if toks.done():
            continue
        directive, dcol = toks.take("a directive")

        if directive == "var":
            name, col = toks.name()
            flags: set[str] = set()
            while not toks.done():
                flag, fcol = toks.take("a flag")
                if flag not in ("latent", "unmeasured"):
                    raise DSLSyntaxError(f"unknown var flag {flag!r}", lineno, fcol)
                if flag in flags:
                    raise DSLSyntaxError(f"repeated flag {flag!r}", lineno, fcol)
                flags.add(flag)
            if name in var_spans:
                raise DSLSemanticError(f"duplicate variable {name!r}", lineno, col)
            latent = "latent" in flags
            variables.append(
                Variable(name, Kind.LATENT if latent else Kind.OBSERVED, measured=not flags)
            )
            var_spans[name] = (lineno, col)

        elif directive == "edge":
            src, scol = toks.name()
            toks.literal("->")
            dst, tcol = toks.name()
            coef = None
            if not toks.done():
                toks.literal("=")
                coef = toks.real()
            toks.finish()
            undeclared(src, lineno, scol)
            undeclared(dst, lineno, tcol)
            if src == dst:
                raise DSLSemanticError(f"self-loop on {src!r}", lineno, scol)
            if (src, dst) in edge_spans:
                raise DSLSemanticError(f"duplicate edge {src}->{dst}", lineno, scol)
            edges.append(Edge(src, dst, coef))
            edge_spans[(src, dst)] = (lineno, scol)

        elif directive == "errvar":
            name, col = toks.name()
            toks.literal("=")
            vcol = toks.col()
            value = toks.real()
            toks.finish()
            undeclared(name, lineno, col)
            if name in errvars:
                raise DSLSemanticError(f"duplicate errvar for {name!r}", lineno, col)
            if not value > 0:
                raise DSLSemanticError(f"nonpositive error variance for {name!r}", lineno, vcol)
            errvars[name] = value
            errvar_spans[name] = (lineno, col)

        elif directive == "role":
            kind, kcol = toks.take("a role kind")
            if kind in _SINGLE_ROLES:
                name, col = toks.name()
                toks.finish()
                undeclared(name, lineno, col)
                if kind in single:
                    raise DSLSemanticError(f"duplicate role {kind!r}", lineno, kcol)
                single[kind] = name
                role_spans[(kind, name)] = (lineno, col)
            elif kind in _MULTI_ROLES:
                if toks.done():
                    raise toks.error("expected a variable name")
                while not toks.done():
                    name, col = toks.name()
                    undeclared(name, lineno, col)
                    if name in multi[kind]:
                        raise DSLSemanticError(f"duplicate {kind} role for {name!r}", lineno, col)
                    multi[kind].append(name)
                    role_spans[(kind, name)] = (lineno, col)
            else:
                raise DSLSyntaxError(f"unknown role {kind!r}", lineno, kcol)
        else:
            raise DSLSyntaxError(f"unknown directive {directive!r}", lineno, dcol)

    model = PathModel(tuple(variables), tuple(edges), errvars)
    for problem in validate(model):
        line, col = _span_for(problem.element, var_spans, edge_spans)
        raise DSLSemanticError(problem.message, line, col)

    roles = None
    if single or any(multi.values()):
        for required in ("exposure", "outcome"):
            if required not in single:
                raise DSLSemanticError(f"roles given without an {required}", len(text.split("\n")), 1)
        roles = RoleAssignment(
            exposure=single["exposure"],
            outcome=single["outcome"],
            mediator=single.get("mediator"),
            covariates=frozenset(multi["covariate"]),
            unmeasured=frozenset(multi["unmeasured"]),
        )
        try:
            roles.check(model)
        except RolesError as exc:
            line, col = _role_span(str(exc), role_spans)
            raise DSLSemanticError(str(exc), line, col) from None

    spans = {f"var {k}": v for k, v in var_spans.items()}
    spans.update({f"edge {s}->{t}": v for (s, t), v in edge_spans.items()})
    spans.update({f"errvar {k}": v for k, v in errvar_spans.items()})
    spans.update({f"role {k} {n}": v for (k, n), v in role_spans.items()})
    return ModelDocument(model, roles, spans)


def _span_for(element, var_spans, edge_spans) -> tuple[int, int]:
    key = tuple(element.split("->", 1))
    if key in edge_spans:
        return edge_spans[key]
    return var_spans.get(element, (1, 1))


def _role_span(message: str, role_spans) -> tuple[int, int]:
    for (_, name), span in role_spans.items():
        if message.endswith(": " + name):
            return span
    return next(iter(role_spans.values()), (1, 1))


def _real(x: float) -> str:
    # repr gives the shortest string that round-trips.
    return repr(float(x))


def serialize(doc: ModelDocument | PathModel, roles: RoleAssignment | None = None) -> str:
    """Canonical text form of a document."""
    if isinstance(doc, ModelDocument):
        model, roles = doc.model, doc.roles
    else:
        model = doc
    lines: list[str] = []
    for v in model.variables:
        flags = " latent" if v.kind is Kind.LATENT else (" unmeasured" if not v.measured else "")
        lines.append(f"var {v.name}{flags}")
    for e in sorted(model.edges, key=lambda e: e.key):
        tail = "" if e.coefficient is None else f" = {_real(e.coefficient)}"
        lines.append(f"edge {e.source} -> {e.target}{tail}")
    for name in model.names:
        if name in model.error_variances:
            lines.append(f"errvar {name} = {_real(model.error_variances[name])}")
    if roles is not None:
        order = {n: i for i, n in enumerate(model.names)}
        lines.append(f"role exposure {roles.exposure}")
        if roles.mediator is not None:
            lines.append(f"role mediator {roles.mediator}")
        lines.append(f"role outcome {roles.outcome}")
        if roles.covariates:
            lines.append("role covariate " + " ".join(sorted(roles.covariates, key=order.get)))
        if roles.unmeasured:
            lines.append("role unmeasured " + " ".join(sorted(roles.unmeasured, key=order.get)))
    return "\n".join(lines) + "\n"


def load(path) -> ModelDocument:
    with open(path, "rb") as fh:
        return parse(fh.read())

