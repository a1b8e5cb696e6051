"""d-separation, backdoor and single-door checks, and the bias classifier.

Verdicts are derived from path analysis in the *true* graph, the one
that still contains the unmeasured confounder, while estimates are
assumed to come from the specification that omits it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

from .model import Edge, PathModel, Position, RoleAssignment, RolesError

__all__ = [
    "WitnessPath",
    "Connection",
    "Identification",
    "Verdict",
    "BiasReport",
    "d_connected",
    "backdoor_open",
    "edge_identified",
    "classify_bias",
    "biased_edges",
    "table1_template",
    "table1_grid",
    "TABLE1_POSITIONS",
]


@dataclass(frozen=True)
class WitnessPath:
    """A path in the skeleton of a DAG.

    ``forward[i]`` is True when the edge between ``nodes[i]`` and
    ``nodes[i + 1]`` points towards ``nodes[i + 1]``.
    """

    nodes: tuple[str, ...]
    forward: tuple[bool, ...]

    def __post_init__(self):
        if len(self.forward) != len(self.nodes) - 1:
            raise ValueError("a path with k nodes needs k - 1 arrows")

    @classmethod
    def parse(cls, text: str) -> "WitnessPath":
        """Inverse of ``str()``, e.g. ``WitnessPath.parse("A->M<-U->Y")``."""
        nodes, forward, buf, i = [], [], "", 0
        while i < len(text):
            if text.startswith("->", i) or text.startswith("<-", i):
                nodes.append(buf.strip())
                forward.append(text[i] == "-")
                buf, i = "", i + 2
            else:
                buf += text[i]
                i += 1
        nodes.append(buf.strip())
        return cls(tuple(nodes), tuple(forward))

    @property
    def source(self) -> str:
        return self.nodes[0]

    @property
    def sink(self) -> str:
        return self.nodes[-1]

    def annotations(self) -> list[str]:
        """'chain', 'fork' or 'collider' for each intermediate node."""
        out = []
        for i in range(1, len(self.nodes) - 1):
            into_from_left = self.forward[i - 1]
            into_from_right = not self.forward[i]
            if into_from_left and into_from_right:
                out.append("collider")
            elif not into_from_left and not into_from_right:
                out.append("fork")
            else:
                out.append("chain")
        return out

    def edges(self) -> list[tuple[str, str]]:
        return [
            (a, b) if fwd else (b, a)
            for a, b, fwd in zip(self.nodes, self.nodes[1:], self.forward)
        ]

    def is_open(self, model: PathModel, given: Iterable[str]) -> bool:
        """Replay the opening rules: True iff this is a simple, open path of ``model``."""
        z = frozenset(given)
        if len(set(self.nodes)) != len(self.nodes):
            return False
        if any(not model.has_edge(s, t) for s, t in self.edges()):
            return False
        for node, kind in zip(self.nodes[1:-1], self.annotations()):
            if kind == "collider":
                if node not in z and not (model.descendants(node) & z):
                    return False
            elif node in z:
                return False
        return True

    def __str__(self) -> str:
        out = self.nodes[0]
        for node, fwd in zip(self.nodes[1:], self.forward):
            out += ("->" if fwd else "<-") + node
        return out


class Connection(NamedTuple):
    connected: bool
    witness: WitnessPath | None = None

    def __bool__(self) -> bool:
        return self.connected


class Identification(NamedTuple):
    identified: bool
    witness: WitnessPath | None = None

    def __bool__(self) -> bool:
        return self.identified


def _check_query(model: PathModel, x: str, y: str, z: frozenset[str]) -> None:
    model.require(x, y, *sorted(z))
    if x == y:
        raise ValueError("endpoints must differ")
    if x in z or y in z:
        raise ValueError("endpoints may not be in the conditioning set")


def _reachable(model: PathModel, x: str, z: frozenset[str]) -> set[str]:
    """Nodes d-connected to ``x`` given ``z`` (Bayes-ball style reachability)."""
    opens_collider = set(z)
    for node in z:
        opens_collider |= model.ancestors(node)
    # direction: "up" = arrived from a child, "down" = arrived from a parent
    stack = [(x, "up")]
    visited: set[tuple[str, str]] = set()
    reached: set[str] = set()
    while stack:
        node, direction = stack.pop()
        if (node, direction) in visited:
            continue
        visited.add((node, direction))
        if node not in z:
            reached.add(node)
        if direction == "up" and node not in z:
            stack.extend((p, "up") for p in model.parents(node))
            stack.extend((c, "down") for c in model.children(node))
        elif direction == "down":
            if node not in z:
                stack.extend((c, "down") for c in model.children(node))
            if node in opens_collider:
                stack.extend((p, "up") for p in model.parents(node))
    reached.discard(x)
    return reached


def _neighbours(model: PathModel, node: str) -> list[tuple[str, bool]]:
    """(neighbour, edge points from node to neighbour) in declaration order."""
    rank = model._rank
    out = [(c, True) for c in model.children(node)] + [(p, False) for p in model.parents(node)]
    return sorted(out, key=lambda t: (rank[t[0]], not t[1]))


def _open_paths(
    model: PathModel,
    x: str,
    y: str,
    z: frozenset[str],
    max_edges: int,
    first_into_source: bool = False,
) -> Iterator[WitnessPath]:
    """Open simple paths from x to y with at most ``max_edges`` edges, by DFS with pruning."""
    nodes = [x]
    forward: list[bool] = []
    on_path = {x}

    def step_open(middle: str, came_forward: bool, leaving_forward: bool) -> bool:
        collider = came_forward and not leaving_forward
        if collider:
            return middle in z or bool(model.descendants(middle) & z)
        return middle not in z

    def extend() -> Iterator[WitnessPath]:
        here = nodes[-1]
        if here == y:
            yield WitnessPath(tuple(nodes), tuple(forward))
            return
        if len(forward) >= max_edges:
            return
        for nxt, fwd in _neighbours(model, here):
            if nxt in on_path:
                continue
            if len(nodes) == 1:
                if first_into_source and fwd:
                    continue
            elif not step_open(here, forward[-1], fwd):
                continue
            nodes.append(nxt)
            forward.append(fwd)
            on_path.add(nxt)
            yield from extend()
            on_path.discard(nxt)
            forward.pop()
            nodes.pop()

    yield from extend()


def _shortest_open_path(model, x, y, z, first_into_source=False) -> WitnessPath | None:
    for depth in range(1, len(model.names)):
        for path in _open_paths(model, x, y, z, depth, first_into_source):
            if len(path.forward) == depth:
                return path
    return None


def d_connected(model: PathModel, x: str, y: str, z: Iterable[str] = ()) -> Connection:
    """Whether ``x`` and ``y`` are d-connected given ``z``.

    When they are, the witness is a shortest open path, ties broken by
    declaration order.
    """
    z = frozenset(z)
    _check_query(model, x, y, z)
    if y not in _reachable(model, x, z):
        return Connection(False)
    witness = _shortest_open_path(model, x, y, z)
    assert witness is not None, "reachability and path search disagree"
    return Connection(True, witness)


def backdoor_open(model: PathModel, a: str, y: str, z: Iterable[str] = ()) -> Connection:
    """Whether an open path from ``a`` to ``y`` starts with an edge into ``a``."""
    z = frozenset(z)
    _check_query(model, a, y, z)
    witness = _shortest_open_path(model, a, y, z, first_into_source=True)
    return Connection(witness is not None, witness)


def _edge_key(e) -> tuple[str, str]:
    if isinstance(e, Edge):
        return e.key
    if isinstance(e, str):
        src, _, dst = e.partition("->")
        return (src.strip(), dst.strip())
    src, dst = e[:2]
    return (src, dst)


def edge_identified(model: PathModel, e, z: Iterable[str] = ()) -> Identification:
    """Single-door check for the coefficient of edge ``e`` given regressors ``z``.

    The edge need not be present in ``model``; testing an absent edge asks
    whether regressing its target on ``z`` and its source would give a
    consistent zero. ``z`` may not contain descendants of the target.
    """
    src, dst = _edge_key(e)
    z = frozenset(z)
    _check_query(model, src, dst, z)
    late = z & model.descendants(dst)
    if late:
        raise ValueError(f"conditioning set contains descendants of {dst}: {sorted(late)}")
    cut = model.without_edges([(src, dst)])
    conn = d_connected(cut, src, dst, z)
    return Identification(not conn.connected, conn.witness)


class Verdict(str, enum.Enum):
    BIASED = "biased"
    UNBIASED = "unbiased"

    @classmethod
    def of(cls, biased: bool) -> "Verdict":
        return cls.BIASED if biased else cls.UNBIASED


EFFECT_KINDS = ("total", "direct", "indirect")


@dataclass(frozen=True)
class BiasReport:
    total: Verdict
    direct: Verdict | None = None
    indirect: Verdict | None = None
    witnesses: dict[str, WitnessPath] = field(default_factory=dict)
    biased_edges: list[tuple[Edge, WitnessPath]] = field(default_factory=list)

    def verdict(self, kind: str) -> Verdict | None:
        return getattr(self, kind)

    def triple(self) -> tuple[Verdict | None, Verdict | None, Verdict | None]:
        return (self.total, self.direct, self.indirect)

    def to_dict(self) -> dict:
        out: dict = {}
        for kind in EFFECT_KINDS:
            v = self.verdict(kind)
            out[kind] = None if v is None else {
                "verdict": v.value,
                "witness": str(self.witnesses[kind]) if kind in self.witnesses else None,
            }
        out["biased_edges"] = [
            {"edge": str(e), "witness": str(w)} for e, w in self.biased_edges
        ]
        return out


def _effect_edges(roles: RoleAssignment) -> dict[tuple[str, str], str]:
    a, m, y = roles.exposure, roles.mediator, roles.outcome
    out = {(a, y): "A->Y"}
    if m is not None:
        out[(a, m)] = "A->M"
        out[(m, y)] = "M->Y"
    return out


def classify_bias(
    model: PathModel,
    roles: RoleAssignment,
    absent_edges: Iterable = (),
    effects: Iterable[str] = EFFECT_KINDS,
    with_edges: bool = True,
) -> BiasReport:
    """Which of the total, direct and indirect effect estimates are biased.

    ``absent_edges`` lists effect edges (any of exposure->outcome,
    exposure->mediator, mediator->outcome) known to be missing from the
    true graph while the fitted specification still estimates them.
    """
    model.check()
    roles.check(model)
    effects = tuple(effects)
    a, m, y = roles.exposure, roles.mediator, roles.outcome
    if m is None and set(effects) & {"direct", "indirect"}:
        raise RolesError("direct/indirect verdicts need a mediator role")

    allowed = _effect_edges(roles)
    absent = {_edge_key(e) for e in absent_edges}
    stray = absent - set(allowed)
    if stray:
        raise ValueError(f"absent edges must be effect edges, got {sorted(stray)}")
    truth = model.without_edges(absent)
    c = roles.covariates

    witnesses: dict[str, WitnessPath] = {}
    verdicts: dict[str, Verdict] = {}

    if "total" in effects:
        conn = backdoor_open(truth, a, y, c)
        verdicts["total"] = Verdict.of(conn.connected)
        if conn.witness:
            witnesses["total"] = conn.witness

    if "direct" in effects:
        ident = edge_identified(truth, (a, y), c | {m})
        verdicts["direct"] = Verdict.of(not ident)
        if ident.witness:
            witnesses["direct"] = ident.witness

    if "indirect" in effects:
        first = edge_identified(truth, (a, m), c)
        second = edge_identified(truth, (m, y), c | {a})
        b1, b2 = not first, not second
        zero1, zero2 = (a, m) in absent, (m, y) in absent
        unbiased = (not b1 and not b2) or (b1 and not b2 and zero2) or (b2 and not b1 and zero1)
        verdicts["indirect"] = Verdict.of(not unbiased)
        if not unbiased:
            witnesses["indirect"] = first.witness if b1 else second.witness

    edges = biased_edges(truth, roles) if with_edges else []
    return BiasReport(
        total=verdicts.get("total"),
        direct=verdicts.get("direct"),
        indirect=verdicts.get("indirect"),
        witnesses=witnesses,
        biased_edges=edges,
    )


def biased_edges(model: PathModel, roles: RoleAssignment | None = None) -> list[tuple[Edge, WitnessPath]]:
    """Edges of the confounder-free specification whose estimates are biased.

    Each measured edge X->W is estimated by regressing W on all of its
    measured parents; it fails when X and W stay d-connected through the
    hidden variables once that edge is cut.
    """
    model.check()
    hidden = roles.hidden(model) if roles is not None else frozenset(model.unmeasured_names)
    fitted = [e for e in model.edges if e.source not in hidden and e.target not in hidden]
    out = []
    for e in fitted:
        z = {p for p in model.parents(e.target) if p not in hidden and p != e.source}
        ident = edge_identified(model, e, z)
        if not ident:
            out.append((e, ident.witness))
    return out


TABLE1_POSITIONS = (
    Position.PRE_EXPOSURE,
    Position.EXPOSURE,
    Position.MEDIATOR,
    Position.OUTCOME,
    Position.POST_OUTCOME,
)

_REPEATABLE = {Position.PRE_EXPOSURE: ("C1", "C2"), Position.POST_OUTCOME: ("P1", "P2")}
_SINGLE = {Position.EXPOSURE: "A", Position.MEDIATOR: "M", Position.OUTCOME: "Y"}


def table1_template(left: Position, right: Position) -> tuple[PathModel, RoleAssignment] | None:
    """Canonical model with U pointing into one variable at each position.

    Two covariates and two post-outcome variables exist so that U can
    point into two distinct variables of the same position. Returns None
    for cells with no such pair (same single-variable position, or left
    after right).
    """
    i, j = TABLE1_POSITIONS.index(left), TABLE1_POSITIONS.index(right)
    if i > j or (i == j and left not in _REPEATABLE):
        return None
    if left in _REPEATABLE:
        first = _REPEATABLE[left][0]
    else:
        first = _SINGLE[left]
    if right in _REPEATABLE:
        second = _REPEATABLE[right][1 if i == j else 0]
    else:
        second = _SINGLE[right]

    edges = [
        ("C1", "A"), ("C1", "M"), ("C1", "Y"),
        ("C2", "A"), ("C2", "M"), ("C2", "Y"),
        ("A", "M"), ("A", "Y"), ("M", "Y"),
        ("Y", "P1"), ("Y", "P2"),
        ("U", first), ("U", second),
    ]
    model = PathModel.build(["U", "C1", "C2", "A", "M", "Y", "P1", "P2"], edges, unmeasured=["U"])
    roles = RoleAssignment("A", "Y", "M", covariates=frozenset({"C1", "C2"}), unmeasured=frozenset({"U"}))
    return model, roles


def table1_grid() -> dict[tuple[Position, Position], BiasReport | None]:
    """Bias verdicts for every (left, right) placement of U's two arrows."""
    grid = {}
    for left in TABLE1_POSITIONS:
        for right in TABLE1_POSITIONS:
            built = table1_template(left, right)
            grid[(left, right)] = None if built is None else classify_bias(*built, with_edges=False)
    return grid
