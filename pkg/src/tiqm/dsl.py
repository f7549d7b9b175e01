"""Line-oriented scenario files.

::

    # Mach-Zehnder with one arm blocked
    node L source
    node S1 bs
    node R1 rot theta=0.314159265358979
    node C1 pbs adjoint
    link L.out->S1.in0

One declaration per line; ``#`` starts a comment.  Errors are collected for
the whole file and raised together, each with its 1-based line number.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

from .optics import (
    KINDS,
    ElementKind,
    Link,
    OpticalNetwork,
    PolarizationRotator,
    PolarizingBeamSplitter,
    validate,
)

__all__ = [
    "NodeDecl",
    "LinkDecl",
    "ScenarioSource",
    "ParseError",
    "ScenarioSyntaxError",
    "ScenarioSemanticError",
    "parse",
    "parse_file",
    "to_network",
    "serialize",
]

_ID = r"[A-Za-z_][A-Za-z0-9_]*"
_ID_RE = re.compile(rf"^{_ID}$")
_LINK_RE = re.compile(rf"^({_ID})\.(\S+?)\s*->\s*({_ID})\.(\S+)$")
_DECIMAL_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
PORTS = frozenset({"out", "in", "in0", "in1", "out0", "out1", "in_front", "in_back"})


@dataclass(frozen=True)
class NodeDecl:
    line: int
    id: str
    kind: ElementKind


@dataclass(frozen=True)
class LinkDecl:
    line: int
    link: Link


@dataclass(frozen=True)
class ScenarioSource:
    name: str
    declarations: tuple[NodeDecl | LinkDecl, ...]
    origin: str = "<inline>"

    @property
    def nodes(self) -> list[NodeDecl]:
        return [d for d in self.declarations if isinstance(d, NodeDecl)]

    @property
    def links(self) -> list[LinkDecl]:
        return [d for d in self.declarations if isinstance(d, LinkDecl)]


@dataclass(frozen=True)
class ParseError:
    line: int
    code: str  # unknown-kind | bad-arity | duplicate-id | unknown-id | unknown-port | malformed-token | empty-scenario
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.code}: {self.message}"


class ScenarioSyntaxError(ValueError):
    def __init__(self, errors, origin: str = "<inline>"):
        self.errors = tuple(errors)
        self.origin = origin
        super().__init__("\n".join(f"{origin}:{e}" for e in self.errors))


class ScenarioSemanticError(ValueError):
    """The declarations parse but do not form a valid network."""

    def __init__(self, violations):
        self.violations = tuple(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


def _parse_node(lineno: int, tokens: list[str], errors: list[ParseError]) -> NodeDecl | None:
    if len(tokens) < 3:
        errors.append(ParseError(lineno, "malformed-token", "expected 'node ID KIND'"))
        return None
    _, eid, keyword, *params = tokens
    if not _ID_RE.match(eid):
        errors.append(ParseError(lineno, "malformed-token", f"bad element id {eid!r}"))
        return None
    cls = KINDS.get(keyword)
    if cls is None:
        errors.append(ParseError(lineno, "unknown-kind", f"unknown element kind {keyword!r}"))
        return None

    if cls is PolarizationRotator:
        thetas = [p for p in params if p.startswith("theta=")]
        extra = [p for p in params if not p.startswith("theta=")]
        if extra:
            errors.append(ParseError(lineno, "malformed-token", f"unexpected token {extra[0]!r}"))
            return None
        if len(thetas) != 1:
            errors.append(ParseError(lineno, "bad-arity", "rot needs exactly one theta=DECIMAL"))
            return None
        value = thetas[0][len("theta=") :]
        if not _DECIMAL_RE.match(value):
            errors.append(ParseError(lineno, "malformed-token", f"theta must be a decimal, got {value!r}"))
            return None
        theta = float(value)
        if not math.isfinite(theta):
            errors.append(ParseError(lineno, "malformed-token", f"theta out of range: {value!r}"))
            return None
        return NodeDecl(lineno, eid, PolarizationRotator(theta))

    if cls is PolarizingBeamSplitter and params == ["adjoint"]:
        return NodeDecl(lineno, eid, PolarizingBeamSplitter(adjoint=True))
    if params:
        p = params[0]
        if p.startswith("theta="):
            errors.append(ParseError(lineno, "bad-arity", f"{keyword} takes no theta"))
        else:
            errors.append(ParseError(lineno, "malformed-token", f"unexpected token {p!r}"))
        return None
    return NodeDecl(lineno, eid, cls())


def _parse_link(lineno: int, rest: str, errors: list[ParseError]) -> LinkDecl | None:
    m = _LINK_RE.match(rest.strip())
    if not m:
        errors.append(ParseError(lineno, "malformed-token", "expected 'link ID.PORT->ID.PORT'"))
        return None
    src, sp, dst, dp = m.groups()
    for port in (sp, dp):
        if port not in PORTS:
            errors.append(ParseError(lineno, "unknown-port", f"unknown port name {port!r}"))
            return None
    return LinkDecl(lineno, Link(src, sp, dst, dp))


def _check_links(nodes: dict[str, NodeDecl], links: list[LinkDecl], errors: list[ParseError]) -> None:
    used_src: dict[tuple[str, str], int] = {}
    used_dst: dict[tuple[str, str], int] = {}
    for decl in links:
        l = decl.link
        bad = False
        for eid in (l.src, l.dst):
            if eid not in nodes:
                errors.append(ParseError(decl.line, "unknown-id", f"undeclared element {eid!r}"))
                bad = True
        if bad:
            continue
        sk, dk = nodes[l.src].kind, nodes[l.dst].kind
        if l.src_port not in sk.out_ports + sk.back_ports:
            errors.append(ParseError(decl.line, "unknown-port", f"{sk.keyword} {l.src} has no output {l.src_port!r}"))
            continue
        if l.dst_port not in dk.in_ports:
            errors.append(ParseError(decl.line, "unknown-port", f"{dk.keyword} {l.dst} has no input {l.dst_port!r}"))
            continue
        for used, key, what in ((used_src, (l.src, l.src_port), "output"), (used_dst, (l.dst, l.dst_port), "input")):
            if key in used:
                errors.append(
                    ParseError(decl.line, "bad-arity", f"{what} {key[0]}.{key[1]} already linked on line {used[key]}")
                )
            else:
                used[key] = decl.line


def parse(text: str, origin: str = "<inline>", name: str | None = None) -> ScenarioSource:
    """Parse scenario text.

    Raises:
        ScenarioSyntaxError: carrying every error found; nothing is returned
            unless the whole file is well formed.
    """
    errors: list[ParseError] = []
    decls: list[NodeDecl | LinkDecl] = []
    nodes: dict[str, NodeDecl] = {}
    lines = text.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0]
        if head == "node":
            decl = _parse_node(lineno, tokens, errors)
            if decl is None:
                continue
            if decl.id in nodes:
                errors.append(
                    ParseError(lineno, "duplicate-id", f"{decl.id!r} already declared on line {nodes[decl.id].line}")
                )
                continue
            nodes[decl.id] = decl
            decls.append(decl)
        elif head == "link":
            decl = _parse_link(lineno, line[len("link") :], errors)
            if decl is not None:
                decls.append(decl)
        else:
            errors.append(ParseError(lineno, "malformed-token", f"expected 'node' or 'link', got {head!r}"))
    if not decls and not errors:
        errors.append(ParseError(max(len(lines), 1), "empty-scenario", "no declarations"))
    _check_links(nodes, [d for d in decls if isinstance(d, LinkDecl)], errors)
    if errors:
        raise ScenarioSyntaxError(sorted(errors, key=lambda e: e.line), origin)
    if name is None:
        name = Path(origin).stem if origin != "<inline>" else "inline"
    return ScenarioSource(name, tuple(decls), origin)


def parse_file(path: str | Path) -> ScenarioSource:
    path = Path(path)
    return parse(path.read_text(encoding="utf-8"), origin=str(path))


def to_network(src: ScenarioSource) -> OpticalNetwork:
    net = OpticalNetwork([(d.id, d.kind) for d in src.nodes], [d.link for d in src.links])
    violations = validate(net)
    if violations:
        raise ScenarioSemanticError(violations)
    return net


def serialize(network: OpticalNetwork, name: str | None = None) -> str:
    """Scenario text for ``network``, nodes then links, each sorted by id."""
    out = []
    if name:
        out.append(f"# scenario: {name}")
    for eid, kind in network.elements:
        out.append(" ".join(["node", eid, kind.keyword, *kind.params()]))
    for link in sorted(network.links):
        out.append(f"link {link}")
    return "\n".join(out) + "\n"
