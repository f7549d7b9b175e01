"""Optical elements, their scattering behaviour, and the port-graph apparatus.

Amplitudes are plain Python ``complex`` values; a polarized amplitude is an
(H, V) pair.  Every scattering element maps a 2-vector on each in-port to a
2-vector on each out-port through a 2x2 block, so a whole element is a
block matrix that is unitary on its occupied port space.
"""

from __future__ import annotations

import cmath
import graphlib
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "PolarizedAmplitude",
    "H",
    "V",
    "ElementKind",
    "Source",
    "Mirror",
    "BeamSplitter",
    "PolarizingBeamSplitter",
    "PolarizationRotator",
    "ObjectAbsorber",
    "Detector",
    "VacuumPort",
    "Transfer",
    "scattering_matrix",
    "Link",
    "OpticalNetwork",
    "Violation",
    "validate",
    "Step",
    "PathRecord",
    "render_dirac",
    "UnsupportedElementError",
    "InvalidNetworkError",
    "InvalidPathError",
]


class UnsupportedElementError(TypeError):
    """Raised when a scattering description is requested for a terminal element."""


class InvalidPathError(ValueError):
    pass


class InvalidNetworkError(ValueError):
    """Raised when a network fails validation; carries the violation list."""

    def __init__(self, violations: Sequence["Violation"]):
        self.violations = tuple(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


# ---------------------------------------------------------------------------
# amplitudes


@dataclass(frozen=True)
class PolarizedAmplitude:
    """Complex amplitude pair on the (H, V) polarization basis."""

    h: complex = 0j
    v: complex = 0j

    def __post_init__(self):
        h, v = complex(self.h), complex(self.v)
        if not (cmath.isfinite(h) and cmath.isfinite(v)):
            raise ValueError(f"non-finite amplitude ({h}, {v})")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "v", v)

    @classmethod
    def from_array(cls, arr) -> "PolarizedAmplitude":
        return cls(complex(arr[0]), complex(arr[1]))

    def to_array(self) -> np.ndarray:
        return np.array([self.h, self.v], dtype=complex)

    @property
    def norm2(self) -> float:
        return abs(self.h) ** 2 + abs(self.v) ** 2

    def conjugate(self) -> "PolarizedAmplitude":
        return PolarizedAmplitude(self.h.conjugate(), self.v.conjugate())

    def __add__(self, other: "PolarizedAmplitude") -> "PolarizedAmplitude":
        return PolarizedAmplitude(self.h + other.h, self.v + other.v)

    def __bool__(self) -> bool:
        return bool(self.h) or bool(self.v)


H = PolarizedAmplitude(1, 0)
V = PolarizedAmplitude(0, 1)


# ---------------------------------------------------------------------------
# element kinds


@dataclass(frozen=True)
class ElementKind:
    """Base class for the fixed set of element kinds.

    Port names are class-level constants, so an element with a wrong port
    set cannot be constructed.  ``back_ports`` are in-ports that never
    receive forward waves; they may only appear as the *origin* of a link
    and terminate components travelling in reverse.
    """

    keyword: ClassVar[str] = ""
    in_ports: ClassVar[tuple[str, ...]] = ()
    out_ports: ClassVar[tuple[str, ...]] = ()
    back_ports: ClassVar[tuple[str, ...]] = ()
    is_sink: ClassVar[bool] = False

    @property
    def ports(self) -> tuple[str, ...]:
        return self.in_ports + self.back_ports + self.out_ports

    def params(self) -> tuple[str, ...]:
        """DSL parameter tokens describing this element."""
        return ()


@dataclass(frozen=True)
class Source(ElementKind):
    keyword: ClassVar[str] = "source"
    out_ports: ClassVar[tuple[str, ...]] = ("out",)


@dataclass(frozen=True)
class Mirror(ElementKind):
    keyword: ClassVar[str] = "mirror"
    in_ports: ClassVar[tuple[str, ...]] = ("in",)
    out_ports: ClassVar[tuple[str, ...]] = ("out",)


@dataclass(frozen=True)
class BeamSplitter(ElementKind):
    keyword: ClassVar[str] = "bs"
    in_ports: ClassVar[tuple[str, ...]] = ("in0", "in1")
    out_ports: ClassVar[tuple[str, ...]] = ("out0", "out1")


@dataclass(frozen=True)
class PolarizingBeamSplitter(ElementKind):
    """Transmits H, reflects V.

    ``adjoint=True`` gives the conjugate-transpose element (reflection phase
    -i), used as the recombiner so that split-then-recombine is the identity.
    """

    keyword: ClassVar[str] = "pbs"
    in_ports: ClassVar[tuple[str, ...]] = ("in0", "in1")
    out_ports: ClassVar[tuple[str, ...]] = ("out0", "out1")
    adjoint: bool = False

    def params(self) -> tuple[str, ...]:
        return ("adjoint",) if self.adjoint else ()


@dataclass(frozen=True)
class PolarizationRotator(ElementKind):
    keyword: ClassVar[str] = "rot"
    in_ports: ClassVar[tuple[str, ...]] = ("in",)
    out_ports: ClassVar[tuple[str, ...]] = ("out",)
    theta: float = 0.0

    def __post_init__(self):
        theta = float(self.theta)
        if not math.isfinite(theta):
            raise ValueError(f"rotator angle must be finite, got {self.theta!r}")
        object.__setattr__(self, "theta", theta)

    def params(self) -> tuple[str, ...]:
        return (f"theta={self.theta!r}",)


@dataclass(frozen=True)
class ObjectAbsorber(ElementKind):
    keyword: ClassVar[str] = "object"
    in_ports: ClassVar[tuple[str, ...]] = ("in_front",)
    back_ports: ClassVar[tuple[str, ...]] = ("in_back",)
    is_sink: ClassVar[bool] = True


@dataclass(frozen=True)
class Detector(ElementKind):
    keyword: ClassVar[str] = "detector"
    in_ports: ClassVar[tuple[str, ...]] = ("in",)
    is_sink: ClassVar[bool] = True


@dataclass(frozen=True)
class VacuumPort(ElementKind):
    keyword: ClassVar[str] = "vacuum"
    in_ports: ClassVar[tuple[str, ...]] = ("in",)
    is_sink: ClassVar[bool] = True


KINDS: dict[str, type[ElementKind]] = {
    cls.keyword: cls
    for cls in (
        Source,
        Mirror,
        BeamSplitter,
        PolarizingBeamSplitter,
        PolarizationRotator,
        ObjectAbsorber,
        Detector,
        VacuumPort,
    )
}


# ---------------------------------------------------------------------------
# scattering


@dataclass(frozen=True)
class Transfer:
    """Per-port-pair 2x2 polarization blocks of one element.

    ``blocks[(in_port, out_port)]`` maps an incoming (H, V) column vector to
    the outgoing one; ``actions`` tags each pair as transmit/reflect/rotate.
    Port pairs that never couple are absent.
    """

    in_ports: tuple[str, ...]
    out_ports: tuple[str, ...]
    blocks: Mapping[tuple[str, str], np.ndarray]
    actions: Mapping[tuple[str, str], str]

    def matrix(self) -> np.ndarray:
        """Full matrix with rows (out_port, pol) and columns (in_port, pol)."""
        m = np.zeros((2 * len(self.out_ports), 2 * len(self.in_ports)), dtype=complex)
        for (pin, pout), block in self.blocks.items():
            i, o = self.in_ports.index(pin), self.out_ports.index(pout)
            m[2 * o : 2 * o + 2, 2 * i : 2 * i + 2] = block
        return m

    def apply(self, inputs: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
        out = {p: np.zeros(2, dtype=complex) for p in self.out_ports}
        for (pin, pout), block in self.blocks.items():
            if pin in inputs:
                out[pout] = out[pout] + block @ inputs[pin]
        return out

    def apply_reverse(self, inputs: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
        """Reverse traversal by reciprocity: transpose, not conjugate-transpose."""
        out = {p: np.zeros(2, dtype=complex) for p in self.in_ports}
        for (pin, pout), block in self.blocks.items():
            if pout in inputs:
                out[pin] = out[pin] + block.T @ inputs[pout]
        return out


_I2 = np.eye(2, dtype=complex)
_PH = np.diag([1, 0]).astype(complex)
_PV = np.diag([0, 1]).astype(complex)


def scattering_matrix(kind: ElementKind) -> Transfer:
    """Return the transfer description of a scattering element.

    Reflections carry a 90 degree phase (factor i) relative to transmission.

    Raises:
        UnsupportedElementError: for sources, sinks, and vacuum ports.
    """
    if isinstance(kind, Mirror):
        blocks = {("in", "out"): 1j * _I2}
        actions = {("in", "out"): "reflect"}
    elif isinstance(kind, BeamSplitter):
        t, r = 1 / math.sqrt(2), 1j / math.sqrt(2)
        blocks = {
            ("in0", "out0"): t * _I2,
            ("in0", "out1"): r * _I2,
            ("in1", "out1"): t * _I2,
            ("in1", "out0"): r * _I2,
        }
        actions = {
            ("in0", "out0"): "transmit",
            ("in0", "out1"): "reflect",
            ("in1", "out1"): "transmit",
            ("in1", "out0"): "reflect",
        }
    elif isinstance(kind, PolarizingBeamSplitter):
        r = -1j if kind.adjoint else 1j
        blocks = {
            ("in0", "out0"): _PH.copy(),
            ("in0", "out1"): r * _PV,
            ("in1", "out1"): _PH.copy(),
            ("in1", "out0"): r * _PV,
        }
        actions = {
            ("in0", "out0"): "transmit",
            ("in0", "out1"): "reflect",
            ("in1", "out1"): "transmit",
            ("in1", "out0"): "reflect",
        }
    elif isinstance(kind, PolarizationRotator):
        c, s = math.cos(kind.theta), math.sin(kind.theta)
        blocks = {("in", "out"): np.array([[c, -s], [s, c]], dtype=complex)}
        actions = {("in", "out"): "rotate"}
    else:
        raise UnsupportedElementError(f"{type(kind).__name__} has no scattering description")
    for b in blocks.values():
        b.setflags(write=False)
    return Transfer(kind.in_ports, kind.out_ports, blocks, actions)


# ---------------------------------------------------------------------------
# network


@dataclass(frozen=True, order=True)
class Link:
    src: str
    src_port: str
    dst: str
    dst_port: str

    def __str__(self) -> str:
        return f"{self.src}.{self.src_port}->{self.dst}.{self.dst_port}"


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    ids: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


@dataclass(frozen=True)
class OpticalNetwork:
    """Directed port graph of optical elements.

    ``elements`` may be given as a mapping or as (id, kind) pairs; it is
    stored as an id-sorted tuple so that duplicate ids survive to
    :func:`validate`.  Equality is structural.
    """

    elements: tuple[tuple[str, ElementKind], ...]
    links: frozenset[Link] = field(default_factory=frozenset)

    def __post_init__(self):
        elements = self.elements
        if isinstance(elements, Mapping):
            elements = elements.items()
        object.__setattr__(
            self, "elements", tuple(sorted(((str(k), v) for k, v in elements), key=lambda p: p[0]))
        )
        object.__setattr__(self, "links", frozenset(self.links))

    @cached_property
    def kinds(self) -> dict[str, ElementKind]:
        return dict(self.elements)

    @property
    def source(self) -> str:
        sources = [eid for eid, k in self.elements if isinstance(k, Source)]
        if len(sources) != 1:
            raise InvalidNetworkError(validate(self))
        return sources[0]

    @property
    def sinks(self) -> list[str]:
        return [eid for eid, k in self.elements if k.is_sink]

    @cached_property
    def outgoing(self) -> dict[tuple[str, str], Link]:
        return {(l.src, l.src_port): l for l in sorted(self.links)}

    @cached_property
    def incoming(self) -> dict[tuple[str, str], Link]:
        return {(l.dst, l.dst_port): l for l in sorted(self.links)}

    def topological_order(self) -> list[str]:
        """Element ids in a deterministic topological order."""
        ts = graphlib.TopologicalSorter({eid: set() for eid in self.kinds})
        for l in self.links:
            ts.add(l.dst, l.src)
        ts.prepare()
        order: list[str] = []
        while ts.is_active():
            ready = sorted(ts.get_ready())
            order.extend(ready)
            ts.done(*ready)
        return order


def _find_cycle(network: OpticalNetwork) -> list[str] | None:
    graph: dict[str, set[str]] = {eid: set() for eid, _ in network.elements}
    for l in network.links:
        if l.src in graph and l.dst in graph:
            graph[l.dst].add(l.src)
    try:
        graphlib.TopologicalSorter(graph).prepare()
    except graphlib.CycleError as exc:
        return list(exc.args[1])
    return None


def validate(network: OpticalNetwork) -> list[Violation]:
    """Check every network invariant; return the violations found (empty if valid)."""
    out: list[Violation] = []
    counts = Counter(eid for eid, _ in network.elements)
    for eid, n in sorted(counts.items()):
        if n > 1:
            out.append(Violation("duplicate-id", f"element {eid!r} declared {n} times", (eid,)))
    kinds = network.kinds

    sources = sorted(eid for eid, k in network.elements if isinstance(k, Source))
    if not sources:
        out.append(Violation("no-source", "network has no source"))
    elif len(sources) > 1:
        out.append(Violation("multiple-sources", f"sources {', '.join(sources)}", tuple(sources)))

    by_src: dict[tuple[str, str], list[Link]] = defaultdict(list)
    by_dst: dict[tuple[str, str], list[Link]] = defaultdict(list)
    for link in sorted(network.links):
        ok = True
        for eid in (link.src, link.dst):
            if eid not in kinds:
                out.append(Violation("unknown-element", f"link {link} references {eid!r}", (eid,)))
                ok = False
        if not ok:
            continue
        sk, dk = kinds[link.src], kinds[link.dst]
        if link.src_port not in sk.ports:
            out.append(Violation("unknown-port", f"{link.src} has no port {link.src_port!r}", (link.src,)))
            ok = False
        elif link.src_port not in sk.out_ports + sk.back_ports:
            out.append(Violation("bad-direction", f"link {link} leaves an in-port", (link.src,)))
            ok = False
        if link.dst_port not in dk.ports:
            out.append(Violation("unknown-port", f"{link.dst} has no port {link.dst_port!r}", (link.dst,)))
            ok = False
        elif link.dst_port not in dk.in_ports:
            out.append(Violation("bad-direction", f"link {link} enters an out-port", (link.dst,)))
            ok = False
        if ok:
            by_src[(link.src, link.src_port)].append(link)
            by_dst[(link.dst, link.dst_port)].append(link)

    for eid, kind in kinds.items():
        for port in kind.out_ports:
            n = len(by_src.get((eid, port), ()))
            if n == 0:
                out.append(Violation("unlinked-out-port", f"{eid}.{port} has no outgoing link", (eid,)))
    for (eid, port), links in sorted(by_src.items()):
        if len(links) > 1:
            out.append(Violation("multiple-links", f"{eid}.{port} has {len(links)} outgoing links", (eid,)))
    for (eid, port), links in sorted(by_dst.items()):
        if len(links) > 1:
            out.append(Violation("multiple-links", f"{eid}.{port} has {len(links)} incoming links", (eid,)))

    cycle = _find_cycle(network)
    if cycle:
        out.append(Violation("cycle", f"loop through {' -> '.join(cycle)}", tuple(dict.fromkeys(cycle))))
    return out


def require_valid(network: OpticalNetwork) -> None:
    violations = validate(network)
    if violations:
        raise InvalidNetworkError(violations)


# ---------------------------------------------------------------------------
# paths

ACTIONS = frozenset({"emit", "transmit", "reflect", "rotate", "absorb", "detect"})


@dataclass(frozen=True)
class Step:
    element: str
    action: str

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise ValueError(f"unknown action {self.action!r}")


@dataclass(frozen=True)
class PathRecord:
    """One element-visit history of an offer or confirmation wave component."""

    steps: tuple[Step, ...]
    direction: str  # "offer" | "confirmation"
    amplitude: PolarizedAmplitude = PolarizedAmplitude()

    def __post_init__(self):
        if self.direction not in ("offer", "confirmation"):
            raise ValueError(f"direction must be offer or confirmation, got {self.direction!r}")
        object.__setattr__(self, "steps", tuple(self.steps))

    @property
    def terminal(self) -> str:
        return self.steps[-1].element


def _check_path(path: PathRecord) -> None:
    steps = path.steps
    if len(steps) < 2:
        raise InvalidPathError(f"path needs at least two steps, got {len(steps)}")
    first, last = steps[0].action, steps[-1].action
    if path.direction == "offer":
        ok = first == "emit" and last in ("detect", "absorb")
    else:
        ok = first in ("detect", "absorb") and last in ("emit", "absorb")
    if not ok:
        raise InvalidPathError(f"{path.direction} path cannot run {first} ... {last}")


def render_dirac(path: PathRecord) -> str:
    """Render a path as ``|L-[S1]-[A]-S2-D1>`` (offer) or ``<D1-S2-L|`` (confirmation).

    Reflecting elements are bracketed.
    """
    _check_path(path)
    body = "-".join(f"[{s.element}]" if s.action == "reflect" else s.element for s in path.steps)
    return f"|{body}>" if path.direction == "offer" else f"<{body}|"


def links_from(specs: Iterable[str]) -> list[Link]:
    """Build links from ``"A.out->B.in"`` strings (construction helper)."""
    out = []
    for spec in specs:
        left, right = spec.split("->")
        s, sp = left.strip().split(".")
        d, dp = right.strip().split(".")
        out.append(Link(s, sp, d, dp))
    return out
