"""Offer and confirmation wave propagation.

The offer pass sweeps the network in topological order and accumulates the
exact coherent amplitude at every sink.  Each sink then answers with a
confirmation wave, the complex conjugate of what it received, which runs
back through the same elements using transposed blocks (reciprocity).  The
part that reaches the source is the echo; everything else ends on an
object's back face or an unfed splitter port and is recorded as aborted.

Path records are enumerated separately from the sweep and are capped per
terminal, so amplitudes never depend on the cap.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np

from .optics import (
    H,
    Detector,
    ObjectAbsorber,
    OpticalNetwork,
    PathRecord,
    PolarizedAmplitude,
    Source,
    Step,
    require_valid,
    scattering_matrix,
)

log = logging.getLogger(__name__)

DEFAULT_MAX_PATHS = 4096

__all__ = [
    "SinkOffer",
    "OfferResult",
    "AbortedComponent",
    "ConfirmationResult",
    "ObjectProbe",
    "Analysis",
    "NotNormalizedError",
    "propagate_offer",
    "propagate_confirmation",
    "probe_report",
    "analyze",
]


class NotNormalizedError(ValueError):
    pass


@dataclass(frozen=True)
class SinkOffer:
    sink: str
    amplitude: PolarizedAmplitude
    paths: tuple[PathRecord, ...]
    side: str | None = None  # "front" for objects
    truncated: bool = False

    @property
    def norm2(self) -> float:
        return self.amplitude.norm2


@dataclass(frozen=True)
class OfferResult:
    initial: PolarizedAmplitude
    sinks: Mapping[str, SinkOffer]

    def norm2(self, sink: str) -> float:
        return self.sinks[sink].norm2

    @property
    def total_norm2(self) -> float:
        return sum(s.norm2 for s in self.sinks.values())


@dataclass(frozen=True)
class AbortedComponent:
    terminal: str  # element id, or "elem.port" for an unfed in-port
    side: str  # "front" | "back" | "vacuum"
    amplitude: PolarizedAmplitude
    paths: tuple[PathRecord, ...]


@dataclass(frozen=True)
class ConfirmationResult:
    origin: str
    initial: PolarizedAmplitude
    echo: float
    source_amplitude: PolarizedAmplitude
    source_paths: tuple[PathRecord, ...]
    aborted: tuple[AbortedComponent, ...]
    truncated: bool = False

    @property
    def terminal_norm2(self) -> float:
        return self.source_amplitude.norm2 + sum(a.amplitude.norm2 for a in self.aborted)


@dataclass(frozen=True)
class ObjectProbe:
    object: str
    front: PolarizedAmplitude
    back: tuple[tuple[str, PolarizedAmplitude], ...]  # (origin sink, amplitude)


@dataclass(frozen=True)
class Analysis:
    network: OpticalNetwork
    offer: OfferResult
    confirmations: Mapping[str, ConfirmationResult]


# ---------------------------------------------------------------------------
# structural reachability, used only to prune path enumeration


def _support(vec: np.ndarray) -> tuple[bool, bool]:
    return bool(vec[0] != 0), bool(vec[1] != 0)


def _block_support(block: np.ndarray, sup: tuple[bool, bool]) -> tuple[bool, bool]:
    return tuple(bool(any(block[i, j] != 0 and sup[j] for j in range(2))) for i in range(2))


class _Graph:
    """Per-network lookups shared by the sweep and the path walkers."""

    def __init__(self, network: OpticalNetwork):
        require_valid(network)
        self.network = network
        self.kinds = network.kinds
        self.source = network.source
        self.transfers = {
            eid: scattering_matrix(k)
            for eid, k in self.kinds.items()
            if not (k.is_sink or isinstance(k, Source))
        }
        self.order = network.topological_order()
        self.outgoing = network.outgoing
        self.incoming = network.incoming

    @staticmethod
    def sink_action(kind) -> str:
        return "detect" if isinstance(kind, Detector) else "absorb"

    # forward: (element, in_port, support) -> sinks reachable with nonzero amplitude
    def forward_reach(self):
        @lru_cache(maxsize=None)
        def reach(eid: str, port: str, sup: tuple[bool, bool]) -> frozenset[str]:
            if not any(sup):
                return frozenset()
            kind = self.kinds[eid]
            if kind.is_sink:
                return frozenset([eid])
            tr = self.transfers[eid]
            acc: set[str] = set()
            for (pin, pout), block in tr.blocks.items():
                if pin != port:
                    continue
                link = self.outgoing[(eid, pout)]
                acc |= reach(link.dst, link.dst_port, _block_support(block, sup))
            return frozenset(acc)

        return reach

    def reverse_terminal(self, eid: str, port: str) -> tuple[str, str, str] | None:
        """Where a reverse component leaving ``eid.port`` (an in-port) ends, if it ends.

        Returns (terminal, side, action) or None when it enters another
        scattering element.
        """
        link = self.incoming.get((eid, port))
        if link is None:
            return f"{eid}.{port}", "vacuum", "absorb"
        up = self.kinds[link.src]
        if isinstance(up, Source):
            return link.src, "source", "emit"
        if isinstance(up, ObjectAbsorber):
            return link.src, "back", "absorb"
        return None

    # reverse: (element, out_port, support) -> terminals reachable
    def reverse_reach(self):
        @lru_cache(maxsize=None)
        def reach(eid: str, port: str, sup: tuple[bool, bool]) -> frozenset[str]:
            if not any(sup):
                return frozenset()
            tr = self.transfers[eid]
            acc: set[str] = set()
            for (pin, pout), block in tr.blocks.items():
                if pout != port:
                    continue
                s2 = _block_support(block.T, sup)
                if not any(s2):
                    continue
                term = self.reverse_terminal(eid, pin)
                if term is not None:
                    acc.add(term[0])
                else:
                    link = self.incoming[(eid, pin)]
                    acc |= reach(link.src, link.src_port, s2)
            return frozenset(acc)

        return reach


@lru_cache(maxsize=16)
def _graph(network: OpticalNetwork) -> _Graph:
    return _Graph(network)


# ---------------------------------------------------------------------------
# offer pass


def _offer_paths(g: _Graph, e0: np.ndarray, max_paths: int):
    counts: dict[str, list[PathRecord]] = defaultdict(list)
    truncated: set[str] = set()
    reach = g.forward_reach()
    first = g.outgoing[(g.source, "out")]
    stack = [(first.dst, first.dst_port, (Step(g.source, "emit"),), e0)]
    while stack:
        eid, port, steps, amp = stack.pop()
        kind = g.kinds[eid]
        if kind.is_sink:
            if len(counts[eid]) < max_paths:
                rec = PathRecord(
                    steps + (Step(eid, g.sink_action(kind)),), "offer", PolarizedAmplitude.from_array(amp)
                )
                counts[eid].append(rec)
            else:
                truncated.add(eid)
            continue
        targets = reach(eid, port, _support(amp))
        if all(len(counts[s]) >= max_paths for s in targets):
            truncated |= targets
            continue
        tr = g.transfers[eid]
        branches = []
        for (pin, pout), block in tr.blocks.items():
            if pin != port:
                continue
            nxt = block @ amp
            if not nxt.any():
                continue
            link = g.outgoing[(eid, pout)]
            branches.append((link.dst, link.dst_port, steps + (Step(eid, tr.actions[(pin, pout)]),), nxt))
        stack.extend(reversed(branches))
    return counts, truncated


def propagate_offer(
    network: OpticalNetwork,
    initial_polarization: PolarizedAmplitude = H,
    max_paths: int = DEFAULT_MAX_PATHS,
) -> OfferResult:
    """Push a unit-norm offer wave from the source to every sink.

    Raises:
        NotNormalizedError: if ``initial_polarization`` does not have unit norm.
        InvalidNetworkError: if the network fails validation.
    """
    if abs(initial_polarization.norm2 - 1.0) > 1e-9:
        raise NotNormalizedError(f"initial polarization has norm^2 {initial_polarization.norm2}")
    g = _graph(network)
    e0 = initial_polarization.to_array()

    arriving: dict[tuple[str, str], np.ndarray] = defaultdict(lambda: np.zeros(2, dtype=complex))
    first = g.outgoing[(g.source, "out")]
    arriving[(first.dst, first.dst_port)] = e0.copy()
    for eid in g.order:
        if eid not in g.transfers:
            continue
        tr = g.transfers[eid]
        inputs = {p: arriving[(eid, p)] for p in tr.in_ports if (eid, p) in arriving}
        for pout, vec in tr.apply(inputs).items():
            link = g.outgoing[(eid, pout)]
            arriving[(link.dst, link.dst_port)] = arriving[(link.dst, link.dst_port)] + vec

    paths, truncated = _offer_paths(g, e0, max_paths)
    sinks = {}
    for eid in network.sinks:
        kind = g.kinds[eid]
        port = kind.in_ports[0]
        vec = arriving.get((eid, port), np.zeros(2, dtype=complex))
        sinks[eid] = SinkOffer(
            sink=eid,
            amplitude=PolarizedAmplitude.from_array(vec),
            paths=tuple(paths.get(eid, ())),
            side="front" if isinstance(kind, ObjectAbsorber) else None,
            truncated=eid in truncated,
        )
    return OfferResult(initial_polarization, sinks)


# ---------------------------------------------------------------------------
# confirmation pass


def _confirmation_paths(g: _Graph, sink: str, c0: np.ndarray, max_paths: int):
    records: dict[str, list[PathRecord]] = defaultdict(list)
    truncated = False
    reach = g.reverse_reach()
    kind = g.kinds[sink]
    start = (Step(sink, g.sink_action(kind)),)
    stack = []

    def follow(eid, pin, steps, vec):
        nonlocal truncated
        term = g.reverse_terminal(eid, pin)
        if term is None:
            link = g.incoming[(eid, pin)]
            stack.append((link.src, link.src_port, steps, vec))
            return
        terminal, _, action = term
        if len(records[terminal]) < max_paths:
            records[terminal].append(
                PathRecord(steps + (Step(terminal, action),), "confirmation", PolarizedAmplitude.from_array(vec))
            )
        else:
            truncated = True

    follow(sink, kind.in_ports[0], start, c0)
    while stack:
        eid, port, steps, amp = stack.pop()
        targets = reach(eid, port, _support(amp))
        if all(len(records[t]) >= max_paths for t in targets):
            truncated = truncated or bool(targets)
            continue
        tr = g.transfers[eid]
        branches = []
        for (pin, pout), block in tr.blocks.items():
            if pout != port:
                continue
            nxt = block.T @ amp
            if not nxt.any():
                continue
            branches.append((pin, steps + (Step(eid, tr.actions[(pin, pout)]),), nxt))
        for pin, st, nxt in branches:
            follow(eid, pin, st, nxt)
    return records, truncated


def propagate_confirmation(
    network: OpticalNetwork,
    offer: OfferResult,
    sink: str,
    max_paths: int = DEFAULT_MAX_PATHS,
) -> ConfirmationResult:
    """Send the conjugate of ``sink``'s offer amplitude back toward the source.

    A sink that received no offer returns an empty result with zero echo.
    """
    g = _graph(network)
    received = offer.sinks[sink].amplitude
    if not received:
        return ConfirmationResult(sink, received, 0.0, PolarizedAmplitude(), (), ())
    c0 = received.conjugate().to_array()

    # reverse arrivals at out-ports
    at_out: dict[tuple[str, str], np.ndarray] = defaultdict(lambda: np.zeros(2, dtype=complex))
    terminals: dict[tuple[str, str], np.ndarray] = defaultdict(lambda: np.zeros(2, dtype=complex))

    def deposit(eid: str, pin: str, vec: np.ndarray) -> None:
        term = g.reverse_terminal(eid, pin)
        if term is None:
            link = g.incoming[(eid, pin)]
            at_out[(link.src, link.src_port)] = at_out[(link.src, link.src_port)] + vec
        else:
            terminals[(term[0], term[1])] = terminals[(term[0], term[1])] + vec

    deposit(sink, g.kinds[sink].in_ports[0], c0)
    for eid in reversed(g.order):
        if eid not in g.transfers:
            continue
        tr = g.transfers[eid]
        inputs = {p: at_out[(eid, p)] for p in tr.out_ports if (eid, p) in at_out}
        if not inputs:
            continue
        for pin, vec in tr.apply_reverse(inputs).items():
            deposit(eid, pin, vec)

    records, truncated = _confirmation_paths(g, sink, c0, max_paths)
    src_vec = terminals.pop((g.source, "source"), np.zeros(2, dtype=complex))
    # e^T a: bilinear projection onto the emitted polarization, equal to |psi|^2
    echo = complex(offer.initial.to_array() @ src_vec)
    if abs(echo.imag) > 1e-9:
        log.warning("echo at source has imaginary part %g", echo.imag)
    aborted = tuple(
        AbortedComponent(term, side, PolarizedAmplitude.from_array(vec), tuple(records.get(term, ())))
        for (term, side), vec in sorted(terminals.items())
    )
    return ConfirmationResult(
        origin=sink,
        initial=received.conjugate(),
        echo=echo.real,
        source_amplitude=PolarizedAmplitude.from_array(src_vec),
        source_paths=tuple(records.get(g.source, ())),
        aborted=aborted,
        truncated=truncated,
    )


def probe_report(
    network: OpticalNetwork,
    offer: OfferResult,
    confirmations: Mapping[str, ConfirmationResult],
) -> dict[str, ObjectProbe]:
    """Two-sided probe ledger: what each object sees from the front and the back."""
    out = {}
    for eid, kind in network.elements:
        if not isinstance(kind, ObjectAbsorber):
            continue
        back = tuple(
            (origin, a.amplitude)
            for origin, conf in sorted(confirmations.items())
            for a in conf.aborted
            if a.terminal == eid and a.side == "back"
        )
        out[eid] = ObjectProbe(eid, offer.sinks[eid].amplitude, back)
    return out


def analyze(
    network: OpticalNetwork,
    initial_polarization: PolarizedAmplitude = H,
    max_paths: int = DEFAULT_MAX_PATHS,
) -> Analysis:
    """Offer pass plus one confirmation pass per sink."""
    offer = propagate_offer(network, initial_polarization, max_paths)
    confirmations = {s: propagate_confirmation(network, offer, s, max_paths) for s in offer.sinks}
    return Analysis(network, offer, confirmations)
