"""Built-in apparatuses and closed-form results for both measurement schemes."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from .optics import (
    BeamSplitter,
    Detector,
    Link,
    Mirror,
    ObjectAbsorber,
    OpticalNetwork,
    PolarizationRotator,
    PolarizingBeamSplitter,
    Source,
    VacuumPort,
    links_from,
    require_valid,
)
from .waves import analyze

__all__ = [
    "build_ev",
    "build_zeno",
    "ZenoAnalytics",
    "zeno_analytics",
    "ZenoComparison",
    "zeno_engine_vs_analytic",
    "sweep_csv",
]


def build_ev(blocked: bool = False) -> OpticalNetwork:
    """Mach-Zehnder interferometer, optionally with an absorber after mirror A.

    S1 reflects into arm A and transmits into arm B.  Arm A enters S2 at
    ``in0`` and arm B at ``in1``, so both paths to D1 carry two reflections
    and D1 is the bright port.  When blocked, the object's back face sits
    against ``S2.in0`` so reverse waves leaving that port end on it.
    """
    elements = {
        "L": Source(),
        "S1": BeamSplitter(),
        "A": Mirror(),
        "B": Mirror(),
        "S2": BeamSplitter(),
        "D1": Detector(),
        "D2": Detector(),
    }
    specs = [
        "L.out->S1.in0",
        "S1.out1->A.in",
        "S1.out0->B.in",
        "B.out->S2.in1",
        "S2.out0->D1.in",
        "S2.out1->D2.in",
    ]
    if blocked:
        elements["Obj"] = ObjectAbsorber()
        specs += ["A.out->Obj.in_front", "Obj.in_back->S2.in0"]
    else:
        specs.append("A.out->S2.in0")
    net = OpticalNetwork(elements, links_from(specs))
    require_valid(net)
    return net


def build_zeno(n: int, blocked: bool = False) -> OpticalNetwork:
    """Unfolded racetrack with ``n`` rotate/split/recombine cycles.

    Cycle ``m`` is ``R{m}`` (rotation by pi/2n), splitter ``S1_{m}``, and the
    adjoint recombiner ``S2_{m}``, whose unused output dumps into ``V{m}``.
    With ``blocked`` the V arm ends on ``Obj{m}``.  The last recombiner feeds
    analyzer ``S3`` with outputs ``DH`` and ``DV``.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"need at least one cycle, got n={n!r}")
    n = int(n)
    theta = math.pi / (2 * n)
    elements: dict = {"L": Source(), "S3": PolarizingBeamSplitter(), "DH": Detector(), "DV": Detector()}
    links: list[Link] = []
    prev = ("L", "out")
    for m in range(1, n + 1):
        r, s1, s2, dump = f"R{m}", f"S1_{m}", f"S2_{m}", f"V{m}"
        elements[r] = PolarizationRotator(theta)
        elements[s1] = PolarizingBeamSplitter()
        elements[s2] = PolarizingBeamSplitter(adjoint=True)
        elements[dump] = VacuumPort()
        links += [
            Link(*prev, r, "in"),
            Link(r, "out", s1, "in0"),
            Link(s1, "out0", s2, "in0"),
            Link(s2, "out1", dump, "in"),
        ]
        if blocked:
            obj = f"Obj{m}"
            elements[obj] = ObjectAbsorber()
            links += [Link(s1, "out1", obj, "in_front"), Link(obj, "in_back", s2, "in1")]
        else:
            links.append(Link(s1, "out1", s2, "in1"))
        prev = (s2, "out0")
    links += [Link(*prev, "S3", "in0"), Link("S3", "out0", "DH", "in"), Link("S3", "out1", "DV", "in")]
    net = OpticalNetwork(elements, links)
    require_valid(net)
    return net


@dataclass(frozen=True)
class ZenoAnalytics:
    n_cycles: int
    theta: float
    p_h_per_cycle: float
    p_detect: float
    p_remove: float
    per_split_interaction: tuple[float, ...]  # index 0 is the first split
    p_detect_approx: float
    p_remove_approx: float


def zeno_analytics(n: int) -> ZenoAnalytics:
    if n < 1:
        raise ValueError(f"need at least one cycle, got n={n!r}")
    theta = math.pi / (2 * n)
    c2 = math.cos(theta) ** 2
    s2 = math.sin(theta) ** 2
    p_detect = c2**n
    leading = (math.pi / 2) ** 2 / n
    return ZenoAnalytics(
        n_cycles=n,
        theta=theta,
        p_h_per_cycle=c2,
        p_detect=p_detect,
        p_remove=1.0 - p_detect,
        per_split_interaction=tuple(c2 ** (m - 1) * s2 for m in range(1, n + 1)),
        p_detect_approx=1.0 - leading,
        p_remove_approx=leading,
    )


@dataclass(frozen=True)
class ZenoComparison:
    n_cycles: int
    detect_engine: float
    detect_analytic: float
    per_split_engine: tuple[float, ...]
    per_split_analytic: tuple[float, ...]

    @property
    def deltas(self) -> tuple[float, ...]:
        return (self.detect_engine - self.detect_analytic,) + tuple(
            e - a for e, a in zip(self.per_split_engine, self.per_split_analytic)
        )

    @property
    def max_delta(self) -> float:
        return max(abs(d) for d in self.deltas)


def zeno_engine_vs_analytic(n: int) -> ZenoComparison:
    """Run the wave engine on the blocked racetrack and line it up with the closed forms."""
    an = zeno_analytics(n)
    result = analyze(build_zeno(n, blocked=True), max_paths=16)
    return ZenoComparison(
        n_cycles=n,
        detect_engine=result.confirmations["DH"].echo,
        detect_analytic=an.p_detect,
        per_split_engine=tuple(result.offer.norm2(f"Obj{m}") for m in range(1, n + 1)),
        per_split_analytic=an.per_split_interaction,
    )


SWEEP_COLUMNS = ("N", "theta", "P_H", "P_D", "P_R", "P_D_approx", "P_R_approx")


def sweep_csv(n_max: int) -> str:
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for n in range(1, n_max + 1):
        a = zeno_analytics(n)
        w.writerow(
            [n]
            + [
                f"{x:.12g}"
                for x in (a.theta, a.p_h_per_cycle, a.p_detect, a.p_remove, a.p_detect_approx, a.p_remove_approx)
            ]
        )
    return buf.getvalue()
