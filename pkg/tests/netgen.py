"""Random valid acyclic networks for property tests."""

import math
import random

from tiqm.optics import (
    BeamSplitter,
    Detector,
    Link,
    Mirror,
    ObjectAbsorber,
    OpticalNetwork,
    PolarizationRotator,
    PolarizedAmplitude,
    PolarizingBeamSplitter,
    Source,
    VacuumPort,
)


def random_network(rng: random.Random, max_elements: int = 12) -> OpticalNetwork:
    elements = {"L": Source()}
    links = []
    open_outs = [("L", "out")]
    free_backs = []
    k = 0

    def new_id(prefix):
        nonlocal k
        k += 1
        return f"{prefix}{k}"

    while open_outs and (len(elements) == 1 or rng.random() < 0.9):
        choice = rng.choice(["mirror", "rot", "bs", "pbs", "object"])
        if choice in ("mirror", "rot"):
            if len(elements) + 1 + len(open_outs) > max_elements:
                break
            eid = new_id("M" if choice == "mirror" else "R")
            elements[eid] = Mirror() if choice == "mirror" else PolarizationRotator(rng.uniform(-math.pi, math.pi))
            src = open_outs.pop(rng.randrange(len(open_outs)))
            links.append(Link(*src, eid, "in"))
            open_outs.append((eid, "out"))
        elif choice in ("bs", "pbs"):
            n_in = 2 if len(open_outs) >= 2 and rng.random() < 0.5 else 1
            if len(elements) + 1 + len(open_outs) - n_in + 2 > max_elements:
                break
            eid = new_id("S" if choice == "bs" else "P")
            elements[eid] = BeamSplitter() if choice == "bs" else PolarizingBeamSplitter(adjoint=rng.random() < 0.5)
            ports = ["in0", "in1"]
            rng.shuffle(ports)
            for port in ports[:n_in]:
                src = open_outs.pop(rng.randrange(len(open_outs)))
                links.append(Link(*src, eid, port))
            if n_in == 1 and free_backs and rng.random() < 0.6:
                obj = free_backs.pop(rng.randrange(len(free_backs)))
                links.append(Link(obj, "in_back", eid, ports[1]))
            open_outs += [(eid, "out0"), (eid, "out1")]
        else:
            if len(elements) + len(open_outs) > max_elements or len(open_outs) < 2 and rng.random() < 0.7:
                continue
            eid = new_id("Obj")
            elements[eid] = ObjectAbsorber()
            src = open_outs.pop(rng.randrange(len(open_outs)))
            links.append(Link(*src, eid, "in_front"))
            free_backs.append(eid)
    for src in open_outs:
        if rng.random() < 0.75:
            eid = new_id("D")
            elements[eid] = Detector()
        else:
            eid = new_id("Vac")
            elements[eid] = VacuumPort()
        links.append(Link(*src, eid, "in"))
    return OpticalNetwork(elements, links)


def random_polarization(rng: random.Random) -> PolarizedAmplitude:
    alpha = rng.uniform(0, math.pi / 2)
    phases = [rng.uniform(-math.pi, math.pi) for _ in range(2)]
    return PolarizedAmplitude(
        math.cos(alpha) * complex(math.cos(phases[0]), math.sin(phases[0])),
        math.sin(alpha) * complex(math.cos(phases[1]), math.sin(phases[1])),
    )
