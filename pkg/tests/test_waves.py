import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netgen import random_network, random_polarization
from oracle import enumerate_paths
from tiqm.optics import (
    H,
    Detector,
    InvalidNetworkError,
    OpticalNetwork,
    PolarizedAmplitude,
    Source,
    links_from,
    render_dirac,
)
from tiqm.scenarios import build_ev, build_zeno
from tiqm.waves import NotNormalizedError, analyze, probe_report, propagate_confirmation, propagate_offer


@pytest.fixture(scope="module")
def ev_open():
    return analyze(build_ev(False))


@pytest.fixture(scope="module")
def ev_blocked():
    return analyze(build_ev(True))


def wire():
    return OpticalNetwork({"L": Source(), "D": Detector()}, links_from(["L.out->D.in"]))


class TestOffer:
    def test_ev_open_all_light_to_d1(self, ev_open):
        assert ev_open.offer.norm2("D1") == pytest.approx(1, abs=1e-12)
        assert ev_open.offer.norm2("D2") == pytest.approx(0, abs=1e-12)

    def test_ev_open_paths(self, ev_open):
        rendered = {render_dirac(p) for p in ev_open.offer.sinks["D1"].paths}
        assert rendered == {"|L-[S1]-[A]-S2-D1>", "|L-S1-[B]-[S2]-D1>"}
        # each path amplitude is 1/2 in magnitude and they are in phase
        amps = [p.amplitude.h for p in ev_open.offer.sinks["D1"].paths]
        assert all(abs(a) == pytest.approx(0.5) for a in amps)
        assert amps[0] == pytest.approx(amps[1])

    def test_ev_open_dark_port_paths_cancel(self, ev_open):
        amps = [p.amplitude.h for p in ev_open.offer.sinks["D2"].paths]
        assert len(amps) == 2
        assert amps[0] == pytest.approx(-amps[1])

    def test_ev_blocked(self, ev_blocked):
        offer = ev_blocked.offer
        assert offer.norm2("D1") == pytest.approx(0.25, abs=1e-12)
        assert offer.norm2("D2") == pytest.approx(0.25, abs=1e-12)
        assert offer.norm2("Obj") == pytest.approx(0.5, abs=1e-12)
        assert offer.sinks["Obj"].side == "front"
        assert [render_dirac(p) for p in offer.sinks["Obj"].paths] == ["|L-[S1]-[A]-Obj>"]

    def test_wire(self):
        offer = propagate_offer(wire())
        assert offer.sinks["D"].amplitude == H
        assert len(offer.sinks["D"].paths) == 1

    def test_not_normalized(self):
        with pytest.raises(NotNormalizedError):
            propagate_offer(wire(), PolarizedAmplitude(1, 1))

    def test_invalid_network(self):
        with pytest.raises(InvalidNetworkError):
            propagate_offer(OpticalNetwork({"L": Source()}, []))

    def test_path_cap_does_not_change_amplitudes(self):
        net = build_zeno(12, blocked=False)
        capped = propagate_offer(net, max_paths=3)
        full = propagate_offer(net)
        assert capped.sinks["DV"].truncated
        assert len(capped.sinks["DV"].paths) == 3
        assert capped.sinks["DV"].amplitude == full.sinks["DV"].amplitude


class TestConfirmation:
    def test_ev_open_d1_echo_unit(self, ev_open):
        conf = ev_open.confirmations["D1"]
        assert conf.echo == pytest.approx(1, abs=1e-12)
        assert {render_dirac(p) for p in conf.source_paths} == {"<D1-S2-[A]-[S1]-L|", "<D1-[S2]-[B]-S1-L|"}

    def test_ev_open_dark_port_gives_nothing(self, ev_open):
        conf = ev_open.confirmations["D2"]
        assert conf.echo == 0
        assert conf.source_paths == () and conf.aborted == ()

    def test_ev_blocked_d1_terminals(self, ev_blocked):
        # hand amplitude chase: start -1/2; to L 1/4; Obj back -1/(2 sqrt 2); S1.in1 i/4
        conf = ev_blocked.confirmations["D1"]
        assert conf.echo == pytest.approx(0.25, abs=1e-12)
        assert conf.source_amplitude.norm2 == pytest.approx(1 / 16, abs=1e-12)
        aborted = {a.terminal: a for a in conf.aborted}
        assert aborted["Obj"].side == "back"
        assert aborted["Obj"].amplitude.norm2 == pytest.approx(1 / 8, abs=1e-12)
        assert [render_dirac(p) for p in aborted["Obj"].paths] == ["<D1-S2-Obj|"]
        assert aborted["S1.in1"].side == "vacuum"
        assert aborted["S1.in1"].amplitude.norm2 == pytest.approx(1 / 16, abs=1e-12)
        assert conf.terminal_norm2 == pytest.approx(conf.initial.norm2, abs=1e-12)

    def test_ev_blocked_object_echo(self, ev_blocked):
        conf = ev_blocked.confirmations["Obj"]
        assert conf.echo == pytest.approx(0.5, abs=1e-12)
        assert [render_dirac(p) for p in conf.source_paths] == ["<Obj-[A]-[S1]-L|"]

    def test_wire(self):
        net = wire()
        offer = propagate_offer(net)
        conf = propagate_confirmation(net, offer, "D")
        assert conf.echo == pytest.approx(1)
        assert [render_dirac(p) for p in conf.source_paths] == ["<D-L|"]
        assert conf.aborted == ()

    def test_concurrent_matches_sequential(self, ev_blocked):
        from concurrent.futures import ThreadPoolExecutor

        net = ev_blocked.network
        with ThreadPoolExecutor(4) as pool:
            results = dict(
                zip(
                    ev_blocked.confirmations,
                    pool.map(lambda s: propagate_confirmation(net, ev_blocked.offer, s), ev_blocked.confirmations),
                )
            )
        assert results == dict(ev_blocked.confirmations)


class TestProbe:
    def test_ev_blocked(self, ev_blocked):
        ledger = probe_report(ev_blocked.network, ev_blocked.offer, ev_blocked.confirmations)
        probe = ledger["Obj"]
        assert probe.front.norm2 == pytest.approx(0.5)
        assert [origin for origin, _ in probe.back] == ["D1", "D2"]
        assert all(a.norm2 == pytest.approx(1 / 8) for _, a in probe.back)

    def test_no_objects(self, ev_open):
        assert probe_report(ev_open.network, ev_open.offer, ev_open.confirmations) == {}

    def test_zeno_two_cycles(self):
        res = analyze(build_zeno(2, blocked=True))
        ledger = probe_report(res.network, res.offer, res.confirmations)
        s2 = math.sin(math.pi / 4) ** 2
        c2 = math.cos(math.pi / 4) ** 2
        assert ledger["Obj1"].front.norm2 == pytest.approx(s2, abs=1e-12)
        assert ledger["Obj2"].front.norm2 == pytest.approx(c2 * s2, abs=1e-12)
        # the detector's confirmation leaks onto the back of both objects
        assert {o for o, _ in ledger["Obj1"].back} >= {"DH"}
        assert {o for o, _ in ledger["Obj2"].back} >= {"DH"}


def _check_invariants(net, pol):
    res = analyze(net, pol)
    assert res.offer.total_norm2 == pytest.approx(1, abs=1e-9)
    assert sum(c.echo for c in res.confirmations.values()) == pytest.approx(1, abs=1e-9)
    for sink, so in res.offer.sinks.items():
        conf = res.confirmations[sink]
        assert conf.echo == pytest.approx(so.norm2, abs=1e-9)
        assert conf.terminal_norm2 == pytest.approx(so.norm2, abs=1e-9)
        if not so.truncated:
            total = sum((p.amplitude.to_array() for p in so.paths), np.zeros(2, dtype=complex))
            np.testing.assert_allclose(total, so.amplitude.to_array(), atol=1e-12)


class TestProperties:
    @settings(max_examples=150, deadline=None)
    @given(st.randoms(use_true_random=False))
    def test_norms_and_echo_law(self, rng):
        _check_invariants(random_network(rng, 12), random_polarization(rng))

    @settings(max_examples=150, deadline=None)
    @given(st.randoms(use_true_random=False))
    def test_sweep_equals_path_enumeration(self, rng):
        net = random_network(rng, 8)
        pol = random_polarization(rng)
        offer = propagate_offer(net, pol)
        brute = enumerate_paths(net, pol)
        for sink, so in offer.sinks.items():
            np.testing.assert_allclose(so.amplitude.to_array(), brute[sink], atol=1e-12)

    @pytest.mark.parametrize("n", [1, 3, 7])
    @pytest.mark.parametrize("blocked", [False, True])
    def test_zeno_invariants(self, n, blocked):
        _check_invariants(build_zeno(n, blocked), H)

    def test_deterministic(self):
        net = random_network(random.Random(11), 12)
        assert analyze(net) == analyze(net)
