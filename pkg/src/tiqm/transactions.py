"""Transaction selection from echo strengths, Monte Carlo tallies, and the
repeated-trial Elitzur-Vaidman protocol.

Random draws use :func:`numpy.random.default_rng` (PCG64).  One uniform
double is consumed per selection, compared against cumulative echoes with
sinks in lexicographic id order, so a tally is a pure function of
(network, trials, seed).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .optics import H, OpticalNetwork, PolarizedAmplitude
from .waves import Analysis, analyze

__all__ = [
    "EchoReport",
    "TrialTally",
    "RepeatedEV",
    "NoTransactionError",
    "DivergentProtocolError",
    "EchoTotalError",
    "echo_report",
    "select_transaction",
    "monte_carlo",
    "repeated_ev",
]

# Engine-derived totals farther than this from 1 indicate a broken network.
TOTAL_TOLERANCE = 1e-6


class NoTransactionError(ValueError):
    pass


class DivergentProtocolError(ValueError):
    pass


class EchoTotalError(RuntimeError):
    """Echo total of a complete network drifted from 1."""


@dataclass(frozen=True)
class EchoReport:
    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        entries = tuple(sorted((str(s), float(e)) for s, e in dict(self.entries).items()))
        for sink, echo in entries:
            if not echo >= 0:
                raise ValueError(f"echo for {sink} must be non-negative, got {echo}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_mapping(cls, echoes: Mapping[str, float]) -> "EchoReport":
        return cls(tuple(echoes.items()))

    @property
    def total(self) -> float:
        return math.fsum(e for _, e in self.entries)

    def as_dict(self) -> dict[str, float]:
        return dict(self.entries)

    def probabilities(self) -> dict[str, float]:
        total = self.total
        if total <= 0:
            raise NoTransactionError("no sink returned a confirmation")
        return {s: e / total for s, e in self.entries}


def echo_report(source: OpticalNetwork | Analysis, initial_polarization: PolarizedAmplitude = H) -> EchoReport:
    analysis = source if isinstance(source, Analysis) else analyze(source, initial_polarization)
    # rounding can leave echoes of dark sinks at -1e-17
    return EchoReport(tuple((s, max(c.echo, 0.0)) for s, c in analysis.confirmations.items()))


def _cumulative(report: EchoReport) -> tuple[list[str], np.ndarray]:
    probs = report.probabilities()
    sinks = list(probs)
    return sinks, np.cumsum([probs[s] for s in sinks])


def _pick(sinks: list[str], cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cum, u, side="right")
    # cum[-1] may fall a few ulps short of 1; such draws belong to the last live sink
    last_live = int(np.flatnonzero(np.diff(np.concatenate([[0.0], cum])) > 0)[-1])
    return np.minimum(idx, last_live)


def select_transaction(report: EchoReport, rng: np.random.Generator) -> str:
    """Choose one sink with probability echo/total, consuming one uniform draw."""
    sinks, cum = _cumulative(report)
    return sinks[int(_pick(sinks, cum, np.array([rng.random()]))[0])]


@dataclass(frozen=True)
class TrialTally:
    counts: Mapping[str, int]
    trials: int
    seed: int
    expected: Mapping[str, float]

    def __post_init__(self):
        if sum(self.counts.values()) != self.trials:
            raise ValueError("counts do not add up to trials")

    def frequency(self, sink: str) -> float:
        return self.counts[sink] / self.trials

    def deviation_sigma(self, sink: str) -> float:
        p = self.expected[sink]
        diff = self.counts[sink] - self.trials * p
        var = self.trials * p * (1 - p)
        if var <= 0:
            return 0.0 if abs(diff) < 1e-9 * self.trials else math.inf
        return diff / math.sqrt(var)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sink", "count", "frequency", "expected", "deviation_sigma"])
        for sink in sorted(self.counts):
            w.writerow(
                [
                    sink,
                    self.counts[sink],
                    f"{self.frequency(sink):.12g}",
                    f"{self.expected[sink]:.12g}",
                    f"{self.deviation_sigma(sink):.12g}",
                ]
            )
        return buf.getvalue()


def monte_carlo(
    network: OpticalNetwork | Analysis,
    trials: int,
    seed: int,
    initial_polarization: PolarizedAmplitude = H,
) -> TrialTally:
    """Draw ``trials`` independent transactions from one echo report."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    report = echo_report(network, initial_polarization)
    if abs(report.total - 1.0) > TOTAL_TOLERANCE:
        raise EchoTotalError(f"echo total {report.total!r} deviates from 1")
    sinks, cum = _cumulative(report)
    rng = np.random.default_rng(seed)
    picks = _pick(sinks, cum, rng.random(trials))
    counts = np.bincount(picks, minlength=len(sinks))
    return TrialTally(
        counts={s: int(c) for s, c in zip(sinks, counts)},
        trials=trials,
        seed=seed,
        expected=report.probabilities(),
    )


@dataclass(frozen=True)
class RepeatedEV:
    d2_success: float
    object_hit: float


def repeated_ev(detect_d2: float, hit_object: float, retry: float) -> RepeatedEV:
    """Resolve "resend on a D1 click" as a geometric series.

    Each trial ends in a dark-port click, an absorbed photon, or a retry;
    the asymptotic outcome probabilities are the first two divided by
    ``1 - retry``.
    """
    probs = (detect_d2, hit_object, retry)
    if any(p < 0 for p in probs) or abs(math.fsum(probs) - 1.0) > 1e-12:
        raise ValueError(f"outcome probabilities must be non-negative and sum to 1, got {probs}")
    if retry >= 1:
        raise DivergentProtocolError("retry probability 1: the protocol never terminates")
    stop = detect_d2 + hit_object
    return RepeatedEV(detect_d2 / stop, hit_object / stop)
