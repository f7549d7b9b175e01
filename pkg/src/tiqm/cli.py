"""Command-line front end.

    tiqm run ev-blocked
    tiqm trace zeno-blocked:3
    tiqm mc ev-blocked --trials 100000 --seed 7
    tiqm sweep-zeno --n-max 20
    tiqm run ev-open --emit-dsl > ev-open.ifm

Exit codes: 0 success, 1 usage error, 2 input/parse error, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import dsl, scenarios
from .optics import InvalidNetworkError, OpticalNetwork, render_dirac
from .transactions import EchoTotalError, echo_report, monte_carlo
from .waves import Analysis, NotNormalizedError, analyze, probe_report

log = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3
BUILTINS = ("ev-open", "ev-blocked", "zeno-open:N", "zeno-blocked:N")


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


def _num(x: float) -> str:
    return f"{x:.12g}"


def resolve_scenario(name: str, n: int | None = None) -> OpticalNetwork:
    """Map a builtin name or a scenario file path to a network."""
    if name == "ev-open":
        return scenarios.build_ev(blocked=False)
    if name == "ev-blocked":
        return scenarios.build_ev(blocked=True)
    base, _, count = name.partition(":")
    if base in ("zeno-open", "zeno-blocked"):
        if count:
            try:
                n = int(count)
            except ValueError:
                raise UsageError(f"bad cycle count in {name!r}") from None
        if n is None or n < 1:
            raise UsageError(f"{base} needs a cycle count >= 1 ({base}:N or --n N)")
        return scenarios.build_zeno(n, blocked=base == "zeno-blocked")
    path = Path(name)
    if not path.is_file():
        raise InputError(f"file not found: {name}")
    try:
        return dsl.to_network(dsl.parse_file(path))
    except (dsl.ScenarioSyntaxError, dsl.ScenarioSemanticError) as exc:
        raise InputError(str(exc)) from None
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {name}: {exc}") from None


def cmd_run(analysis: Analysis) -> str:
    report = echo_report(analysis)
    probs = report.probabilities()
    rows = [("sink", "offer_norm2", "echo", "probability", "rounded")]
    for sink, echo in report.entries:
        p = probs[sink]
        rows.append((sink, _num(analysis.offer.norm2(sink)), _num(echo), _num(p), f"{p:.4f}"))
    return _table(rows) + f"total echo {_num(report.total)}\n"


def _table(rows) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n" for r in rows)


def _amp(a) -> str:
    return f"amp_h=({_num(a.h.real)},{_num(a.h.imag)}) amp_v=({_num(a.v.real)},{_num(a.v.imag)})"


def cmd_trace(analysis: Analysis) -> str:
    lines = []
    for sink, so in analysis.offer.sinks.items():
        lines.append(f"## {sink}")
        for p in so.paths:
            lines.append(f"OFFER    {render_dirac(p)}  {_amp(p.amplitude)}")
        if so.truncated:
            lines.append("OFFER    ... (path list truncated)")
        conf = analysis.confirmations[sink]
        for p in conf.source_paths:
            lines.append(f"CONFIRM  {render_dirac(p)}  {_amp(p.amplitude)}")
        for ab in conf.aborted:
            for p in ab.paths:
                lines.append(f"CONFIRM  {render_dirac(p)}  {_amp(p.amplitude)}  ABORTED {ab.side}")
        if conf.truncated:
            lines.append("CONFIRM  ... (path list truncated)")
    return "\n".join(lines) + "\n"


def cmd_probe(analysis: Analysis) -> str:
    ledger = probe_report(analysis.network, analysis.offer, analysis.confirmations)
    rows = [("object", "side", "origin", "norm2")]
    for obj, probe in ledger.items():
        rows.append((obj, "front", analysis.network.source, _num(probe.front.norm2)))
        rows += [(obj, "back", origin, _num(amp.norm2)) for origin, amp in probe.back]
    return _table(rows)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tiqm", description="Transactional single-photon interaction-free measurement simulator.")
    parser.add_argument("command", choices=("run", "trace", "probe", "mc", "sweep-zeno"))
    parser.add_argument(
        "scenario", nargs="?", help=f"builtin ({', '.join(BUILTINS)}) or scenario file path"
    )
    parser.add_argument("--trials", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=0)
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--n", type=int, help="cycle count for zeno-open / zeno-blocked")
    group.add_argument("--n-max", type=int, help="largest N for sweep-zeno")
    parser.add_argument("--out", type=Path, help="write output here instead of stdout")
    parser.add_argument("--emit-dsl", action="store_true", help="print the scenario as a scenario file and exit")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def execute(args: argparse.Namespace) -> str:
    if args.command == "sweep-zeno" and not args.emit_dsl:
        n_max = args.n_max if args.n_max is not None else args.n
        if n_max is None or n_max < 1:
            raise UsageError("sweep-zeno needs --n-max N with N >= 1")
        return scenarios.sweep_csv(n_max)
    if args.scenario is None:
        raise UsageError(f"{args.command} needs a scenario")
    network = resolve_scenario(args.scenario, args.n)
    if args.emit_dsl:
        return dsl.serialize(network, name=args.scenario)
    if args.command == "mc":
        if args.trials < 1:
            raise UsageError("--trials must be >= 1")
        return monte_carlo(network, args.trials, args.seed).to_csv()
    analysis = analyze(network)
    return {"run": cmd_run, "trace": cmd_trace, "probe": cmd_probe}[args.command](analysis)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        text = execute(args)
    except UsageError as exc:
        print(f"tiqm: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"tiqm: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (EchoTotalError, NotNormalizedError, InvalidNetworkError) as exc:
        print(f"tiqm: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    if args.out is not None:
        try:
            args.out.write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"tiqm: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_INPUT
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
