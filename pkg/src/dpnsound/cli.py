"""Command-line entry point.

Exit codes: 0 sound, 2 unsound, 1 error or inconclusive.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .bench import CHAIN_OPS, add_chained_vars, add_sequential_states
from .cg import DEFAULT_BUDGET
from .dot import cg_to_dot, dds_to_dot
from .errors import BudgetExceeded, DpnSoundError, Inconclusive
from .oracle import DomainBox, oracle_soundness
from .pnml import load_pnml, to_pnml
from .report import format_text, report_to_json, violating_nodes
from .smt import SOLVER_ENV
from .soundness import CheckConfig, check_sound

EXIT_SOUND, EXIT_ERROR, EXIT_UNSOUND = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def _nonneg(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dpnsound", description="Data-aware soundness checking for Data Petri nets.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="check data-aware soundness of a PNML net")
    c.add_argument("file", type=Path)
    c.add_argument("--bound", "-k", type=_positive, default=1, help="token bound (default 1)")
    c.add_argument("--solver", default=None, help=f"z3 executable (default ${SOLVER_ENV} or z3 on PATH)")
    c.add_argument("--budget", type=_positive, default=DEFAULT_BUDGET, help="max nodes per constraint graph")
    c.add_argument("--timeout", type=float, default=10.0, help="per-query solver timeout in seconds")
    c.add_argument("--jobs", "-j", type=_positive, default=1, help="parallel solver processes")
    c.add_argument("--order", choices=("bfs", "dfs"), default="bfs")
    c.add_argument("--all", action="store_true", help="check every property instead of stopping at the first violation")
    c.add_argument("--json", metavar="OUT", help="write a JSON report ('-' for stdout)")
    c.add_argument("--dot-dds", metavar="OUT", help="write the DDS as DOT")
    c.add_argument("--dot-cg", metavar="OUT", help="write the constraint graph as DOT")
    c.add_argument("--quiet", "-q", action="store_true", help="suppress the text report")

    o = sub.add_parser("oracle", help="brute-force soundness over a finite value box")
    o.add_argument("file", type=Path)
    o.add_argument("--box", default="", help="domains as VAR=LO..HI[:STEP],... (defaults: ints -3..3)")
    o.add_argument("--bound", "-k", type=_positive, default=1)
    o.add_argument("--cap", type=_positive, default=10**6, help="max explored states")

    m = sub.add_parser("mutate", help="generate scalability variants of a net")
    m.add_argument("kind", choices=("states", "vars"))
    m.add_argument("file", type=Path)
    m.add_argument("-n", type=_nonneg, required=True, help="states to prepend or chain length")
    m.add_argument("-o", "--output", default="-", help="output PNML path ('-' for stdout)")
    m.add_argument("--op", choices=CHAIN_OPS, default="=", help="chain operator for 'vars'")
    return p


def _write(target: str, text: str) -> None:
    if target == "-":
        sys.stdout.write(text)
    else:
        Path(target).write_text(text, encoding="utf-8")


def _check(args) -> int:
    dpn = load_pnml(args.file)
    cfg = CheckConfig(bound=args.bound, budget=args.budget, order=args.order,
                      short_circuit=not args.all, jobs=args.jobs,
                      solver=args.solver, timeout=args.timeout)
    report = check_sound(dpn, cfg)
    if not args.quiet and args.json != "-":
        sys.stdout.write(format_text(report))
    if args.json:
        _write(args.json, report_to_json(report))
    if args.dot_dds:
        _write(args.dot_dds, dds_to_dot(report.dds, dpn.id))
    if args.dot_cg:
        finals = [b for b in report.dds.states if report.dds.is_final(b)]
        node = report.blocked.node if report.blocked else report.bad_node
        path = report.cg.path_to(node) if node is not None else []
        _write(args.dot_cg, cg_to_dot(report.cg, finals, path, violating_nodes(report), dpn.id))
    return EXIT_SOUND if report.sound else EXIT_UNSOUND


def _oracle(args) -> int:
    dpn = load_pnml(args.file)
    box = DomainBox.parse(args.box, dpn.variables)
    v = oracle_soundness(dpn, box, args.bound, cap=args.cap)
    print(f"net: {dpn.id}")
    print(f"verdict: {'sound' if v.sound else 'unsound'} (within box)")
    if v.violated:
        print(f"violated: {v.violated}")
    print(f"states: {len(v.graph.states)}, edges: {len(v.graph.edges)}")
    if v.bad_states:
        print(f"bad termination at: {v.bad_states[0]}")
    if v.dead_transitions:
        print("dead transitions: " + ", ".join(v.dead_transitions))
    if v.blocked_states:
        print(f"blocked state: {v.blocked_states[0]}")
    return EXIT_SOUND if v.sound else EXIT_UNSOUND


def _mutate(args) -> int:
    dpn = load_pnml(args.file)
    if args.kind == "states":
        out = add_sequential_states(dpn, args.n)
    else:
        out = add_chained_vars(dpn, args.n, args.op)
    _write(args.output, to_pnml(out))
    return EXIT_SOUND


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_ERROR
    if getattr(args, "solver", None) is None and os.environ.get(SOLVER_ENV):
        args.solver = os.environ[SOLVER_ENV]
    handler = {"check": _check, "oracle": _oracle, "mutate": _mutate}[args.command]
    try:
        return handler(args)
    except (BudgetExceeded, Inconclusive) as e:
        print("verdict: inconclusive")
        print(f"dpnsound: inconclusive: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (DpnSoundError, OSError, ValueError) as e:
        print(f"dpnsound: error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR


def main_exit() -> None:
    raise SystemExit(main())


if __name__ == "__main__":  # pragma: no cover
    main_exit()
