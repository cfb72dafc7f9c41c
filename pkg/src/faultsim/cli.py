"""Command-line front end.

Subcommands:

* ``run``    - simulate one netlist/stimulus/fault-list triple
* ``gen``    - emit a synthetic benchmark (netlist, stimulus, fault list)
* ``ablate`` - run the full (mode, workers) measurement grid

Exit codes: 0 success, 1 usage, 2 input parse error, 3 simulation
invariant violation, 4 oracle mismatch.
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

from .ablation import ablation_run
from .config import MODES, MODE_FULL, SimConfig
from .faults import (
    FaultModelError, TRANSIENT, FaultDescriptor, generate_fault_list,
    parse_fault_csv,
)
from .kernels import SimulationError
from .netlist import NetlistError
from .oracles import run_serial_concurrent, run_single_fault
from .report import ReportFormatError, emit_report_csv, emit_stats
from .rtl import ElaborationError, elaborate_text
from .scheduler import run_simulation
from .stimulus import StimulusError, parse_stimulus

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_SIMULATION = 3
EXIT_ORACLE = 4

_PARSE_ERRORS = (
    NetlistError, ElaborationError, StimulusError, FaultModelError,
    ReportFormatError, OSError,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> _Parser:
    parser = _Parser(prog="faultsim", description=__doc__.split("\n", 1)[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="simulate a netlist against a stimulus")
    run_p.add_argument("--netlist", required=True)
    run_p.add_argument("--stimulus", required=True)
    group = run_p.add_mutually_exclusive_group(required=True)
    group.add_argument("--faults", help="fault list CSV")
    group.add_argument(
        "--gen-faults",
        help="comma-separated kinds, e.g. sa0,sa1 or sa0,sa1,transient:2:5",
    )
    run_p.add_argument("--workers", type=int, default=1)
    run_p.add_argument("--mode", choices=MODES, default=MODE_FULL)
    run_p.add_argument("--threshold", type=float, default=1e-4)
    run_p.add_argument("--slaves", type=int, default=0)
    run_p.add_argument("--max-expansions", type=int, default=8)
    run_p.add_argument("--sync-group", type=int, default=1)
    run_p.add_argument("--report", help="write per-fault verdict CSV here")
    run_p.add_argument("--stats", help="write per-cycle statistics here")
    run_p.add_argument("--drop-on-detect", action="store_true")
    run_p.add_argument("--steady-check", action="store_true")
    run_p.add_argument("--seed", type=int, default=0, help="seed for fault sampling")
    run_p.add_argument(
        "--fault-limit", type=int, default=0,
        help="with --gen-faults, sample down to this many faults",
    )
    run_p.add_argument(
        "--oracle-check", action="store_true",
        help="also run both reference engines and fail on any mismatch",
    )

    gen_p = sub.add_parser("gen", help="generate a synthetic benchmark")
    gen_p.add_argument("--profile", choices=("uniform", "skewed", "pipeline"),
                       required=True)
    gen_p.add_argument("--size", type=int, required=True)
    gen_p.add_argument("--seed", type=int, default=0)
    gen_p.add_argument("--cycles", type=int, default=0)
    gen_p.add_argument("--fault-count", type=int, default=0)
    gen_p.add_argument("--quiescent", action="store_true",
                       help="hold inputs constant after the first cycle")
    gen_p.add_argument("--out", required=True, help="output directory")

    abl_p = sub.add_parser("ablate", help="measure every (mode, workers) cell")
    abl_p.add_argument("--netlist", required=True)
    abl_p.add_argument("--stimulus", required=True)
    abl_p.add_argument("--faults", required=True)
    abl_p.add_argument("--workers", default="1,2,4,8",
                       help="comma-separated worker counts")
    abl_p.add_argument("--threshold", type=float, default=0.02)
    abl_p.add_argument("--trials", type=int, default=3)
    abl_p.add_argument("--out", help="write the table here instead of stdout")
    return parser


def _parse_gen_kinds(spec: str, seed: int, limit: int, graph):
    kinds = []
    window = (0, 0)
    for item in spec.split(","):
        item = item.strip().lower()
        if not item:
            continue
        if item.startswith(TRANSIENT):
            parts = item.split(":")
            if len(parts) == 3:
                window = (int(parts[1]), int(parts[2]))
            elif len(parts) != 1:
                raise FaultModelError(f"bad transient spec '{item}'")
            kinds.append(TRANSIENT)
        else:
            kinds.append(item)
    faults = generate_fault_list(graph, kinds, transient_window=window)
    if limit and limit < len(faults):
        rng = random.Random(seed)
        picked = sorted(rng.sample(range(len(faults)), limit))
        faults = [
            FaultDescriptor(new_fid, f.location_kind, f.location_name, f.bit,
                            f.kind, f.start, f.end)
            for new_fid, f in enumerate(faults[i] for i in picked)
        ]
    return faults


def _cmd_run(args) -> int:
    netlist_text = Path(args.netlist).read_text()
    graph = elaborate_text(netlist_text)
    stim = parse_stimulus(Path(args.stimulus).read_text())
    if args.faults:
        faults = parse_fault_csv(Path(args.faults).read_text())
    else:
        faults = _parse_gen_kinds(args.gen_faults, args.seed, args.fault_limit, graph)

    config = SimConfig(
        workers=args.workers,
        mode=args.mode,
        threshold=args.threshold,
        slaves=args.slaves,
        max_expansions_per_cycle=args.max_expansions,
        drop_on_detect=args.drop_on_detect,
        steady_state_check=args.steady_check,
        sync_group_size=args.sync_group,
    )
    try:
        config.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    report = run_simulation(graph, faults, stim, config)

    if args.oracle_check:
        mismatch = _oracle_check(netlist_text, faults, stim, report)
        if mismatch:
            print(f"oracle mismatch: {mismatch}", file=sys.stderr)
            return EXIT_ORACLE

    if args.report:
        Path(args.report).write_text(emit_report_csv(report))
    if args.stats:
        Path(args.stats).write_text(emit_stats(report))
    detected = sum(1 for r in report.results if r.detected)
    print(
        f"faults={len(report.results)} detected={detected} "
        f"coverage={report.coverage:.4f} cycles={len(report.cycles)} "
        f"wall_ms={report.totals.wall_ns / 1e6:.2f}"
    )
    if args.oracle_check:
        print("oracle-check: ok")
    return EXIT_OK


def _oracle_check(netlist_text, faults, stim, report) -> str | None:
    """Compare the report against both reference engines; return a
    description of the first mismatch."""

    serial = run_serial_concurrent(elaborate_text(netlist_text), faults, stim)
    if serial.verdicts() != report.verdicts():
        for a, b in zip(serial.verdicts(), report.verdicts()):
            if a != b:
                return f"serial {a} vs parallel {b}"
    oracle_graph = elaborate_text(netlist_text)
    for fault, row in zip(faults, report.results):
        single = run_single_fault(oracle_graph, fault, stim)
        got = (row.detected, row.detect_cycle, row.observing_output)
        want = (single.detected, single.detect_cycle, single.observing_output)
        if got != want:
            return f"fid {fault.fid}: single-fault {want} vs parallel {got}"
    return None


def _cmd_gen(args) -> int:
    from .genbench import gen_bench

    bench = gen_bench(
        args.profile, args.size, args.seed,
        cycles=args.cycles or None,
        fault_count=args.fault_count or None,
        quiescent=args.quiescent,
    )
    paths = bench.write(args.out)
    for p in paths:
        print(p)
    return EXIT_OK


def _cmd_ablate(args) -> int:
    netlist_text = Path(args.netlist).read_text()
    stim = parse_stimulus(Path(args.stimulus).read_text())
    faults = parse_fault_csv(Path(args.faults).read_text())
    workers = [int(tok) for tok in args.workers.split(",") if tok.strip()]
    if not workers or any(w < 1 for w in workers):
        print("error: --workers needs positive integers", file=sys.stderr)
        return EXIT_USAGE
    table = ablation_run(
        netlist_text, stim, faults, workers,
        threshold=args.threshold, trials=args.trials,
    )
    text = table.format()
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    if not table.verdicts_consistent:
        print("error: cells disagree on fault verdicts", file=sys.stderr)
        return EXIT_SIMULATION
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "gen":
            return _cmd_gen(args)
        return _cmd_ablate(args)
    except _PARSE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SimulationError as exc:
        print(f"simulation invariant violation: {exc}", file=sys.stderr)
        return EXIT_SIMULATION


if __name__ == "__main__":
    sys.exit(main())
