"""Reference engines that define ground truth.

``run_single_fault`` resimulates one fault at a time with a plain
topological interpreter and its own operator evaluation code, sharing
nothing with the concurrent kernels, so the two cannot inherit a common
bug.  ``run_serial_concurrent`` runs the concurrent kernels single
threaded in topological order; the parallel engine must reproduce its
report bit for bit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from . import rtl
from .config import SimConfig
from .faults import (
    FaultDescriptor, faulty_val, inject, resolve_injection_site, window_active,
)
from .kernels import (
    affected_fids, apply_stimulus_row, check_dependence_changed, eval_bad_set,
    eval_good, initial_states, scan_outputs, sync_check_needed, sync_register,
)
from .report import CycleStats, RunTotals, SimulationReport, build_results
from .rtl import RtlGraph
from .stimulus import as_rows


def _force(rule: FaultDescriptor, value: int, cycle: int) -> int:
    if window_active(rule, cycle):
        return faulty_val(rule, value, cycle)
    return value


def _ref_op(node, ins: list[int]) -> int:
    """Operator semantics, written independently of the simulation kernels."""

    full = (1 << node.width) - 1
    op = node.op
    if op in ("AND", "OR", "XOR"):
        a, b = ins
        raw = {"AND": a & b, "OR": a | b, "XOR": a ^ b}[op]
    elif op == "NOT":
        raw = (~ins[0]) % (1 << node.width)
    elif op == "ADD":
        raw = (ins[0] + ins[1]) % (1 << node.width)
    elif op == "SUB":
        raw = (ins[0] - ins[1]) % (1 << node.width)
    elif op == "MUL":
        raw = (ins[0] * ins[1]) % (1 << node.width)
    elif op == "EQ":
        raw = int(ins[0] == ins[1])
    elif op == "LT":
        raw = int(ins[0] < ins[1])
    elif op == "MUX":
        raw = ins[1] if ins[0] == 1 else ins[2]
    elif op == "SHL":
        raw = ins[0] * (2 ** min(ins[1], 64))
    elif op == "SHR":
        raw = ins[0] // (2 ** min(ins[1], 64))
    elif op == "SLICE":
        raw = (ins[0] // (2 ** node.slice_lo)) % (2 ** node.width)
    elif op == "CONCAT":
        raw = ins[0] * (2 ** node.concat_lo_width) + ins[1]
    else:
        raise ValueError(f"unknown operator '{op}'")
    return raw & full


def _plain_sim(
    graph: RtlGraph,
    rows: list[list[int]],
    site: int | None = None,
    rule: FaultDescriptor | None = None,
) -> list[tuple[int, ...]]:
    """Full-vector simulation, optionally forcing one fault at its site."""

    vals = [0] * len(graph.nodes)
    for node in graph.nodes:
        if node.kind == rtl.CONST:
            vals[node.id] = node.init
        elif node.kind == rtl.REG:
            v = node.init
            if node.id == site:
                v = _force(rule, v, 0)
            vals[node.id] = v

    order = [nid for nid in graph.topo if graph.nodes[nid].kind in rtl.TASK_KINDS]
    out_trace: list[tuple[int, ...]] = []
    for cycle, row in enumerate(rows):
        for nid, v in zip(graph.inputs, row):
            vals[nid] = v & graph.nodes[nid].mask
        for nid in order:
            node = graph.nodes[nid]
            if node.kind == rtl.COMB:
                v = _ref_op(node, [vals[f] for f in node.fanin])
            else:
                v = vals[node.fanin[0]] & node.mask
            if nid == site:
                v = _force(rule, v, cycle)
            vals[nid] = v
        out_trace.append(tuple(vals[o] for o in graph.outputs))
        committed = [
            (r, vals[graph.nodes[r].next_src] & graph.nodes[r].mask)
            for r in graph.regs
        ]
        for r, v in committed:
            if r == site:
                v = _force(rule, v, cycle + 1)
            vals[r] = v
    return out_trace


@dataclass
class SingleFaultResult:
    detected: bool
    detect_cycle: int | None
    observing_output: str | None
    output_trace: list[tuple[int, ...]]


def run_single_fault(
    graph: RtlGraph,
    fault: FaultDescriptor,
    stimulus,
    site: int | None = None,
) -> SingleFaultResult:
    """Resimulate one fault from scratch and compare against the fault-free
    trace; detection is the first cycle any output differs."""

    rows = as_rows(graph, stimulus)
    if site is None:
        site = resolve_injection_site(graph, fault)
    good = _plain_sim(graph, rows)
    bad = _plain_sim(graph, rows, site, fault)
    for cycle, (g, b) in enumerate(zip(good, bad)):
        if g != b:
            idx = next(i for i, (x, y) in enumerate(zip(g, b)) if x != y)
            name = graph.nodes[graph.outputs[idx]].name
            return SingleFaultResult(True, cycle, name, bad)
    return SingleFaultResult(False, None, None, bad)


def run_good_trace(graph: RtlGraph, stimulus) -> list[tuple[int, ...]]:
    """Fault-free output trace from the reference interpreter."""

    return _plain_sim(graph, as_rows(graph, stimulus))


def run_serial_concurrent(
    graph: RtlGraph,
    faults: list[FaultDescriptor],
    stimulus,
    config: SimConfig | None = None,
) -> SimulationReport:
    """Single-threaded concurrent fault simulation in topological order,
    with the end-of-cycle register commit done as snapshot-then-commit."""

    config = config or SimConfig(mode="serial")
    rows = as_rows(graph, stimulus)
    table = inject(graph, faults)
    nf_of = [table.node_faults(i) for i in range(len(graph.nodes))]
    states = initial_states(graph, table)
    order = [nid for nid in graph.topo if graph.nodes[nid].kind in rtl.TASK_KINDS]

    detections: dict[int, tuple[int, str]] = {}
    cycles: list[CycleStats] = []
    output_trace: list[tuple[int, ...]] = []
    totals = RunTotals()
    force = config.force_always_eval

    for cycle, row in enumerate(rows):
        t0 = time.perf_counter_ns()
        apply_stimulus_row(graph, states, row, cycle)
        executed = skipped = 0

        for nid in order:
            node = graph.nodes[nid]
            st = states[nid]
            fanin_states = [states[f] for f in node.fanin]
            nf = nf_of[nid]
            if not force and not check_dependence_changed(node, fanin_states, nf, cycle):
                skipped += 1
                continue
            new_good = eval_good(node, [fs.good for fs in fanin_states])
            affected = affected_fids(node, fanin_states, nf, st, cycle)
            new_bads = eval_bad_set(
                node, fanin_states, nf, new_good, cycle, affected, 0, len(affected)
            )
            if new_good != st.good:
                st.good = new_good
                st.good_stamp = cycle
            if new_bads != st.bads:
                st.bads = new_bads
                st.bads_stamp = cycle
            st.last_eval_pass = cycle
            executed += 1

        for fid, at, out in scan_outputs(graph, states, detections, cycle):
            detections[fid] = (at, out)
        if config.drop_on_detect:
            _drop(states, table, detections)
        if config.record_outputs:
            output_trace.append(tuple(states[o].good for o in graph.outputs))

        sync_t0 = time.perf_counter_ns()
        staged = []
        for rid in graph.regs:
            reg = graph.nodes[rid]
            st = states[rid]
            next_st = states[reg.next_src]
            nf = nf_of[rid]
            if not force and not sync_check_needed(reg, st, next_st, nf, cycle + 1):
                staged.append((rid, None))
            else:
                staged.append((rid, sync_register(reg, st, next_st, nf, cycle + 1)))
        for rid, res in staged:
            st = states[rid]
            if res is None:
                skipped += 1
                continue
            new_good, new_bads = res
            if new_good != st.good:
                st.good = new_good
                st.good_stamp = cycle + 1
            if new_bads != st.bads:
                st.bads = new_bads
                st.bads_stamp = cycle + 1
            executed += 1
        sync_ns = time.perf_counter_ns() - sync_t0

        wall = time.perf_counter_ns() - t0
        cycles.append(CycleStats(cycle, wall, (wall,), executed, skipped, (), sync_ns))
        totals.wall_ns += wall
        totals.executed += executed
        totals.skipped += skipped

    totals.host_ns = totals.wall_ns
    totals.busy_ns = (totals.wall_ns,)
    report = SimulationReport(
        results=build_results(faults, detections),
        config=config.echo(),
        cycles=cycles,
        totals=totals,
    )
    if config.record_outputs:
        report.output_trace = output_trace
    return report


def _drop(states, table, detections) -> None:
    fids = set(detections)
    for nid, entry in table.all_entries():
        if entry.fid in fids:
            entry.dropped = True
    for st in states:
        if st.bads and any(f in fids for f, _ in st.bads):
            st.bads = [e for e in st.bads if e[0] not in fids]
