"""Per-cycle execution of the task graph on a fixed pool of workers with
work stealing, plus load monitoring, overload expansion, and the cycle loop.

The pool is a deterministic discrete-event executor: every task's kernel
runs exactly once on the host, in an order consistent with the dependency
edges and the stealing policy, and its measured duration advances the
claiming worker's virtual clock.  Wall time, busy time and utilization are
properties of that executed schedule.  CPython serializes compute-bound
threads, so scheduling quality is accounted on the schedule itself rather
than on OS threads; the drain contract (exactly-once execution, no busy
waiting, stuck-task detection) is unchanged.

Workers keep a local LIFO deque and steal FIFO from the next non-empty
victim in index order; cycle-entry tasks start in a shared injection
queue.  Completion events release successor tasks by decrementing their
predecessor countdowns; a task is claimed exactly once, when its countdown
reaches zero.
"""

from __future__ import annotations

import heapq
import time
from collections import deque
from dataclasses import dataclass

from . import rtl, taskgraph
from .config import MODE_SERIAL, SimConfig
from .faults import FaultDescriptor, inject
from .kernels import (
    EvalDelta, NodeState, SimulationError, affected_fids, apply_stimulus_row,
    check_dependence_changed, eval_bad_set, eval_good, initial_states,
    scan_outputs, sync_check_needed, sync_register,
)
from .report import CycleStats, RunTotals, SimulationReport, build_results
from .rtl import RtlGraph
from .stimulus import as_rows
from .taskgraph import (
    DEFAULT, MASTER, SLAVE, SYNC, TaskGraph, expand_high_load, make_task_graph,
    publish_ranges, reset_for_cycle,
)


@dataclass
class PhaseResult:
    makespan_ns: int
    busy_ns: list[int]
    executed: list[int]


class WorkerPool:
    """Deterministic work-stealing executor for one dependency phase."""

    def __init__(self, workers: int):
        self.workers = workers

    def run_phase(self, counts, ready, tasks, execute, trace=None, time_base=0):
        P = self.workers
        queues: list[deque] = [deque() for _ in range(P)]
        injection = deque(ready)
        busy = [0] * P
        idle: set[int] = set()
        heap: list[tuple[int, int, int, int, int]] = []
        executed: list[int] = []
        seq = 0

        def acquire(w: int):
            q = queues[w]
            if q:
                return q.pop()
            if injection:
                return injection.popleft()
            for off in range(1, P):
                victim = queues[(w + off) % P]
                if victim:
                    return victim.popleft()
            return None

        def dispatch(w: int, now: int) -> bool:
            nonlocal seq
            tid = acquire(w)
            if tid is None:
                idle.add(w)
                return False
            idle.discard(w)
            cost = execute(tid)
            busy[w] += cost
            heapq.heappush(heap, (now + cost, seq, w, tid, now))
            seq += 1
            executed.append(tid)
            return True

        for w in range(P):
            dispatch(w, time_base)

        makespan = time_base
        while heap:
            fin, _, w, tid, started = heapq.heappop(heap)
            if fin > makespan:
                makespan = fin
            if trace is not None:
                trace.append((tid, w, started, fin))
            for succ in tasks[tid].succs:
                counts[succ] -= 1
                if counts[succ] == 0:
                    queues[w].append(succ)
            dispatch(w, fin)
            if idle:
                for wi in sorted(idle):
                    if not dispatch(wi, fin):
                        break
        return PhaseResult(makespan - time_base, busy, executed)


class LoadMonitor:
    """Per-task execution time for one cycle, as shares of the cycle total."""

    def __init__(self):
        self.task_ns: dict[int, int] = {}
        self.total_ns = 0

    def reset(self) -> None:
        self.task_ns.clear()
        self.total_ns = 0

    def record(self, tid: int, cost: int) -> None:
        self.task_ns[tid] = self.task_ns.get(tid, 0) + cost
        self.total_ns += cost

    def shares(self) -> dict[int, float]:
        if self.total_ns <= 0:
            return {tid: 0.0 for tid in self.task_ns}
        return {tid: ns / self.total_ns for tid, ns in self.task_ns.items()}


def flag_overloaded(monitor: LoadMonitor, tg: TaskGraph, threshold: float) -> list[int]:
    """Unexpanded nodes whose execution-time share exceeds the threshold,
    heaviest first."""

    total = monitor.total_ns
    if total <= 0:
        return []
    floor_ns = total * threshold
    task_ns = monitor.task_ns
    tasks = tg.tasks
    flagged: list[tuple[int, int]] = []
    for tid in tg.default_task_ids():
        ns = task_ns.get(tid, 0)
        if ns > floor_ns:
            flagged.append((-ns, tasks[tid].node))
    flagged.sort()
    return [nid for _, nid in flagged]


class SimulationEngine:
    """Drives the cycle loop: stimulus, task-graph drain, detection strobe,
    overload expansion at cycle boundaries, and statistics."""

    def __init__(self, graph: RtlGraph, faults: list[FaultDescriptor],
                 stimulus, config: SimConfig):
        config.validate()
        if config.mode == MODE_SERIAL:
            raise ValueError("serial mode runs through oracles.run_serial_concurrent")
        self.graph = graph
        self.faults = faults
        self.rows = as_rows(graph, stimulus)
        self.config = config
        self.table = inject(graph, faults)
        self.nf = [self.table.node_faults(i) for i in range(len(graph.nodes))]
        self.states = initial_states(graph, self.table)
        self.tg = make_task_graph(
            graph,
            unified=config.unified_sync,
            slave_count=config.effective_slaves,
            group_size=config.sync_group_size,
        )
        for node_id in config.pre_expand:
            expand_high_load(self.tg, node_id, config.effective_slaves)
        self.pool = WorkerPool(config.workers)
        self.monitor = LoadMonitor()
        self.detections: dict[int, tuple[int, str]] = {}
        self.cycle_stats: list[CycleStats] = []
        self.totals = RunTotals()
        self.traces: list[list[tuple[int, int, int, int]]] = []
        self.deltas: list[list[EvalDelta]] = []
        self.cost_log: list[dict[int, int]] = []
        self._cost_replay: dict[int, int] | None = None
        self._cost_log: dict[int, int] | None = None
        self.output_trace: list[tuple[int, ...]] = []
        self._cycle = 0
        self._executed = 0
        self._skipped = 0
        self._sync_ns = 0

    # -- per-task execution -------------------------------------------------

    def _execute(self, tid: int) -> int:
        t0 = time.perf_counter_ns()
        task = self.tg.tasks[tid]
        kind = task.kind
        if kind == DEFAULT:
            self._run_default(task)
        elif kind == MASTER:
            self._run_master(task)
        elif kind == SLAVE:
            self._run_slave(task)
        else:
            self._run_sync(task)
        cost = time.perf_counter_ns() - t0
        if self._cost_replay is not None:
            # Charge the calibrated cost for this task; fresh tasks that the
            # calibration run never executed keep their live measurement.
            cost = self._cost_replay.get(tid, cost)
        if self._cost_log is not None:
            self._cost_log[tid] = cost
        self.monitor.record(tid, cost)
        if kind == SYNC:
            self._sync_ns += cost
        return cost

    def _node_inputs(self, node):
        states = self.states
        return [states[f] for f in node.fanin]

    def _run_default(self, task) -> None:
        node = self.graph.nodes[task.node]
        st = self.states[task.node]
        fanin_states = self._node_inputs(node)
        nf = self.nf[task.node]
        cycle = self._cycle
        if not self.config.force_always_eval and not check_dependence_changed(
            node, fanin_states, nf, cycle
        ):
            self._skipped += 1
            return
        new_good = eval_good(node, [fs.good for fs in fanin_states])
        affected = affected_fids(node, fanin_states, nf, st, cycle)
        new_bads = eval_bad_set(
            node, fanin_states, nf, new_good, cycle, affected, 0, len(affected)
        )
        self._commit(task.node, st, new_good, new_bads, cycle)
        self._executed += 1

    def _run_master(self, task) -> None:
        node = self.graph.nodes[task.node]
        st = self.states[task.node]
        board = self.tg.boards[task.node]
        fanin_states = self._node_inputs(node)
        nf = self.nf[task.node]
        cycle = self._cycle
        if not self.config.force_always_eval and not check_dependence_changed(
            node, fanin_states, nf, cycle
        ):
            board.skip = True
            self._skipped += 1
            return
        new_good = eval_good(node, [fs.good for fs in fanin_states])
        board.affected = affected_fids(node, fanin_states, nf, st, cycle)
        board.new_good = new_good
        board.ranges = publish_ranges(len(board.affected), len(board.partials))
        if new_good != st.good:
            st.good = new_good
            st.good_stamp = cycle
        st.last_eval_pass = cycle
        self._executed += 1

    def _run_slave(self, task) -> None:
        board = self.tg.boards[task.node]
        if board.skip:
            self._skipped += 1
            return
        node = self.graph.nodes[task.node]
        fanin_states = self._node_inputs(node)
        begin, end = board.ranges[task.slave_index]
        board.partials[task.slave_index] = eval_bad_set(
            node, fanin_states, self.nf[task.node], board.new_good, self._cycle,
            board.affected, begin, end,
        )
        self._executed += 1
        board.remaining -= 1
        if board.remaining == 0:
            st = self.states[task.node]
            cycle = self._cycle
            new_bads = [pair for part in board.partials for pair in part]
            if new_bads != st.bads:
                st.bads = new_bads
                st.bads_stamp = cycle
            if self.config.record_deltas:
                self.deltas[-1].append(
                    EvalDelta(task.node, st.good, list(new_bads),
                              st.good_stamp == cycle or st.bads_stamp == cycle)
                )

    def _run_sync(self, task) -> None:
        """Compute and commit a register group.  Group results are fully
        computed before any commit so intra-group reads see current-cycle
        values; cross-task ordering comes from the dependency edges."""

        graph = self.graph
        states = self.states
        cycle = self._cycle
        results = []
        for rid in task.regs:
            reg = graph.nodes[rid]
            st = states[rid]
            next_st = states[reg.next_src]
            nf = self.nf[rid]
            if not self.config.force_always_eval and not sync_check_needed(
                reg, st, next_st, nf, cycle + 1
            ):
                results.append(None)
            else:
                results.append(sync_register(reg, st, next_st, nf, cycle + 1))
        self._commit_sync(task, results)

    def _commit_sync(self, task, results) -> None:
        states = self.states
        serve = self._cycle + 1
        for rid, res in zip(task.regs, results):
            st = states[rid]
            if res is None:
                self._skipped += 1
                continue
            new_good, new_bads = res
            if new_good != st.good:
                st.good = new_good
                st.good_stamp = serve
            if new_bads != st.bads:
                st.bads = new_bads
                st.bads_stamp = serve
            self._executed += 1
            if self.config.record_deltas:
                self.deltas[-1].append(
                    EvalDelta(rid, new_good, list(new_bads),
                              st.good_stamp == serve or st.bads_stamp == serve)
                )

    def _commit(self, nid: int, st: NodeState, new_good: int, new_bads, cycle: int) -> None:
        if new_good != st.good:
            st.good = new_good
            st.good_stamp = cycle
        if new_bads != st.bads:
            st.bads = new_bads
            st.bads_stamp = cycle
        st.last_eval_pass = cycle
        if self.config.record_deltas:
            self.deltas[-1].append(EvalDelta(
                nid, new_good, list(new_bads),
                st.good_stamp == cycle or st.bads_stamp == cycle))

    # -- cycle loop ----------------------------------------------------------

    def run(self) -> SimulationReport:
        cfg = self.config
        host_start = time.perf_counter_ns()
        for cycle, row in enumerate(self.rows):
            self._cycle = cycle
            self._run_one_cycle(cycle, row)
        self.totals.host_ns = time.perf_counter_ns() - host_start
        report = SimulationReport(
            results=build_results(self.faults, self.detections),
            config=cfg.echo(),
            cycles=self.cycle_stats,
            totals=self.totals,
        )
        if cfg.record_outputs:
            report.output_trace = self.output_trace
        return report

    def _run_one_cycle(self, cycle: int, row) -> None:
        cfg = self.config
        tg = self.tg
        boundary0 = time.perf_counter_ns()
        apply_stimulus_row(self.graph, self.states, row, cycle)
        if cfg.steady_state_check:
            # Registers commit mid-drain under the unified schedule; the
            # re-sweep must judge settlement against the values this cycle read.
            self._reg_snapshot = {
                rid: (self.states[rid].good, list(self.states[rid].bads))
                for rid in self.graph.regs
            }
        counts, ready = reset_for_cycle(tg)
        self.monitor.reset()
        self._executed = 0
        self._skipped = 0
        self._sync_ns = 0
        if cfg.cost_table is not None:
            self._cost_replay = cfg.cost_table[cycle] if cycle < len(cfg.cost_table) else {}
        if cfg.record_costs:
            self._cost_log = {}
            self.cost_log.append(self._cost_log)
        if cfg.record_deltas:
            self.deltas.append([])
        trace: list | None = [] if cfg.record_trace else None
        expected = len(tg.tasks) if tg.unified else len(tg.tasks) - len(tg.sync_tasks)
        boundary_ns = time.perf_counter_ns() - boundary0

        pool0 = time.perf_counter_ns()
        phase1 = self.pool.run_phase(counts, ready, tg.tasks, self._execute, trace)
        pool_host_ns = time.perf_counter_ns() - pool0
        self._check_drained(phase1, counts, expected)
        wall = phase1.makespan_ns
        busy = phase1.busy_ns

        b1 = time.perf_counter_ns()
        for hit in scan_outputs(self.graph, self.states, self.detections, cycle):
            self.detections[hit[0]] = (hit[1], hit[2])
        boundary_ns += time.perf_counter_ns() - b1

        if not tg.unified:
            ready2 = []
            for tid in tg.sync_tasks:
                counts[tid] = tg.sync_pred_reset[tid]
                if counts[tid] == 0:
                    ready2.append(tid)
            pool0 = time.perf_counter_ns()
            phase2 = self.pool.run_phase(
                counts, ready2, tg.tasks, self._execute, trace, time_base=wall
            )
            pool_host_ns += time.perf_counter_ns() - pool0
            if len(phase2.executed) != len(tg.sync_tasks):
                raise SimulationError(
                    f"cycle {cycle}: commit phase drained with "
                    f"{len(tg.sync_tasks) - len(phase2.executed)} unexecuted tasks"
                )
            wall += phase2.makespan_ns
            busy = [a + b for a, b in zip(busy, phase2.busy_ns)]

        b3 = time.perf_counter_ns()
        if cfg.drop_on_detect:
            self._drop_detected()
        expansions: tuple[int, ...] = ()
        if cfg.expansion_enabled and cfg.max_expansions_per_cycle > 0:
            flagged = flag_overloaded(self.monitor, tg, cfg.threshold)
            chosen = flagged[: cfg.max_expansions_per_cycle]
            for nid in chosen:
                expand_high_load(tg, nid, cfg.effective_slaves)
            expansions = tuple(chosen)
        if cfg.steady_state_check:
            self._assert_steady(cycle)
        boundary_ns += time.perf_counter_ns() - b3

        if cfg.record_trace:
            self.traces.append(trace)
        dispatched = self._executed + self._skipped
        kernel_ns = sum(busy)
        stats = CycleStats(
            cycle=cycle,
            wall_ns=wall + boundary_ns,
            busy_ns=tuple(busy),
            executed=self._executed,
            skipped=self._skipped,
            expansions=expansions,
            sync_ns=self._sync_ns,
        )
        self.cycle_stats.append(stats)
        t = self.totals
        t.wall_ns += stats.wall_ns
        t.executed += self._executed
        t.skipped += self._skipped
        t.dispatches += dispatched
        t.dispatch_overhead_ns += max(0, pool_host_ns - kernel_ns)
        t.busy_ns = tuple(
            a + b for a, b in zip(t.busy_ns or (0,) * len(busy), busy)
        )
        if cfg.record_outputs:
            self.output_trace.append(
                tuple(self.states[o].good for o in self.graph.outputs)
            )

    def _check_drained(self, phase: PhaseResult, counts, expected: int) -> None:
        if len(phase.executed) == expected:
            return
        done = set(phase.executed)
        stuck = [
            (t.id, t.kind, counts[t.id])
            for t in self.tg.tasks
            if t.id not in done and (self.tg.unified or t.kind != SYNC)
        ]
        raise SimulationError(
            f"cycle {self._cycle}: pool drained with {len(stuck)} unexecuted "
            f"tasks; (id, kind, pending preds): {stuck[:20]}"
        )

    def _drop_detected(self) -> None:
        fids = set(self.detections)
        for _, entry in self.table.all_entries():
            if entry.fid in fids:
                entry.dropped = True
        for st in self.states:
            if st.bads and any(f in fids for f, _ in st.bads):
                st.bads = [e for e in st.bads if e[0] not in fids]

    def _assert_steady(self, cycle: int) -> None:
        """Debug re-sweep: re-evaluating any node must change nothing."""

        def fanin_state(fid: int) -> NodeState:
            snap = self._reg_snapshot.get(fid)
            if snap is None:
                return self.states[fid]
            shim = NodeState(snap[0], snap[1])
            return shim

        for nid in self.graph.topo:
            node = self.graph.nodes[nid]
            if node.kind not in rtl.TASK_KINDS:
                continue
            st = self.states[nid]
            fanin_states = [fanin_state(f) for f in node.fanin]
            nf = self.nf[nid]
            good = eval_good(node, [fs.good for fs in fanin_states])
            affected = affected_fids(node, fanin_states, nf, st, cycle)
            bads = eval_bad_set(
                node, fanin_states, nf, good, cycle, affected, 0, len(affected)
            )
            if good != st.good or bads != st.bads:
                raise SimulationError(
                    f"cycle {cycle}: node '{node.name}' not steady after drain"
                )


def run_simulation(
    graph: RtlGraph,
    faults: list[FaultDescriptor],
    stimulus,
    config: SimConfig | None = None,
) -> SimulationReport:
    """Inject, build the task graph for the configured mode, and simulate
    the whole stimulus."""

    config = config or SimConfig()
    config.validate()
    if config.mode == MODE_SERIAL:
        from .oracles import run_serial_concurrent

        return run_serial_concurrent(graph, faults, stimulus, config)
    return SimulationEngine(graph, faults, stimulus, config).run()
