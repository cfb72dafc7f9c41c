import random

from hypothesis import given, settings, strategies as st

from faultsim.faults import NO_FAULTS, FaultDescriptor, FaultEntry, NodeFaults, inject
from faultsim.kernels import (
    NodeState, affected_fids, apply_op, check_dependence_changed, eval_bad_set,
    eval_good, initial_states, sync_check_needed, sync_register,
)
from faultsim.oracles import _ref_op, run_single_fault
from faultsim.rtl import RtlNode
from faultsim.scheduler import run_simulation
from faultsim.config import SimConfig

from conftest import build


def comb(op, width, nfanin, **kw):
    return RtlNode(0, "comb", "n", width, op=op,
                   fanin=list(range(nfanin)), **kw)


def rule(fid, bit, kind, start=0, end=0, name="y"):
    return FaultDescriptor(fid, "wire", name, bit, kind, start, end)


def entry(fid, bit, kind, start=0, end=0):
    return FaultEntry(fid, rule(fid, bit, kind, start, end))


def nf(*entries):
    return NodeFaults(list(entries))


class TestEvalGood:
    def test_basic_truths(self):
        assert eval_good(comb("AND", 1, 2), [1, 1]) == 1
        assert eval_good(comb("AND", 1, 2), [1, 0]) == 0
        assert eval_good(comb("ADD", 8, 2), [0xFF, 0x01]) == 0x00
        assert eval_good(comb("SUB", 4, 2), [0x0, 0x1]) == 0xF
        assert eval_good(comb("MUL", 4, 2), [0x7, 0x3]) == 0x5
        assert eval_good(comb("MUX", 4, 3), [1, 0xA, 0xB]) == 0xA
        assert eval_good(comb("MUX", 4, 3), [0, 0xA, 0xB]) == 0xB
        assert eval_good(comb("EQ", 1, 2), [5, 5]) == 1
        assert eval_good(comb("LT", 1, 2), [3, 5]) == 1
        assert eval_good(comb("NOT", 4, 1), [0b1010]) == 0b0101
        assert eval_good(comb("SHL", 8, 2), [0x81, 1]) == 0x02
        assert eval_good(comb("SHR", 8, 2), [0x81, 4]) == 0x08
        assert eval_good(comb("SHR", 8, 2), [0x81, 200]) == 0
        assert eval_good(comb("XOR", 2, 2), [0b01, 0b11]) == 0b10
        assert eval_good(comb("OR", 2, 2), [0b01, 0b10]) == 0b11

    def test_slice_and_concat(self):
        assert eval_good(comb("SLICE", 4, 1, slice_hi=7, slice_lo=4), [0xA5]) == 0xA
        assert eval_good(comb("CONCAT", 8, 2, concat_lo_width=4), [0xA, 0x5]) == 0xA5

    def test_zero_extension_of_narrow_operands(self):
        # 4-bit values into an 8-bit ADD behave as zero-extended.
        assert eval_good(comb("ADD", 8, 2), [0xF, 0x1]) == 0x10

    def test_truncation_to_result_width(self):
        assert eval_good(comb("XOR", 4, 2), [0xFF, 0x0F]) == 0x0
        assert eval_good(comb("MUX", 2, 3), [1, 0xFF, 0x00]) == 0x3

    def test_pass_through_kinds(self):
        virt = RtlNode(0, "virtual", "v", 4, fanin=[1])
        assert eval_good(virt, [0x1F]) == 0xF
        out = RtlNode(0, "output", "o", 8, fanin=[1])
        assert eval_good(out, [0x12]) == 0x12


wide_vals = st.integers(0, 2**64 - 1)


@settings(max_examples=300, deadline=None)
@given(op=st.sampled_from(["AND", "OR", "XOR", "NOT", "ADD", "SUB", "MUL",
                           "EQ", "LT", "MUX", "SHL", "SHR"]),
       a=wide_vals, b=wide_vals, s=st.integers(0, 1),
       width=st.integers(1, 64))
def test_kernel_and_reference_operator_semantics_agree(op, a, b, s, width):
    """The engine kernel and the independently written reference evaluator
    must implement identical operator semantics."""

    mask = (1 << width) - 1
    if op == "NOT":
        node, vals = comb(op, width, 1), [a & mask]
    elif op == "MUX":
        node, vals = comb(op, width, 3), [s, a & mask, b & mask]
    elif op in ("SHL", "SHR"):
        node, vals = comb(op, width, 2), [a & mask, b & 0x7F]
    else:
        node, vals = comb(op, width, 2), [a & mask, b & mask]
    assert apply_op(node, vals) == _ref_op(node, vals)


@settings(max_examples=120, deadline=None)
@given(a=wide_vals, hi=st.integers(0, 63), lo=st.integers(0, 63),
       wlo=st.integers(1, 32), whi=st.integers(1, 32))
def test_slice_concat_semantics_agree(a, hi, lo, wlo, whi):
    hi, lo = max(hi, lo), min(hi, lo)
    node = comb("SLICE", hi - lo + 1, 1, slice_hi=hi, slice_lo=lo)
    vals = [a]
    assert apply_op(node, vals) == _ref_op(node, vals)
    node2 = comb("CONCAT", min(64, wlo + whi), 2, concat_lo_width=wlo)
    vals2 = [a & ((1 << whi) - 1), a & ((1 << wlo) - 1)]
    assert apply_op(node2, vals2) == _ref_op(node2, vals2)


class TestAffectedFids:
    def test_empty(self):
        node = comb("AND", 1, 2)
        states = [NodeState(1), NodeState(1)]
        assert affected_fids(node, states, NO_FAULTS, NodeState(1), 0) == []

    def test_union_of_sources(self):
        node = comb("AND", 1, 2)
        fan = [NodeState(1, [(3, 0), (7, 0)]), NodeState(1, [(7, 0)])]
        own = NodeState(1, [(12, 0)])
        faults = nf(entry(7, 0, "sa0"), entry(9, 0, "sa1"))
        assert affected_fids(node, fan, faults, own, 0) == [3, 7, 9, 12]

    def test_inactive_window_excluded(self):
        node = comb("AND", 1, 2)
        faults = nf(entry(4, 0, "transient", 3, 5))
        fan = [NodeState(1), NodeState(1)]
        assert affected_fids(node, fan, faults, NodeState(1), 0) == []
        assert affected_fids(node, fan, faults, NodeState(1), 4) == [4]


class TestEvalBadSet:
    def test_divergence_kept(self):
        node = comb("AND", 1, 2)
        fan = [NodeState(1, [(4, 0)]), NodeState(1)]
        out = eval_bad_set(node, fan, NO_FAULTS, 1, 0, [4], 0, 1)
        assert out == [(4, 0)]

    def test_masking_drops_entry(self):
        node = comb("OR", 1, 2)
        fan = [NodeState(1), NodeState(0, [(4, 1)])]
        out = eval_bad_set(node, fan, NO_FAULTS, 1, 0, [4], 0, 1)
        assert out == []

    def test_forced_value_equal_to_good_not_stored(self):
        # Stuck-at-0 on an AND whose good output is already 0.
        node = comb("AND", 1, 2)
        fan = [NodeState(0), NodeState(1)]
        faults = nf(entry(9, 0, "sa0"))
        affected = affected_fids(node, fan, faults, NodeState(0), 0)
        assert affected == [9]
        assert eval_bad_set(node, fan, faults, 0, 0, affected, 0, 1) == []

    def test_inactive_stuck_fault_produces_no_divergence_anywhere(self):
        text = """
module m
input a 1
assign n1 1 = NOT a
assign n2 1 = NOT n1
output o 1 = n2
end
"""
        g = build(text)
        fault = FaultDescriptor(0, "port", "a", 0, "sa1")
        rows = [[1], [1], [1]]
        oracle = run_single_fault(build(text), fault, rows)
        assert not oracle.detected
        report = run_simulation(g, [fault], rows,
                                SimConfig(workers=2, record_outputs=True))
        assert not report.results[0].detected
        g2 = build(text)
        from faultsim.oracles import run_good_trace
        assert report.output_trace == run_good_trace(g2, rows)

    @settings(max_examples=60, deadline=None)
    @given(data=st.data())
    def test_range_decomposition(self, data):
        """Evaluating the affected list piecewise over any partition equals
        evaluating it whole; fault-level splitting relies on this exactly."""

        rng = random.Random(data.draw(st.integers(0, 10**6)))
        width = rng.randint(1, 8)
        node = comb(rng.choice(["AND", "OR", "XOR", "ADD"]), width, 2)
        def rand_bads():
            fids = sorted(rng.sample(range(40), rng.randint(0, 10)))
            return [(f, rng.randrange(1 << width)) for f in fids]
        fan = [NodeState(rng.randrange(1 << width), rand_bads()) for _ in range(2)]
        own = NodeState(rng.randrange(1 << width), rand_bads())
        faults = NodeFaults([
            entry(f, rng.randrange(width), rng.choice(["sa0", "sa1"]))
            for f in rng.sample(range(40), rng.randint(0, 4))
        ])
        new_good = apply_op(node, [fan[0].good, fan[1].good])
        affected = affected_fids(node, fan, faults, own, 0)
        whole = eval_bad_set(node, fan, faults, new_good, 0,
                             affected, 0, len(affected))
        cuts = sorted(rng.sample(range(len(affected) + 1), rng.randint(0, 3)))
        bounds = [0] + cuts + [len(affected)]
        pieces = []
        for b, e in zip(bounds, bounds[1:]):
            pieces.extend(eval_bad_set(node, fan, faults, new_good, 0,
                                       affected, b, e))
        assert pieces == whole


class TestDependenceCheck:
    def test_first_cycle_always_true(self):
        node = comb("AND", 1, 2)
        assert check_dependence_changed(node, [NodeState(), NodeState()], NO_FAULTS, 0)

    def test_stable_fanins_skip(self):
        node = comb("AND", 1, 2)
        assert not check_dependence_changed(node, [NodeState(), NodeState()], NO_FAULTS, 3)

    def test_changed_fanin_triggers(self):
        node = comb("AND", 1, 2)
        changed = NodeState()
        changed.bads_stamp = 3
        assert check_dependence_changed(node, [NodeState(), changed], NO_FAULTS, 3)
        assert not check_dependence_changed(node, [NodeState(), changed], NO_FAULTS, 4)

    def test_window_toggle_triggers(self):
        node = comb("AND", 1, 2)
        faults = nf(entry(0, 0, "transient", 3, 5))
        quiet = [NodeState(), NodeState()]
        assert check_dependence_changed(node, quiet, faults, 3)
        assert not check_dependence_changed(node, quiet, faults, 4)
        assert check_dependence_changed(node, quiet, faults, 6)
        assert not check_dependence_changed(node, quiet, faults, 7)


def reg_node(width=1, init=0):
    return RtlNode(0, "reg", "r", width, init=init)


class TestSyncRegister:
    def test_plain_copy(self):
        reg = reg_node(4)
        good, bads = sync_register(reg, NodeState(0), NodeState(5, []), NO_FAULTS, 1)
        assert (good, bads) == (5, [])

    def test_incoming_bads_filtered_against_new_good(self):
        reg = reg_node(4)
        nxt = NodeState(5, [(2, 5), (7, 9)])
        good, bads = sync_register(reg, NodeState(0), nxt, NO_FAULTS, 1)
        assert (good, bads) == (5, [(7, 9)])

    def test_one_bit_brute_force_against_enumeration(self):
        """Exhaustive 1-bit check: every (good, incoming bad, rule) case
        matches independently enumerated stuck-at semantics."""

        for incoming_good in (0, 1):
            for incoming_bad in (None, 0, 1):
                for kind in ("sa0", "sa1"):
                    reg = reg_node(1)
                    faults = nf(entry(9, 0, kind))
                    nxt = NodeState(incoming_good)
                    if incoming_bad is not None:
                        nxt.bads = [(9, incoming_bad)] if incoming_bad != incoming_good else []
                    good, bads = sync_register(reg, NodeState(0), nxt, faults, 1)
                    base = incoming_bad if incoming_bad is not None else incoming_good
                    forced = 0 if kind == "sa0" else 1
                    expect = [(9, forced)] if forced != incoming_good else []
                    assert good == incoming_good
                    assert bads == expect, (incoming_good, incoming_bad, kind)

    def test_transient_state_persists_after_window(self):
        """A transient flip on a counter register lingers through state even
        after the window closes; truth from the one-fault resimulator."""

        text = """
module m
input en 1
reg cnt 4 = 0
assign inc 4 = ADD cnt #1:4
output o 4 = cnt
next cnt = inc
end
"""
        fault = FaultDescriptor(0, "reg", "cnt", 0, "transient", 1, 2)
        rows = [[1]] * 6
        oracle = run_single_fault(build(text), fault, rows)
        report = run_simulation(build(text), [fault], rows,
                                SimConfig(workers=2, record_outputs=True))
        assert oracle.output_trace != [(r[0],) for r in rows]  # fault did act
        assert report.results[0].detected == oracle.detected
        assert report.results[0].detect_cycle == oracle.detect_cycle
        # Divergence remains observable after the window [1, 2] closes.
        g_check = build(text)
        from faultsim.oracles import run_good_trace
        good = run_good_trace(g_check, rows)
        assert oracle.output_trace[4] != good[4]

    def test_sync_skip_check_cold_start(self):
        reg = reg_node(4)
        assert sync_check_needed(reg, NodeState(), NodeState(), NO_FAULTS, 1)
        assert not sync_check_needed(reg, NodeState(), NodeState(), NO_FAULTS, 3)


def test_initial_states_apply_reg_rules():
    text = "module m\ninput a 4\nreg r 4 = 6\nnext r = a\nend"
    g = build(text)
    table = inject(g, [FaultDescriptor(0, "reg", "r", 0, "sa1")])
    states = initial_states(g, table)
    rid = g.name_to_id["r"]
    assert states[rid].good == 6
    assert states[rid].bads == [(0, 7)]
