import pytest
from hypothesis import given, strategies as st

from faultsim.taskgraph import (
    MASTER, SLAVE, SYNC, build_task_graph, canonical_form, dump_dot,
    expand_high_load, make_task_graph, publish_ranges, reset_for_cycle,
)

from conftest import build

CHAIN = """
module m
input a 1
assign b 1 = NOT a
assign c 1 = NOT b
end
"""

DIAMOND = """
module m
input a 1
assign b 1 = NOT a
assign c 1 = NOT a
assign d 1 = AND b c
end
"""


def task_of(tg, g, name):
    return tg.tasks[tg.node_task[g.name_to_id[name]]]


def test_chain_two_tasks_one_edge():
    g = build(CHAIN)
    tg = build_task_graph(g)
    assert len(tg.tasks) == 2  # inputs carry no task
    b, c = task_of(tg, g, "b"), task_of(tg, g, "c")
    assert b.preds == set() and c.preds == {b.id}
    assert b.succs == [c.id]


def test_diamond_pred_count():
    g = build(DIAMOND)
    tg = build_task_graph(g)
    d = task_of(tg, g, "d")
    assert len(d.preds) == 2
    counts, ready = reset_for_cycle(tg)
    assert counts[d.id] == 2
    assert set(ready) == {task_of(tg, g, "b").id, task_of(tg, g, "c").id}


SYNCED = """
module m
input x 1
reg r 1 = 0
assign d 1 = NOT r
assign e 1 = AND d x
output o 1 = e
next r = e
end
"""


def test_sync_task_waits_for_readers_and_producer():
    g = build(SYNCED)
    tg = make_task_graph(g, unified=True, slave_count=1)
    sync = tg.tasks[tg.sync_tasks[0]]
    d = task_of(tg, g, "d")   # reads r
    e = task_of(tg, g, "e")   # produces next r
    assert sync.kind == SYNC
    assert sync.preds == {d.id, e.id}
    assert sync.succs == []


def test_sync_with_no_readers_waits_for_producer_only():
    text = """
module m
input x 1
reg r 1 = 0
assign e 1 = NOT x
output o 1 = e
next r = e
end
"""
    g = build(text)
    tg = make_task_graph(g, unified=True, slave_count=1)
    sync = tg.tasks[tg.sync_tasks[0]]
    assert sync.preds == {task_of(tg, g, "e").id}


def test_grouped_regs_union_dependencies():
    text = """
module m
input x 1
reg r1 1 = 0
reg r2 1 = 0
assign a 1 = NOT r1
assign b 1 = NOT r2
output o 1 = a
next r1 = b
next r2 = x
end
"""
    g = build(text)
    tg = make_task_graph(g, unified=True, slave_count=1, group_size=2)
    assert len(tg.sync_tasks) == 1
    sync = tg.tasks[tg.sync_tasks[0]]
    a, b = task_of(tg, g, "a"), task_of(tg, g, "b")
    assert sync.preds == {a.id, b.id}


def test_reg_to_reg_chain_orders_syncs():
    text = """
module m
input x 1
reg r1 1 = 0
reg r2 1 = 0
output o 1 = r2
next r1 = x
next r2 = r1
end
"""
    g = build(text)
    tg = make_task_graph(g, unified=True, slave_count=1)
    sync_r1 = tg.tasks[tg.sync_tasks[0]]
    sync_r2 = tg.tasks[tg.sync_tasks[1]]
    # r2 captures r1's current value, so r1 commits only after r2 did.
    assert sync_r2.id in sync_r1.preds
    assert sync_r2.preds == {task_of(tg, g, "o").id}


def test_expansion_topology():
    g = build(DIAMOND)
    tg = build_task_graph(g)
    b, c, d = (task_of(tg, g, n) for n in "bcd")
    expand_high_load(tg, c.node, 2)
    assert c.kind == MASTER
    slaves = [t for t in tg.tasks if t.kind == SLAVE]
    assert [s.slave_index for s in slaves] == [0, 1]
    for s in slaves:
        assert s.preds == {c.id}
        assert s.succs == [d.id]
    assert d.preds == {b.id, c.id} | {s.id for s in slaves}
    assert c.succs[:2] == [s.id for s in slaves]


def test_expansion_k1_degenerate():
    g = build(CHAIN)
    tg = build_task_graph(g)
    b = task_of(tg, g, "b")
    expand_high_load(tg, b.node, 1)
    slaves = [t for t in tg.tasks if t.kind == SLAVE]
    assert len(slaves) == 1


def test_double_expansion_rejected():
    g = build(CHAIN)
    tg = build_task_graph(g)
    b = task_of(tg, g, "b")
    expand_high_load(tg, b.node, 2)
    with pytest.raises(ValueError, match="already expanded"):
        expand_high_load(tg, b.node, 2)


def test_expansions_commute():
    g1 = build(DIAMOND)
    tg1 = make_task_graph(g1, unified=True, slave_count=2)
    g2 = build(DIAMOND)
    tg2 = make_task_graph(g2, unified=True, slave_count=2)
    nb, nc = g1.name_to_id["b"], g1.name_to_id["c"]
    expand_high_load(tg1, nb, 2)
    expand_high_load(tg1, nc, 2)
    expand_high_load(tg2, nc, 2)
    expand_high_load(tg2, nb, 2)
    assert canonical_form(tg1) == canonical_form(tg2)


def test_publish_ranges_examples():
    assert publish_ranges(10, 3) == [(0, 4), (4, 7), (7, 10)]
    assert publish_ranges(0, 4) == [(0, 0)] * 4
    assert publish_ranges(7, 7) == [(i, i + 1) for i in range(7)]


@given(n=st.integers(0, 500), k=st.integers(1, 16))
def test_publish_ranges_partition_property(n, k):
    ranges = publish_ranges(n, k)
    assert len(ranges) == k
    assert ranges[0][0] == 0 and ranges[-1][1] == n
    sizes = [e - b for b, e in ranges]
    assert all(b <= e for b, e in ranges)
    assert all(ranges[i][1] == ranges[i + 1][0] for i in range(k - 1))
    assert max(sizes) - min(sizes) <= 1
    assert sizes == sorted(sizes, reverse=True)


def test_reset_after_expansion_master_entry_unchanged():
    g = build(CHAIN)
    tg = build_task_graph(g)
    b = task_of(tg, g, "b")
    _, ready_before = reset_for_cycle(tg)
    expand_high_load(tg, b.node, 2)
    _, ready_after = reset_for_cycle(tg)
    assert b.id in ready_before and b.id in ready_after
    slaves = [t.id for t in tg.tasks if t.kind == SLAVE]
    assert not set(slaves) & set(ready_after)


def test_barrier_wiring_excludes_sync_from_entry():
    g = build(SYNCED)
    tg = make_task_graph(g, unified=False, slave_count=1)
    counts, ready = reset_for_cycle(tg)
    assert set(ready).isdisjoint(set(tg.sync_tasks))
    for tid in tg.sync_tasks:
        assert counts[tid] == -1


def test_dump_dot_golden():
    g = build(SYNCED)
    tg = make_task_graph(g, unified=True, slave_count=1)
    expected = (
        "digraph tasks {\n"
        '  t0 [label="default(n2)"];\n'
        '  t1 [label="default(n3)"];\n'
        '  t2 [label="default(n4)"];\n'
        '  t3 [label="sync(1)"];\n'
        "  t0 -> t1;\n"
        "  t0 -> t3;\n"
        "  t1 -> t2;\n"
        "  t1 -> t3;\n"
        "}\n"
    )
    assert dump_dot(tg) == expected


def test_register_swap_merges_commit_tasks():
    text = """
module m
input x 1
reg r1 4 = 3
reg r2 4 = c
output o1 4 = r1
output o2 4 = r2
next r1 = r2
next r2 = r1
end
"""
    g = build(text)
    tg = make_task_graph(g, unified=True, slave_count=1)
    assert len(tg.sync_tasks) == 1
    merged = tg.tasks[tg.sync_tasks[0]]
    assert merged.regs == tuple(sorted(g.regs))


def test_register_rotation_ring_merges():
    text = """
module m
input x 1
reg a 2 = 0
reg b 2 = 1
reg c 2 = 2
output o 2 = a
next a = b
next b = c
next c = a
end
"""
    g = build(text)
    tg = make_task_graph(g, unified=True, slave_count=1)
    assert len(tg.sync_tasks) == 1
    assert tg.tasks[tg.sync_tasks[0]].regs == tuple(sorted(g.regs))
