"""Elaboration of parsed declarations into a validated RTL graph.

The graph is the simulator's circuit model: one node per declared net plus
one node per distinct literal constant.  Register nodes hold their current
value and point at the node producing their next value (``next_src``); the
combinational view therefore treats registers, inputs and constants as
sources, which is what makes per-cycle evaluation a DAG traversal.

Value semantics are two-state and unsigned.  Every node value is kept
masked to the node's width; operands narrower than the computation are
zero-extended (which is a no-op on masked ints) and results are truncated
by masking.  EQ/LT compare their operands at full operand width and
produce 0/1.  CONCAT places its first operand in the high bits.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .netlist import Literal, NetlistDecl, parse_module

INPUT = "input"
CONST = "const"
COMB = "comb"
REG = "reg"
OUTPUT = "output"
VIRTUAL = "virtual"

# Node kinds that are evaluated during a cycle (and therefore carry a
# compute task); the rest are value sources sealed at cycle start.
TASK_KINDS = (COMB, OUTPUT, VIRTUAL)


class ElaborationError(ValueError):
    pass


@dataclass
class RtlNode:
    id: int
    kind: str
    name: str
    width: int
    op: str | None = None
    fanin: list[int] = field(default_factory=list)
    fanout: list[int] = field(default_factory=list)
    next_src: int | None = None
    init: int = 0  # reset value for regs, constant value for consts
    slice_hi: int = 0
    slice_lo: int = 0
    concat_lo_width: int = 0

    @property
    def mask(self) -> int:
        return (1 << self.width) - 1


@dataclass
class RtlGraph:
    name: str
    nodes: list[RtlNode]
    topo: list[int]
    inputs: list[int]
    outputs: list[int]
    regs: list[int]
    name_to_id: dict[str, int]
    port_carriers: dict[int, int] = field(default_factory=dict)

    def node(self, nid: int) -> RtlNode:
        return self.nodes[nid]

    def comb_edges(self):
        """Yield every (producer, consumer) edge of the combinational view."""
        for node in self.nodes:
            if node.kind in TASK_KINDS:
                for src in node.fanin:
                    yield src, node.id

    def recompute_topo(self) -> None:
        self.topo = _topo_sort(self.nodes)


def _topo_sort(nodes: list[RtlNode]) -> list[int]:
    indeg = [0] * len(nodes)
    for node in nodes:
        if node.kind in TASK_KINDS:
            indeg[node.id] = len(node.fanin)
    ready = [n.id for n in nodes if indeg[n.id] == 0]
    heapq.heapify(ready)
    order: list[int] = []
    while ready:
        nid = heapq.heappop(ready)
        order.append(nid)
        for succ in nodes[nid].fanout:
            indeg[succ] -= 1
            if indeg[succ] == 0:
                heapq.heappush(ready, succ)
    if len(order) != len(nodes):
        cycle = _find_cycle(nodes, [i for i, d in enumerate(indeg) if d > 0])
        names = " -> ".join(nodes[nid].name for nid in cycle)
        raise ElaborationError(f"combinational cycle: {names}")
    return order


def _find_cycle(nodes: list[RtlNode], remaining: list[int]) -> list[int]:
    pending = set(remaining)
    start = remaining[0]
    seen: dict[int, int] = {}
    path: list[int] = []
    nid = start
    while nid not in seen:
        seen[nid] = len(path)
        path.append(nid)
        nid = next(src for src in nodes[nid].fanin if src in pending)
    loop = path[seen[nid]:] + [nid]
    loop.reverse()
    return loop


def elaborate(decls: list[NetlistDecl], name: str = "main") -> RtlGraph:
    """Resolve names, validate widths, and build the topologically ordered graph."""

    nodes: list[RtlNode] = []
    name_to_id: dict[str, int] = {}
    const_cache: dict[tuple[int, int], int] = {}

    def add(kind: str, nm: str, width: int, **kw) -> RtlNode:
        node = RtlNode(len(nodes), kind, nm, width, **kw)
        nodes.append(node)
        return node

    decl_of: dict[str, NetlistDecl] = {}
    for d in decls:
        if d.kind == "next":
            continue
        if d.name in decl_of:
            raise ElaborationError(f"duplicate declaration '{d.name}'")
        decl_of[d.name] = d
        kind = {"input": INPUT, "output": OUTPUT, "reg": REG, "assign": COMB}[d.kind]
        node = add(kind, d.name, d.width, op=d.op, init=d.init,
                   slice_hi=d.slice_hi, slice_lo=d.slice_lo)
        name_to_id[d.name] = node.id

    def resolve(operand) -> int:
        if isinstance(operand, Literal):
            key = (operand.value, operand.width)
            if key not in const_cache:
                cnode = add(CONST, str(operand), operand.width, init=operand.value)
                const_cache[key] = cnode.id
            return const_cache[key]
        nid = name_to_id.get(operand)
        if nid is None:
            raise ElaborationError(f"undeclared identifier '{operand}'")
        return nid

    next_of: dict[str, NetlistDecl] = {}
    for d in decls:
        if d.kind != "next":
            continue
        if d.name in next_of:
            raise ElaborationError(f"duplicate 'next' for reg '{d.name}'")
        target = decl_of.get(d.name)
        if target is None or target.kind != "reg":
            raise ElaborationError(f"'next {d.name}' does not target a declared reg")
        next_of[d.name] = d

    for d in decls:
        if d.kind in ("assign", "output"):
            node = nodes[name_to_id[d.name]]
            node.fanin = [resolve(op) for op in d.operands]
            for src in node.fanin:
                nodes[src].fanout.append(node.id)
        elif d.kind == "reg":
            if d.name not in next_of:
                raise ElaborationError(f"reg '{d.name}' has no 'next' declaration")

    for d in next_of.values():
        reg = nodes[name_to_id[d.name]]
        reg.next_src = resolve(d.operands[0])

    for node in nodes:
        if node.kind != COMB:
            continue
        widths = [nodes[src].width for src in node.fanin]
        if node.op == "SLICE":
            hi, lo = node.slice_hi, node.slice_lo
            if not (0 <= lo <= hi < widths[0]):
                raise ElaborationError(
                    f"'{node.name}': SLICE [{hi}:{lo}] out of bounds for "
                    f"{widths[0]}-bit operand"
                )
            if node.width != hi - lo + 1:
                raise ElaborationError(
                    f"'{node.name}': SLICE [{hi}:{lo}] yields {hi - lo + 1} bits, "
                    f"declared {node.width}"
                )
        elif node.op == "CONCAT":
            if node.width != widths[0] + widths[1]:
                raise ElaborationError(
                    f"'{node.name}': CONCAT of {widths[0]}+{widths[1]} bits, "
                    f"declared {node.width}"
                )
            node.concat_lo_width = widths[1]
        elif node.op == "MUX":
            if widths[0] != 1:
                raise ElaborationError(
                    f"'{node.name}': MUX select must be 1 bit, got {widths[0]}"
                )

    topo = _topo_sort(nodes)
    return RtlGraph(
        name=name,
        nodes=nodes,
        topo=topo,
        inputs=[n.id for n in nodes if n.kind == INPUT],
        outputs=[n.id for n in nodes if n.kind == OUTPUT],
        regs=[n.id for n in nodes if n.kind == REG],
        name_to_id=name_to_id,
    )


def elaborate_text(text: str) -> RtlGraph:
    name, decls = parse_module(text)
    return elaborate(decls, name)


def topo_positions(graph: RtlGraph) -> list[int]:
    """Position of each node id within graph.topo (id-indexed)."""

    pos = [0] * len(graph.nodes)
    for position, nid in enumerate(graph.topo):
        pos[nid] = position
    return pos


def graph_to_netlist(graph: RtlGraph) -> str:
    """Print the graph back as netlist text (pre-injection graphs only)."""

    if any(n.kind == VIRTUAL for n in graph.nodes):
        raise ValueError("cannot print a graph containing injected virtual nodes")

    def operand(nid: int) -> str:
        node = graph.nodes[nid]
        return str(Literal(node.init, node.width)) if node.kind == CONST else node.name

    lines = [f"module {graph.name}"]
    for node in graph.nodes:
        if node.kind == INPUT:
            lines.append(f"input {node.name} {node.width}")
        elif node.kind == REG:
            lines.append(f"reg {node.name} {node.width} = {node.init:x}")
        elif node.kind == COMB:
            ops = " ".join(operand(src) for src in node.fanin)
            if node.op == "SLICE":
                ops = f"{node.slice_hi} {node.slice_lo} {ops}"
            lines.append(f"assign {node.name} {node.width} = {node.op} {ops}")
        elif node.kind == OUTPUT:
            lines.append(f"output {node.name} {node.width} = {operand(node.fanin[0])}")
    for rid in graph.regs:
        reg = graph.nodes[rid]
        lines.append(f"next {reg.name} = {operand(reg.next_src)}")
    lines.append("end")
    return "\n".join(lines) + "\n"
