"""Fault descriptors, batch injection, and forced-value rules.

Every fault, regardless of where it sits, ends up as an entry in the table
of exactly one evaluated node: a fault on a wire lands at the node driving
the wire, a fault on a reg lands at the reg itself (applied when the reg
commits), and a fault on an input port lands at a virtual pass-through
node spliced between the port and its consumers.  Faults on output ports
fall back to the wire rule on the output's driver.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from . import rtl
from .rtl import RtlGraph

SA0 = "sa0"
SA1 = "sa1"
TRANSIENT = "transient"
KIND_ORDER = (SA0, SA1, TRANSIENT)

WIRE = "wire"
REG = "reg"
PORT = "port"


class FaultModelError(ValueError):
    pass


@dataclass(frozen=True)
class FaultDescriptor:
    """One fault: a location, a bit lane, and a forcing rule.

    ``start``/``end`` bound the active cycle window of a transient fault
    (inclusive); stuck-at faults are active on every cycle.
    """

    fid: int
    location_kind: str
    location_name: str
    bit: int
    kind: str
    start: int = 0
    end: int = 0


@dataclass
class FaultEntry:
    """Per-node injection record; ``fval`` tracks the last forced value."""

    fid: int
    rule: FaultDescriptor
    injected_here: bool = True
    fval: int = 0
    dropped: bool = False


class NodeFaults:
    """Immutable per-node view of injected entries: the sorted entry list
    plus lookup structures the evaluation kernels index every cycle."""

    __slots__ = ("entries", "fid_map", "fids")

    def __init__(self, entries: list[FaultEntry]):
        entries = sorted(entries, key=lambda e: e.fid)
        self.entries = entries
        self.fid_map = {e.fid: e for e in entries}
        self.fids = [e.fid for e in entries]

    def __bool__(self) -> bool:
        return bool(self.entries)


NO_FAULTS = NodeFaults([])


class FaultTable:
    """Sorted per-node fault entries plus a fid -> site map."""

    def __init__(self):
        self._by_node: dict[int, list[FaultEntry]] = {}
        self._node_faults: dict[int, NodeFaults] = {}
        self.site_of: dict[int, int] = {}

    def entries(self, nid: int) -> list[FaultEntry]:
        return self._by_node.get(nid, [])

    def node_faults(self, nid: int) -> NodeFaults:
        return self._node_faults.get(nid, NO_FAULTS)

    def add(self, nid: int, entry: FaultEntry) -> None:
        if entry.fid in self.site_of:
            raise FaultModelError(f"duplicate fid {entry.fid}")
        self._by_node.setdefault(nid, []).append(entry)
        self.site_of[entry.fid] = nid

    def finalize(self) -> None:
        for nid, entries in self._by_node.items():
            entries.sort(key=lambda e: e.fid)
            self._node_faults[nid] = NodeFaults(entries)

    def all_entries(self):
        for nid, entries in self._by_node.items():
            for entry in entries:
                yield nid, entry


def window_active(rule: FaultDescriptor, cycle: int) -> bool:
    if rule.kind == TRANSIENT:
        return rule.start <= cycle <= rule.end
    return True


def window_toggles(rule: FaultDescriptor, cycle: int) -> bool:
    """True when the rule's active window opens or closes at this cycle."""

    if rule.kind != TRANSIENT or cycle <= 0:
        return False
    return window_active(rule, cycle) != window_active(rule, cycle - 1)


def faulty_val(rule: FaultDescriptor, computed: int, cycle: int) -> int:
    """Apply the forcing rule to a computed value for the given cycle."""

    lane = 1 << rule.bit
    if rule.kind == SA0:
        return computed & ~lane
    if rule.kind == SA1:
        return computed | lane
    if rule.start <= cycle <= rule.end:
        return computed ^ lane
    return computed


def generate_fault_list(
    graph: RtlGraph,
    kinds,
    transient_window: tuple[int, int] = (0, 0),
) -> list[FaultDescriptor]:
    """Enumerate faults over every wire bit, reg bit, and input-port bit.

    fids are assigned in (node id, bit, kind) order starting at 0, with
    kinds ordered sa0 < sa1 < transient.
    """

    kinds = [k.lower() for k in kinds]
    if not kinds:
        raise FaultModelError("empty fault kind set")
    for k in kinds:
        if k not in KIND_ORDER:
            raise FaultModelError(f"unknown fault kind '{k}'")
    ordered_kinds = [k for k in KIND_ORDER if k in kinds]

    faults: list[FaultDescriptor] = []
    for node in graph.nodes:
        if node.kind == rtl.COMB:
            location = (WIRE, node.name)
        elif node.kind == rtl.REG:
            location = (REG, node.name)
        elif node.kind == rtl.INPUT:
            location = (PORT, node.name)
        else:
            continue
        for bit in range(node.width):
            for kind in ordered_kinds:
                start, end = transient_window if kind == TRANSIENT else (0, 0)
                faults.append(
                    FaultDescriptor(
                        len(faults), location[0], location[1], bit, kind, start, end
                    )
                )
    return faults


def _insert_port_carrier(graph: RtlGraph, port_id: int) -> int:
    """Splice a virtual node between an input/const and all its consumers."""

    existing = graph.port_carriers.get(port_id)
    if existing is not None:
        return existing
    src = graph.nodes[port_id]
    carrier = rtl.RtlNode(
        len(graph.nodes), rtl.VIRTUAL, f"{src.name}$flt", src.width, fanin=[port_id]
    )
    graph.nodes.append(carrier)
    carrier.fanout = src.fanout
    src.fanout = [carrier.id]
    for consumer_id in carrier.fanout:
        consumer = graph.nodes[consumer_id]
        consumer.fanin = [carrier.id if f == port_id else f for f in consumer.fanin]
    for reg_id in graph.regs:
        reg = graph.nodes[reg_id]
        if reg.next_src == port_id:
            reg.next_src = carrier.id
    graph.port_carriers[port_id] = carrier.id
    graph.recompute_topo()
    return carrier.id


def resolve_injection_site(graph: RtlGraph, fault: FaultDescriptor) -> int:
    """Return the node id holding this fault's entry, inserting a virtual
    carrier for port faults on first use."""

    nid = graph.name_to_id.get(fault.location_name)
    if nid is None:
        raise FaultModelError(f"fault {fault.fid}: unknown location '{fault.location_name}'")
    node = graph.nodes[nid]
    if fault.bit >= node.width:
        raise FaultModelError(
            f"fault {fault.fid}: bit {fault.bit} out of range for "
            f"{node.width}-bit '{node.name}'"
        )

    if fault.location_kind == REG:
        if node.kind != rtl.REG:
            raise FaultModelError(
                f"fault {fault.fid}: '{node.name}' is not a reg"
            )
        return nid
    if fault.location_kind == PORT:
        if node.kind == rtl.INPUT:
            return _insert_port_carrier(graph, nid)
        if node.kind == rtl.OUTPUT:
            return _resolve_wire_site(graph, fault, node.fanin[0])
        raise FaultModelError(f"fault {fault.fid}: '{node.name}' is not a port")
    if fault.location_kind == WIRE:
        return _resolve_wire_site(graph, fault, nid)
    raise FaultModelError(
        f"fault {fault.fid}: unknown location kind '{fault.location_kind}'"
    )


def _resolve_wire_site(graph: RtlGraph, fault: FaultDescriptor, nid: int) -> int:
    node = graph.nodes[nid]
    if node.kind in (rtl.COMB, rtl.VIRTUAL, rtl.REG):
        return nid
    if node.kind == rtl.OUTPUT:
        return _resolve_wire_site(graph, fault, node.fanin[0])
    if node.kind in (rtl.INPUT, rtl.CONST):
        # Source nodes are never evaluated; give the fault a carrier.
        return _insert_port_carrier(graph, nid)
    raise FaultModelError(f"fault {fault.fid}: cannot inject at '{node.name}'")


def inject(graph: RtlGraph, faults: list[FaultDescriptor]) -> FaultTable:
    """Resolve and record every fault; the graph gains any needed carriers."""

    table = FaultTable()
    for fault in faults:
        site = resolve_injection_site(graph, fault)
        table.add(site, FaultEntry(fault.fid, fault))
    table.finalize()
    return table


# ---------------------------------------------------------------------------
# Fault list files: fid,location_kind,location_name,bit,kind[,start,end]

def emit_fault_csv(faults: list[FaultDescriptor]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["fid", "location_kind", "location_name", "bit", "kind"])
    for f in faults:
        row = [f.fid, f.location_kind, f.location_name, f.bit, f.kind]
        if f.kind == TRANSIENT:
            row += [f.start, f.end]
        writer.writerow(row)
    return buf.getvalue()


def parse_fault_csv(text: str) -> list[FaultDescriptor]:
    faults: list[FaultDescriptor] = []
    seen: set[int] = set()
    for row in csv.reader(io.StringIO(text)):
        if not row or row[0].strip() == "fid":
            continue
        try:
            fid = int(row[0])
            location_kind = row[1].strip().lower()
            location_name = row[2].strip()
            bit = int(row[3])
            kind = row[4].strip().lower()
            start, end = (int(row[5]), int(row[6])) if len(row) > 5 else (0, 0)
        except (ValueError, IndexError) as exc:
            raise FaultModelError(f"bad fault row {row!r}: {exc}") from None
        if location_kind not in (WIRE, REG, PORT):
            raise FaultModelError(f"bad location kind '{location_kind}'")
        if kind not in KIND_ORDER:
            raise FaultModelError(f"bad fault kind '{kind}'")
        if kind == TRANSIENT and start > end:
            raise FaultModelError(f"fault {fid}: window {start}..{end} is empty")
        if fid in seen:
            raise FaultModelError(f"duplicate fid {fid}")
        seen.add(fid)
        faults.append(FaultDescriptor(fid, location_kind, location_name, bit, kind, start, end))
    faults.sort(key=lambda f: f.fid)
    return faults
