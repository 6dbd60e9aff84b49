"""Destination-Sequenced Distance Vector agent."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .engine import seconds
from .routing import (DSDV_UPDATE, HEADER_BYTES, INFINITY, INVALID, VALID, Decision,
                      RouteEntry, RoutingAgent)

FULL_DUMP = "FULL_DUMP"
INCREMENTAL = "INCREMENTAL"
ENTRY_BYTES = 12


@dataclass(frozen=True)
class DsdvParams:
    full_dump_interval: float = 15.0
    incremental_interval: float = 1.0
    settling_time: float = 6.0
    # Keep forwarding on the previous route while a replacement is settling.
    defer_settling_routes: bool = False


@dataclass
class DsdvEntry(RouteEntry):
    last_advertised_seq: int = -1
    settling_deadline: Optional[int] = None
    # previous next hop/metric, kept only when defer_settling_routes is on
    fallback: Optional[tuple[int, int]] = None


@dataclass(frozen=True)
class DsdvUpdate:
    kind: str
    entries: tuple[tuple[int, int, int], ...]  # (dest, hop_count, seq_no)


class DsdvAgent(RoutingAgent):
    protocol = "DSDV"
    payload_types = {DSDV_UPDATE: DsdvUpdate}

    def __init__(self, node_id: int, net, params: DsdvParams = DsdvParams()):
        super().__init__(node_id, net)
        self.params = params
        self.seq = 0
        self.table: dict[int, DsdvEntry] = {
            node_id: DsdvEntry(node_id, node_id, 0, 0, 0, VALID)
        }
        self.changed_since_full: set[int] = set()
        self.pending: set[int] = set()
        self._full = seconds(params.full_dump_interval)
        self._incr = seconds(params.incremental_interval)
        self._settle = seconds(params.settling_time)

    def start(self) -> None:
        rng = self.net.protocol_rng
        # Full dumps are phase-aligned network wide (offset < 1 s) so each
        # sequence-number wave settles before the next round begins.
        self.net.schedule(1 + int(rng.uniform(0, seconds(1.0))), self.on_timer, FULL_DUMP)
        self.net.schedule(1 + int(rng.uniform(0, self._incr)), self.on_timer, INCREMENTAL)

    # -- advertisement -----------------------------------------------------

    def on_timer(self, kind: str) -> None:
        if kind == FULL_DUMP:
            self.periodic_advertise(full=True)
            self.net.schedule(self._full, self.on_timer, FULL_DUMP)
        else:
            self.periodic_advertise(full=False)
            self.net.schedule(self._incr, self.on_timer, INCREMENTAL)

    def periodic_advertise(self, full: bool) -> Optional[DsdvUpdate]:
        now = self.net.now
        if full:
            self.seq += 2
            self.table[self.node_id].seq_no = self.seq
            dests = sorted(self.table)
            self.changed_since_full.clear()
            self.pending.clear()
        else:
            ready = {d for d in self.pending if self._settled(d, now)}
            if not ready:
                return None
            self.pending -= ready
            dests = [self.node_id] + sorted(
                d for d in self.changed_since_full if d != self.node_id and self._settled(d, now)
            )
        update = DsdvUpdate(FULL_DUMP if full else INCREMENTAL, tuple(
            (d, self.table[d].hop_count, self.table[d].seq_no) for d in dests
        ))
        for d in dests:
            self.table[d].last_advertised_seq = self.table[d].seq_no
        self._broadcast(update)
        return update

    def _settled(self, dest: int, now: int) -> bool:
        deadline = self.table[dest].settling_deadline
        return deadline is None or deadline <= now

    def _broadcast(self, update: DsdvUpdate) -> None:
        size = HEADER_BYTES + ENTRY_BYTES * len(update.entries)
        self.net.broadcast(self.node_id, self.control_packet(DSDV_UPDATE, update, size))

    def _mark_changed(self, dest: int) -> None:
        self.changed_since_full.add(dest)
        self.pending.add(dest)

    # -- receiving -----------------------------------------------------------

    def handle_control(self, packet, from_node: int) -> None:
        self.handle_update(packet.payload, from_node)

    def handle_update(self, update: DsdvUpdate, from_node: int) -> None:
        now = self.net.now
        me = self.node_id
        for dest, hops, seq in update.entries:
            if dest == me:
                if seq > self.seq:
                    # someone poisoned us with an odd number: jump past it
                    self.seq = seq + 1 if seq % 2 else seq + 2
                    self.table[me].seq_no = self.seq
                    self._mark_changed(me)
                continue
            metric = INFINITY if hops >= INFINITY else hops + 1
            cur = self.table.get(dest)
            if cur is None:
                if metric >= INFINITY:
                    continue
                self.table[dest] = DsdvEntry(dest, from_node, metric, seq, now, VALID)
                self._mark_changed(dest)
                continue
            if not (seq > cur.seq_no or (seq == cur.seq_no and metric < cur.hop_count)):
                continue
            worse = cur.valid and seq > cur.seq_no and metric > cur.hop_count and metric < INFINITY
            if worse:
                cur.settling_deadline = now + self._settle
                if self.params.defer_settling_routes and cur.fallback is None:
                    cur.fallback = (cur.next_hop, cur.hop_count)
            else:
                cur.settling_deadline = None
                cur.fallback = None
            cur.next_hop = from_node
            cur.hop_count = metric
            cur.seq_no = seq
            cur.installed_at = now
            cur.state = VALID if metric < INFINITY else INVALID
            self._mark_changed(dest)

    # -- maintenance ---------------------------------------------------------

    def on_link_break(self, neighbor: int, packet) -> None:
        broken = False
        for dest, entry in self.table.items():
            if dest != self.node_id and entry.valid and entry.next_hop == neighbor:
                entry.invalidate(entry.seq_no + 1)
                entry.settling_deadline = None
                entry.fallback = None
                entry.installed_at = self.net.now
                self._mark_changed(dest)
                broken = True
        if broken:
            self.periodic_advertise(full=False)
        super().on_link_break(neighbor, packet)

    # -- forwarding ----------------------------------------------------------

    def on_data_to_send(self, dst: int, packet) -> Decision:
        entry = self.table.get(dst)
        if entry is None or not entry.valid:
            return Decision.drop("no_route")
        if entry.fallback is not None:
            if entry.settling_deadline is not None and entry.settling_deadline > self.net.now:
                return Decision.send(entry.fallback[0])
            entry.fallback = None
        return Decision.send(entry.next_hop)

    def routes(self) -> dict[int, RouteEntry]:
        return {d: e for d, e in self.table.items() if d != self.node_id and e.valid}
