"""Ad hoc On-Demand Distance Vector agent."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .engine import seconds
from .routing import (DATA, HEADER_BYTES, INFINITY, INVALID, QUEUED, RERR, RREP, RREQ,
                      VALID, Decision, RouteEntry, RoutingAgent)

RREQ_BYTES = 24
RREP_BYTES = 20
LIFETIME_TICK = "LIFETIME"


@dataclass(frozen=True)
class AodvParams:
    active_route_timeout: float = 10.0
    rreq_retries: int = 3
    discovery_wait: float = 1.0
    queue_capacity: int = 64
    rreq_ttl: int = 32
    # After a discovery gives up, no new RREQ for that destination for this long.
    failure_holddown: float = 10.0
    # Reply only when the requested destination seq exceeds the stored one.
    strict_reply_rule: bool = False


@dataclass(frozen=True)
class Rreq:
    broadcast_id: int
    source: int
    destination: int
    source_seq: int
    destination_seq: int
    hop_count: int


@dataclass(frozen=True)
class Rrep:
    source: int
    destination: int
    destination_seq: int
    hop_count: int
    lifetime: int


@dataclass(frozen=True)
class Rerr:
    unreachable: tuple[tuple[int, int], ...]  # (dest, seq)


@dataclass
class AodvEntry(RouteEntry):
    precursors: set = field(default_factory=set)
    expires_at: int = 0


@dataclass
class Discovery:
    attempts: int = 0
    timer: object = None


class AodvAgent(RoutingAgent):
    protocol = "AODV"
    payload_types = {RREQ: Rreq, RREP: Rrep, RERR: Rerr}

    def __init__(self, node_id: int, net, params: AodvParams = AodvParams()):
        super().__init__(node_id, net)
        self.params = params
        self.seq = 0
        self.broadcast_id = 0
        self.table: dict[int, AodvEntry] = {}
        self.seen: set[tuple[int, int]] = set()
        self.queue: deque = deque()
        self.discoveries: dict[int, Discovery] = {}
        self.holddown: dict[int, int] = {}  # dest -> no RREQ before this tick
        # destinations this node originates traffic to -> last use
        self.active_sources: dict[int, int] = {}
        self._timeout = seconds(params.active_route_timeout)
        self._wait = seconds(params.discovery_wait)

    def start(self) -> None:
        phase = int(self.net.protocol_rng.uniform(0, seconds(1.0)))
        self.net.schedule(phase, self.on_timer, LIFETIME_TICK)

    # -- table helpers --------------------------------------------------------

    def valid_route(self, dest: int) -> Optional[AodvEntry]:
        entry = self.table.get(dest)
        if entry is not None and entry.valid:
            if entry.expires_at <= self.net.now:
                entry.invalidate()
                return None
            return entry
        return None

    def _update_route(self, dest: int, next_hop: int, hops: int, seq: int) -> bool:
        """Install or refresh a route if it is fresher or shorter."""
        now = self.net.now
        entry = self.table.get(dest)
        if entry is None:
            self.table[dest] = AodvEntry(dest, next_hop, hops, seq, now, VALID, expires_at=now + self._timeout)
            return True
        usable = entry.valid and entry.expires_at > now
        if not usable or seq > entry.seq_no or (seq == entry.seq_no and hops < entry.hop_count):
            entry.next_hop = next_hop
            entry.hop_count = hops
            entry.seq_no = max(seq, entry.seq_no) if not usable else seq
            entry.state = VALID
            entry.installed_at = now
            entry.expires_at = now + self._timeout
            return True
        if seq == entry.seq_no and hops == entry.hop_count and next_hop == entry.next_hop:
            entry.expires_at = max(entry.expires_at, now + self._timeout)
        return False

    # -- data path -------------------------------------------------------------

    def on_data_to_send(self, dst: int, packet) -> Decision:
        now = self.net.now
        entry = self.valid_route(dst)
        if packet.src == self.node_id:
            self.active_sources[dst] = now
        if entry is not None:
            entry.expires_at = now + self._timeout
            if packet.last_hop is not None:
                entry.precursors.add(packet.last_hop)
            return Decision.send(entry.next_hop)
        if packet.src != self.node_id:
            if packet.last_hop is not None:
                known = self.table.get(dst)
                self._send_rerr(((dst, known.seq_no if known else 0),), {packet.last_hop})
            return Decision.drop("no_route")
        self._enqueue(packet)
        self._want_route(dst)
        return QUEUED

    def _enqueue(self, packet) -> None:
        if len(self.queue) >= self.params.queue_capacity:
            self.net.drop(self.node_id, self.queue.popleft(), "queue_overflow")
        self.queue.append(packet)
        self.net.hold(self.node_id, packet)

    def _flush(self, dst: int) -> None:
        entry = self.valid_route(dst)
        if entry is None:
            return
        waiting = [p for p in self.queue if p.dst == dst]
        if not waiting:
            return
        self.queue = deque(p for p in self.queue if p.dst != dst)
        for packet in waiting:
            entry.expires_at = self.net.now + self._timeout
            self.net.unicast(self.node_id, entry.next_hop, packet)

    # -- discovery ---------------------------------------------------------------

    def _want_route(self, dst: int) -> None:
        if dst in self.discoveries or self.holddown.get(dst, -1) > self.net.now:
            return
        self.initiate_discovery(dst)

    def initiate_discovery(self, dst: int) -> Rreq:
        state = self.discoveries.get(dst)
        if state is None:
            state = self.discoveries[dst] = Discovery()
        self.seq += 1
        known = self.table.get(dst)
        rreq = Rreq(self.broadcast_id, self.node_id, dst, self.seq,
                    known.seq_no if known is not None else 0, 0)
        self.broadcast_id += 1
        self.seen.add((self.node_id, rreq.broadcast_id))
        self.net.broadcast(self.node_id, self.control_packet(
            RREQ, rreq, HEADER_BYTES + RREQ_BYTES, ttl=self.params.rreq_ttl))
        state.timer = self.net.schedule(self._wait * (2 ** state.attempts), self._discovery_timeout, dst)
        return rreq

    def _discovery_timeout(self, dst: int) -> None:
        state = self.discoveries.get(dst)
        if state is None:
            return
        if self.valid_route(dst) is not None:
            del self.discoveries[dst]
            self._flush(dst)
            return
        state.attempts += 1
        if state.attempts > self.params.rreq_retries:
            del self.discoveries[dst]
            self.holddown[dst] = self.net.now + seconds(self.params.failure_holddown)
            for packet in [p for p in self.queue if p.dst == dst]:
                self.net.drop(self.node_id, packet, "no_route")
            self.queue = deque(p for p in self.queue if p.dst != dst)
            return
        self.initiate_discovery(dst)

    def handle_rreq(self, packet, from_node: int) -> None:
        rreq: Rreq = packet.payload
        me = self.node_id
        key = (rreq.source, rreq.broadcast_id)
        if key in self.seen:
            self.net.drop(me, packet, "duplicate")
            return
        self.seen.add(key)
        hops = rreq.hop_count + 1
        self._update_route(rreq.source, from_node, hops, rreq.source_seq)
        reverse = self.table[rreq.source]

        if rreq.destination == me:
            self.seq = max(self.seq + 1, rreq.destination_seq)
            self._send_rrep(Rrep(rreq.source, me, self.seq, 0, self._timeout), reverse.next_hop)
            return
        entry = self.valid_route(rreq.destination)
        if entry is not None and self._fresh_enough(entry.seq_no, rreq.destination_seq):
            entry.precursors.add(reverse.next_hop)
            reverse.precursors.add(entry.next_hop)
            self._send_rrep(Rrep(rreq.source, rreq.destination, entry.seq_no, entry.hop_count,
                                 max(0, entry.expires_at - self.net.now)), reverse.next_hop)
            return
        if packet.ttl <= 1:
            self.net.drop(me, packet, "ttl_expired")
            return
        fwd = Rreq(rreq.broadcast_id, rreq.source, rreq.destination, rreq.source_seq,
                   max(rreq.destination_seq, entry.seq_no if entry else 0), hops)
        self.net.broadcast(me, packet.forwarded(from_node, fwd))

    def _fresh_enough(self, stored_seq: int, requested_seq: int) -> bool:
        if self.params.strict_reply_rule:
            return requested_seq > stored_seq
        return stored_seq >= requested_seq

    def _send_rrep(self, rrep: Rrep, next_hop: int) -> None:
        packet = self.control_packet(RREP, rrep, HEADER_BYTES + RREP_BYTES, dst=rrep.source,
                                     ttl=self.params.rreq_ttl)
        self.net.unicast(self.node_id, next_hop, packet)

    def handle_rrep(self, packet, from_node: int) -> None:
        rrep: Rrep = packet.payload
        me = self.node_id
        hops = rrep.hop_count + 1
        updated = self._update_route(rrep.destination, from_node, hops, rrep.destination_seq)
        forward = self.table[rrep.destination]
        if rrep.source == me:
            if not updated:
                self.net.drop(me, packet, "stale_rrep")
            if rrep.destination in self.discoveries and self.valid_route(rrep.destination):
                state = self.discoveries.pop(rrep.destination)
                self.net.cancel(state.timer)
            self._flush(rrep.destination)
            return
        reverse = self.valid_route(rrep.source)
        if reverse is None or packet.ttl <= 1:
            self.net.drop(me, packet, "no_reverse_route")
            return
        forward.precursors.add(reverse.next_hop)
        reverse.precursors.add(from_node)
        reverse.expires_at = max(reverse.expires_at, self.net.now + self._timeout)
        fwd = Rrep(rrep.source, rrep.destination, rrep.destination_seq, hops, rrep.lifetime)
        self.net.unicast(me, reverse.next_hop, packet.forwarded(from_node, fwd))

    # -- maintenance -------------------------------------------------------------

    def _send_rerr(self, unreachable, precursors) -> None:
        if not unreachable:
            return
        rerr = Rerr(tuple(sorted(unreachable)))
        size = HEADER_BYTES + 4 + 8 * len(rerr.unreachable)
        for p in sorted(precursors):
            self.net.unicast(self.node_id, p, self.control_packet(RERR, rerr, size, dst=p))

    def _invalidate_via(self, neighbor: int, only: Optional[dict] = None):
        unreachable, precursors = [], set()
        for dest in sorted(self.table):
            entry = self.table[dest]
            if not entry.valid or entry.next_hop != neighbor:
                continue
            if only is not None:
                if dest not in only:
                    continue
                entry.invalidate(max(entry.seq_no, only[dest]))
            else:
                entry.invalidate(entry.seq_no + 1)
            unreachable.append((dest, entry.seq_no))
            precursors |= entry.precursors
            entry.precursors = set()
        precursors.discard(self.node_id)
        return unreachable, precursors

    def on_link_break(self, neighbor: int, packet) -> None:
        unreachable, precursors = self._invalidate_via(neighbor)
        self._send_rerr(unreachable, precursors)
        if packet.kind == DATA and packet.src == self.node_id:
            # source-side salvage: buffer and rediscover
            self._enqueue(packet)
            self._want_route(packet.dst)
            return
        self.net.drop(self.node_id, packet, "link_break")

    def handle_rerr(self, packet, from_node: int) -> None:
        rerr: Rerr = packet.payload
        unreachable, precursors = self._invalidate_via(from_node, dict(rerr.unreachable))
        self._send_rerr(unreachable, precursors)
        now = self.net.now
        for dest, _ in unreachable:
            last = self.active_sources.get(dest)
            if last is not None and now - last <= self._timeout:
                self._want_route(dest)

    def on_timer(self, kind: str) -> None:
        self.route_lifetime_tick()
        self.net.schedule(seconds(1.0), self.on_timer, LIFETIME_TICK)

    def route_lifetime_tick(self) -> list[int]:
        now = self.net.now
        expired = []
        for dest, entry in self.table.items():
            if entry.valid and entry.expires_at <= now:
                entry.state = INVALID
                entry.hop_count = INFINITY
                expired.append(dest)
        return expired

    def handle_control(self, packet, from_node: int) -> None:
        if packet.kind == RREQ:
            self.handle_rreq(packet, from_node)
        elif packet.kind == RREP:
            self.handle_rrep(packet, from_node)
        else:
            self.handle_rerr(packet, from_node)

    def routes(self) -> dict[int, RouteEntry]:
        now = self.net.now
        return {d: e for d, e in self.table.items() if e.valid and e.expires_at > now}
