"""Routing contract shared by DSDV, OLSR and AODV agents."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, NamedTuple, Optional

DATA = "DATA"
DSDV_UPDATE = "DSDV_UPDATE"
HELLO = "HELLO"
TC = "TC"
RREQ = "RREQ"
RREP = "RREP"
RERR = "RERR"
CONTROL_KINDS = frozenset({DSDV_UPDATE, HELLO, TC, RREQ, RREP, RERR})
PACKET_KINDS = CONTROL_KINDS | {DATA}

BROADCAST = -1
# Hop-count sentinel for broken routes; larger than any reachable metric.
INFINITY = 255
VALID = "VALID"
INVALID = "INVALID"

HEADER_BYTES = 20
DEFAULT_TTL = 32


class Packet:
    """Envelope for DATA or one protocol control payload.

    ``size_bits`` is what goes on air (header included); ``payload_bits`` is
    the application payload counted by throughput.  Packets are treated as
    immutable once transmitted: forwarding makes a copy via :meth:`forwarded`.
    """

    __slots__ = ("uid", "kind", "src", "dst", "ttl", "size_bits", "payload_bits",
                 "created_at", "payload", "last_hop", "hops")

    def __init__(self, uid: int, kind: str, src: int, dst: int, ttl: int, size_bits: int,
                 created_at: int, payload: Any = None, payload_bits: int = 0,
                 last_hop: Optional[int] = None, hops: int = 0):
        self.uid = uid
        self.kind = kind
        self.src = src
        self.dst = dst
        self.ttl = ttl
        self.size_bits = size_bits
        self.payload_bits = payload_bits
        self.created_at = created_at
        self.payload = payload
        self.last_hop = last_hop
        self.hops = hops

    def forwarded(self, from_node: Optional[int], payload: Any = None) -> "Packet":
        """Copy for the next hop: ttl - 1, hop count + 1, same uid."""
        return Packet(self.uid, self.kind, self.src, self.dst, self.ttl - 1, self.size_bits,
                      self.created_at, self.payload if payload is None else payload,
                      self.payload_bits, from_node, self.hops + 1)

    def __repr__(self) -> str:
        return (f"Packet(uid={self.uid}, kind={self.kind}, src={self.src}, dst={self.dst}, "
                f"ttl={self.ttl}, payload={self.payload!r})")


@dataclass
class RouteEntry:
    dest: int
    next_hop: int
    hop_count: int
    seq_no: int = 0
    installed_at: int = 0
    state: str = VALID

    @property
    def valid(self) -> bool:
        return self.state == VALID

    def invalidate(self, seq_no: Optional[int] = None) -> None:
        self.state = INVALID
        self.hop_count = INFINITY
        if seq_no is not None:
            self.seq_no = seq_no


SEND = "SEND"
QUEUE = "QUEUE"
DROP = "DROP"


class Decision(NamedTuple):
    action: str
    next_hop: Optional[int] = None
    reason: Optional[str] = None

    @classmethod
    def send(cls, next_hop: int) -> "Decision":
        return cls(SEND, next_hop=next_hop)

    @classmethod
    def drop(cls, reason: str) -> "Decision":
        return cls(DROP, reason=reason)


QUEUED = Decision(QUEUE)


class RoutingAgent:
    """Base agent.  Subclasses implement the protocol hooks.

    ``net`` is the node harness (:class:`manetsim.network.Network`); agents
    reach the clock, timers, link layer and trace only through it.
    """

    protocol = "NONE"
    # control kind -> expected payload type
    payload_types: dict[str, type] = {}

    def __init__(self, node_id: int, net):
        self.node_id = node_id
        self.net = net

    def start(self) -> None:
        """Schedule periodic timers.  Called once at t = 0."""

    # -- data path ---------------------------------------------------------

    def on_data_to_send(self, dst: int, packet: Packet) -> Decision:
        raise NotImplementedError

    def dispatch_data(self, packet: Packet) -> Decision:
        decision = self.on_data_to_send(packet.dst, packet)
        if decision.action == SEND:
            self.net.unicast(self.node_id, decision.next_hop, packet)
        elif decision.action == DROP:
            self.net.drop(self.node_id, packet, decision.reason)
        return decision

    def on_receive(self, packet: Packet, from_node: int) -> None:
        if packet.kind == DATA:
            if packet.dst == self.node_id:
                self.net.deliver(self.node_id, packet)
            elif packet.ttl <= 1:
                self.net.drop(self.node_id, packet, "ttl_expired")
            else:
                self.dispatch_data(packet.forwarded(from_node))
            return
        expected = self.payload_types.get(packet.kind)
        if expected is None or not isinstance(packet.payload, expected):
            self.net.drop(self.node_id, packet, "protocol_drop")
            return
        self.handle_control(packet, from_node)

    def handle_control(self, packet: Packet, from_node: int) -> None:
        raise NotImplementedError

    # -- maintenance -------------------------------------------------------

    def on_timer(self, kind: str) -> None:
        raise NotImplementedError

    def on_link_break(self, neighbor: int, packet: Packet) -> None:
        """Unicast to ``neighbor`` failed.  Default: drop what was being sent."""
        self.net.drop(self.node_id, packet, "link_break")

    def routes(self) -> dict[int, RouteEntry]:
        """Snapshot of usable routes keyed by destination (self excluded)."""
        raise NotImplementedError

    # -- helpers -----------------------------------------------------------

    def control_packet(self, kind: str, payload: Any, size_bytes: int, dst: int = BROADCAST,
                       ttl: int = 1) -> Packet:
        return self.net.new_packet(kind, self.node_id, dst, ttl, size_bytes * 8, payload)
