"""Node harness: wires traffic, link layer, trace and routing agents together."""

from __future__ import annotations

from .link import LinkLayer, RadioConfig
from .metrics import AGT_RECV, AGT_SEND, RTR_DROP, RTR_FWD, RTR_SEND, Trace
from .routing import BROADCAST, DATA, DEFAULT_TTL, HEADER_BYTES, Packet
from .traffic import CbrFlow


class Network:
    def __init__(self, engine, trajectory, radio: RadioConfig, streams, trace: Trace,
                 agent_factory, data_ttl: int = DEFAULT_TTL):
        self.engine = engine
        self.trace = trace
        self.streams = streams
        self.data_ttl = data_ttl
        self.protocol_rng = streams["protocol"]
        self.jitter_rng = streams["jitter"]
        self.link = LinkLayer(engine, trajectory, radio, self.jitter_rng, trace,
                              self._on_deliver, self._on_link_failure)
        self._uid = 0
        # DATA uid -> node currently holding it; emptied by delivery or drop
        self.outstanding: dict[int, int] = {}
        self.agents = [agent_factory(node, self) for node in range(trajectory.node_count)]

    @property
    def now(self) -> int:
        return self.engine.now

    @property
    def node_count(self) -> int:
        return len(self.agents)

    def start(self) -> None:
        for agent in self.agents:
            agent.start()

    def schedule(self, delay: int, action, *args):
        return self.engine.schedule(self.engine.now + delay, action, *args)

    def cancel(self, ticket) -> bool:
        return self.engine.cancel(ticket)

    def new_packet(self, kind: str, src: int, dst: int, ttl: int, size_bits: int,
                   payload=None, payload_bits: int = 0) -> Packet:
        uid = self._uid
        self._uid += 1
        return Packet(uid, kind, src, dst, ttl, size_bits, self.engine.now, payload, payload_bits)

    # -- traffic -------------------------------------------------------------

    def add_flow(self, flow: CbrFlow) -> None:
        if flow.start_at < flow.stop_at:
            self.engine.schedule(flow.start_at, self._cbr_tick, flow)

    def _cbr_tick(self, flow: CbrFlow) -> None:
        self.originate(flow.src, flow.dst, flow.payload)
        nxt = self.engine.now + flow.interval
        if nxt < flow.stop_at:
            self.engine.schedule(nxt, self._cbr_tick, flow)

    def originate(self, src: int, dst: int, payload_bytes: int) -> Packet:
        packet = self.new_packet(DATA, src, dst, self.data_ttl, (payload_bytes + HEADER_BYTES) * 8,
                                 payload_bits=payload_bytes * 8)
        self.trace.record(self.engine.now, src, AGT_SEND, packet.uid, DATA, packet.payload_bits)
        self.outstanding[packet.uid] = src
        self.agents[src].dispatch_data(packet)
        return packet

    # -- services used by agents -------------------------------------------

    def unicast(self, node: int, next_hop: int, packet: Packet) -> None:
        self._transmit(node, next_hop, packet)

    def broadcast(self, node: int, packet: Packet) -> None:
        self._transmit(node, BROADCAST, packet)

    def _transmit(self, node: int, dst: int, packet: Packet) -> None:
        action = RTR_SEND if packet.src == node and packet.hops == 0 else RTR_FWD
        self.trace.record(self.engine.now, node, action, packet.uid, packet.kind, packet.size_bits)
        if packet.kind == DATA:
            self.outstanding[packet.uid] = node
        self.link.transmit(node, dst, packet)

    def deliver(self, node: int, packet: Packet) -> None:
        self.trace.record(self.engine.now, node, AGT_RECV, packet.uid, DATA, packet.payload_bits)
        self.outstanding.pop(packet.uid, None)

    def drop(self, node: int, packet: Packet, reason: str) -> None:
        self.trace.record(self.engine.now, node, RTR_DROP, packet.uid, packet.kind,
                          packet.size_bits, reason)
        if packet.kind == DATA:
            self.outstanding.pop(packet.uid, None)

    def hold(self, node: int, packet: Packet) -> None:
        """Note that ``node`` buffers a DATA packet (e.g. awaiting discovery)."""
        if packet.kind == DATA:
            self.outstanding[packet.uid] = node

    # -- link-layer callbacks ----------------------------------------------

    def _on_deliver(self, receiver: int, packet: Packet, sender: int) -> None:
        if packet.kind == DATA:
            self.outstanding[packet.uid] = receiver
        self.agents[receiver].on_receive(packet, sender)

    def _on_link_failure(self, sender: int, dst: int, packet: Packet) -> None:
        self.agents[sender].on_link_break(dst, packet)

    def finish(self) -> None:
        """Terminate DATA still queued or in flight so every uid ends exactly once."""
        now = self.engine.now
        for uid in sorted(self.outstanding):
            node = self.outstanding[uid]
            self.trace.record(now, node, RTR_DROP, uid, DATA, 0, "end_of_sim")
        self.outstanding.clear()
