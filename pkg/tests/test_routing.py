import pytest

from manetsim.engine import seconds
from manetsim.metrics import AGT_RECV, RTR_DROP, RTR_FWD
from manetsim.routing import (DATA, DROP, HELLO, INFINITY, INVALID, QUEUED, RREQ, SEND,
                              DSDV_UPDATE, Decision, Packet, RouteEntry)

from conftest import line_positions, static_sim


def test_forwarded_copy_decrements_ttl():
    p = Packet(1, DATA, 0, 3, 5, 100, 0, None, 80)
    q = p.forwarded(0)
    assert (q.ttl, q.hops, q.last_hop, q.uid) == (4, 1, 0, 1)
    assert (p.ttl, p.hops) == (5, 0)


def test_route_entry_invalidate():
    e = RouteEntry(4, 2, 3, 10)
    assert e.valid
    e.invalidate(11)
    assert (e.state, e.hop_count, e.seq_no) == (INVALID, INFINITY, 11)
    assert not e.valid


def test_decisions():
    assert Decision.send(4) == (SEND, 4, None)
    assert Decision.drop("no_route").action == DROP
    assert QUEUED.next_hop is None


def _events(sim, action):
    return [e for e in sim.trace.events if e.action == action]


def test_data_to_self_delivered():
    sim = static_sim(line_positions(2), "DSDV", duration=5)
    sim.run(seconds(1))
    pkt = sim.network.new_packet(DATA, 1, 0, 32, 4256, payload_bits=4096)
    sim.agents[0].on_receive(pkt, 1)
    assert [(e.node, e.uid) for e in _events(sim, AGT_RECV)] == [(0, pkt.uid)]


def test_ttl_one_needing_forward_dropped():
    sim = static_sim(line_positions(3), "DSDV", duration=5)
    sim.run(seconds(1))
    pkt = sim.network.new_packet(DATA, 0, 2, 1, 4256, payload_bits=4096)
    sim.agents[1].on_receive(pkt, 0)
    drops = _events(sim, RTR_DROP)
    assert [(d.node, d.reason) for d in drops] == [(1, "ttl_expired")]


def test_forward_with_valid_route_decrements_ttl():
    sim = static_sim(line_positions(3), "DSDV", duration=40)
    sim.run(seconds(30))
    pkt = sim.network.new_packet(DATA, 0, 2, 7, 4256, payload_bits=4096)
    sim.agents[1].on_receive(pkt, 0)
    fwd = [e for e in _events(sim, RTR_FWD) if e.uid == pkt.uid]
    assert [e.node for e in fwd] == [1]
    sim.run(seconds(31))
    assert [e.node for e in _events(sim, AGT_RECV) if e.uid == pkt.uid] == [2]


@pytest.mark.parametrize("protocol,kind", [("DSDV", HELLO), ("OLSR", RREQ), ("AODV", DSDV_UPDATE)])
def test_foreign_or_malformed_control_is_protocol_drop(protocol, kind):
    sim = static_sim(line_positions(2), protocol, duration=5)
    pkt = sim.network.new_packet(kind, 1, -1, 1, 200, payload="garbage")
    sim.agents[0].on_receive(pkt, 1)
    assert [(e.reason) for e in _events(sim, RTR_DROP)] == ["protocol_drop"]


@pytest.mark.parametrize("protocol,kinds", [
    ("DSDV", {"DSDV_UPDATE"}), ("OLSR", {"HELLO", "TC"}), ("AODV", {"RREQ", "RREP", "RERR"}),
])
def test_agents_emit_only_their_own_control_kinds(protocol, kinds):
    from manetsim.config import from_flat
    from manetsim.scenario import simulate

    sim, _ = simulate(from_flat({"protocol": protocol, "mobility.model": "RPGM", "seed": 3,
                                 "duration": 40}))
    emitted = {e.kind for e in sim.trace.events if e.action in ("RTR_SEND", "RTR_FWD")}
    assert emitted - {DATA} <= kinds


def test_ttl_strictly_decreases_along_chain(monkeypatch):
    from manetsim.config import from_flat
    from manetsim.network import Network
    from manetsim.scenario import simulate

    ttls: dict[int, list[int]] = {}
    original = Network._transmit

    def tap(self, node, dst, packet):
        if packet.kind == DATA:
            ttls.setdefault(packet.uid, []).append((node, packet.ttl))
        original(self, node, dst, packet)

    monkeypatch.setattr(Network, "_transmit", tap)
    simulate(from_flat({"protocol": "AODV", "mobility.model": "RPGM", "seed": 2, "duration": 40}))
    chains = [v for v in ttls.values() if len(v) > 1]
    assert chains
    for chain in chains:
        for (n0, t0), (n1, t1) in zip(chain, chain[1:]):
            # a salvaged packet may be re-sent by the same node; any hop costs ttl
            assert t1 < t0 if n1 != n0 else t1 <= t0
