import random

import pytest

from manetsim.config import from_flat
from manetsim.dsdv import FULL_DUMP, INCREMENTAL, DsdvEntry, DsdvUpdate
from manetsim.engine import seconds
from manetsim.routing import DATA, INFINITY, INVALID, VALID
from manetsim.scenario import build

from conftest import bfs_distances, line_positions, static_sim, unit_disk_adjacency


@pytest.fixture
def agent():
    sim = static_sim(line_positions(3), "DSDV", duration=30)
    return sim.agents[0]


def test_fresh_full_dump_is_self_only(agent):
    update = agent.periodic_advertise(full=True)
    assert update.kind == FULL_DUMP
    assert update.entries == ((0, 0, 2),)


def test_incremental_suppressed_without_changes(agent):
    agent.periodic_advertise(full=True)
    assert agent.periodic_advertise(full=False) is None


def test_incremental_lists_changes_since_full(agent):
    agent.periodic_advertise(full=True)
    agent.handle_update(DsdvUpdate(INCREMENTAL, ((7, 1, 4),)), 1)
    update = agent.periodic_advertise(full=False)
    assert update.kind == INCREMENTAL
    assert dict((d, (h, s)) for d, h, s in update.entries) == {0: (0, 2), 7: (2, 4)}
    assert agent.periodic_advertise(full=False) is None


def _set(agent, dest, hops, seq, via=1):
    agent.table[dest] = DsdvEntry(dest, via, hops, seq, 0, VALID)


def test_newer_seq_replaces_even_if_longer(agent):
    _set(agent, 7, 3, 10)
    agent.handle_update(DsdvUpdate(INCREMENTAL, ((7, 5, 12),)), 2)
    e = agent.table[7]
    assert (e.next_hop, e.hop_count, e.seq_no) == (2, 6, 12)


def test_equal_seq_better_metric_replaces(agent):
    _set(agent, 7, 3, 10)
    agent.handle_update(DsdvUpdate(INCREMENTAL, ((7, 1, 10),)), 2)
    assert (agent.table[7].hop_count, agent.table[7].next_hop) == (2, 2)


def test_stale_seq_discarded(agent):
    _set(agent, 7, 3, 10)
    agent.handle_update(DsdvUpdate(INCREMENTAL, ((7, 7, 8),)), 2)
    e = agent.table[7]
    assert (e.next_hop, e.hop_count, e.seq_no) == (1, 3, 10)


def test_worse_newer_route_settles_before_advertising(agent):
    agent.periodic_advertise(full=True)
    _set(agent, 7, 3, 10)
    agent.handle_update(DsdvUpdate(INCREMENTAL, ((7, 5, 12),)), 2)
    assert agent.table[7].settling_deadline == agent.net.now + seconds(6)
    # the route is used at once, only its advertisement waits
    assert agent.on_data_to_send(7, None).next_hop == 2
    assert agent.periodic_advertise(full=False) is None


def test_defer_settling_keeps_old_next_hop():
    sim = static_sim(line_positions(3), "DSDV", duration=30, **{"dsdv.defer_settling_routes": True})
    a = sim.agents[0]
    _set(a, 7, 3, 10)
    a.handle_update(DsdvUpdate(INCREMENTAL, ((7, 5, 12),)), 2)
    assert a.on_data_to_send(7, None).next_hop == 1


def test_link_break_invalidates_with_odd_seq(agent):
    _set(agent, 7, 2, 8, via=1)
    _set(agent, 9, 1, 4, via=2)
    agent.on_link_break(1, agent.net.new_packet(DATA, 0, 7, 32, 100))
    e = agent.table[7]
    assert (e.state, e.hop_count, e.seq_no) == (INVALID, INFINITY, 9)
    assert agent.table[9].valid
    assert agent.on_data_to_send(7, None).reason == "no_route"
    # genuine even update overrides the odd seq
    agent.handle_update(DsdvUpdate(INCREMENTAL, ((7, 1, 10),)), 2)
    assert agent.table[7].valid and agent.table[7].seq_no == 10


def test_link_break_triggers_immediate_incremental(agent):
    agent.periodic_advertise(full=True)
    _set(agent, 7, 2, 8, via=1)
    sent_before = sum(1 for e in agent.net.trace.events if e.action == "RTR_SEND")
    agent.on_link_break(1, agent.net.new_packet(DATA, 0, 7, 32, 100))
    sends = [e for e in agent.net.trace.events if e.action == "RTR_SEND"]
    assert len(sends) == sent_before + 1 and sends[-1].kind == "DSDV_UPDATE"


def test_break_of_unused_neighbor_changes_nothing(agent):
    _set(agent, 7, 2, 8, via=1)
    before = {d: (e.next_hop, e.hop_count, e.seq_no, e.state) for d, e in agent.table.items()}
    agent.on_link_break(2, agent.net.new_packet(DATA, 0, 2, 32, 100))
    after = {d: (e.next_hop, e.hop_count, e.seq_no, e.state) for d, e in agent.table.items()}
    assert before == after


def test_self_poison_jumps_to_next_even(agent):
    agent.periodic_advertise(full=True)
    agent.handle_update(DsdvUpdate(INCREMENTAL, ((0, INFINITY, 5),)), 1)
    assert agent.seq == 6 and agent.table[0].seq_no % 2 == 0


def test_line_converges_to_bfs():
    pos = line_positions(5)
    sim = static_sim(pos, "DSDV", duration=50).run(seconds(46))
    adj = unit_disk_adjacency(pos)
    for node, a in enumerate(sim.agents):
        dist = bfs_distances(adj, node)
        assert {d: e.hop_count for d, e in a.routes().items()} == {
            d: h for d, h in dist.items() if d != node}


def test_parity_monotonicity_and_loop_freedom_under_motion():
    cfg = from_flat({"protocol": "DSDV", "mobility.model": "RWPM", "mobility.width": 1000,
                     "mobility.height": 1000, "mobility.speed_min": 20, "mobility.speed_max": 20,
                     "seed": 4, "duration": 90})
    sim = build(cfg)
    last_seq: dict[tuple[int, int], int] = {}
    for t in range(5, 90, 5):
        sim.run(seconds(t))
        for a in sim.agents:
            for dest, e in a.table.items():
                if dest == a.node_id:
                    assert e.seq_no % 2 == 0
                    continue
                assert e.seq_no % 2 == (0 if e.valid else 1)
                assert e.seq_no >= last_seq.get((a.node_id, dest), 0)
                last_seq[(a.node_id, dest)] = e.seq_no
        for dest in range(len(sim.agents)):
            for start in range(len(sim.agents)):
                seen, node = set(), start
                while node != dest:
                    assert node not in seen, f"loop toward {dest} at t={t}"
                    seen.add(node)
                    e = sim.agents[node].table.get(dest)
                    if e is None or not e.valid:
                        break
                    node = e.next_hop
    sim.finish()


def test_static_connected_delivers_everything_after_convergence():
    rng = random.Random(11)
    pos = [(300 + 150 * (i % 4), 300 + 150 * (i // 4)) for i in range(12)]
    cfg = from_flat({"protocol": "DSDV", "duration": 80, "traffic.start_window": 0})
    from manetsim.mobility import Area, static_trajectory
    from manetsim.traffic import CbrFlow

    traj = static_trajectory(pos, seconds(80), Area(2000, 2000))
    flows = [CbrFlow(s, d, 5, 512, seconds(40), seconds(80))
             for s, d in [tuple(rng.sample(range(12), 2)) for _ in range(6)]]
    sim = build(cfg, trajectory=traj, flows=flows)
    report = sim.finish()
    assert report.pdf >= 99.0
