import math
import random
from collections import deque
from fractions import Fraction

import pytest

from manetsim.config import from_flat
from manetsim.engine import seconds
from manetsim.metrics import AGT_RECV, AGT_SEND, MAC_FRAME, RTR_DROP, RTR_FWD, RTR_SEND, Trace
from manetsim.mobility import Area, static_trajectory
from manetsim.routing import CONTROL_KINDS, DATA
from manetsim.scenario import build

RANGE = 250.0

# Filled by the acceptance tests, printed once at the end of the session.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])


def unit_disk_adjacency(positions, radius=RANGE):
    n = len(positions)
    adj = {i: set() for i in range(n)}
    for i in range(n):
        for j in range(i + 1, n):
            if math.dist(positions[i], positions[j]) <= radius:
                adj[i].add(j)
                adj[j].add(i)
    return adj


def bfs_distances(adj, src):
    dist = {src: 0}
    todo = deque([src])
    while todo:
        u = todo.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                todo.append(v)
    return dist


def random_connected_placement(rng: random.Random, n=20, side=900.0):
    while True:
        pos = [(rng.uniform(0, side), rng.uniform(0, side)) for _ in range(n)]
        if len(bfs_distances(unit_disk_adjacency(pos), 0)) == n:
            return pos


def line_positions(n, spacing=200.0):
    return [(100.0 + i * spacing, 100.0) for i in range(n)]


def static_sim(positions, protocol="DSDV", duration=60.0, **overrides):
    """A run on motionless nodes with no CBR flows; tests drive traffic by hand."""
    cfg = from_flat({"protocol": protocol, "duration": duration, "seed": overrides.pop("seed", 1),
                     **overrides})
    traj = static_trajectory(positions, seconds(duration), Area(2000.0, 2000.0))
    return build(cfg, trajectory=traj, flows=[])


@pytest.fixture
def line3():
    return line_positions(3)


# -- synthetic traces -----------------------------------------------------------

PAYLOAD_BITS = 512 * 8


def synthetic_trace(rng: random.Random, duration=seconds(100)):
    """A plausible trace: every DATA uid is sent once and ends once."""
    trace = Trace(duration)
    events = []
    for uid in range(rng.randint(0, 60)):
        t0 = rng.randrange(duration // 2)
        events.append((t0, 0, AGT_SEND, uid, DATA, PAYLOAD_BITS, "-"))
        hops = rng.randint(1, 4)
        t = t0
        for h in range(hops):
            t += rng.randint(1000, 50_000)
            events.append((t, h, RTR_SEND if h == 0 else RTR_FWD, uid, DATA, 4256, "-"))
            for k in range(4):
                events.append((t, h, MAC_FRAME, uid, DATA if k == 0 else "MAC_CONTROL", 160, "-"))
        if rng.random() < 0.7:
            events.append((t + 5, hops, AGT_RECV, uid, DATA, PAYLOAD_BITS, "-"))
        else:
            events.append((t + 5, hops, RTR_DROP, uid, DATA, 4256, rng.choice(["no_route", "link_break"])))
    for i in range(rng.randint(0, 80)):
        t = rng.randrange(duration)
        kind = rng.choice(sorted(CONTROL_KINDS))
        events.append((t, rng.randrange(10), rng.choice([RTR_SEND, RTR_FWD]), 10_000 + i, kind, 320, "-"))
        events.append((t, rng.randrange(10), MAC_FRAME, 10_000 + i, kind, 320, "-"))
    events.sort(key=lambda e: e[0])
    for e in events:
        trace.record(*e)
    return trace


def oracle(trace):
    """Independent per-uid scan with exact rational arithmetic."""
    sent, recv = {}, {}
    control = frames = 0
    for e in trace.events:
        if e.action == MAC_FRAME:
            frames += 1
        if e.kind in CONTROL_KINDS and e.action in (RTR_SEND, RTR_FWD):
            control += 1
        if e.kind == DATA and e.action == AGT_SEND:
            sent[e.uid] = e
        if e.kind == DATA and e.action == AGT_RECV:
            recv[e.uid] = e
    n_sent, n_recv = len(sent), len(recv)
    pdf = float(Fraction(100 * n_recv, n_sent)) if n_sent else 0.0
    delay = sum(recv[u].time - sent[u].time for u in recv)
    aeed = float(Fraction(delay, n_recv * 1_000_000)) if n_recv else 0.0
    nrl = float(Fraction(control, n_recv)) if n_recv else 0.0
    nml = float(Fraction(frames, n_recv)) if n_recv else 0.0
    bits = sum(r.bits for r in recv.values())
    thr = float(Fraction(bits * 1_000_000, trace.duration))
    return pdf, aeed, nrl, thr, nml
