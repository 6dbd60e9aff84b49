"""Optimized Link State Routing agent (HELLO, MPR selection, TC flooding)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .engine import seconds
from .routing import HEADER_BYTES, HELLO, TC, Decision, RouteEntry, RoutingAgent

ASYMMETRIC = "ASYM"
SYMMETRIC = "SYM"
HELLO_TIMER = "HELLO"
TC_TIMER = "TC"
TC_TTL = 32


@dataclass(frozen=True)
class OlsrParams:
    hello_interval: float = 2.0
    tc_interval: float = 5.0
    neighbor_hold: float = 6.0
    topology_hold: float = 15.0


@dataclass(frozen=True)
class HelloMsg:
    originator: int
    neighbors: tuple[tuple[int, str], ...]
    mprs: frozenset


@dataclass(frozen=True)
class TcMsg:
    originator: int
    seq: int
    advertised: tuple[int, ...]


class LinkTuple:
    __slots__ = ("heard_until", "sym_until")

    def __init__(self, heard_until: int, sym_until: int = 0):
        self.heard_until = heard_until
        self.sym_until = sym_until

    def status(self, now: int):
        if self.sym_until > now:
            return SYMMETRIC
        if self.heard_until > now:
            return ASYMMETRIC
        return None


def select_mprs(one_hop: Iterable[int], two_hop: Mapping[int, Iterable[int]]) -> set[int]:
    """Pick multipoint relays covering every strict two-hop neighbor.

    Candidates are all symmetric one-hop neighbors.  Neighbors that are the
    only route to some two-hop node are taken first; the rest are added
    greedily by how many still-uncovered two-hop nodes they reach, ties going
    to the higher degree and then the lower id.
    """
    one_hop = set(one_hop)
    reach = {n: set(two_hop.get(n, ())) - one_hop for n in one_hop}
    strict = set().union(*reach.values()) if reach else set()
    degree = {n: len(reach[n]) for n in one_hop}

    coverers: dict[int, list[int]] = {}
    for n in sorted(one_hop):
        for t in reach[n]:
            coverers.setdefault(t, []).append(n)
    mprs = {cands[0] for cands in coverers.values() if len(cands) == 1}
    uncovered = set(strict)
    for m in mprs:
        uncovered -= reach[m]

    while uncovered:
        best = max(
            (n for n in one_hop if n not in mprs),
            key=lambda n: (len(reach[n] & uncovered), degree[n], -n),
        )
        mprs.add(best)
        uncovered -= reach[best]
    return mprs


class OlsrAgent(RoutingAgent):
    protocol = "OLSR"
    payload_types = {HELLO: HelloMsg, TC: TcMsg}

    def __init__(self, node_id: int, net, params: OlsrParams = OlsrParams()):
        super().__init__(node_id, net)
        self.params = params
        self.links: dict[int, LinkTuple] = {}
        self.two_hop: dict[int, frozenset] = {}
        self.mpr_set: frozenset = frozenset()
        self.selectors: dict[int, int] = {}  # neighbor -> valid until
        self.topology: dict[tuple[int, int], tuple[int, int]] = {}  # (dest, last_hop) -> (seq, until)
        self.processed: set[tuple[int, int]] = set()
        self.retransmitted: set[tuple[int, int]] = set()
        self.tc_seq = 0
        self._routes: dict[int, RouteEntry] = {}
        self._dirty = True
        self._next_expiry = None
        self._hello = seconds(params.hello_interval)
        self._tc = seconds(params.tc_interval)
        self._nhold = seconds(params.neighbor_hold)
        self._thold = seconds(params.topology_hold)

    def start(self) -> None:
        rng = self.net.protocol_rng
        self.net.schedule(int(rng.uniform(0, self._hello)), self.on_timer, HELLO_TIMER)
        self.net.schedule(int(rng.uniform(0, self._tc)), self.on_timer, TC_TIMER)

    # -- expiry bookkeeping ---------------------------------------------------

    def _note_expiry(self, until: int) -> None:
        if self._next_expiry is None or until < self._next_expiry:
            self._next_expiry = until

    def _purge(self) -> None:
        now = self.net.now
        if self._next_expiry is None or now < self._next_expiry:
            return
        for n in [n for n, link in self.links.items() if link.heard_until <= now]:
            del self.links[n]
            self.two_hop.pop(n, None)
        for n in [n for n, until in self.selectors.items() if until <= now]:
            del self.selectors[n]
        for key in [k for k, (_, until) in self.topology.items() if until <= now]:
            del self.topology[key]
        expiries = [l.heard_until for l in self.links.values()]
        expiries += [l.sym_until for l in self.links.values() if l.sym_until > now]
        expiries += list(self.selectors.values())
        expiries += [until for _, until in self.topology.values()]
        self._next_expiry = min(expiries) if expiries else None
        self._dirty = True

    def symmetric_neighbors(self) -> set[int]:
        self._purge()
        now = self.net.now
        return {n for n, link in self.links.items() if link.sym_until > now}

    # -- HELLO -----------------------------------------------------------------

    def on_timer(self, kind: str) -> None:
        rng = self.net.protocol_rng
        if kind == HELLO_TIMER:
            self.emit_hello()
            self.net.schedule(self._hello - int(rng.uniform(0, self._hello / 4)), self.on_timer, kind)
        else:
            self.emit_tc()
            self.net.schedule(self._tc - int(rng.uniform(0, self._tc / 4)), self.on_timer, kind)

    def emit_hello(self) -> HelloMsg:
        self._purge()
        now = self.net.now
        listed = tuple(sorted((n, link.status(now)) for n, link in self.links.items()
                              if link.status(now) is not None))
        self.mpr_set = frozenset(self.compute_mprs())
        msg = HelloMsg(self.node_id, listed, self.mpr_set)
        size = HEADER_BYTES + 4 + 4 * len(listed)
        self.net.broadcast(self.node_id, self.control_packet(HELLO, msg, size))
        return msg

    def compute_mprs(self) -> set[int]:
        sym = self.symmetric_neighbors()
        two = {n: self.two_hop.get(n, frozenset()) - {self.node_id} for n in sym}
        return select_mprs(sym, two)

    def process_hello(self, msg: HelloMsg, from_node: int) -> None:
        now = self.net.now
        until = now + self._nhold
        link = self.links.get(from_node)
        if link is None:
            link = self.links[from_node] = LinkTuple(until)
        link.heard_until = until
        listed = dict(msg.neighbors)
        if self.node_id in listed:
            link.sym_until = until
        else:
            link.sym_until = 0
        self.two_hop[from_node] = frozenset(
            n for n, status in msg.neighbors if status == SYMMETRIC and n != self.node_id
        )
        if self.node_id in msg.mprs:
            self.selectors[from_node] = until
            self._note_expiry(until)
        else:
            self.selectors.pop(from_node, None)
        self._note_expiry(until)
        self._dirty = True

    # -- TC --------------------------------------------------------------------

    def emit_tc(self):
        self._purge()
        if not self.selectors:
            return None
        self.tc_seq += 1
        msg = TcMsg(self.node_id, self.tc_seq, tuple(sorted(self.selectors)))
        self.processed.add((self.node_id, self.tc_seq))
        self.retransmitted.add((self.node_id, self.tc_seq))
        size = HEADER_BYTES + 4 + 4 * len(msg.advertised)
        self.net.broadcast(self.node_id, self.control_packet(TC, msg, size, ttl=TC_TTL))
        return msg

    def forward_tc(self, packet, from_node: int) -> None:
        msg: TcMsg = packet.payload
        key = (msg.originator, msg.seq)
        if msg.originator == self.node_id:
            self.net.drop(self.node_id, packet, "own_message")
            return
        if from_node not in self.symmetric_neighbors():
            self.net.drop(self.node_id, packet, "not_symmetric")
            return
        fresh = key not in self.processed
        if fresh:
            self.processed.add(key)
            self._learn_topology(msg)
        self._purge()
        if key not in self.retransmitted and from_node in self.selectors and packet.ttl > 1:
            self.retransmitted.add(key)
            delay = int(self.net.jitter_rng.uniform(0, self.net.link.radio.jitter_max) * 1e6)
            self.net.schedule(delay, self.net.broadcast, self.node_id, packet.forwarded(from_node))
        elif not fresh:
            self.net.drop(self.node_id, packet, "duplicate")

    def _learn_topology(self, msg: TcMsg) -> None:
        now = self.net.now
        orig = msg.originator
        for (dest, last), (seq, _) in list(self.topology.items()):
            if last == orig:
                if seq > msg.seq:
                    return
                if seq < msg.seq:
                    del self.topology[(dest, last)]
        until = now + self._thold
        for dest in msg.advertised:
            self.topology[(dest, orig)] = (msg.seq, until)
        self._note_expiry(until)
        self._dirty = True

    # -- dispatch ----------------------------------------------------------------

    def handle_control(self, packet, from_node: int) -> None:
        if packet.kind == HELLO:
            self.process_hello(packet.payload, from_node)
        else:
            self.forward_tc(packet, from_node)

    def on_link_break(self, neighbor: int, packet) -> None:
        self.links.pop(neighbor, None)
        self.two_hop.pop(neighbor, None)
        self.selectors.pop(neighbor, None)
        self._dirty = True
        super().on_link_break(neighbor, packet)

    # -- routing table --------------------------------------------------------

    def compute_routes(self) -> dict[int, RouteEntry]:
        """Layered BFS over HELLO-learned two-hop links and TC topology records."""
        me = self.node_id
        now = self.net.now
        sym = sorted(self.symmetric_neighbors())
        links: dict[int, dict[int, int]] = {}  # last hop -> {dest: seq}
        for n in sym:
            links[n] = {t: 0 for t in self.two_hop.get(n, ())}
        for (dest, last), (seq, _) in self.topology.items():
            links.setdefault(last, {})[dest] = seq
        routes: dict[int, RouteEntry] = {n: RouteEntry(n, n, 1, 0, now) for n in sym}
        layer, h = sym, 1
        while layer:
            added = []
            for last in layer:
                reach = links.get(last, {})
                for dest in sorted(reach):
                    if dest != me and dest not in routes:
                        routes[dest] = RouteEntry(dest, routes[last].next_hop, h + 1, reach[dest], now)
                        added.append(dest)
            layer = sorted(added)
            h += 1
        self._routes = routes
        self._dirty = False
        return routes

    def routes(self) -> dict[int, RouteEntry]:
        self._purge()
        if self._dirty:
            self.compute_routes()
        return self._routes

    def on_data_to_send(self, dst: int, packet) -> Decision:
        entry = self.routes().get(dst)
        if entry is None:
            return Decision.drop("no_route")
        return Decision.send(entry.next_hop)
