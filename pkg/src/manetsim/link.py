"""Unit-disk broadcast medium with 802.11-style frame accounting."""

from __future__ import annotations

from bisect import bisect_right
from collections import defaultdict
from dataclasses import dataclass

from .engine import TICKS_PER_SECOND
from .routing import BROADCAST, Packet

DATA_FRAME = "DATA"
MAC_CONTROL = "MAC_CONTROL"
# RTS, CTS, ACK sizes in bits; extra overhead frames reuse the last size.
CONTROL_FRAME_BITS = (160, 112, 112)


@dataclass(frozen=True)
class RadioConfig:
    range: float = 250.0
    bandwidth: float = 2e6
    jitter_max: float = 0.005
    unicast_overhead_frames: int = 3
    broadcast_overhead_frames: int = 0

    def __post_init__(self):
        if not self.range > 0:
            raise ValueError("radio.range must be > 0")
        if not self.bandwidth > 0:
            raise ValueError("radio.bandwidth must be > 0")
        if self.jitter_max < 0:
            raise ValueError("radio.jitter_max must be >= 0")
        if self.unicast_overhead_frames < 0 or self.broadcast_overhead_frames < 0:
            raise ValueError("radio overhead frame counts must be >= 0")

    def tx_delay(self, bits: int) -> int:
        """Serialization delay in ticks."""
        return int(round(bits * TICKS_PER_SECOND / self.bandwidth))


@dataclass
class Frame:
    kind: str
    src: int
    dst: int
    bits: int
    carried_packet: Packet | None = None

    def __post_init__(self):
        if (self.kind == DATA_FRAME) != (self.carried_packet is not None):
            raise ValueError("DATA frames carry exactly one packet, MAC_CONTROL frames none")


class MacStats:
    def __init__(self):
        self.frames_sent: dict[int, dict[str, int]] = defaultdict(lambda: {DATA_FRAME: 0, MAC_CONTROL: 0})
        self.transmit_calls = 0

    def total(self, kind: str | None = None) -> int:
        if kind is None:
            return sum(c[DATA_FRAME] + c[MAC_CONTROL] for c in self.frames_sent.values())
        return sum(c[kind] for c in self.frames_sent.values())


class LinkLayer:
    """Shared medium for one run.

    ``deliver(receiver, packet, sender)`` and ``link_failure(sender, dst,
    packet)`` are callbacks into the node harness.
    """

    def __init__(self, engine, trajectory, radio: RadioConfig, rng, trace, deliver, link_failure):
        self.engine = engine
        self.trajectory = trajectory
        self.radio = radio
        self.rng = rng
        self.trace = trace
        self.deliver = deliver
        self.link_failure = link_failure
        self.stats = MacStats()
        self._paths = trajectory.paths
        self._cursor = [0] * len(self._paths)
        self._cache_t = -1
        self._cache: list[tuple[float, float]] = []
        self._range_sq = radio.range * radio.range

    @property
    def node_count(self) -> int:
        return len(self._paths)

    def _position(self, node: int, t: int) -> tuple[float, float]:
        path = self._paths[node]
        times = path.times
        last = len(times) - 1
        i = self._cursor[node]
        if t < times[i]:
            i = bisect_right(times, t) - 1
        else:
            while i < last and times[i + 1] <= t:
                i += 1
        self._cursor[node] = i
        if i >= last:
            return path.xs[-1], path.ys[-1]
        return path._interp(i, t)

    def positions(self, t: int) -> list[tuple[float, float]]:
        if t != self._cache_t:
            self._cache = [self._position(n, t) for n in range(len(self._paths))]
            self._cache_t = t
        return self._cache

    def in_range(self, a: int, b: int, t: int) -> bool:
        pos = self.positions(t)
        (xa, ya), (xb, yb) = pos[a], pos[b]
        dx, dy = xa - xb, ya - yb
        return dx * dx + dy * dy <= self._range_sq

    def neighbors(self, node: int, t: int) -> set[int]:
        pos = self.positions(t)
        x0, y0 = pos[node]
        r2 = self._range_sq
        out = set()
        for other, (x, y) in enumerate(pos):
            if other != node:
                dx, dy = x - x0, y - y0
                if dx * dx + dy * dy <= r2:
                    out.add(other)
        return out

    def transmit(self, src: int, dst: int, packet: Packet) -> list:
        """Put one packet on air.  Returns the scheduled delivery/failure events."""
        now = self.engine.now
        radio = self.radio
        tx = radio.tx_delay(packet.size_bits)
        jitter = int(round(self.rng.uniform(0.0, radio.jitter_max) * TICKS_PER_SECOND)) if radio.jitter_max > 0 else 0
        broadcast = dst == BROADCAST
        overhead = radio.broadcast_overhead_frames if broadcast else radio.unicast_overhead_frames
        self._account(src, packet, overhead, now)
        schedule = self.engine.schedule
        if broadcast:
            return [schedule(now + tx + jitter, self.deliver, rcv, packet, src)
                    for rcv in sorted(self.neighbors(src, now))]
        if self.in_range(src, dst, now):
            return [schedule(now + tx + jitter, self.deliver, dst, packet, src)]
        return [schedule(now + tx, self.link_failure, src, dst, packet)]

    def _account(self, src: int, packet: Packet, overhead: int, now: int) -> None:
        counters = self.stats.frames_sent[src]
        counters[DATA_FRAME] += 1
        counters[MAC_CONTROL] += overhead
        self.stats.transmit_calls += 1
        record = self.trace.record
        record(now, src, "MAC_FRAME", packet.uid, packet.kind, packet.size_bits)
        for k in range(overhead):
            bits = CONTROL_FRAME_BITS[min(k, len(CONTROL_FRAME_BITS) - 1)]
            record(now, src, "MAC_FRAME", packet.uid, MAC_CONTROL, bits)
