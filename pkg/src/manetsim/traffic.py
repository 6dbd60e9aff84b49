"""Constant-bit-rate traffic sources."""

from __future__ import annotations

from dataclasses import dataclass

from .engine import TICKS_PER_SECOND, seconds


class TrafficError(ValueError):
    pass


@dataclass(frozen=True)
class CbrFlow:
    src: int
    dst: int
    rate: float  # packets per second
    payload: int  # bytes
    start_at: int
    stop_at: int

    def __post_init__(self):
        if self.src == self.dst:
            raise TrafficError("flow source and destination must differ")
        if not self.rate > 0:
            raise TrafficError("flow rate must be > 0")

    @property
    def interval(self) -> int:
        return int(round(TICKS_PER_SECOND / self.rate))

    def send_times(self) -> list[int]:
        step = self.interval
        return list(range(self.start_at, self.stop_at, step))


def generate_flows(node_count: int, connections: int, rate: float, payload: int, rng,
                   duration: int, start_window: float = 10.0) -> list[CbrFlow]:
    """Sample distinct ordered (src, dst) pairs, starts staggered over ``start_window`` s."""
    pairs = [(s, d) for s in range(node_count) for d in range(node_count) if s != d]
    if connections < 0 or connections > len(pairs):
        raise TrafficError(
            f"infeasible connection count {connections} for {node_count} nodes "
            f"(max {len(pairs)})"
        )
    chosen = rng.sample(pairs, connections)
    window = seconds(start_window)
    flows = []
    for src, dst in chosen:
        start = min(int(rng.uniform(0, window)), duration)
        flows.append(CbrFlow(src, dst, rate, payload, start, duration))
    return flows
