"""Discrete-event engine: integer microsecond clock, FIFO tie-break, seeded streams."""

from __future__ import annotations

import hashlib
import heapq
import random
from typing import Any, Callable

TICKS_PER_SECOND = 1_000_000


def seconds(value: float) -> int:
    """Convert seconds to integer ticks (microseconds), rounding to nearest."""
    return int(round(value * TICKS_PER_SECOND))


def to_seconds(ticks: int) -> float:
    return ticks / TICKS_PER_SECOND


class SchedulingError(ValueError):
    pass


class Event:
    """A queued callback. Instances double as cancellation tickets."""

    __slots__ = ("fire_at", "seq", "action", "args", "cancelled", "fired")

    def __init__(self, fire_at: int, seq: int, action: Callable[..., Any], args: tuple):
        self.fire_at = fire_at
        self.seq = seq
        self.action = action
        self.args = args
        self.cancelled = False
        self.fired = False

    def __lt__(self, other: "Event") -> bool:
        return (self.fire_at, self.seq) < (other.fire_at, other.seq)

    def __repr__(self) -> str:
        name = getattr(self.action, "__qualname__", repr(self.action))
        return f"Event(fire_at={self.fire_at}, seq={self.seq}, action={name})"


class Engine:
    """Single-threaded event loop.

    Events are processed in lexicographic ``(fire_at, seq)`` order where
    ``seq`` is a monotone insertion counter, so simultaneous events run
    first-in first-out.
    """

    def __init__(self) -> None:
        self._now = 0
        self._seq = 0
        self._queue: list[Event] = []
        self.processed = 0

    @property
    def now(self) -> int:
        return self._now

    def schedule(self, fire_at: int, action: Callable[..., Any], *args: Any) -> Event:
        if fire_at < self._now:
            raise SchedulingError(f"past event: fire_at={fire_at} < now={self._now}")
        event = Event(int(fire_at), self._seq, action, args)
        self._seq += 1
        heapq.heappush(self._queue, event)
        return event

    def schedule_in(self, delay: int, action: Callable[..., Any], *args: Any) -> Event:
        return self.schedule(self._now + delay, action, *args)

    @staticmethod
    def cancel(ticket: Event) -> bool:
        if ticket.fired or ticket.cancelled:
            return False
        ticket.cancelled = True
        return True

    def pending(self) -> int:
        return sum(1 for e in self._queue if not e.cancelled)

    def run_until(self, end: int) -> int:
        if end < self._now:
            raise SchedulingError(f"run_until({end}) is before now={self._now}")
        queue = self._queue
        count = 0
        while queue and queue[0].fire_at <= end:
            event = heapq.heappop(queue)
            if event.cancelled:
                continue
            self._now = event.fire_at
            event.fired = True
            event.action(*event.args)
            count += 1
        self._now = end
        self.processed += count
        return count


STREAM_LABELS = ("mobility", "traffic", "jitter", "protocol")


def stream_seed(master_seed: int, label: str) -> int:
    digest = hashlib.sha256(f"{master_seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


class RngStream(random.Random):
    """Named pseudo-random stream derived from ``(master_seed, label)``.

    Streams are independent: draws from the traffic stream never shift the
    mobility stream.
    """

    def __new__(cls, master_seed: int, label: str):
        return super().__new__(cls)

    def __init__(self, master_seed: int, label: str):
        self.label = label
        self.master_seed = master_seed
        super().__init__(stream_seed(master_seed, label))


class RngStreams:
    def __init__(self, master_seed: int):
        self.master_seed = master_seed
        self._streams: dict[str, RngStream] = {}

    def __getitem__(self, label: str) -> RngStream:
        if label not in STREAM_LABELS:
            raise KeyError(f"unknown stream {label!r}; expected one of {STREAM_LABELS}")
        if label not in self._streams:
            self._streams[label] = RngStream(self.master_seed, label)
        return self._streams[label]
