"""Packet trace recording and the performance figures derived from it."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

from .engine import TICKS_PER_SECOND
from .routing import CONTROL_KINDS, DATA

AGT_SEND = "AGT_SEND"
AGT_RECV = "AGT_RECV"
RTR_SEND = "RTR_SEND"
RTR_FWD = "RTR_FWD"
RTR_DROP = "RTR_DROP"
MAC_FRAME = "MAC_FRAME"
ACTIONS = (AGT_SEND, AGT_RECV, RTR_SEND, RTR_FWD, RTR_DROP, MAC_FRAME)

TRACE_VERSION = "manetsim-trace v1"
TRACE_COLUMNS = ("time_us", "node", "action", "uid", "kind", "bits", "reason")
NO_REASON = "-"


class TraceEvent(NamedTuple):
    time: int
    node: int
    action: str
    uid: int
    kind: str
    bits: int
    reason: str = NO_REASON


class Trace:
    """Append-only event log for one run."""

    def __init__(self, duration: int, events: Optional[list[TraceEvent]] = None):
        self.duration = duration
        self.events: list[TraceEvent] = events if events is not None else []

    def record(self, time: int, node: int, action: str, uid: int, kind: str, bits: int,
               reason: str = NO_REASON) -> None:
        self.events.append(TraceEvent(time, node, action, uid, kind, bits, reason))

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def dumps(self) -> str:
        buf = io.StringIO()
        buf.write(f"# {TRACE_VERSION} duration_us={self.duration}\n")
        buf.write("\t".join(TRACE_COLUMNS) + "\n")
        for e in self.events:
            buf.write(f"{e.time}\t{e.node}\t{e.action}\t{e.uid}\t{e.kind}\t{e.bits}\t{e.reason}\n")
        return buf.getvalue()

    def write(self, path) -> None:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text: str, duration: Optional[int] = None) -> "Trace":
        events = []
        header_seen = False
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    if token.startswith("duration_us=") and duration is None:
                        duration = int(token.split("=", 1)[1])
                continue
            parts = line.split("\t")
            if not header_seen:
                if tuple(parts) != TRACE_COLUMNS:
                    raise ValueError(f"line {lineno}: expected trace header {TRACE_COLUMNS}")
                header_seen = True
                continue
            if len(parts) != len(TRACE_COLUMNS):
                raise ValueError(f"line {lineno}: expected {len(TRACE_COLUMNS)} columns")
            events.append(TraceEvent(int(parts[0]), int(parts[1]), parts[2], int(parts[3]),
                                     parts[4], int(parts[5]), parts[6]))
        if duration is None:
            raise ValueError("trace has no duration_us comment; pass duration explicitly")
        return cls(duration, events)

    @classmethod
    def read(cls, path, duration: Optional[int] = None) -> "Trace":
        with open(path, encoding="ascii") as fh:
            return cls.loads(fh.read(), duration)


def _data_events(trace: Iterable[TraceEvent], action: str):
    return (e for e in trace if e.action == action and e.kind == DATA)


def compute_pdf(trace) -> tuple[float, bool]:
    """Percent of sent DATA packets received.  Returns ``(pdf, degenerate)``."""
    sent = sum(1 for _ in _data_events(trace, AGT_SEND))
    received = sum(1 for _ in _data_events(trace, AGT_RECV))
    if sent == 0:
        return 0.0, True
    return 100 * received / sent, False


def compute_aeed(trace) -> tuple[float, bool]:
    """Mean source-to-destination latency of delivered DATA, in seconds."""
    sent_at = {e.uid: e.time for e in _data_events(trace, AGT_SEND)}
    delays = [e.time - sent_at[e.uid] for e in _data_events(trace, AGT_RECV)]
    if not delays:
        return 0.0, True
    return sum(delays) / (len(delays) * TICKS_PER_SECOND), False


def compute_nrl(trace) -> tuple[float, bool]:
    control = sum(1 for e in trace
                  if e.kind in CONTROL_KINDS and (e.action == RTR_SEND or e.action == RTR_FWD))
    received = sum(1 for _ in _data_events(trace, AGT_RECV))
    if received == 0:
        return 0.0, True
    return control / received, False


def compute_throughput(trace) -> float:
    """Delivered payload bits per second of simulated time."""
    if trace.duration <= 0:
        return 0.0
    bits = sum(e.bits for e in _data_events(trace, AGT_RECV))
    return bits * TICKS_PER_SECOND / trace.duration


def compute_nml(trace) -> tuple[float, bool]:
    frames = sum(1 for e in trace if e.action == MAC_FRAME)
    received = sum(1 for _ in _data_events(trace, AGT_RECV))
    if received == 0:
        return 0.0, True
    return frames / received, False


REPORT_VERSION = "manetsim-report v1"
REPORT_COLUMNS = ("pdf", "aeed_s", "nrl", "throughput_bps", "nml", "sent", "received",
                  "control_packets", "mac_frames", "degenerate")


@dataclass
class MetricsReport:
    pdf: float
    aeed: float
    nrl: float
    throughput: float
    nml: float
    sent: int
    received: int
    control_packets: int
    mac_frames: int
    degenerate: set[str] = field(default_factory=set)

    def as_row(self) -> list:
        return [
            f"{self.pdf:.6f}", f"{self.aeed:.9f}", f"{self.nrl:.6f}", f"{self.throughput:.6f}",
            f"{self.nml:.6f}", self.sent, self.received, self.control_packets, self.mac_frames,
            ";".join(sorted(self.degenerate)) or "-",
        ]

    def to_csv(self) -> str:
        return (f"# {REPORT_VERSION}\n" + ",".join(REPORT_COLUMNS) + "\n"
                + ",".join(str(v) for v in self.as_row()) + "\n")

    def write(self, path) -> None:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(self.to_csv())


def compute_report(trace: Trace) -> MetricsReport:
    """All five figures plus raw counters in a single pass over the trace."""
    sent = received = control = frames = 0
    recv_bits = 0
    delay_sum = 0
    sent_at: dict[int, int] = {}
    for e in trace.events:
        action = e.action
        if action == MAC_FRAME:
            frames += 1
        elif action == RTR_SEND or action == RTR_FWD:
            if e.kind in CONTROL_KINDS:
                control += 1
        elif e.kind == DATA:
            if action == AGT_SEND:
                sent += 1
                sent_at[e.uid] = e.time
            elif action == AGT_RECV:
                received += 1
                recv_bits += e.bits
                delay_sum += e.time - sent_at[e.uid]
    degenerate = set()
    if sent == 0:
        degenerate.add("pdf")
    if received == 0:
        degenerate.update({"aeed", "nrl", "nml"})
    pdf = 100 * received / sent if sent else 0.0
    aeed = delay_sum / (received * TICKS_PER_SECOND) if received else 0.0
    nrl = control / received if received else 0.0
    nml = frames / received if received else 0.0
    throughput = recv_bits * TICKS_PER_SECOND / trace.duration if trace.duration > 0 else 0.0
    return MetricsReport(pdf, aeed, nrl, throughput, nml, sent, received, control, frames, degenerate)


def conservation_violations(trace) -> list[int]:
    """DATA uids that do not end in exactly one AGT_RECV or terminal drop."""
    sent, ends = set(), {}
    for e in trace:
        if e.kind != DATA:
            continue
        if e.action == AGT_SEND:
            sent.add(e.uid)
        elif e.action in (AGT_RECV, RTR_DROP):
            ends[e.uid] = ends.get(e.uid, 0) + 1
    bad = [uid for uid in sent if ends.get(uid, 0) != 1]
    bad.extend(uid for uid in ends if uid not in sent)
    return sorted(bad)


def is_finite_report(report: MetricsReport) -> bool:
    return all(math.isfinite(v) for v in (report.pdf, report.aeed, report.nrl, report.throughput, report.nml))
