"""Node trajectories: Random Waypoint and Reference Point Group Mobility.

A trajectory is piecewise linear.  Each node path is a list of boundary
times (integer microseconds) with a position at every boundary; the segment
between two boundaries is either a straight MOVE at constant speed or a
PAUSE.  Paths always cover ``[0, duration]``.
"""

from __future__ import annotations

import math
import re
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .engine import TICKS_PER_SECOND, seconds

MOVE = "MOVE"
PAUSE = "PAUSE"
RWPM = "RWPM"
RPGM = "RPGM"
MODELS = (RWPM, RPGM)


class MobilityError(ValueError):
    pass


@dataclass(frozen=True)
class Area:
    width: float = 2000.0
    height: float = 2000.0

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise MobilityError(f"area must be strictly positive, got {self.width}x{self.height}")

    def contains(self, x: float, y: float, slack: float = 1e-9) -> bool:
        return -slack <= x <= self.width + slack and -slack <= y <= self.height + slack

    def clamp(self, x: float, y: float) -> tuple[float, float]:
        return min(max(x, 0.0), self.width), min(max(y, 0.0), self.height)


@dataclass(frozen=True)
class GroupConfig:
    group_count: int = 4
    max_member_offset: float = 250.0
    # Multiplies the drawn reference-point speed.
    leader_speed_ratio: float = 1.0
    # When set, the lowest-id member of each group rides the reference point
    # itself instead of the reference being virtual.
    leader_is_member: bool = False

    def __post_init__(self):
        if self.group_count < 1:
            raise MobilityError("group.group_count must be >= 1")
        if not self.max_member_offset > 0:
            raise MobilityError("group.max_member_offset must be > 0")
        if not self.leader_speed_ratio > 0:
            raise MobilityError("group.leader_speed_ratio must be > 0")


@dataclass(frozen=True)
class MobilityConfig:
    model: str = RWPM
    area: Area = field(default_factory=Area)
    speed_min: float = 10.0
    speed_max: float = 10.0
    pause_time: float = 0.0
    node_count: int = 20
    group: Optional[GroupConfig] = None
    # Seconds of motion generated and discarded before t = 0.
    warmup: float = 3600.0

    def __post_init__(self):
        if self.model not in MODELS:
            raise MobilityError(f"unknown mobility model {self.model!r}; expected one of {MODELS}")
        if not (0 < self.speed_min <= self.speed_max):
            raise MobilityError(
                f"speed_min/speed_max must satisfy 0 < speed_min <= speed_max "
                f"(got {self.speed_min}, {self.speed_max})"
            )
        if self.pause_time < 0:
            raise MobilityError("pause_time must be >= 0")
        if self.node_count < 1:
            raise MobilityError("node_count must be >= 1")
        if self.warmup < 0:
            raise MobilityError("warmup must be >= 0")
        if (self.group is not None) != (self.model == RPGM):
            raise MobilityError("group configuration is required for RPGM and only allowed there")


class NodePath:
    """Boundary times/positions of one node plus per-segment speed and state."""

    __slots__ = ("times", "xs", "ys", "speeds", "states")

    def __init__(self, times, xs, ys, speeds, states):
        self.times: list[int] = times
        self.xs: list[float] = xs
        self.ys: list[float] = ys
        self.speeds: list[float] = speeds
        self.states: list[str] = states

    @classmethod
    def start(cls, x: float, y: float) -> "NodePath":
        return cls([0], [x], [y], [], [])

    def append(self, t: int, x: float, y: float, speed: float, state: str) -> None:
        self.times.append(t)
        self.xs.append(x)
        self.ys.append(y)
        self.speeds.append(speed)
        self.states.append(state)

    @property
    def segment_count(self) -> int:
        return len(self.speeds)

    def position_at(self, t: int) -> tuple[float, float]:
        times = self.times
        i = bisect_right(times, t) - 1
        if i >= len(times) - 1:
            return self.xs[-1], self.ys[-1]
        return self._interp(i, t)

    def _interp(self, i: int, t: int) -> tuple[float, float]:
        t0 = self.times[i]
        if t == t0 or self.states[i] == PAUSE:
            return self.xs[i], self.ys[i]
        frac = (t - t0) / (self.times[i + 1] - t0)
        x0, y0 = self.xs[i], self.ys[i]
        return x0 + (self.xs[i + 1] - x0) * frac, y0 + (self.ys[i + 1] - y0) * frac

    def window(self, start: int, end: int) -> "NodePath":
        """The part of the path in ``[start, end]``, re-based to begin at time 0."""
        if start == 0:
            return self.truncated(end)
        x, y = self.position_at(start)
        out = NodePath.start(x, y)
        for i in range(self.segment_count):
            t1 = self.times[i + 1]
            if t1 > start:
                out.append(t1 - start, self.xs[i + 1], self.ys[i + 1], self.speeds[i], self.states[i])
        return out.truncated(end - start)

    def truncated(self, end: int) -> "NodePath":
        """Copy of the path cut (or padded with a pause) to end exactly at ``end``."""
        out = NodePath.start(self.xs[0], self.ys[0])
        for i in range(self.segment_count):
            t1 = self.times[i + 1]
            if t1 <= end:
                out.append(t1, self.xs[i + 1], self.ys[i + 1], self.speeds[i], self.states[i])
                if t1 == end:
                    return out
                continue
            x, y = self._interp(i, end)
            if end > self.times[i]:
                out.append(end, x, y, self.speeds[i], self.states[i])
            return out
        if out.times[-1] < end:
            out.append(end, out.xs[-1], out.ys[-1], 0.0, PAUSE)
        return out


@dataclass
class Trajectory:
    """Trajectory set for all nodes of a scenario."""

    paths: list[NodePath]
    duration: int
    area: Area
    # RPGM only: reference point paths and the node ids of each group.
    references: list[NodePath] = field(default_factory=list)
    groups: list[list[int]] = field(default_factory=list)

    @property
    def node_count(self) -> int:
        return len(self.paths)

    def position_at(self, node: int, t: int) -> tuple[float, float]:
        return position_at(self, node, t)


def position_at(trajectory: Trajectory, node: int, t: int) -> tuple[float, float]:
    if not 0 <= t <= trajectory.duration:
        raise MobilityError(f"time {t} outside [0, {trajectory.duration}]")
    return trajectory.paths[node].position_at(t)


def _waypoint_walk(area: Area, speed_min: float, speed_max: float, pause: int,
                   duration: int, rng, speed_ratio: float = 1.0) -> NodePath:
    """Random-waypoint legs from a uniform start until ``duration`` is covered (uncut)."""
    path = NodePath.start(rng.uniform(0, area.width), rng.uniform(0, area.height))
    t = 0
    while t < duration:
        x0, y0 = path.xs[-1], path.ys[-1]
        dx, dy = rng.uniform(0, area.width), rng.uniform(0, area.height)
        speed = rng.uniform(speed_min, speed_max) * speed_ratio
        dist = math.hypot(dx - x0, dy - y0)
        dt = seconds(dist / speed)
        if dt <= 0:
            continue
        t += dt
        path.append(t, dx, dy, speed, MOVE)
        if pause > 0:
            t += pause
            path.append(t, dx, dy, 0.0, PAUSE)
    return path


def generate_rwpm(config: MobilityConfig, duration: int, rng) -> Trajectory:
    if config.model != RWPM:
        raise MobilityError("generate_rwpm requires model RWPM")
    pause = seconds(config.pause_time)
    skip = seconds(config.warmup)
    paths = [
        _waypoint_walk(config.area, config.speed_min, config.speed_max, pause, skip + duration, rng)
        .window(skip, skip + duration)
        for _ in range(config.node_count)
    ]
    return Trajectory(paths, duration, config.area)


def assign_groups(node_count: int, group_count: int) -> list[list[int]]:
    groups: list[list[int]] = [[] for _ in range(group_count)]
    for node in range(node_count):
        groups[node % group_count].append(node)
    return groups


def _disc_offset(radius: float, rng) -> tuple[float, float]:
    r = radius * math.sqrt(rng.random())
    theta = 2.0 * math.pi * rng.random()
    return r * math.cos(theta), r * math.sin(theta)


def generate_rpgm(config: MobilityConfig, duration: int, rng) -> Trajectory:
    if config.model != RPGM or config.group is None:
        raise MobilityError("generate_rpgm requires model RPGM with a group configuration")
    group_cfg = config.group
    area = config.area
    pause = seconds(config.pause_time)
    skip = seconds(config.warmup)
    groups = assign_groups(config.node_count, group_cfg.group_count)
    paths: list[Optional[NodePath]] = [None] * config.node_count
    references = []
    for members in groups:
        ref = _waypoint_walk(area, config.speed_min, config.speed_max, pause, skip + duration, rng,
                             group_cfg.leader_speed_ratio)
        references.append(ref.window(skip, skip + duration))
        for rank, node in enumerate(members):
            riding = group_cfg.leader_is_member and rank == 0
            offsets = []
            for i in range(len(ref.times)):
                if riding:
                    offsets.append((0.0, 0.0))
                elif i > 0 and ref.states[i - 1] == PAUSE:
                    offsets.append(offsets[-1])
                else:
                    offsets.append(_disc_offset(group_cfg.max_member_offset, rng))
            ox, oy = offsets[0]
            path = NodePath.start(*area.clamp(ref.xs[0] + ox, ref.ys[0] + oy))
            for i in range(ref.segment_count):
                ox, oy = offsets[i + 1]
                x, y = area.clamp(ref.xs[i + 1] + ox, ref.ys[i + 1] + oy)
                dist = math.hypot(x - path.xs[-1], y - path.ys[-1])
                dt = ref.times[i + 1] - ref.times[i]
                if dist < 1e-9:
                    path.append(ref.times[i + 1], x, y, 0.0, PAUSE)
                else:
                    path.append(ref.times[i + 1], x, y, dist * TICKS_PER_SECOND / dt, MOVE)
            paths[node] = path.window(skip, skip + duration)
    return Trajectory(paths, duration, area, references=references, groups=groups)


def generate(config: MobilityConfig, duration: int, rng) -> Trajectory:
    if config.model == RWPM:
        return generate_rwpm(config, duration, rng)
    return generate_rpgm(config, duration, rng)


def static_trajectory(positions: Iterable[tuple[float, float]], duration: int,
                      area: Optional[Area] = None) -> Trajectory:
    """Motionless nodes at fixed positions (handy for convergence checks)."""
    positions = list(positions)
    if area is None:
        area = Area(max(1.0, max(x for x, _ in positions)), max(1.0, max(y for _, y in positions)))
    paths = [NodePath.start(x, y).truncated(duration) for x, y in positions]
    return Trajectory(paths, duration, area)


# --- NS-2 setdest scripts ---------------------------------------------------

def export_ns2_movement(trajectory: Trajectory) -> str:
    lines = []
    for node, path in enumerate(trajectory.paths):
        lines.append(f"$node_({node}) set X_ {path.xs[0]:.6f}")
        lines.append(f"$node_({node}) set Y_ {path.ys[0]:.6f}")
        lines.append(f"$node_({node}) set Z_ {0.0:.6f}")
    moves = []
    for node, path in enumerate(trajectory.paths):
        for i in range(path.segment_count):
            if path.states[i] == MOVE:
                moves.append((path.times[i], node, path.xs[i + 1], path.ys[i + 1], path.speeds[i]))
    moves.sort(key=lambda m: (m[0], m[1]))
    for t, node, x, y, speed in moves:
        lines.append(
            f'$ns_ at {t / TICKS_PER_SECOND:.6f} "$node_({node}) setdest {x:.6f} {y:.6f} {speed:.6f}"'
        )
    return "\n".join(lines) + "\n"


_SET_RE = re.compile(r"^\$node_\((\d+)\)\s+set\s+([XYZ])_\s+(\S+)\s*$")
_SETDEST_RE = re.compile(
    r'^\$ns_\s+at\s+(\S+)\s+"\$node_\((\d+)\)\s+setdest\s+(\S+)\s+(\S+)\s+(\S+)"\s*$'
)


@dataclass
class Ns2Movement:
    """Parsed setdest script: initial positions plus timed setdest commands."""

    initial: dict[int, tuple[float, float]]
    commands: dict[int, list[tuple[float, float, float, float]]]  # (t, x, y, speed)

    def position_at(self, node: int, t: float) -> tuple[float, float]:
        """Re-integrate the node's motion up to ``t`` seconds."""
        x, y = self.initial[node]
        cmds = self.commands.get(node, [])
        for k, (t0, dx, dy, speed) in enumerate(cmds):
            if t0 >= t:
                break
            # motion runs until the next command (or t) supersedes it
            horizon = t if k + 1 == len(cmds) else min(t, cmds[k + 1][0])
            dist = math.hypot(dx - x, dy - y)
            if dist == 0 or speed <= 0:
                continue
            travel = speed * (horizon - t0)
            if travel >= dist:
                x, y = dx, dy
            else:
                x += (dx - x) * travel / dist
                y += (dy - y) * travel / dist
        return x, y


def parse_ns2_movement(text: str) -> Ns2Movement:
    initial: dict[int, list[float]] = {}
    commands: dict[int, list[tuple[float, float, float, float]]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _SET_RE.match(line)
        if m:
            node, axis, value = int(m.group(1)), m.group(2), float(m.group(3))
            pos = initial.setdefault(node, [0.0, 0.0])
            if axis in "XY":
                pos["XY".index(axis)] = value
            continue
        m = _SETDEST_RE.match(line)
        if m:
            t, node = float(m.group(1)), int(m.group(2))
            commands.setdefault(node, []).append(
                (t, float(m.group(3)), float(m.group(4)), float(m.group(5)))
            )
            continue
        raise MobilityError(f"line {lineno}: unrecognised movement command: {raw!r}")
    for cmds in commands.values():
        cmds.sort(key=lambda c: c[0])
    return Ns2Movement({n: (p[0], p[1]) for n, p in initial.items()}, commands)


# --- native waypoint table ---------------------------------------------------

WAYPOINT_HEADER = "node_id\ttime\tx\ty\tspeed\tstate"


def export_waypoints(trajectory: Trajectory) -> str:
    rows = [WAYPOINT_HEADER]
    for node, path in enumerate(trajectory.paths):
        for i, t in enumerate(path.times):
            if i < path.segment_count:
                speed, state = path.speeds[i], path.states[i]
            else:
                speed, state = 0.0, "END"
            rows.append(
                f"{node}\t{t / TICKS_PER_SECOND:.6f}\t{path.xs[i]:.6f}\t{path.ys[i]:.6f}"
                f"\t{speed:.6f}\t{state}"
            )
    return "\n".join(rows) + "\n"


def parse_waypoints(text: str, area: Optional[Area] = None) -> Trajectory:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != WAYPOINT_HEADER:
        raise MobilityError(f"waypoint file must start with header {WAYPOINT_HEADER!r}")
    paths: dict[int, NodePath] = {}
    pending: dict[int, tuple[float, str]] = {}
    for lineno, line in enumerate(lines[1:], 2):
        parts = line.split("\t")
        if len(parts) != 6:
            raise MobilityError(f"line {lineno}: expected 6 columns, got {len(parts)}")
        node, t = int(parts[0]), seconds(float(parts[1]))
        x, y, speed, state = float(parts[2]), float(parts[3]), float(parts[4]), parts[5]
        if node not in paths:
            paths[node] = NodePath([t], [x], [y], [], [])
        else:
            prev_speed, prev_state = pending[node]
            paths[node].append(t, x, y, prev_speed, prev_state)
        pending[node] = (speed, state)
    ordered = [paths[n] for n in sorted(paths)]
    duration = max(p.times[-1] for p in ordered)
    if area is None:
        area = Area(max(1.0, max(max(p.xs) for p in ordered)), max(1.0, max(max(p.ys) for p in ordered)))
    return Trajectory(ordered, duration, area)
