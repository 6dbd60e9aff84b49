"""Protocol x mobility x speed x seed experiment matrix."""

from __future__ import annotations

import csv
import io
import math
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .config import PROTOCOLS, ScenarioConfig, from_flat
from .metrics import MetricsReport
from .mobility import MODELS

SWEEP_VERSION = "manetsim-sweep v1"
DETAIL_COLUMNS = ("mobility", "protocol", "speed_mps", "seed",
                  "pdf", "aeed_ms", "nrl", "throughput_bps", "nml")
METRIC_COLUMNS = DETAIL_COLUMNS[4:]
AGGREGATE_COLUMNS = ("mobility", "protocol", "speed_mps", "runs") + tuple(
    f"{m}_{stat}" for m in METRIC_COLUMNS for stat in ("mean", "std"))


class SweepError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    base: ScenarioConfig = field(default_factory=ScenarioConfig)
    speeds: tuple[float, ...] = (10.0, 20.0, 30.0, 40.0, 50.0)
    protocols: tuple[str, ...] = ("AODV", "OLSR", "DSDV")
    models: tuple[str, ...] = ("RPGM", "RWPM")
    seeds: tuple[int, ...] = (1,)

    def __post_init__(self):
        for name in ("speeds", "protocols", "models", "seeds"):
            if not getattr(self, name):
                raise SweepError(f"sweep axis {name!r} is empty")
        for p in self.protocols:
            if p not in PROTOCOLS:
                raise SweepError(f"unknown protocol {p!r}")
        for m in self.models:
            if m not in MODELS:
                raise SweepError(f"unknown mobility model {m!r}")
        if any(not s > 0 for s in self.speeds):
            raise SweepError("speeds must be > 0")

    def points(self) -> list[tuple[str, str, float, int]]:
        """Every (model, protocol, speed, seed) point, in canonical order."""
        return [(m, p, float(v), s) for m in self.models for p in self.protocols
                for v in self.speeds for s in self.seeds]

    def config_for(self, model: str, protocol: str, speed: float, seed: int) -> ScenarioConfig:
        # the seed comes straight from the list, never from the point's position
        flat = self.base.to_flat()
        flat.update({"protocol": protocol, "mobility.model": model, "mobility.speed_min": speed,
                     "mobility.speed_max": speed, "seed": seed})
        return from_flat(flat)


@dataclass(frozen=True)
class RunResult:
    model: str
    protocol: str
    speed: float
    seed: int
    report: Optional[MetricsReport] = None
    error: Optional[str] = None

    @property
    def key(self):
        return (self.model, self.protocol, self.speed, self.seed)

    def row(self) -> dict:
        r = self.report
        return {"mobility": self.model, "protocol": self.protocol, "speed_mps": self.speed,
                "seed": self.seed, "pdf": r.pdf, "aeed_ms": r.aeed * 1000.0, "nrl": r.nrl,
                "throughput_bps": r.throughput, "nml": r.nml}


def _run_point(spec: SweepSpec, point) -> RunResult:
    from .scenario import simulate

    try:
        _, report = simulate(spec.config_for(*point))
        return RunResult(*point, report=report)
    except Exception as exc:  # a failed run must not sink the sweep
        return RunResult(*point, error=f"{type(exc).__name__}: {exc}")


@dataclass
class SweepResult:
    results: list[RunResult]

    @property
    def failures(self) -> list[RunResult]:
        return [r for r in self.results if r.error is not None]

    def detail_rows(self) -> list[dict]:
        return [r.row() for r in sorted(self.results, key=lambda r: r.key) if r.report is not None]

    def aggregate_rows(self) -> list[dict]:
        return aggregate(self.detail_rows())

    def detail_csv(self) -> str:
        return _csv(DETAIL_COLUMNS, self.detail_rows(), "detail")

    def aggregate_csv(self) -> str:
        return _csv(AGGREGATE_COLUMNS, self.aggregate_rows(), "aggregate")

    def summary_table(self) -> str:
        lines = [f"{'mobility':<8} {'protocol':<8} {'speed':>6} {'pdf%':>7} {'aeed_ms':>9} "
                 f"{'nrl':>7} {'nml':>7}"]
        for row in self.aggregate_rows():
            lines.append(f"{row['mobility']:<8} {row['protocol']:<8} {row['speed_mps']:>6g} "
                         f"{row['pdf_mean']:>7.2f} {row['aeed_ms_mean']:>9.2f} "
                         f"{row['nrl_mean']:>7.3f} {row['nml_mean']:>7.3f}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        detail, agg = out / "sweep_detail.csv", out / "sweep_aggregate.csv"
        detail.write_text(self.detail_csv(), encoding="utf-8")
        agg.write_text(self.aggregate_csv(), encoding="utf-8")
        return detail, agg


def aggregate(rows: Sequence[dict]) -> list[dict]:
    """Mean and sample standard deviation per (mobility, protocol, speed)."""
    cells: dict[tuple, list[dict]] = {}
    for row in rows:
        key = (row["mobility"], row["protocol"], float(row["speed_mps"]))
        cells.setdefault(key, []).append(row)
    out = []
    for key in sorted(cells):
        group = cells[key]
        agg = {"mobility": key[0], "protocol": key[1], "speed_mps": key[2], "runs": len(group)}
        for m in METRIC_COLUMNS:
            values = [float(r[m]) for r in group]
            agg[f"{m}_mean"] = statistics.fmean(values)
            agg[f"{m}_std"] = statistics.stdev(values) if len(values) > 1 else 0.0
        out.append(agg)
    return out


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else "nan"
    return str(value)


def _csv(columns, rows, kind: str) -> str:
    buf = io.StringIO()
    buf.write(f"# {SWEEP_VERSION} {kind}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def read_csv(path) -> list[dict]:
    """Rows of a detail or aggregate CSV; numeric cells come back as floats."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    rows = []
    for row in csv.DictReader(lines):
        rows.append({k: (v if k in ("mobility", "protocol") else float(v)) for k, v in row.items()})
    return rows


def run_sweep(spec: SweepSpec, workers: int = 1, progress=None) -> SweepResult:
    """Run every point.  Failed runs are reported on stderr and skipped."""
    points = spec.points()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_point, [spec] * len(points), points))
    else:
        results = []
        for point in points:
            results.append(_run_point(spec, point))
            if progress is not None:
                progress(results[-1])
    for r in results:
        if r.error is not None:
            print(f"sweep: run {r.key} failed: {r.error}", file=sys.stderr)
    return SweepResult(results)
