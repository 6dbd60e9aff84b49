"""Build and run one complete simulation from a :class:`ScenarioConfig`."""

from __future__ import annotations

import functools
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import config as config_mod
from .aodv import AodvAgent
from .config import ScenarioConfig
from .dsdv import DsdvAgent
from .engine import Engine, RngStreams, seconds
from .metrics import MetricsReport, Trace, compute_report
from .mobility import Trajectory, generate
from .network import Network
from .olsr import OlsrAgent
from .traffic import CbrFlow, generate_flows


def agent_factory(config: ScenarioConfig):
    if config.protocol == "DSDV":
        return functools.partial(DsdvAgent, params=config.dsdv)
    if config.protocol == "OLSR":
        return functools.partial(OlsrAgent, params=config.olsr)
    return functools.partial(AodvAgent, params=config.aodv)


@dataclass
class Simulation:
    config: ScenarioConfig
    engine: Engine
    network: Network
    trajectory: Trajectory
    flows: list[CbrFlow]
    trace: Trace

    def run(self, until: Optional[int] = None) -> "Simulation":
        end = self.trace.duration if until is None else until
        self.engine.run_until(end)
        return self

    def finish(self) -> MetricsReport:
        if self.engine.now < self.trace.duration:
            self.engine.run_until(self.trace.duration)
        self.network.finish()
        return compute_report(self.trace)

    @property
    def agents(self):
        return self.network.agents


def build(config: ScenarioConfig, trajectory: Optional[Trajectory] = None,
          flows: Optional[list[CbrFlow]] = None) -> Simulation:
    """Assemble a run.  ``trajectory``/``flows`` override the generated ones."""
    duration = seconds(config.duration)
    streams = RngStreams(config.seed)
    if trajectory is None:
        trajectory = generate(config.mobility, duration, streams["mobility"])
    if flows is None:
        t = config.traffic
        flows = generate_flows(trajectory.node_count, t.connections, t.rate, t.payload,
                               streams["traffic"], duration, t.start_window)
    engine = Engine()
    trace = Trace(duration)
    network = Network(engine, trajectory, config.radio, streams, trace, agent_factory(config),
                      data_ttl=config.ttl)
    network.start()
    for flow in flows:
        network.add_flow(flow)
    return Simulation(config, engine, network, trajectory, flows, trace)


def simulate(config: ScenarioConfig, **kwargs) -> tuple[Simulation, MetricsReport]:
    sim = build(config, **kwargs)
    report = sim.finish()
    return sim, report


def run_scenario(config: ScenarioConfig, out_dir) -> tuple[Path, MetricsReport]:
    """Run once and write ``trace.tsv``, ``report.csv`` and ``config.txt`` into ``out_dir``."""
    out = Path(out_dir)
    os.makedirs(out, exist_ok=True)
    sim, report = simulate(config)
    trace_path = out / "trace.tsv"
    sim.trace.write(trace_path)
    report.write(out / "report.csv")
    (out / "config.txt").write_text(config_mod.dumps(config), encoding="utf-8")
    return trace_path, report
