"""Command line entry point: ``manetsim simulate|sweep|metrics|genmove``.

Every subcommand that builds a scenario accepts ``--config FILE`` plus one
``--<dotted.key> VALUE`` flag per configuration key; flags win over the file.
Failures print a single JSON object on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import config as config_mod
from .config import ConfigError
from .engine import RngStreams, seconds
from .metrics import Trace, compute_report
from .mobility import MobilityError, export_ns2_movement, export_waypoints, generate
from .scenario import run_scenario
from .sweep import SweepError, SweepSpec, run_sweep
from .traffic import TrafficError

EXIT_USAGE = 2
EXIT_FAILURE = 1


def _csv_list(kind):
    def parse(text: str):
        try:
            return tuple(kind(item.strip()) for item in text.split(",") if item.strip())
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}") from None
    return parse


def _add_scenario_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="scenario file (dotted key = value lines)")
    group = parser.add_argument_group("scenario keys (override the config file)")
    for key in config_mod.KEYS:
        group.add_argument(f"--{key}", dest=key, metavar="VALUE", default=None,
                           help=f"default: {config_mod._format(config_mod.DEFAULTS[key])}")


def _scenario(args) -> config_mod.ScenarioConfig:
    overrides = {k: getattr(args, k) for k in config_mod.KEYS if getattr(args, k) is not None}
    if args.config is not None:
        return config_mod.load_config(args.config, overrides)
    return config_mod.from_flat(overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="manetsim",
                                     description="Discrete-event MANET routing simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario")
    _add_scenario_flags(p)
    p.add_argument("--out", type=Path, default=Path("run"),
                   help="output directory for trace.tsv, report.csv, config.txt")

    p = sub.add_parser("sweep", help="run the protocol x mobility x speed x seed matrix")
    _add_scenario_flags(p)
    p.add_argument("--speeds", type=_csv_list(float), default=SweepSpec.speeds)
    p.add_argument("--protocols", type=_csv_list(str.upper), default=SweepSpec.protocols)
    p.add_argument("--models", type=_csv_list(str.upper), default=SweepSpec.models)
    p.add_argument("--seeds", type=_csv_list(int), default=SweepSpec.seeds)
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.add_argument("--out", type=Path, default=Path("sweep"),
                   help="output directory for sweep_detail.csv and sweep_aggregate.csv")

    p = sub.add_parser("metrics", help="recompute metrics from a trace file")
    p.add_argument("trace", type=Path)
    p.add_argument("--out", type=Path, help="write report.csv here instead of stdout")

    p = sub.add_parser("genmove", help="export a movement file for a scenario")
    _add_scenario_flags(p)
    p.add_argument("--format", choices=("ns2", "waypoints"), default="ns2")
    p.add_argument("--out", type=Path, help="output file (stdout if omitted)")
    return parser


def cmd_simulate(args) -> int:
    cfg = _scenario(args)
    trace_path, report = run_scenario(cfg, args.out)
    sys.stdout.write(config_mod.dumps(cfg))
    sys.stdout.write(report.to_csv())
    print(f"# trace written to {trace_path}", file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    spec = SweepSpec(base=_scenario(args), speeds=args.speeds, protocols=args.protocols,
                     models=args.models, seeds=args.seeds)
    result = run_sweep(spec, workers=max(1, args.workers))
    detail, agg = result.write(args.out)
    sys.stdout.write(result.summary_table())
    print(f"# {len(result.results)} runs, {len(result.failures)} failed; wrote {detail} and {agg}",
          file=sys.stderr)
    return EXIT_FAILURE if result.failures else 0


def cmd_metrics(args) -> int:
    report = compute_report(Trace.read(args.trace))
    if args.out is not None:
        report.write(args.out)
    else:
        sys.stdout.write(report.to_csv())
    return 0


def cmd_genmove(args) -> int:
    cfg = _scenario(args)
    traj = generate(cfg.mobility, seconds(cfg.duration), RngStreams(cfg.seed)["mobility"])
    text = export_ns2_movement(traj) if args.format == "ns2" else export_waypoints(traj)
    if args.out is not None:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "metrics": cmd_metrics,
            "genmove": cmd_genmove}


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        return _fail("usage", "invalid command line", EXIT_USAGE)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, SweepError, MobilityError, TrafficError) as exc:
        return _fail("config", str(exc), EXIT_USAGE)
    except OSError as exc:
        return _fail("io", f"{exc.strerror or exc}: {exc.filename or ''}".rstrip(": "), EXIT_FAILURE)
    except ValueError as exc:
        return _fail("input", str(exc), EXIT_FAILURE)


if __name__ == "__main__":
    sys.exit(main())
