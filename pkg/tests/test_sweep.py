import math

import pytest

from manetsim import scenario
from manetsim.config import from_flat
from manetsim.sweep import (AGGREGATE_COLUMNS, DETAIL_COLUMNS, SweepError, SweepSpec, aggregate,
                            read_csv, run_sweep)

SHORT = from_flat({"duration": 20, "mobility.node_count": 10, "traffic.connections": 4})


def test_default_matrix_has_thirty_points():
    spec = SweepSpec()
    points = spec.points()
    assert len(points) == 30 and len(set(points)) == 30
    assert points[0] == ("RPGM", "AODV", 10.0, 1)


def test_config_for_uses_constant_speed_and_given_seed():
    cfg = SweepSpec(seeds=(7, 42)).config_for("RWPM", "OLSR", 30.0, 42)
    assert cfg.mobility.speed_min == cfg.mobility.speed_max == 30.0
    assert (cfg.seed, cfg.protocol, cfg.mobility.model) == (42, "OLSR", "RWPM")


@pytest.mark.parametrize("kw", [{"speeds": ()}, {"protocols": ("RIP",)}, {"models": ("X",)},
                                {"speeds": (0.0,)}, {"seeds": ()}])
def test_bad_axes(kw):
    with pytest.raises(SweepError):
        SweepSpec(**kw)


@pytest.fixture(scope="module")
def two_seed_sweep(tmp_path_factory):
    spec = SweepSpec(base=SHORT, speeds=(10.0, 30.0), seeds=(1, 2))
    result = run_sweep(spec)
    out = tmp_path_factory.mktemp("sweep")
    return spec, result, result.write(out)


def test_row_counts(two_seed_sweep):
    spec, result, (detail, agg) = two_seed_sweep
    assert len(read_csv(detail)) == 2 * 3 * 2 * 2
    assert len(read_csv(agg)) == 2 * 3 * 2
    assert detail.read_text().splitlines()[1] == ",".join(DETAIL_COLUMNS)
    assert agg.read_text().splitlines()[1] == ",".join(AGGREGATE_COLUMNS)


def test_aggregate_matches_recomputation(two_seed_sweep):
    _, _, (detail, agg) = two_seed_sweep
    rows = read_csv(detail)
    recomputed = aggregate(rows)
    stored = read_csv(agg)
    assert len(recomputed) == len(stored)
    for a, b in zip(recomputed, stored):
        for col in AGGREGATE_COLUMNS:
            if col in ("mobility", "protocol"):
                assert a[col] == b[col]
            else:
                assert math.isclose(a[col], b[col], rel_tol=1e-12, abs_tol=1e-12)


def test_parallel_equals_serial(two_seed_sweep):
    spec, serial, _ = two_seed_sweep
    parallel = run_sweep(spec, workers=2)
    assert parallel.detail_csv() == serial.detail_csv()
    assert parallel.aggregate_csv() == serial.aggregate_csv()


def test_failed_run_reported_and_sweep_continues(monkeypatch, capsys):
    real = scenario.simulate

    def flaky(cfg, **kw):
        if cfg.protocol == "OLSR" and cfg.seed == 2:
            raise RuntimeError("boom")
        return real(cfg, **kw)

    monkeypatch.setattr(scenario, "simulate", flaky)
    result = run_sweep(SweepSpec(base=SHORT, speeds=(10.0,), models=("RWPM",), seeds=(1, 2)))
    assert [f.key for f in result.failures] == [("RWPM", "OLSR", 10.0, 2)]
    assert len(result.detail_rows()) == 5
    assert "boom" in capsys.readouterr().err
    olsr = [r for r in result.aggregate_rows() if r["protocol"] == "OLSR"]
    assert olsr[0]["runs"] == 1 and olsr[0]["pdf_std"] == 0.0
