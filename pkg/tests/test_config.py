import pytest

from manetsim import config as cfgmod
from manetsim.config import DEFAULTS, KEYS, ConfigError, ScenarioConfig, from_flat, loads
from manetsim.scenario import run_scenario, simulate


def test_empty_file_gives_defaults():
    assert loads("") == ScenarioConfig()
    assert loads("# only a comment\n\n") == ScenarioConfig()
    assert cfgmod.to_flat(loads("")) == DEFAULTS


def test_comments_and_types():
    cfg = loads("protocol = DSDV  # trailing\nmobility.speed_max = 50\naodv.strict_reply_rule = yes\n")
    assert cfg.protocol == "DSDV"
    assert cfg.mobility.speed_max == 50.0
    assert cfg.aodv.strict_reply_rule is True


def test_speed_min_above_max_named():
    with pytest.raises(ConfigError, match="speed_min"):
        loads("mobility.speed_min = 30\nmobility.speed_max = 20\n")


def test_unknown_key_lists_accepted():
    with pytest.raises(ConfigError) as err:
        loads("mobility.sped = 3\n")
    msg = str(err.value)
    assert "line 1" in msg and "mobility.sped" in msg
    assert all(k in msg for k in KEYS)


def test_duplicate_key_reports_line():
    with pytest.raises(ConfigError, match="line 3: duplicate key 'seed'"):
        loads("seed = 1\n\nseed = 2\n")


@pytest.mark.parametrize("text,fragment", [
    ("seed\n", "expected 'key = value'"),
    ("seed =\n", "missing value"),
    ("seed = abc\n", "seed"),
    ("protocol = RIP\n", "protocol"),
    ("duration = -1\n", "duration"),
    ("aodv.strict_reply_rule = maybe\n", "strict_reply_rule"),
])
def test_bad_values_rejected(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        loads(text)


def test_overrides_win_over_file():
    cfg = loads("seed = 4\nprotocol = OLSR\n", {"seed": "9"})
    assert (cfg.seed, cfg.protocol) == (9, "OLSR")


def test_echo_round_trip_reproduces_run(tmp_path):
    cfg = from_flat({"protocol": "AODV", "duration": 30, "seed": 12, "mobility.model": "RWPM"})
    text = cfgmod.dumps(cfg)
    assert len(text.splitlines()) == len(KEYS)
    again = loads(text)
    assert again == cfg
    a, _ = simulate(cfg)
    b, _ = simulate(again)
    assert a.trace.dumps() == b.trace.dumps()


def test_duration_zero_is_empty_and_degenerate():
    sim, report = simulate(from_flat({"duration": 0}))
    assert sim.trace.events == []
    assert report.degenerate == {"pdf", "aeed", "nrl", "nml"}
    assert report.throughput == 0.0


def test_run_scenario_is_byte_identical(tmp_path):
    cfg = from_flat({"protocol": "DSDV", "duration": 40, "seed": 3, "mobility.model": "RPGM"})
    run_scenario(cfg, tmp_path / "a")
    run_scenario(cfg, tmp_path / "b")
    for name in ("trace.tsv", "report.csv", "config.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_different_seeds_differ():
    a, _ = simulate(from_flat({"duration": 30, "seed": 1}))
    b, _ = simulate(from_flat({"duration": 30, "seed": 2}))
    assert a.trace.dumps() != b.trace.dumps()
