"""Scenario configuration: flat ``dotted.key = value`` files.

Grammar, one statement per line::

    # comment (also after a value)
    mobility.speed_max = 50
    protocol = DSDV

Blank lines are ignored.  Values are parsed according to the key's type
(int, float, bool as true/false/yes/no/1/0, or string).  Unknown keys and
duplicate keys are errors.  Omitted keys take the defaults below, which
describe the baseline 20-node scenario.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Any, Mapping

from .aodv import AodvParams
from .dsdv import DsdvParams
from .link import RadioConfig
from .mobility import RPGM, Area, GroupConfig, MobilityConfig
from .olsr import OlsrParams
from .routing import DEFAULT_TTL

PROTOCOLS = ("AODV", "OLSR", "DSDV")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrafficConfig:
    connections: int = 10
    rate: float = 5.0
    payload: int = 512
    start_window: float = 10.0

    def __post_init__(self):
        if self.connections < 0:
            raise ConfigError("traffic.connections must be >= 0")
        if not self.rate > 0:
            raise ConfigError("traffic.rate must be > 0")
        if self.payload <= 0:
            raise ConfigError("traffic.payload must be > 0")
        if self.start_window < 0:
            raise ConfigError("traffic.start_window must be >= 0")


@dataclass(frozen=True)
class ScenarioConfig:
    protocol: str = "AODV"
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    radio: RadioConfig = field(default_factory=RadioConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    duration: float = 100.0
    seed: int = 1
    ttl: int = DEFAULT_TTL
    dsdv: DsdvParams = field(default_factory=DsdvParams)
    olsr: OlsrParams = field(default_factory=OlsrParams)
    aodv: AodvParams = field(default_factory=AodvParams)

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if self.duration < 0:
            raise ConfigError("duration must be >= 0")
        if self.ttl < 1:
            raise ConfigError("ttl must be >= 1")
        max_pairs = self.mobility.node_count * (self.mobility.node_count - 1)
        if self.traffic.connections > max_pairs:
            raise ConfigError(
                f"traffic.connections={self.traffic.connections} exceeds the {max_pairs} "
                f"ordered pairs of {self.mobility.node_count} nodes"
            )

    def to_flat(self) -> dict[str, Any]:
        return to_flat(self)

    def with_overrides(self, **flat: Any) -> "ScenarioConfig":
        values = self.to_flat()
        for key, value in flat.items():
            key = key.replace("__", ".")
            if key not in values:
                raise ConfigError(f"unknown key {key!r}")
            values[key] = value
        return from_flat(values)


_DEFAULT_GROUP = GroupConfig()

# key -> default; order defines the echo layout
DEFAULTS: dict[str, Any] = {
    "protocol": "AODV",
    "seed": 1,
    "duration": 100.0,
    "ttl": DEFAULT_TTL,
    "mobility.model": "RWPM",
    "mobility.width": 2000.0,
    "mobility.height": 2000.0,
    "mobility.speed_min": 10.0,
    "mobility.speed_max": 10.0,
    "mobility.pause_time": 0.0,
    "mobility.node_count": 20,
    "mobility.warmup": 3600.0,
    "mobility.group_count": _DEFAULT_GROUP.group_count,
    "mobility.max_member_offset": _DEFAULT_GROUP.max_member_offset,
    "mobility.leader_speed_ratio": _DEFAULT_GROUP.leader_speed_ratio,
    "mobility.leader_is_member": _DEFAULT_GROUP.leader_is_member,
}
for _prefix, _cls in (("radio", RadioConfig), ("traffic", TrafficConfig), ("dsdv", DsdvParams),
                      ("olsr", OlsrParams), ("aodv", AodvParams)):
    for _f in fields(_cls):
        DEFAULTS[f"{_prefix}.{_f.name}"] = _f.default

KEYS = tuple(DEFAULTS)


def _coerce(key: str, raw: Any) -> Any:
    default = DEFAULTS[key]
    if not isinstance(raw, str):
        if isinstance(default, bool):
            return bool(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, int):
            if isinstance(raw, float) and not raw.is_integer():
                raise ConfigError(f"{key}: expected an integer, got {raw!r}")
            return int(raw)
        return str(raw)
    text = raw.strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        kind = type(default).__name__
        raise ConfigError(f"{key}: expected {kind}, got {text!r}") from None
    return text.upper() if key in ("protocol", "mobility.model") else text


def from_flat(values: Mapping[str, Any]) -> ScenarioConfig:
    unknown = sorted(set(values) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}; accepted keys: {', '.join(KEYS)}")
    v = {k: _coerce(k, values.get(k, d)) for k, d in DEFAULTS.items()}

    def section(prefix: str, cls):
        return cls(**{f.name: v[f"{prefix}.{f.name}"] for f in fields(cls)})

    try:
        group = None
        if v["mobility.model"] == RPGM:
            group = GroupConfig(v["mobility.group_count"], v["mobility.max_member_offset"],
                                v["mobility.leader_speed_ratio"], v["mobility.leader_is_member"])
        mobility = MobilityConfig(
            model=v["mobility.model"],
            area=Area(v["mobility.width"], v["mobility.height"]),
            speed_min=v["mobility.speed_min"],
            speed_max=v["mobility.speed_max"],
            pause_time=v["mobility.pause_time"],
            node_count=v["mobility.node_count"],
            group=group,
            warmup=v["mobility.warmup"],
        )
        return ScenarioConfig(
            protocol=v["protocol"],
            mobility=mobility,
            radio=section("radio", RadioConfig),
            traffic=section("traffic", TrafficConfig),
            duration=v["duration"],
            seed=v["seed"],
            ttl=v["ttl"],
            dsdv=section("dsdv", DsdvParams),
            olsr=section("olsr", OlsrParams),
            aodv=section("aodv", AodvParams),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def to_flat(config: ScenarioConfig) -> dict[str, Any]:
    m = config.mobility
    group = m.group or _DEFAULT_GROUP
    out: dict[str, Any] = {
        "protocol": config.protocol,
        "seed": config.seed,
        "duration": config.duration,
        "ttl": config.ttl,
        "mobility.model": m.model,
        "mobility.width": m.area.width,
        "mobility.height": m.area.height,
        "mobility.speed_min": m.speed_min,
        "mobility.speed_max": m.speed_max,
        "mobility.pause_time": m.pause_time,
        "mobility.node_count": m.node_count,
        "mobility.warmup": m.warmup,
        "mobility.group_count": group.group_count,
        "mobility.max_member_offset": group.max_member_offset,
        "mobility.leader_speed_ratio": group.leader_speed_ratio,
        "mobility.leader_is_member": group.leader_is_member,
    }
    for prefix in ("radio", "traffic", "dsdv", "olsr", "aodv"):
        section = getattr(config, prefix)
        for f in fields(section):
            out[f"{prefix}.{f.name}"] = getattr(section, f.name)
    return out


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dumps(config: ScenarioConfig) -> str:
    """Echo every key, defaults included; loading the echo reproduces the run."""
    return "".join(f"{k} = {_format(v)}\n" for k, v in to_flat(config).items())


def parse(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}; accepted keys: {', '.join(KEYS)}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: missing value for {key!r}")
        values[key] = value
    return values


def loads(text: str, overrides: Mapping[str, Any] | None = None) -> ScenarioConfig:
    values: dict[str, Any] = dict(parse(text))
    if overrides:
        values.update(overrides)
    return from_flat(values)


def load_config(path, overrides: Mapping[str, Any] | None = None) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read(), overrides)

