"""Scenario files: flat key=value text defining one simulation run.

Defaults reproduce the reference parameter set: 500-byte packets, MIN/WARN/
MAX thresholds of 2/10/50 Mbit, 100 s duration, HELLO every 2 s, TC every
5 s. Traffic is either a full-mesh workload at a communication level in
[0, 1] or an explicit flow list. Serialization is canonical: fixed key
order, one key per line, so serialize-parse-serialize is byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .protocol import PROTOCOLS


class ConfigError(ValueError):
    """Invalid scenario or command-line configuration (exit code 2)."""


@dataclass
class Scenario:
    topology: str = ""
    protocol: str = "qolsr"
    level: float | None = None
    flows: list[tuple[int, int, float, float]] = field(default_factory=list)
    duration_s: float = 100.0
    seed: int = 1
    data_start_s: float = 15.0
    kappa_bits: int = 4000
    min_bits: float = 2e6
    warn_bits: float = 10e6
    max_bits: float = 50e6
    initial_fill_bits: float = 3e6
    pool_init: dict[tuple[int, int], float] = field(default_factory=dict)
    hello_interval_s: float = 2.0
    tc_interval_s: float = 5.0
    neighbor_hold_multiplier: int = 3
    per_hop_processing_delay_s: float = 1e-3
    fiber_speed_km_per_s: float = 2e5
    rate_r0_bps: float = 10e6
    rate_alpha_db_per_km: float = 0.2
    extrapolate_remote: bool = True
    deterministic_arrivals: bool = False
    static_routes: bool = False

    def validate(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ConfigError(
                f"unknown protocol {self.protocol!r}, expected one of {PROTOCOLS}"
            )
        if self.level is not None and self.flows:
            raise ConfigError("level and flows are mutually exclusive")
        if self.level is not None and not 0 <= self.level <= 1:
            raise ConfigError(f"level must be in [0, 1], got {self.level}")
        if self.duration_s <= 0:
            raise ConfigError("duration_s must be positive")
        if self.data_start_s < 0:
            raise ConfigError("data_start_s must be non-negative")
        if self.kappa_bits <= 0:
            raise ConfigError("kappa_bits must be positive")
        if not 0 <= self.min_bits < self.warn_bits < self.max_bits:
            raise ConfigError(
                "pool thresholds must satisfy 0 <= MIN < WARN < MAX, got "
                f"{self.min_bits}/{self.warn_bits}/{self.max_bits}"
            )
        if not 0 <= self.initial_fill_bits <= self.max_bits:
            raise ConfigError("initial_fill_bits outside [0, MAX]")
        for key, bits in self.pool_init.items():
            if not 0 <= bits <= self.max_bits:
                raise ConfigError(f"pool_init for {key} outside [0, MAX]")
        if self.hello_interval_s <= 0 or self.tc_interval_s <= 0:
            raise ConfigError("message intervals must be positive")
        if self.neighbor_hold_multiplier < 2:
            raise ConfigError("neighbor_hold_multiplier must be at least 2")
        for s, t, rate, start in self.flows:
            if s == t:
                raise ConfigError(f"flow {s}>{t} is a self-flow")
            if rate < 0:
                raise ConfigError(f"flow {s}>{t} has negative rate")
            if start < 0:
                raise ConfigError(f"flow {s}>{t} has negative start time")

    # -- canonical text form -------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "level":
                if value is None:
                    continue
                rendered = repr(float(value))
            elif f.name == "flows":
                if not value:
                    continue
                rendered = ",".join(
                    f"{s}>{t}:{rate!r}@{start!r}" for s, t, rate, start in value)
            elif f.name == "pool_init":
                if not value:
                    continue
                rendered = ",".join(
                    f"{u}-{v}:{bits!r}" for (u, v), bits in sorted(value.items())
                )
            elif isinstance(value, bool):
                rendered = "true" if value else "false"
            elif isinstance(value, float):
                rendered = repr(value)
            else:
                rendered = str(value)
            lines.append(f"{f.name} = {rendered}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Scenario":
        known = {f.name: f for f in fields(cls)}
        values: dict = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            key, _, rendered = line.partition("=")
            key = key.strip()
            rendered = rendered.strip()
            if key not in known:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            try:
                values[key] = cls._parse_value(key, rendered)
            except (ValueError, IndexError) as exc:
                raise ConfigError(f"line {lineno}: bad value for {key}: {exc}")
        scenario = cls(**values)
        scenario.validate()
        return scenario

    @staticmethod
    def _parse_value(key: str, rendered: str):
        if key == "topology" or key == "protocol":
            return rendered
        if key == "level":
            return float(rendered)
        if key == "flows":
            flows = []
            for part in rendered.split(","):
                pair, _, spec = part.strip().partition(":")
                s, _, t = pair.partition(">")
                rate, _, start = spec.partition("@")
                flows.append((int(s), int(t), float(rate),
                              float(start) if start else 0.0))
            return flows
        if key == "pool_init":
            pools = {}
            for part in rendered.split(","):
                pair, _, bits = part.strip().partition(":")
                u, _, v = pair.partition("-")
                u, v = int(u), int(v)
                pools[(min(u, v), max(u, v))] = float(bits)
            return pools
        if key in ("seed", "kappa_bits", "neighbor_hold_multiplier"):
            return int(rendered)
        if key in ("extrapolate_remote", "deterministic_arrivals", "static_routes"):
            if rendered not in ("true", "false"):
                raise ValueError(f"expected true/false, got {rendered!r}")
            return rendered == "true"
        return float(rendered)

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read scenario {path}: {exc}")
        scenario = cls.from_text(text)
        if scenario.topology and not Path(scenario.topology).is_absolute():
            scenario.topology = str((path.parent / scenario.topology).resolve())
        return scenario
