"""Flat ``key = value`` run configuration.

Values are given in convenient units (amu, meV, Angstrom, ns, K) and are
converted to SI by :meth:`RunConfig.lattice` / :meth:`RunConfig.barrier`.
An empty file yields the default parameter set: 70x70 aqueous membrane of
18 amu particles at 310 K, 6 amu configuration under a 70 meV barrier.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path

from vatsim.constants import AMU, ANGSTROM, MEV, NANOSECOND
from vatsim.errors import ConfigurationError
from vatsim.observers import THRESHOLD_SCALINGS
from vatsim.phonon_bath import LatticeSpec
from vatsim.selection import CORRELATION_POLICIES, PREFACTORS
from vatsim.tunneling import BarrierSpec

EXPERIMENTS = ("trace", "amplitude-trace", "selection", "born-mc", "ensemble", "gumbel-fit", "estimates")


@dataclass
class RunConfig:
    experiment: str = "estimates"
    # lattice
    lattice_n: int = 70
    lattice_l: int = 70
    mass_amu: float = 18.0
    lattice_spacing_angstrom: float = 3.0
    sound_speed: float = 1500.0
    omega_debye: float = 1.6e13
    temperature: float = 310.0
    trigger_x: float = 0.0
    trigger_y: float = 0.0
    # barrier
    config_mass_amu: float = 6.0
    barrier_height_mev: float = 70.0
    barrier_width_angstrom: float = 1.0
    # time grid
    duration_ns: float = 1.0
    samples_per_cycle: int = 16
    # experiment controls
    master_seed: int = 2004
    trials: int = 200
    margin_angstrom: float = 1.0
    observers: tuple[int, ...] = (1, 4, 16)
    kappa_sigma_values: tuple[float, ...] = (1.0, 5.0, 20.0)
    amplitude_ratios: tuple[float, ...] = (1.0, 2.0, 10.0)
    margin_ratios: tuple[float, ...] = (0.5, 1.0, 2.0, 4.0)
    mc_pairs: int = 100_000
    correlation: str = "rms"
    threshold_scaling: str = "fixed"
    prefactor: str = "vacuum"
    output_dir: str = "out"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        checks = [
            ("lattice_n", self.lattice_n >= 2), ("lattice_l", self.lattice_l >= 2),
            ("mass_amu", self.mass_amu > 0), ("lattice_spacing_angstrom", self.lattice_spacing_angstrom > 0),
            ("sound_speed", self.sound_speed > 0), ("omega_debye", self.omega_debye > 0),
            ("temperature", self.temperature >= 0), ("config_mass_amu", self.config_mass_amu > 0),
            ("barrier_height_mev", self.barrier_height_mev >= 0),
            ("barrier_width_angstrom", self.barrier_width_angstrom >= 0),
            ("duration_ns", self.duration_ns > 0), ("samples_per_cycle", self.samples_per_cycle >= 2),
            ("master_seed", 0 <= self.master_seed < 2**64), ("trials", self.trials >= 1),
            ("margin_angstrom", self.margin_angstrom > 0), ("mc_pairs", self.mc_pairs >= 1),
            ("observers", len(self.observers) > 0 and all(n >= 1 for n in self.observers)),
            ("kappa_sigma_values", all(v > 0 for v in self.kappa_sigma_values)),
            ("amplitude_ratios", all(v > 0 for v in self.amplitude_ratios)),
            ("margin_ratios", all(v >= 0 for v in self.margin_ratios)),
        ]
        for name, ok in checks:
            value = getattr(self, name)
            if not ok or (isinstance(value, float) and not math.isfinite(value)):
                raise ConfigurationError(f"{name} out of range: {value!r}")
        for name, allowed in (("correlation", CORRELATION_POLICIES), ("threshold_scaling", THRESHOLD_SCALINGS),
                              ("prefactor", PREFACTORS)):
            if getattr(self, name) not in allowed:
                raise ConfigurationError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")

    def lattice(self) -> LatticeSpec:
        return LatticeSpec(self.lattice_n, self.lattice_l, self.mass_amu * AMU,
                           self.lattice_spacing_angstrom * ANGSTROM, self.sound_speed,
                           self.omega_debye, self.temperature)

    def barrier(self) -> BarrierSpec:
        return BarrierSpec(self.config_mass_amu * AMU, self.barrier_height_mev * MEV,
                           self.barrier_width_angstrom * ANGSTROM)

    @property
    def duration(self) -> float:
        return self.duration_ns * NANOSECOND

    @property
    def dt(self) -> float:
        return self.lattice().default_dt(self.samples_per_cycle)

    @property
    def margin(self) -> float:
        return self.margin_angstrom * ANGSTROM

    @property
    def trigger_site(self) -> tuple[float, float]:
        return (self.trigger_x, self.trigger_y)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _field_kind(name: str) -> str:
    default = getattr(RunConfig(), name)
    if isinstance(default, tuple):
        return "int-list" if isinstance(default[0], int) else "float-list"
    return type(default).__name__


def _parse_int(text: str) -> int:
    value = float(text) if any(c in text for c in ".eE") else int(text, 0)
    if value != int(value):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _parse_value(name: str, text: str):
    kind = _field_kind(name)
    if kind == "int":
        return _parse_int(text)
    if kind == "float":
        return float(text)
    if kind == "int-list":
        return tuple(_parse_int(t.strip()) for t in text.split(",") if t.strip())
    if kind == "float-list":
        return tuple(float(t.strip()) for t in text.split(",") if t.strip())
    return text


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    values: dict = {}
    lines: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, _, value = (s.strip() for s in line.partition("="))
        if key not in _FIELDS:
            raise ConfigurationError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigurationError(f"duplicate key {key!r}", lineno)
        if not value:
            raise ConfigurationError(f"empty value for {key!r}", lineno)
        try:
            values[key] = _parse_value(key, value)
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key!r}: {exc}", lineno) from None
        lines[key] = lineno
    values.update(overrides or {})
    try:
        return RunConfig(**values)
    except ConfigurationError as exc:
        bad = next((k for k in lines if str(exc).startswith(k)), None)
        if bad is not None and exc.line is None:
            raise ConfigurationError(str(exc), lines[bad]) from None
        raise


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    """Read a config file; ``None`` means all defaults."""
    text = "" if path is None else Path(path).read_text(encoding="utf-8")
    return parse_config(text, overrides)


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(config: RunConfig) -> str:
    return "".join(f"{f.name} = {_format_value(getattr(config, f.name))}\n" for f in fields(config))
