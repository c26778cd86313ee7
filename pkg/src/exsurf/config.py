"""Run configuration: INI-style sections with strict key validation."""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

SQRT8_3 = 2.0 * np.sqrt(2.0) / 3.0


@dataclass
class ModelSection:
    kappa: float = 1.0


@dataclass
class SpectrumSection:
    q1_min: float = -1.5
    q1_max: float = 1.5
    n_q1: int = 41
    q3_min: float = -1.5
    q3_max: float = 1.5
    n_q3: int = 41
    tol: float = 1e-6


@dataclass
class DDSection:
    ratios: tuple = (0.5, 1.0, 8.0)
    n_alpha: int = 48
    n_beta: int = 48
    n_phi: int = 48


@dataclass
class BerrySection:
    delta: float = SQRT8_3
    radius: float = 0.85
    steps_per_loop: int = 3000
    max_loops: int = 6
    sweep_ratios: tuple = (0.6, 0.8, 0.9, 0.95, 1.05, 1.1, 1.25, 1.5)


@dataclass
class SSH3Section:
    model: str = "one"
    t1: float = 1.0
    t2: float = 0.25
    w1: float = 1.0
    w2: float = 0.25
    gamma: float = 1.0
    n_cells: int = 10
    n_t1_sweep: int = 61


@dataclass
class CircuitSection:
    kappa_d2: float = 5.0
    theta0_time: float = 0.2
    n_theta: int = 120
    source: str = "effective"
    fit_t1: float = 0.08
    fit_t2: float = 0.10
    sweep_ratios: tuple = (0.5, 1.5)


@dataclass
class OutputSection:
    directory: str = "out"
    format: str = "csv"


@dataclass
class RunConfig:
    model: ModelSection = field(default_factory=ModelSection)
    spectrum: SpectrumSection = field(default_factory=SpectrumSection)
    dd: DDSection = field(default_factory=DDSection)
    berry: BerrySection = field(default_factory=BerrySection)
    ssh3: SSH3Section = field(default_factory=SSH3Section)
    circuit: CircuitSection = field(default_factory=CircuitSection)
    output: OutputSection = field(default_factory=OutputSection)


def _coerce(raw: str, default):
    if isinstance(default, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        parts = [p for p in raw.replace(",", " ").split() if p]
        return tuple(float(p) for p in parts)
    return raw.strip()


def load_config(path: str | None = None) -> RunConfig:
    """Defaults, overridden by the INI file at `path` when given.

    Unknown sections or keys are rejected rather than ignored.
    """
    cfg = RunConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    for section_name in parser.sections():
        if not hasattr(cfg, section_name):
            raise ConfigError(f"unknown config section [{section_name}]")
        section = getattr(cfg, section_name)
        fields = {f.name: f for f in dataclasses.fields(section)}
        for key, raw in parser.items(section_name):
            if key not in fields:
                raise ConfigError(f"unknown key {key!r} in section [{section_name}]")
            default = getattr(section, key)
            try:
                setattr(section, key, _coerce(raw, default))
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for {section_name}.{key}: {raw!r}"
                ) from exc
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.output.format not in ("csv", "json"):
        raise ConfigError(f"output.format must be csv or json, got {cfg.output.format!r}")
    if cfg.ssh3.model not in ("one", "two"):
        raise ConfigError(f"ssh3.model must be one or two, got {cfg.ssh3.model!r}")
    if cfg.circuit.source not in ("effective", "lab"):
        raise ConfigError(
            f"circuit.source must be effective or lab, got {cfg.circuit.source!r}"
        )
    if cfg.model.kappa < 0:
        raise ConfigError("model.kappa must be non-negative")
    if min(cfg.dd.n_alpha, cfg.dd.n_beta, cfg.dd.n_phi) < 4:
        raise ConfigError("dd grid sizes must be at least 4")


def emit_config(cfg: RunConfig) -> str:
    """Fully resolved configuration as INI text."""
    lines = []
    for section_field in dataclasses.fields(cfg):
        section = getattr(cfg, section_field.name)
        lines.append(f"[{section_field.name}]")
        for f in dataclasses.fields(section):
            value = getattr(section, f.name)
            if isinstance(value, tuple):
                value = ", ".join(repr(v) for v in value)
            lines.append(f"{f.name} = {value}")
        lines.append("")
    return "\n".join(lines)
