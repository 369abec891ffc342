"""Scenario configuration: presets, validation, JSON loading, CLI overrides."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace

SCENARIOS = ("fig2", "free_tracking", "balloon", "bilateral_polish", "custom")
CONTROLLERS = ("tic", "iac", "high-gain")
ESTIMATORS = ("direct", "observer")
TRANSPORTS = ("memory", "udp")


class ConfigError(ValueError):
    """Invalid scenario configuration; message names the offending field."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything that determines a run; (config, seed) fixes the trace."""

    scenario: str = "custom"
    controller: str = "iac"
    dt: float = 1e-3
    duration: float = 10.0
    delta: float = 0.1
    seed: int = 0
    model: str = "point_mass"
    mass: float = 3.5
    damping: float = 5.0
    # gain source: explicit schedule id or grasp-driven mapping
    gain_schedule: str = "constant"
    gain_value: float = 500.0
    grasp_driven: bool = False
    limiter_mass: float = 12.8
    estimator: str = "direct"
    contact: str | None = None
    contact_height: float = 0.1
    contact_stiffness: float = 400.0
    rupture_force: float = 8.0
    bilateral: bool = False
    operator: str = "sines"
    operator_l1: float = 400.0
    operator_l2: float = 40.0
    # operator arm impedance follows the shaped gain schedule (the schedule
    # models the human's own stiffness, which is what gets transferred)
    operator_mirror: bool = False
    high_gain_l1: float = 3000.0
    transport: str = "memory"
    out: str | None = None

    def validate(self) -> "ScenarioConfig":
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario: unknown id {self.scenario!r}")
        if self.controller not in CONTROLLERS:
            raise ConfigError(f"controller: must be one of {CONTROLLERS}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"estimator: must be one of {ESTIMATORS}")
        if self.transport not in TRANSPORTS:
            raise ConfigError(f"transport: must be one of {TRANSPORTS}")
        if self.model not in ("point_mass", "two_link"):
            raise ConfigError(f"model: must be point_mass or two_link")
        if self.dt <= 0.0:
            raise ConfigError("dt: must be > 0")
        if self.duration <= 0.0:
            raise ConfigError("duration: must be > 0")
        if self.delta < 0.0:
            raise ConfigError("delta: must be >= 0")
        if self.mass <= 0.0 or self.limiter_mass <= 0.0:
            raise ConfigError("mass: must be > 0")
        if self.bilateral and self.delta != 0.0:
            raise ConfigError("bilateral: requires delta = 0")
        if self.contact not in (None, "balloon", "table"):
            raise ConfigError("contact: must be balloon, table, or absent")
        return self


def preset(scenario: str, controller: str = "iac") -> ScenarioConfig:
    """Built-in scenario definitions. The balloon gains depend on controller."""
    if scenario == "fig2":
        return ScenarioConfig(
            scenario="fig2",
            controller=controller,
            duration=12.0,
            delta=0.1,
            gain_schedule="fig2_step",
            operator="fig2_sine",
        )
    if scenario == "free_tracking":
        return ScenarioConfig(
            scenario="free_tracking",
            controller=controller,
            duration=60.0,
            delta=0.1,
            mass=12.8,
            damping=120.0,
            gain_schedule="stiffness_sine",
            operator="sines",
            operator_mirror=True,
        )
    if scenario == "balloon":
        return ScenarioConfig(
            scenario="balloon",
            controller=controller,
            duration=20.0,
            delta=0.1,
            gain_schedule="constant",
            gain_value=60.0 if controller == "iac" else 300.0,
            operator="balloon_descent",
            contact="balloon",
            contact_height=0.1,
            contact_stiffness=400.0,
            rupture_force=8.0,
        )
    if scenario == "bilateral_polish":
        return ScenarioConfig(
            scenario="bilateral_polish",
            controller=controller,
            duration=30.0,
            delta=0.0,
            grasp_driven=True,
            gain_schedule="grasp",
            operator="square_polish",
            contact="table",
            contact_height=0.0,
            contact_stiffness=2000.0,
            bilateral=True,
        )
    if scenario == "custom":
        return ScenarioConfig(scenario="custom", controller=controller)
    raise ConfigError(f"scenario: unknown id {scenario!r}")


def from_json(path: str) -> ScenarioConfig:
    """Load a config file; unknown keys are rejected by name."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    base = preset(data.get("scenario", "custom"), data.get("controller", "iac"))
    return apply_overrides(base, data)


def apply_overrides(config: ScenarioConfig, overrides: dict) -> ScenarioConfig:
    known = {f.name for f in fields(ScenarioConfig)}
    bad = set(overrides) - known
    if bad:
        raise ConfigError(f"unknown config keys: {sorted(bad)}")
    return replace(config, **overrides).validate()
