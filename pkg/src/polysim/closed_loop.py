"""Simulated soil-moisture sensors and a threshold-rule irrigation controller.

Thresholds are VWC fractions. All emitters sit behind one valve, so a
firing rule waters every emitter for the same duration.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from polysim.engine import apply_irrigation
from polysim.garden import ConfigurationError, GardenState, WaterGroup

MINUTES_PER_DAY = 24 * 60

# emitter turns -> mL delivered per 60 s of flow
FLOW_TABLE_ML_PER_MIN = {6: 191.0, 7: 284.0, 8: 383.0}

DEFAULT_TURNS = {WaterGroup.GROUP1: 7, WaterGroup.GROUP2: 6}

PLACEHOLDER_TEMPERATURE_C = 20.0
PLACEHOLDER_HUMIDITY = 0.5


@dataclass(frozen=True)
class SensorSpec:
    id: str
    x: float
    y: float
    cadence: int = 30

    def __post_init__(self):
        if self.cadence <= 0:
            raise ConfigurationError(f"sensor {self.id}: cadence must be > 0")


@dataclass(frozen=True)
class SensorReading:
    sensor_id: str
    timestamp: tuple[int, int]
    vwc: float
    temperature: float = PLACEHOLDER_TEMPERATURE_C
    humidity: float = PLACEHOLDER_HUMIDITY


@dataclass(frozen=True)
class IrrigationRule:
    threshold: float
    duration: float     # seconds
    min_interval: float  # hours

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise ConfigurationError("rule threshold must be in (0, 1)")
        if self.duration <= 0:
            raise ConfigurationError("rule duration must be > 0")
        if self.min_interval <= 0:
            raise ConfigurationError("rule min_interval must be > 0")


@dataclass(frozen=True)
class EmitterSpec:
    plant_id: int
    group: WaterGroup | None
    turns: int
    flow_table: Mapping[int, float] = field(default_factory=lambda: dict(FLOW_TABLE_ML_PER_MIN))

    def __post_init__(self):
        if self.group is not None:
            object.__setattr__(self, "group", WaterGroup(self.group))
        if self.turns not in self.flow_table:
            raise ConfigurationError(
                f"emitter for plant {self.plant_id}: {self.turns} turns not in flow table "
                f"{sorted(self.flow_table)}"
            )


@dataclass(frozen=True)
class RulePeriod:
    """Rule set active from ``start_day`` until the next period starts."""

    start_day: int
    rules: tuple[IrrigationRule, ...]


@dataclass(frozen=True)
class ClosedLoopConfig:
    sensors: tuple[SensorSpec, ...]
    periods: tuple[RulePeriod, ...]
    emitters: tuple[EmitterSpec, ...] = ()
    noise_sigma: float = 0.0

    def rules_for_day(self, day: int) -> tuple[int, tuple[IrrigationRule, ...]] | None:
        active = None
        for i, period in enumerate(self.periods):
            if period.start_day <= day:
                active = (i, period.rules)
        return active


@dataclass
class ControllerState:
    config: ClosedLoopConfig
    emitters: tuple[EmitterSpec, ...]
    last_fired: dict[tuple[int, int], int] = field(default_factory=dict)
    readings: list[SensorReading] = field(default_factory=list)
    firings: list[tuple[int, int, int, float, float]] = field(default_factory=list)
    latest: dict[str, SensorReading] = field(default_factory=dict)


def to_minutes(timestamp: tuple[int, int]) -> int:
    day, minute = timestamp
    return day * MINUTES_PER_DAY + minute


def default_emitters(state: GardenState) -> tuple[EmitterSpec, ...]:
    """One emitter per plant, turns set by water group."""
    out = []
    for p in state.plants:
        group = state.type_of(p).water_group
        out.append(EmitterSpec(p.id, group, DEFAULT_TURNS[group]))
    return tuple(out)


def new_controller(state: GardenState, config: ClosedLoopConfig) -> ControllerState:
    width, height = state.bed
    for s in config.sensors:
        if not (0 <= s.x <= width and 0 <= s.y <= height):
            raise ConfigurationError(f"sensor {s.id} at ({s.x}, {s.y}) outside bed")
    ids = {p.id: p for p in state.plants}
    emitters = []
    for e in config.emitters or default_emitters(state):
        if e.plant_id not in ids:
            raise ConfigurationError(f"emitter references unknown plant id {e.plant_id}")
        if e.group is None:
            e = replace(e, group=state.type_of(ids[e.plant_id]).water_group)
        emitters.append(e)
    return ControllerState(config=config, emitters=tuple(emitters))


def sample_sensors(state: GardenState, sensors: Sequence[SensorSpec], tick: tuple[int, int],
                   noise_sigma: float = 0.0) -> list[SensorReading]:
    """Read the soil cell under each sensor whose cadence divides the tick minute."""
    width, height = state.bed
    out = []
    for s in sensors:
        if not (0 <= s.x <= width and 0 <= s.y <= height):
            raise ConfigurationError(f"sensor {s.id} at ({s.x}, {s.y}) outside bed")
        if tick[1] % s.cadence:
            continue
        vwc = float(state.soil.vwc[state.soil.cell_of(s.x, s.y)])
        if noise_sigma > 0:
            vwc = float(np.clip(vwc + state.rng.normal(0.0, noise_sigma), 0.0, 1.0))
        out.append(SensorReading(s.id, tick, vwc))
    return out


def evaluate_rules(readings: Sequence[SensorReading], rules: Sequence[IrrigationRule],
                   last_fired: Mapping[int, tuple[int, int] | None] | Sequence,
                   now: tuple[int, int]) -> tuple[int, float] | None:
    """Pick the rule to fire, if any, as ``(rule_index, duration_s)``.

    The mean of each sensor's latest reading is compared against the rules
    from the lowest threshold up. The first rule whose threshold is above
    the mean and whose minimum interval has elapsed fires.
    """
    if not rules:
        raise ConfigurationError("no irrigation rules configured")
    latest: dict[str, SensorReading] = {}
    for r in readings:
        if r.sensor_id not in latest or to_minutes(r.timestamp) >= to_minutes(latest[r.sensor_id].timestamp):
            latest[r.sensor_id] = r
    if not latest:
        return None
    mean = float(np.mean([r.vwc for r in latest.values()]))
    now_min = to_minutes(now)
    for idx in sorted(range(len(rules)), key=lambda i: rules[i].threshold):
        rule = rules[idx]
        if mean >= rule.threshold:
            continue
        fired = last_fired.get(idx) if isinstance(last_fired, Mapping) else last_fired[idx]
        if fired is not None and now_min - to_minutes(fired) < rule.min_interval * 60:
            continue
        return idx, rule.duration
    return None


def duration_to_volume(emitter: EmitterSpec, duration: float) -> float:
    if duration < 0:
        raise ValueError("duration must be >= 0")
    try:
        rate = emitter.flow_table[emitter.turns]
    except KeyError:
        raise ConfigurationError(f"{emitter.turns} turns not in flow table") from None
    return rate * duration / 60.0


def controller_tick(state: GardenState, controller: ControllerState,
                    tick: tuple[int, int]) -> tuple[GardenState, ControllerState]:
    """Sample, decide, and water every emitter if a rule fires."""
    cfg = controller.config
    for r in sample_sensors(state, cfg.sensors, tick, cfg.noise_sigma):
        controller.readings.append(r)
        controller.latest[r.sensor_id] = r
    active = cfg.rules_for_day(tick[0])
    if active is None:
        return state, controller
    period, rules = active
    last = {i: _from_minutes(controller.last_fired[(period, i)])
            for i in range(len(rules)) if (period, i) in controller.last_fired}
    decision = evaluate_rules(list(controller.latest.values()), rules, last, tick)
    if decision is None:
        return state, controller
    idx, duration = decision
    total = 0.0
    for e in controller.emitters:
        volume = duration_to_volume(e, duration)
        apply_irrigation(state, e.plant_id, volume, tick=tick[1])
        total += volume
    controller.last_fired[(period, idx)] = to_minutes(tick)
    controller.firings.append((tick[0], tick[1], idx, float(duration), total))
    state.log_event("closed_loop_fire", -1, total, tick=tick[1])
    return state, controller


def _from_minutes(minutes: int) -> tuple[int, int]:
    return divmod(minutes, MINUTES_PER_DAY)
