"""Irrigation, pruning and planting policies.

Irrigation policies map a garden state to one volume (mL) per plant, in
the order of ``state.plants``. Plants not yet sown receive nothing.
"""

from __future__ import annotations

import bisect
import dataclasses
import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from polysim.garden import (STAGE_TARGET_VWC, ConfigurationError, GardenState, LifecycleStage,
                            PlantTypeSpec)
from polysim.metrics import normalized_shares, per_type_coverage

DISCRETE_LEVELS_ML = (0.0, 66.0, 132.0, 200.0, 266.0, 332.0, 400.0)


class Irrigation(str, enum.Enum):
    BASELINE_FIXED = "BaselineFixed"
    BINARY_ANALYTIC = "BinaryAnalytic"
    CONTINUOUS_VARIABLE = "ContinuousVariable"
    DISCRETE_VARIABLE = "DiscreteVariable"
    CLOSED_LOOP = "ClosedLoop"

    @classmethod
    def parse(cls, name: str) -> "Irrigation":
        aliases = {
            "baseline": cls.BASELINE_FIXED,
            "binary": cls.BINARY_ANALYTIC,
            "continuous": cls.CONTINUOUS_VARIABLE,
            "discrete": cls.DISCRETE_VARIABLE,
            "closed_loop": cls.CLOSED_LOOP,
            "closedloop": cls.CLOSED_LOOP,
        }
        key = name.strip()
        for member in cls:
            if key == member.value or key.upper() == member.name:
                return member
        if key.lower() in aliases:
            return aliases[key.lower()]
        raise ConfigurationError(f"unknown irrigation policy {name!r}")


@dataclass(frozen=True)
class PolicyBundle:
    """Irrigation choice plus pruning schedule.

    Pruning is disabled unless ``prune_start`` is set; sessions then run on
    ``prune_start``, ``prune_start + prune_interval``, ...
    """

    irrigation: Irrigation = Irrigation.BASELINE_FIXED
    discrete_levels: tuple[float, ...] = DISCRETE_LEVELS_ML
    binary_dose: float = 200.0
    max_dose: float = 400.0
    prune_interval: int = 3
    prune_tolerance: float = 0.2
    prune_start: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "irrigation", Irrigation.parse(self.irrigation)
                           if isinstance(self.irrigation, str) else self.irrigation)
        levels = tuple(float(v) for v in self.discrete_levels)
        object.__setattr__(self, "discrete_levels", levels)
        if not levels or levels[0] != 0 or list(levels) != sorted(levels):
            raise ConfigurationError("policy.discrete_levels must be sorted ascending from 0")
        if self.binary_dose <= 0:
            raise ConfigurationError("policy.binary_dose must be > 0")
        if self.max_dose < 0:
            raise ConfigurationError("policy.max_dose must be >= 0")
        if self.prune_interval <= 0:
            raise ConfigurationError("policy.prune_interval must be > 0")
        if self.prune_tolerance < 0:
            raise ConfigurationError("policy.prune_tolerance must be >= 0")

    def with_irrigation(self, irrigation: Irrigation | str) -> "PolicyBundle":
        return dataclasses.replace(self, irrigation=irrigation)

    def is_prune_day(self, day: int) -> bool:
        return (self.prune_start is not None and day >= self.prune_start
                and (day - self.prune_start) % self.prune_interval == 0)

    def as_dict(self) -> dict:
        return {
            "irrigation": self.irrigation.value,
            "discrete_levels": list(self.discrete_levels),
            "binary_dose": self.binary_dose,
            "max_dose": self.max_dose,
            "prune_interval": self.prune_interval,
            "prune_tolerance": self.prune_tolerance,
            "prune_start": self.prune_start,
        }


def _watered(state: GardenState) -> list[bool]:
    return [p.planted and p.stage != LifecycleStage.DEATH for p in state.plants]


def stage_target(stage: LifecycleStage) -> float:
    return STAGE_TARGET_VWC[stage]


def zone_deficit_ml(state: GardenState, idx: int) -> float:
    """Water needed to lift the plant's zone to its stage target (0 when at or above)."""
    plant = state.plants[idx]
    gap = stage_target(plant.stage) - state.local_vwc(idx)
    return max(0.0, gap) * state.zone_volume_ml(idx)


def baseline_fixed(state: GardenState, bundle: PolicyBundle = PolicyBundle()) -> np.ndarray:
    return np.array([bundle.binary_dose if w else 0.0 for w in _watered(state)])


def binary_analytic(state: GardenState, bundle: PolicyBundle = PolicyBundle()) -> np.ndarray:
    out = np.zeros(len(state.plants))
    for idx, (plant, w) in enumerate(zip(state.plants, _watered(state))):
        if w and state.local_vwc(idx) < stage_target(plant.stage):
            out[idx] = bundle.binary_dose
    return out


def continuous_variable(state: GardenState, bundle: PolicyBundle = PolicyBundle()) -> np.ndarray:
    out = np.zeros(len(state.plants))
    for idx, w in enumerate(_watered(state)):
        if w:
            out[idx] = min(max(zone_deficit_ml(state, idx), 0.0), bundle.max_dose)
    return out


def quantize(amount: float, levels: Sequence[float]) -> float:
    """Smallest level meeting ``amount``; saturates at the top level."""
    if len(levels) == 0:
        raise ValueError("empty level list")
    i = bisect.bisect_left(levels, amount)
    return float(levels[min(i, len(levels) - 1)])


def discrete_variable(state: GardenState, bundle: PolicyBundle = PolicyBundle()) -> np.ndarray:
    amounts = continuous_variable(state, bundle)
    return np.array([quantize(a, bundle.discrete_levels) for a in amounts])


OPEN_LOOP_POLICIES = {
    Irrigation.BASELINE_FIXED: baseline_fixed,
    Irrigation.BINARY_ANALYTIC: binary_analytic,
    Irrigation.CONTINUOUS_VARIABLE: continuous_variable,
    Irrigation.DISCRETE_VARIABLE: discrete_variable,
}


def irrigation_amounts(state: GardenState, bundle: PolicyBundle) -> np.ndarray:
    try:
        policy = OPEN_LOOP_POLICIES[bundle.irrigation]
    except KeyError:
        raise ValueError(f"{bundle.irrigation.value} is not an open-loop policy") from None
    return policy(state, bundle)


def prune_selection(state: GardenState, tolerance: float) -> list[int]:
    """Plant ids to prune: the largest living plant of each over-represented type.

    A type is over-represented when its share of size-normalized coverage
    exceeds ``(1 + tolerance) / k`` for ``k`` configured types.
    """
    shares = normalized_shares(state, per_type_coverage(state))
    total = sum(shares.values())
    k = len(shares)
    if total <= 0 or k == 0:
        return []
    threshold = (1.0 + tolerance) / k
    chosen = []
    for name, v in shares.items():
        if v / total <= threshold:
            continue
        candidates = [p for p in state.plants
                      if p.type_ref == name and p.living and p.radius > 0]
        if candidates:
            best = min(candidates, key=lambda p: (-p.radius, p.id))
            chosen.append(best.id)
    return chosen


def staggered_schedule(types: Sequence[PlantTypeSpec], fast_types: Iterable[str],
                       offset: int) -> list[PlantTypeSpec]:
    """Delay sowing of ``fast_types`` by ``offset`` days; everything else sows on day 0."""
    if offset < 0:
        raise ValueError("offset must be >= 0")
    fast = set(fast_types)
    unknown = fast - {t.name for t in types}
    if unknown:
        raise ConfigurationError(f"stagger.fast_types: unknown plant types {sorted(unknown)}")
    return [dataclasses.replace(t, plant_day=offset if t.name in fast else 0) for t in types]
