"""Garden domain types and the state container shared by the engine, policies and metrics."""

from __future__ import annotations

import copy
import enum
import json
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Sequence

import numpy as np

if TYPE_CHECKING:
    from polysim.config import ExperimentConfig


class ConfigurationError(ValueError):
    """Raised when an experiment configuration violates an invariant."""


class LifecycleStage(enum.IntEnum):
    GERMINATION = 0
    VEGETATIVE = 1
    REPRODUCTIVE = 2
    SENESCENCE = 3
    DEATH = 4

    @property
    def label(self) -> str:
        return self.name.capitalize()

    @classmethod
    def from_label(cls, label: str) -> "LifecycleStage":
        return cls[label.upper()]


LIVING_STAGES = (LifecycleStage.VEGETATIVE, LifecycleStage.REPRODUCTIVE, LifecycleStage.SENESCENCE)

# Target volumetric water content per lifecycle stage.
STAGE_TARGET_VWC = {
    LifecycleStage.GERMINATION: 0.2,
    LifecycleStage.VEGETATIVE: 0.2,
    LifecycleStage.REPRODUCTIVE: 0.3,
    LifecycleStage.SENESCENCE: 0.2,
    LifecycleStage.DEATH: 0.1,
}


class WaterGroup(str, enum.Enum):
    GROUP1 = "Group1"
    GROUP2 = "Group2"


@dataclass(frozen=True)
class PlantTypeSpec:
    """Per-species growth parameters.

    Times are in days, ``max_radius`` in cm. ``plant_day`` delays sowing
    relative to the start of the cycle.
    """

    name: str
    germination_time: float
    maturation_time: float
    max_radius: float
    water_group: WaterGroup = WaterGroup.GROUP1
    plant_day: int = 0
    reproductive_duration: int = 20
    senescence_duration: int = 15
    germination_probability: float = 1.0

    def __post_init__(self):
        if not 0 <= self.germination_time < self.maturation_time:
            raise ConfigurationError(
                f"plant type {self.name!r}: need 0 <= germination_time < maturation_time, "
                f"got {self.germination_time}, {self.maturation_time}"
            )
        if self.max_radius <= 0:
            raise ConfigurationError(f"plant type {self.name!r}: max_radius must be > 0")
        if self.plant_day < 0:
            raise ConfigurationError(f"plant type {self.name!r}: plant_day must be >= 0")
        if self.reproductive_duration < 0 or self.senescence_duration < 0:
            raise ConfigurationError(f"plant type {self.name!r}: stage durations must be >= 0")
        if not 0.0 <= self.germination_probability <= 1.0:
            raise ConfigurationError(
                f"plant type {self.name!r}: germination_probability must be in [0, 1]"
            )
        object.__setattr__(self, "water_group", WaterGroup(self.water_group))

    @property
    def growth_rate(self) -> float:
        """Radius gain per day (cm) under full water and light."""
        return (self.max_radius - 1.0) / (self.maturation_time - self.germination_time)


@dataclass(frozen=True)
class GrowthParams:
    """Soil and canopy dynamics shared by every plant.

    ``canopy_subdivision`` splits each soil cell into ``n x n`` canopy cells
    for light competition and coverage; 1 rasterizes on the soil grid itself.
    """

    prune_delta: float = 0.15
    decay_retain: float = 0.7
    senescence_decay: float = 0.03
    influence_radius: float = 10.0
    canopy_subdivision: int = 5

    def __post_init__(self):
        if not 0 < self.decay_retain < 1:
            raise ConfigurationError("growth.decay_retain must be in (0, 1)")
        if not 0 <= self.prune_delta < 1:
            raise ConfigurationError("growth.prune_delta must be in [0, 1)")
        if not 0 < self.senescence_decay < 1:
            raise ConfigurationError("growth.senescence_decay must be in (0, 1)")
        if self.influence_radius <= 0:
            raise ConfigurationError("growth.influence_radius must be > 0")
        if int(self.canopy_subdivision) != self.canopy_subdivision or self.canopy_subdivision < 1:
            raise ConfigurationError("growth.canopy_subdivision must be a positive integer")


@dataclass
class PlantInstance:
    id: int
    type_ref: str
    x: float
    y: float
    radius: float = 0.0
    stage: LifecycleStage = LifecycleStage.GERMINATION
    germinated: bool = False
    age_since_planting: int = 0
    planted: bool = False
    stage_age: int = 0
    emerged_day: int | None = None
    will_germinate: bool = True
    f_water: float = 1.0
    f_light: float = 1.0

    @property
    def center(self) -> tuple[float, float]:
        return (self.x, self.y)

    @property
    def living(self) -> bool:
        return self.stage in LIVING_STAGES


@dataclass
class SoilGrid:
    """Volumetric water content on a regular grid; ``vwc[i, j]`` is row ``i`` (y) and column ``j`` (x)."""

    vwc: np.ndarray
    cell_size: float = 10.0
    depth: float = 10.0
    residual_vwc: float = 0.05
    saturation_vwc: float = 0.5

    @classmethod
    def for_bed(cls, width: float, height: float, cell_size: float = 10.0, depth: float = 10.0,
                initial_vwc: float = 0.2, residual_vwc: float = 0.05,
                saturation_vwc: float = 0.5) -> "SoilGrid":
        if not residual_vwc <= initial_vwc <= saturation_vwc:
            raise ConfigurationError(
                "initial_vwc must lie within [residual_vwc, saturation_vwc]"
            )
        shape = (math.ceil(height / cell_size), math.ceil(width / cell_size))
        return cls(np.full(shape, float(initial_vwc)), cell_size, depth, residual_vwc,
                   saturation_vwc)

    @property
    def cell_volume_ml(self) -> float:
        # cm^3 == mL
        return self.cell_size * self.cell_size * self.depth

    def storage_ml(self) -> float:
        return float(self.vwc.sum() * self.cell_volume_ml)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        rows, cols = self.vwc.shape
        xs = (np.arange(cols) + 0.5) * self.cell_size
        ys = (np.arange(rows) + 0.5) * self.cell_size
        return np.meshgrid(xs, ys)

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        rows, cols = self.vwc.shape
        i = min(int(y // self.cell_size), rows - 1)
        j = min(int(x // self.cell_size), cols - 1)
        return i, j

    def zone(self, x: float, y: float, radius: float) -> np.ndarray:
        """Flat indices of cells whose centers lie within ``radius`` of ``(x, y)``.

        Falls back to the cell containing the point when no center qualifies.
        """
        cx, cy = self.cell_centers()
        inside = np.flatnonzero(((cx - x) ** 2 + (cy - y) ** 2 <= radius ** 2).ravel())
        if inside.size == 0:
            i, j = self.cell_of(x, y)
            inside = np.array([np.ravel_multi_index((i, j), self.vwc.shape)])
        return inside


@dataclass
class WaterLedger:
    """Cumulative water fluxes in mL."""

    irrigation_in: float = 0.0
    uptake: float = 0.0
    evaporation: float = 0.0
    drainage: float = 0.0

    def copy(self) -> "WaterLedger":
        return WaterLedger(self.irrigation_in, self.uptake, self.evaporation, self.drainage)

    def residual(self, initial_storage: float, storage: float) -> float:
        """Conservation residual: inflow minus (storage change + outflows)."""
        return self.irrigation_in - (storage - initial_storage + self.uptake
                                     + self.evaporation + self.drainage)


@dataclass
class GardenState:
    day: int
    bed: tuple[float, float]
    plants: list[PlantInstance]
    soil: SoilGrid
    types: dict[str, PlantTypeSpec]
    rng: np.random.Generator
    params: GrowthParams = field(default_factory=GrowthParams)
    water_total: float = 0.0
    ledger: WaterLedger = field(default_factory=WaterLedger)
    initial_storage: float = 0.0
    events: list[tuple] = field(default_factory=list)
    zones: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def rng_state(self) -> dict:
        return self.rng.bit_generator.state

    def type_of(self, plant: PlantInstance) -> PlantTypeSpec:
        return self.types[plant.type_ref]

    def index_of(self, plant_id: int) -> int:
        for idx, p in enumerate(self.plants):
            if p.id == plant_id:
                return idx
        raise KeyError(f"no plant with id {plant_id}")

    def local_vwc(self, idx: int) -> float:
        """Mean VWC over the influence zone of the plant at list position ``idx``."""
        return float(self.soil.vwc.ravel()[self.zones[idx]].mean())

    def zone_volume_ml(self, idx: int) -> float:
        return self.zones[idx].size * self.soil.cell_volume_ml

    def copy(self) -> "GardenState":
        return copy.deepcopy(self)

    def log_event(self, event_type: str, plant_id: int, value: float, tick: int = 0) -> None:
        self.events.append((self.day, tick, event_type, plant_id, float(value)))

    def to_dict(self) -> dict[str, Any]:
        return {
            "day": self.day,
            "bed": list(self.bed),
            "plants": [
                {
                    "id": p.id,
                    "type_ref": p.type_ref,
                    "center": [p.x, p.y],
                    "radius": p.radius,
                    "stage": p.stage.label,
                    "germinated": p.germinated,
                    "age_since_planting": p.age_since_planting,
                    "planted": p.planted,
                    "stage_age": p.stage_age,
                    "emerged_day": p.emerged_day,
                    "will_germinate": p.will_germinate,
                    "f_water": p.f_water,
                    "f_light": p.f_light,
                }
                for p in self.plants
            ],
            "soil": {
                "cell_size": self.soil.cell_size,
                "depth": self.soil.depth,
                "residual_vwc": self.soil.residual_vwc,
                "saturation_vwc": self.soil.saturation_vwc,
                "vwc": self.soil.vwc.tolist(),
            },
            "water_total": self.water_total,
            "ledger": {
                "irrigation_in": self.ledger.irrigation_in,
                "uptake": self.ledger.uptake,
                "evaporation": self.ledger.evaporation,
                "drainage": self.ledger.drainage,
            },
            "rng_state": self.rng_state,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def mirror_placement(placements: Sequence[tuple[str, float, float]],
                     bed_width: float) -> list[tuple[str, float, float]]:
    """Reflect ``(type, x, y)`` placements across the vertical line ``x = bed_width / 2``."""
    out = []
    for kind, x, y in placements:
        if not 0 <= x <= bed_width:
            raise ValueError(f"x={x} outside [0, {bed_width}]")
        out.append((kind, bed_width - x, y))
    return out


def new_garden(config: "ExperimentConfig") -> GardenState:
    """Build the day-0 state for ``config``.

    Germination outcomes are drawn here, one uniform per plant in id order,
    and revealed at each plant's sowing day. Drawing them up front keeps
    the draws identical across arms that only differ in sowing dates.
    """
    rng = np.random.default_rng(config.seed)
    width, height = config.bed
    types = {t.name: t for t in config.scheduled_types}
    placements = config.resolve_placements(rng)

    soil = SoilGrid.for_bed(width, height, config.cell_size, config.depth, config.initial_vwc,
                            config.residual_vwc, config.saturation_vwc)
    plants = []
    seen = set()
    for idx, pl in enumerate(placements):
        pid = pl.id if pl.id is not None else idx
        if pid in seen:
            raise ConfigurationError(f"placements[{idx}].id: duplicate plant id {pid}")
        seen.add(pid)
        if pl.type not in types:
            raise ConfigurationError(f"placements[{idx}].type: unknown plant type {pl.type!r}")
        if not (0 <= pl.x <= width and 0 <= pl.y <= height):
            raise ConfigurationError(
                f"placements[{idx}]: center ({pl.x}, {pl.y}) outside bed {width}x{height}"
            )
        plants.append(PlantInstance(id=pid, type_ref=pl.type, x=float(pl.x), y=float(pl.y)))

    draws = rng.random(len(plants))
    for p, u in zip(plants, draws):
        p.will_germinate = bool(u < types[p.type_ref].germination_probability)

    if config.growth.influence_radius < config.cell_size / 2:
        raise ConfigurationError("growth.influence_radius must be >= cell_size / 2")
    state = GardenState(day=0, bed=(float(width), float(height)), plants=plants, soil=soil,
                        types=types, rng=rng, params=config.growth)
    radius = config.growth.influence_radius
    state.zones = [soil.zone(p.x, p.y, radius) for p in plants]
    state.initial_storage = soil.storage_ml()
    return state
