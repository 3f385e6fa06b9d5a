"""Experiment configuration: JSON schema, validation and placement layouts.

A config file is one JSON object. Minimal example::

    {
      "bed": {"width": 150, "height": 150},
      "plant_types": [{"name": "kale", "germination_time": 5,
                       "maturation_time": 35, "max_radius": 30}],
      "placements": [{"type": "kale", "x": 75, "y": 75}],
      "cycle_length": 30,
      "window": [0, 29],
      "seed": 0
    }

Placements are either an explicit ``placements`` list or a ``layout``
object (``{"mode": "grid" | "random", "counts": {type: n}, ...}``).
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from polysim.closed_loop import (FLOW_TABLE_ML_PER_MIN, ClosedLoopConfig, EmitterSpec,
                                 IrrigationRule, RulePeriod, SensorSpec)
from polysim.garden import (ConfigurationError, GrowthParams, PlantTypeSpec, WaterGroup,
                            mirror_placement)
from polysim.policies import Irrigation, PolicyBundle, staggered_schedule

PRESET_DIR = Path(__file__).parent / "presets"

_MISSING = object()


@dataclass(frozen=True)
class Placement:
    type: str
    x: float
    y: float
    id: int | None = None


@dataclass(frozen=True)
class Layout:
    mode: str
    counts: tuple[tuple[str, int], ...]
    margin: float = 10.0
    min_spacing: float = 0.0
    rows: int | None = None
    cols: int | None = None


@dataclass(frozen=True)
class StaggerSpec:
    fast_types: tuple[str, ...]
    offset: int


@dataclass(frozen=True)
class ExperimentConfig:
    bed: tuple[float, float]
    plant_types: tuple[PlantTypeSpec, ...]
    placements: tuple[Placement, ...] = ()
    layout: Layout | None = None
    mirror: bool = False
    policy: PolicyBundle = field(default_factory=PolicyBundle)
    growth: GrowthParams = field(default_factory=GrowthParams)
    closed_loop: ClosedLoopConfig | None = None
    stagger: StaggerSpec | None = None
    cycle_length: int = 100
    window: tuple[int, int] = (0, 99)
    headline_day: int = 50
    seed: int = 0
    trials: int = 1
    cell_size: float = 10.0
    depth: float = 10.0
    initial_vwc: float = 0.2
    residual_vwc: float = 0.05
    saturation_vwc: float = 0.5
    name: str = "experiment"
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        validate(self)

    @property
    def scheduled_types(self) -> tuple[PlantTypeSpec, ...]:
        if self.stagger is None:
            return self.plant_types
        return tuple(staggered_schedule(self.plant_types, self.stagger.fast_types,
                                        self.stagger.offset))

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def resolve_placements(self, rng: np.random.Generator) -> list[Placement]:
        """Explicit placements, or the layout drawn from ``rng``; mirrored if requested."""
        if self.layout is None:
            placed = list(self.placements)
        elif self.layout.mode == "grid":
            placed = _grid_layout(self.layout, self.bed)
        else:
            placed = _random_layout(self.layout, self.bed, rng)
        if self.mirror:
            flipped = mirror_placement([(p.type, p.x, p.y) for p in placed], self.bed[0])
            placed = [Placement(t, x, y, p.id) for (t, x, y), p in zip(flipped, placed)]
        return placed


def validate(cfg: ExperimentConfig) -> None:
    w, h = cfg.bed
    if w <= 0 or h <= 0:
        raise ConfigurationError("bed: width and height must be > 0")
    if cfg.cell_size <= 0 or cfg.depth <= 0:
        raise ConfigurationError("cell_size and depth must be > 0")
    if not 0 <= cfg.residual_vwc <= cfg.initial_vwc <= cfg.saturation_vwc <= 1:
        raise ConfigurationError(
            "soil: need 0 <= residual_vwc <= initial_vwc <= saturation_vwc <= 1"
        )
    if cfg.cycle_length <= 0:
        raise ConfigurationError("cycle_length must be > 0")
    lo, hi = cfg.window
    if not 0 <= lo <= hi < cfg.cycle_length:
        raise ConfigurationError(f"window {list(cfg.window)} not within cycle of {cfg.cycle_length} days")
    if cfg.trials < 1:
        raise ConfigurationError("trials must be >= 1")
    names = [t.name for t in cfg.plant_types]
    if len(set(names)) != len(names):
        raise ConfigurationError("plant_types: duplicate type name")
    known = set(names)
    for i, p in enumerate(cfg.placements):
        if p.type not in known:
            raise ConfigurationError(f"placements[{i}].type: unknown plant type {p.type!r}")
        if not (0 <= p.x <= w and 0 <= p.y <= h):
            raise ConfigurationError(f"placements[{i}]: center ({p.x}, {p.y}) outside bed {w}x{h}")
    ids = [p.id for p in cfg.placements if p.id is not None]
    if len(set(ids)) != len(ids):
        raise ConfigurationError("placements: duplicate plant id")
    if cfg.layout is not None:
        for name, _ in cfg.layout.counts:
            if name not in known:
                raise ConfigurationError(f"layout.counts: unknown plant type {name!r}")
    if cfg.stagger is not None:
        staggered_schedule(cfg.plant_types, cfg.stagger.fast_types, cfg.stagger.offset)
    if cfg.policy.irrigation == Irrigation.CLOSED_LOOP and cfg.closed_loop is None:
        raise ConfigurationError("policy.irrigation: ClosedLoop requires a closed_loop section")
    if cfg.growth.influence_radius < cfg.cell_size / 2:
        raise ConfigurationError("growth.influence_radius must be >= cell_size / 2")


def _grid_layout(layout: Layout, bed: tuple[float, float]) -> list[Placement]:
    # round-robin over types so neighbours differ
    pools = [[name] * n for name, n in layout.counts]
    order = []
    while any(pools):
        for pool in pools:
            if pool:
                order.append(pool.pop())
    n = len(order)
    cols = layout.cols or math.ceil(math.sqrt(n))
    rows = layout.rows or math.ceil(n / cols)
    w, h = bed
    out = []
    for k, name in enumerate(order):
        r, c = divmod(k, cols)
        out.append(Placement(name, (c + 0.5) * w / cols, (r + 0.5) * h / rows))
    return out


def _random_layout(layout: Layout, bed: tuple[float, float],
                   rng: np.random.Generator, max_tries: int = 10_000) -> list[Placement]:
    w, h = bed
    m = layout.margin
    out: list[Placement] = []
    for name, n in layout.counts:
        for _ in range(n):
            for _ in range(max_tries):
                x, y = rng.uniform(m, w - m), rng.uniform(m, h - m)
                if all((x - p.x) ** 2 + (y - p.y) ** 2 >= layout.min_spacing ** 2 for p in out):
                    break
            else:
                raise ConfigurationError("layout: could not satisfy min_spacing")
            out.append(Placement(name, float(x), float(y)))
    return out


# --- parsing ----------------------------------------------------------------

def _get(d: dict, key: str, path: str, kind=float, default: Any = _MISSING):
    where = f"{path}.{key}" if path else key
    if key not in d:
        if default is _MISSING:
            raise ConfigurationError(f"{where}: missing required field")
        return default
    value = d[key]
    if kind in (float, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{where}: expected a number, got {value!r}")
        if kind is int:
            if float(value) != int(value):
                raise ConfigurationError(f"{where}: expected an integer, got {value!r}")
            return int(value)
        if not math.isfinite(value):
            raise ConfigurationError(f"{where}: expected a finite number")
        return float(value)
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigurationError(f"{where}: expected true/false, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigurationError(f"{where}: expected a string, got {value!r}")
        return value
    if not isinstance(value, kind):
        raise ConfigurationError(f"{where}: expected {kind.__name__}")
    return value


def _plant_type(d: dict, path: str) -> PlantTypeSpec:
    try:
        group = WaterGroup(_get(d, "water_group", path, str, "Group1"))
    except ValueError:
        raise ConfigurationError(f"{path}.water_group: expected Group1 or Group2") from None
    return PlantTypeSpec(
        name=_get(d, "name", path, str),
        germination_time=_get(d, "germination_time", path),
        maturation_time=_get(d, "maturation_time", path),
        max_radius=_get(d, "max_radius", path),
        water_group=group,
        plant_day=_get(d, "plant_day", path, int, 0),
        reproductive_duration=_get(d, "reproductive_duration", path, int, 20),
        senescence_duration=_get(d, "senescence_duration", path, int, 15),
        germination_probability=_get(d, "germination_probability", path, float, 1.0),
    )


def _policy(d: dict) -> PolicyBundle:
    p = "policy"
    prune_start = d.get("prune_start")
    if prune_start is not None:
        prune_start = _get(d, "prune_start", p, int)
    levels = _get(d, "discrete_levels", p, list, list(PolicyBundle.discrete_levels))
    for i, v in enumerate(levels):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigurationError(f"policy.discrete_levels[{i}]: expected a number")
    return PolicyBundle(
        irrigation=Irrigation.parse(_get(d, "irrigation", p, str, "BaselineFixed")),
        discrete_levels=tuple(levels),
        binary_dose=_get(d, "binary_dose", p, float, 200.0),
        max_dose=_get(d, "max_dose", p, float, 400.0),
        prune_interval=_get(d, "prune_interval", p, int, 3),
        prune_tolerance=_get(d, "prune_tolerance", p, float, 0.2),
        prune_start=prune_start,
    )


def _growth(d: dict) -> GrowthParams:
    p = "growth"
    base = GrowthParams()
    return GrowthParams(
        prune_delta=_get(d, "prune_delta", p, float, base.prune_delta),
        decay_retain=_get(d, "decay_retain", p, float, base.decay_retain),
        senescence_decay=_get(d, "senescence_decay", p, float, base.senescence_decay),
        influence_radius=_get(d, "influence_radius", p, float, base.influence_radius),
        canopy_subdivision=_get(d, "canopy_subdivision", p, int, base.canopy_subdivision),
    )


def _rules(items: list, path: str) -> tuple[IrrigationRule, ...]:
    rules = tuple(
        IrrigationRule(
            threshold=_get(r, "threshold", f"{path}[{i}]"),
            duration=_get(r, "duration_s", f"{path}[{i}]"),
            min_interval=_get(r, "min_interval_h", f"{path}[{i}]"),
        )
        for i, r in enumerate(items)
    )
    if not rules:
        raise ConfigurationError(f"{path}: at least one rule required")
    if list(rules) != sorted(rules, key=lambda r: r.threshold):
        raise ConfigurationError(f"{path}: rules must be sorted by ascending threshold")
    return rules


def _closed_loop(d: dict) -> ClosedLoopConfig:
    p = "closed_loop"
    sensors = tuple(
        SensorSpec(
            id=str(s.get("id", i)),
            x=_get(s, "x", f"{p}.sensors[{i}]"),
            y=_get(s, "y", f"{p}.sensors[{i}]"),
            cadence=_get(s, "cadence", f"{p}.sensors[{i}]", int, 30),
        )
        for i, s in enumerate(_get(d, "sensors", p, list))
    )
    if "periods" in d:
        periods = tuple(
            RulePeriod(_get(q, "start_day", f"{p}.periods[{i}]", int, 0),
                       _rules(_get(q, "rules", f"{p}.periods[{i}]", list), f"{p}.periods[{i}].rules"))
            for i, q in enumerate(_get(d, "periods", p, list))
        )
    else:
        periods = (RulePeriod(0, _rules(_get(d, "rules", p, list), f"{p}.rules")),)
    emitters = []
    for i, e in enumerate(_get(d, "emitters", p, list, [])):
        path = f"{p}.emitters[{i}]"
        turns = _get(e, "turns", path, int)
        if turns not in FLOW_TABLE_ML_PER_MIN:
            raise ConfigurationError(f"{path}.turns: {turns} not in flow table")
        group = _get(e, "group", path, str, None)
        emitters.append(EmitterSpec(_get(e, "plant_id", path, int),
                                    WaterGroup(group) if group else None, turns))
    return ClosedLoopConfig(sensors, periods, tuple(emitters),
                            _get(d, "noise_sigma", p, float, 0.0))


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a JSON object")
    bed = _get(data, "bed", "", dict)
    types = tuple(_plant_type(t, f"plant_types[{i}]")
                  for i, t in enumerate(_get(data, "plant_types", "", list)))
    placements = tuple(
        Placement(_get(q, "type", f"placements[{i}]", str), _get(q, "x", f"placements[{i}]"),
                  _get(q, "y", f"placements[{i}]"), _get(q, "id", f"placements[{i}]", int, None))
        for i, q in enumerate(_get(data, "placements", "", list, []))
    )
    layout = None
    if "layout" in data:
        ld = _get(data, "layout", "", dict)
        mode = _get(ld, "mode", "layout", str)
        if mode not in ("grid", "random"):
            raise ConfigurationError(f"layout.mode: expected 'grid' or 'random', got {mode!r}")
        counts = _get(ld, "counts", "layout", dict)
        layout = Layout(
            mode=mode,
            counts=tuple((k, _get(counts, k, "layout.counts", int)) for k in counts),
            margin=_get(ld, "margin", "layout", float, 10.0),
            min_spacing=_get(ld, "min_spacing", "layout", float, 0.0),
            rows=_get(ld, "rows", "layout", int, None),
            cols=_get(ld, "cols", "layout", int, None),
        )
    stagger = None
    if "stagger" in data:
        sd = _get(data, "stagger", "", dict)
        stagger = StaggerSpec(tuple(_get(sd, "fast_types", "stagger", list)),
                              _get(sd, "offset", "stagger", int))
    window = _get(data, "window", "", list, None)
    cycle = _get(data, "cycle_length", "", int)
    if window is None:
        window = [0, cycle - 1]
    if len(window) != 2:
        raise ConfigurationError("window: expected [day_lo, day_hi]")
    return ExperimentConfig(
        name=_get(data, "name", "", str, "experiment"),
        bed=(_get(bed, "width", "bed"), _get(bed, "height", "bed")),
        cell_size=_get(data, "cell_size", "", float, 10.0),
        depth=_get(data, "depth", "", float, 10.0),
        initial_vwc=_get(data, "initial_vwc", "", float, 0.2),
        residual_vwc=_get(data, "residual_vwc", "", float, 0.05),
        saturation_vwc=_get(data, "saturation_vwc", "", float, 0.5),
        plant_types=types,
        placements=placements,
        layout=layout,
        mirror=_get(data, "mirror", "", bool, False),
        policy=_policy(_get(data, "policy", "", dict, {})),
        growth=_growth(_get(data, "growth", "", dict, {})),
        closed_loop=_closed_loop(data["closed_loop"]) if data.get("closed_loop") else None,
        stagger=stagger,
        cycle_length=cycle,
        window=(int(window[0]), int(window[1])),
        headline_day=_get(data, "headline_day", "", int, 50),
        seed=_get(data, "seed", "", int, 0),
        trials=_get(data, "trials", "", int, 1),
        raw=data,
    )


def parse_config(path: str | Path) -> ExperimentConfig:
    """Load and validate a JSON experiment config.

    Bare names such as ``fig5_irrigation.json`` fall back to the bundled presets.
    """
    path = Path(path)
    if not path.exists() and (PRESET_DIR / path.name).exists() and len(path.parts) == 1:
        path = PRESET_DIR / path.name
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        return config_from_dict(data)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def load_preset(name: str) -> ExperimentConfig:
    if not name.endswith(".json"):
        name += ".json"
    return parse_config(PRESET_DIR / name)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """JSON-ready form of ``cfg`` that ``config_from_dict`` reads back."""
    out: dict[str, Any] = {
        "name": cfg.name,
        "bed": {"width": cfg.bed[0], "height": cfg.bed[1]},
        "cell_size": cfg.cell_size,
        "depth": cfg.depth,
        "initial_vwc": cfg.initial_vwc,
        "residual_vwc": cfg.residual_vwc,
        "saturation_vwc": cfg.saturation_vwc,
        "plant_types": [
            {
                "name": t.name,
                "germination_time": t.germination_time,
                "maturation_time": t.maturation_time,
                "max_radius": t.max_radius,
                "water_group": t.water_group.value,
                "plant_day": t.plant_day,
                "reproductive_duration": t.reproductive_duration,
                "senescence_duration": t.senescence_duration,
                "germination_probability": t.germination_probability,
            }
            for t in cfg.plant_types
        ],
        "mirror": cfg.mirror,
        "policy": cfg.policy.as_dict(),
        "growth": dataclasses.asdict(cfg.growth),
        "cycle_length": cfg.cycle_length,
        "window": list(cfg.window),
        "headline_day": cfg.headline_day,
        "seed": cfg.seed,
        "trials": cfg.trials,
    }
    if cfg.placements:
        out["placements"] = [
            {"type": p.type, "x": p.x, "y": p.y, **({"id": p.id} if p.id is not None else {})}
            for p in cfg.placements
        ]
    if cfg.layout is not None:
        lay = cfg.layout
        out["layout"] = {"mode": lay.mode, "counts": dict(lay.counts), "margin": lay.margin,
                         "min_spacing": lay.min_spacing}
        if lay.rows is not None:
            out["layout"]["rows"] = lay.rows
        if lay.cols is not None:
            out["layout"]["cols"] = lay.cols
    if cfg.stagger is not None:
        out["stagger"] = {"fast_types": list(cfg.stagger.fast_types), "offset": cfg.stagger.offset}
    if cfg.closed_loop is not None:
        cl = cfg.closed_loop
        out["closed_loop"] = {
            "sensors": [{"id": s.id, "x": s.x, "y": s.y, "cadence": s.cadence} for s in cl.sensors],
            "periods": [
                {"start_day": p.start_day,
                 "rules": [{"threshold": r.threshold, "duration_s": r.duration,
                            "min_interval_h": r.min_interval} for r in p.rules]}
                for p in cl.periods
            ],
            "emitters": [
                {"plant_id": e.plant_id, "turns": e.turns,
                 **({"group": e.group.value} if e.group is not None else {})}
                for e in cl.emitters
            ],
            "noise_sigma": cl.noise_sigma,
        }
    return out
