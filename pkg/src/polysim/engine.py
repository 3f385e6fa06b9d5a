"""Daily simulation step: irrigation, uptake, evaporation, light competition, growth, pruning.

All operations mutate the state in place and return it, so they can be
chained. Use ``state.copy()`` to keep a snapshot.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from polysim.canopy import LightAllocation, light_allocation
from polysim.garden import GardenState, LifecycleStage
from polysim.metrics import DayRecord, snapshot
from polysim.policies import Irrigation, PolicyBundle, irrigation_amounts, prune_selection, \
    stage_target

log = logging.getLogger(__name__)

TICKS_PER_DAY = 48
TICK_MINUTES = 30

__all__ = [
    "TICKS_PER_DAY", "TICK_MINUTES", "apply_irrigation", "local_vwc", "uptake", "evaporate",
    "light_allocation", "update_plant", "apply_prune", "plant_events", "step_day",
]


def apply_irrigation(state: GardenState, plant_id: int, volume: float, tick: int = 0) -> GardenState:
    """Spread ``volume`` mL evenly over the plant's influence zone.

    Water lifting a cell above saturation drains away and is booked as drainage.
    """
    if volume < 0:
        raise ValueError(f"negative irrigation volume {volume}")
    idx = state.index_of(plant_id)
    soil = state.soil
    cells = state.zones[idx]
    flat = soil.vwc.reshape(-1)
    raised = flat[cells] + volume / cells.size / soil.cell_volume_ml
    capped = np.minimum(raised, soil.saturation_vwc)
    flat[cells] = capped
    drained = float((raised - capped).sum() * soil.cell_volume_ml)
    state.ledger.irrigation_in += volume
    state.ledger.drainage += drained
    state.water_total += volume
    state.log_event("irrigate", plant_id, volume, tick)
    return state


def local_vwc(state: GardenState, plant_id: int) -> float:
    return state.local_vwc(state.index_of(plant_id))


def uptake(state: GardenState) -> GardenState:
    """Each living plant drinks toward its stage target, in plant-list order.

    Demand is the zone's deficit below target; the plant takes what it can
    from the above-residual water of its zone, proportionally per cell, and
    records ``f_water = removed / demand``.
    """
    soil = state.soil
    flat = soil.vwc.reshape(-1)
    res = soil.residual_vwc
    vol = soil.cell_volume_ml
    for idx, plant in enumerate(state.plants):
        if not plant.living:
            plant.f_water = 1.0
            continue
        cells = state.zones[idx]
        current = flat[cells]
        demand = max(0.0, stage_target(plant.stage) - float(current.mean())) * cells.size * vol
        if demand <= 0:
            plant.f_water = 1.0
            continue
        above = np.maximum(current - res, 0.0)
        available = float(above.sum() * vol)
        take = min(demand, available)
        if take <= 0:
            plant.f_water = 0.0
            continue
        new = np.maximum(current - above * (take / available), res)
        removed = float((current - new).sum() * vol)
        flat[cells] = new
        state.ledger.uptake += removed
        plant.f_water = min(1.0, removed / demand)
    return state


def evaporate(state: GardenState, fraction_of_day: float = 1.0) -> GardenState:
    """Relax above-residual moisture by ``decay_retain ** fraction_of_day``."""
    soil = state.soil
    factor = state.params.decay_retain ** fraction_of_day
    before = soil.vwc
    after = soil.residual_vwc + factor * (before - soil.residual_vwc)
    state.ledger.evaporation += float((before - after).sum() * soil.cell_volume_ml)
    soil.vwc = after
    return state


def plant_events(state: GardenState) -> GardenState:
    """Sow plants whose planting day has arrived; failed seeds go straight to Death."""
    for plant in state.plants:
        if plant.planted or state.type_of(plant).plant_day > state.day:
            continue
        plant.planted = True
        plant.age_since_planting = 0
        state.log_event("plant", plant.id, 0.0)
        if not plant.will_germinate:
            plant.stage = LifecycleStage.DEATH
            plant.stage_age = 0
            state.log_event("germination_failure", plant.id, 0.0)
    return state


def _advance_stage(plant, stage: LifecycleStage) -> None:
    plant.stage = stage
    plant.stage_age = 0


def update_plant(state: GardenState, plant_id: int) -> GardenState:
    """Advance one plant's lifecycle by a day using its current ``f_water`` and ``f_light``."""
    plant = state.plants[state.index_of(plant_id)]
    ptype = state.type_of(plant)
    if not plant.planted or plant.stage == LifecycleStage.DEATH:
        return state
    plant.age_since_planting += 1
    stage = plant.stage

    if stage == LifecycleStage.GERMINATION:
        if plant.age_since_planting >= ptype.germination_time:
            _advance_stage(plant, LifecycleStage.VEGETATIVE)
            plant.germinated = True
            plant.emerged_day = state.day
            plant.radius = min(1.0, ptype.max_radius)
            state.log_event("emerge", plant.id, plant.radius)
        return state

    if stage == LifecycleStage.VEGETATIVE:
        growth = ptype.growth_rate * plant.f_water * plant.f_light
        plant.radius = min(ptype.max_radius, plant.radius + growth)
        if plant.age_since_planting >= ptype.maturation_time:
            _advance_stage(plant, LifecycleStage.REPRODUCTIVE)
    elif stage == LifecycleStage.REPRODUCTIVE:
        plant.stage_age += 1
    elif stage == LifecycleStage.SENESCENCE:
        plant.radius *= 1.0 - state.params.senescence_decay
        plant.stage_age += 1

    # zero-length stages are passed through on the same day
    if plant.stage == LifecycleStage.REPRODUCTIVE and plant.stage_age >= ptype.reproductive_duration:
        _advance_stage(plant, LifecycleStage.SENESCENCE)
    if plant.stage == LifecycleStage.SENESCENCE and plant.stage_age >= ptype.senescence_duration:
        _advance_stage(plant, LifecycleStage.DEATH)
        plant.radius = 0.0
        state.log_event("death", plant.id, 0.0)
    return state


def apply_prune(state: GardenState, plant_id: int) -> GardenState:
    """Remove ``prune_delta`` of the plant's canopy area."""
    plant = state.plants[state.index_of(plant_id)]
    if not plant.living or plant.radius <= 0:
        log.warning("prune of plant %s in stage %s ignored", plant_id, plant.stage.label)
        return state
    plant.radius *= math.sqrt(1.0 - state.params.prune_delta)
    state.log_event("prune", plant.id, plant.radius)
    return state


def assign_light(state: GardenState) -> LightAllocation:
    alloc = light_allocation(state)
    for plant, f in zip(state.plants, alloc.f_light):
        plant.f_light = float(f)
    return alloc


def step_day(state: GardenState, policy: PolicyBundle, controller=None) -> tuple[GardenState, DayRecord]:
    """Advance the garden one day and return the day's metrics.

    Order: sowing, irrigation, uptake, evaporation, light competition,
    growth, pruning, metrics. In closed-loop mode the irrigation step is
    48 half-hour controller ticks, each followed by a tick of evaporation,
    and the daily evaporation step is skipped.
    """
    water_before = state.water_total
    plant_events(state)

    if policy.irrigation == Irrigation.CLOSED_LOOP:
        if controller is None:
            raise ValueError("closed-loop irrigation needs a controller")
        from polysim.closed_loop import controller_tick

        for tick in range(TICKS_PER_DAY):
            controller_tick(state, controller, (state.day, tick * TICK_MINUTES))
            evaporate(state, 1.0 / TICKS_PER_DAY)
        uptake(state)
    else:
        amounts = irrigation_amounts(state, policy)
        for plant, amount in zip(state.plants, amounts):
            if plant.planted and plant.stage != LifecycleStage.DEATH:
                apply_irrigation(state, plant.id, float(amount))
        uptake(state)
        evaporate(state)

    assign_light(state)
    for plant in state.plants:
        update_plant(state, plant.id)

    if policy.is_prune_day(state.day):
        for pid in prune_selection(state, policy.prune_tolerance):
            apply_prune(state, pid)

    record = snapshot(state, state.water_total - water_before)
    state.day += 1
    return state, record
