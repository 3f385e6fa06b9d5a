"""Deterministic polyculture garden simulator with irrigation and pruning policies."""

from polysim.canopy import LightAllocation, light_allocation
from polysim.closed_loop import (ClosedLoopConfig, ControllerState, EmitterSpec, IrrigationRule,
                                 SensorReading, SensorSpec, controller_tick, duration_to_volume,
                                 evaluate_rules, sample_sensors)
from polysim.config import ExperimentConfig, load_preset, parse_config
from polysim.engine import (apply_irrigation, apply_prune, evaporate, local_vwc, step_day,
                            update_plant, uptake)
from polysim.garden import (ConfigurationError, GardenState, GrowthParams, LifecycleStage,
                            PlantInstance, PlantTypeSpec, SoilGrid, WaterGroup, mirror_placement,
                            new_garden)
from polysim.harness import compare, run, simulate, stagger_experiment
from polysim.metrics import DayRecord, diversity, max_water_bound, per_type_coverage, summarize
from polysim.policies import (Irrigation, PolicyBundle, baseline_fixed, binary_analytic,
                              continuous_variable, discrete_variable, prune_selection, quantize,
                              staggered_schedule)

__version__ = "0.1.0"
