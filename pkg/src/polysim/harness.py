"""Seeded experiment execution: single runs, replicated trials, policy and staggering comparisons."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from polysim.closed_loop import ControllerState, new_controller
from polysim.config import ConfigurationError, ExperimentConfig, StaggerSpec, config_to_dict
from polysim.engine import step_day
from polysim.garden import GardenState, new_garden
from polysim.metrics import DayRecord, Summary, summarize, timeseries_csv
from polysim.policies import Irrigation

log = logging.getLogger(__name__)


@dataclass
class StepAudit:
    day: int
    irrigation_in: float
    storage_change: float
    uptake: float
    evaporation: float
    drainage: float

    @property
    def residual(self) -> float:
        return self.irrigation_in - (self.storage_change + self.uptake + self.evaporation
                                     + self.drainage)

    @property
    def relative_error(self) -> float:
        scale = max(abs(self.irrigation_in),
                    abs(self.storage_change) + self.uptake + self.evaporation + self.drainage,
                    1.0)
        return abs(self.residual) / scale


@dataclass
class RunResult:
    config: ExperimentConfig
    records: list[DayRecord]
    state: GardenState
    audits: list[StepAudit]
    controller: ControllerState | None = None

    @property
    def summary(self) -> Summary:
        return summarize(self.records, self.config.window)

    def record_on(self, day: int) -> DayRecord:
        for r in self.records:
            if r.day == day:
                return r
        raise KeyError(f"no record for day {day}")

    def summary_dict(self) -> dict:
        out = self.summary.as_dict()
        out.update({
            "seed": self.config.seed,
            "policy": self.config.policy.as_dict(),
            "max_conservation_error": max((a.relative_error for a in self.audits), default=0.0),
            "config": config_to_dict(self.config),
        })
        return out


def simulate(config: ExperimentConfig, progress: bool = False) -> RunResult:
    """Run one cycle in memory."""
    state = new_garden(config)
    controller = None
    if config.closed_loop is not None and config.policy.irrigation == Irrigation.CLOSED_LOOP:
        controller = new_controller(state, config.closed_loop)
    records, audits = [], []
    for _ in range(config.cycle_length):
        ledger0 = state.ledger.copy()
        storage0 = state.soil.storage_ml()
        day = state.day
        state, record = step_day(state, config.policy, controller)
        led = state.ledger
        audits.append(StepAudit(
            day=day,
            irrigation_in=led.irrigation_in - ledger0.irrigation_in,
            storage_change=state.soil.storage_ml() - storage0,
            uptake=led.uptake - ledger0.uptake,
            evaporation=led.evaporation - ledger0.evaporation,
            drainage=led.drainage - ledger0.drainage,
        ))
        records.append(record)
        if progress and day % 10 == 0:
            log.info("day %d coverage %.3f diversity %.3f water %.0f mL", day, record.coverage,
                     record.diversity, record.water_total)
    return RunResult(config, records, state, audits, controller)


def trial_configs(config: ExperimentConfig, trials: int | None = None) -> list[ExperimentConfig]:
    n = config.trials if trials is None else trials
    return [config.replace(seed=config.seed + i, trials=1) for i in range(n)]


# --- output -----------------------------------------------------------------

def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_run(result: RunResult, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = [t.name for t in result.config.plant_types]
    (out / "timeseries.csv").write_text(timeseries_csv(result.records, names))
    _write_csv(out / "events.csv", ["day", "tick", "event_type", "plant_id", "value_mL_or_radius"],
               ((d, t, e, p, f"{v:.6f}") for d, t, e, p, v in result.state.events))
    if result.controller is not None:
        _write_csv(out / "sensors.csv", ["day", "minute", "sensor_id", "vwc"],
                   ((r.timestamp[0], r.timestamp[1], r.sensor_id, f"{r.vwc:.6f}")
                    for r in result.controller.readings))
        _write_csv(out / "firings.csv", ["day", "minute", "rule_index", "duration_s", "volume_mL"],
                   ((d, m, i, f"{dur:.6f}", f"{vol:.6f}")
                    for d, m, i, dur, vol in result.controller.firings))
    (out / "summary.json").write_text(json.dumps(result.summary_dict(), indent=2, sort_keys=True))
    return out


def aggregate(results: Sequence[RunResult]) -> dict:
    per_trial = [
        {"seed": r.config.seed, **r.summary.as_dict()} for r in results
    ]
    return {
        "trials": per_trial,
        "mean": {
            "mean_coverage": float(np.mean([t["mean_coverage"] for t in per_trial])),
            "mean_diversity": float(np.mean([t["mean_diversity"] for t in per_trial])),
            "water_total_mL": float(np.mean([t["water_total_mL"] for t in per_trial])),
        },
    }


def run(config: ExperimentConfig, out_dir: str | Path | None = None,
        progress: bool = False) -> list[RunResult]:
    """Run ``config.trials`` seeded trials, writing artifacts when ``out_dir`` is given.

    A single trial writes straight into ``out_dir``; several trials go to
    ``trial_000``, ``trial_001``, ... with seeds ``seed + i`` and an
    ``aggregate.json`` alongside.
    """
    configs = trial_configs(config)
    results = [simulate(c, progress) for c in configs]
    if out_dir is not None:
        out = Path(out_dir)
        if len(results) == 1:
            write_run(results[0], out)
        else:
            for i, r in enumerate(results):
                write_run(r, out / f"trial_{i:03d}")
            (out / "aggregate.json").write_text(json.dumps(aggregate(results), indent=2))
    return results


# --- comparisons --------------------------------------------------------------

@dataclass
class PolicyRow:
    policy: str
    mean_coverage: float
    mean_diversity: float
    water_total: float
    water_pct_vs_first: float


@dataclass
class ComparisonReport:
    rows: list[PolicyRow]
    results: dict[str, list[RunResult]] = field(default_factory=dict, repr=False)

    def row(self, policy: str) -> PolicyRow:
        for r in self.rows:
            if r.policy == policy:
                return r
        raise KeyError(policy)

    def to_csv(self) -> str:
        lines = ["policy,mean_coverage,mean_diversity,water_total_mL,water_pct_vs_first"]
        for r in self.rows:
            lines.append(f"{r.policy},{r.mean_coverage:.6f},{r.mean_diversity:.6f},"
                         f"{r.water_total:.6f},{r.water_pct_vs_first:.6f}")
        return "\n".join(lines) + "\n"


def compare(config: ExperimentConfig, policies: Sequence[str],
            out_dir: str | Path | None = None) -> ComparisonReport:
    """Run each irrigation policy on identical seeds and placements."""
    if len(policies) < 2:
        raise ConfigurationError("compare needs at least two policies")
    parsed = [Irrigation.parse(p) for p in policies]
    rows, results = [], {}
    base_water = None
    for name, irrigation in zip(policies, parsed):
        arm = config.replace(policy=config.policy.with_irrigation(irrigation))
        arm_results = run(arm, None if out_dir is None else Path(out_dir) / name)
        summaries = [r.summary for r in arm_results]
        water = float(np.mean([s.water_total for s in summaries]))
        if base_water is None:
            base_water = water
        pct = 0.0 if base_water == 0 else 100.0 * (water - base_water) / base_water
        rows.append(PolicyRow(
            policy=name,
            mean_coverage=float(np.mean([s.mean_coverage for s in summaries])),
            mean_diversity=float(np.mean([s.mean_diversity for s in summaries])),
            water_total=water,
            water_pct_vs_first=pct,
        ))
        results[name] = arm_results
    report = ComparisonReport(rows, results)
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "comparison.csv").write_text(report.to_csv())
    return report


@dataclass
class StaggerTrial:
    seed: int
    normal_coverage: float
    staggered_coverage: float
    normal_diversity: float
    staggered_diversity: float


@dataclass
class StaggerReport:
    offset: int
    headline_day: int
    trials: list[StaggerTrial]

    @property
    def normal_coverage(self) -> float:
        return float(np.mean([t.normal_coverage for t in self.trials]))

    @property
    def staggered_coverage(self) -> float:
        return float(np.mean([t.staggered_coverage for t in self.trials]))

    @property
    def normal_diversity(self) -> float:
        return float(np.mean([t.normal_diversity for t in self.trials]))

    @property
    def staggered_diversity(self) -> float:
        return float(np.mean([t.staggered_diversity for t in self.trials]))

    def as_dict(self) -> dict:
        return {
            "offset": self.offset,
            "headline_day": self.headline_day,
            "trials": [dataclasses.asdict(t) for t in self.trials],
            "mean": {
                "normal_coverage": self.normal_coverage,
                "staggered_coverage": self.staggered_coverage,
                "normal_diversity": self.normal_diversity,
                "staggered_diversity": self.staggered_diversity,
            },
        }


def stagger_experiment(config: ExperimentConfig, offset: int | None = None,
                       trials: int | None = None,
                       out_dir: str | Path | None = None) -> StaggerReport:
    """Normal vs. staggered sowing on matched seeds.

    Coverage is taken on ``config.headline_day``; diversity is the window mean.
    """
    if config.stagger is None:
        raise ConfigurationError("stagger: config needs a stagger section naming fast_types")
    offset = config.stagger.offset if offset is None else offset
    n = config.trials if trials is None else trials
    if n < 1:
        raise ConfigurationError("trials must be >= 1")
    fast = config.stagger.fast_types
    normal = config.replace(stagger=StaggerSpec(fast, 0))
    staggered = config.replace(stagger=StaggerSpec(fast, offset))
    out = []
    for i, (a, b) in enumerate(zip(trial_configs(normal, n), trial_configs(staggered, n))):
        ra, rb = simulate(a), simulate(b)
        if out_dir is not None:
            write_run(ra, Path(out_dir) / f"normal_{i:03d}")
            write_run(rb, Path(out_dir) / f"staggered_{i:03d}")
        out.append(StaggerTrial(
            seed=a.seed,
            normal_coverage=ra.record_on(config.headline_day).coverage,
            staggered_coverage=rb.record_on(config.headline_day).coverage,
            normal_diversity=ra.summary.mean_diversity,
            staggered_diversity=rb.summary.mean_diversity,
        ))
    report = StaggerReport(offset, config.headline_day, out)
    if out_dir is not None:
        (Path(out_dir) / "stagger.json").write_text(json.dumps(report.as_dict(), indent=2))
    return report
