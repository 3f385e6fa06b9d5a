"""Coverage, diversity and water-usage metrics."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from polysim.canopy import UNASSIGNED, LightAllocation, light_allocation
from polysim.garden import GardenState

DEFAULT_DOSE_ML = 200.0


@dataclass
class DayRecord:
    day: int
    coverage: float
    diversity: float
    per_type_coverage: dict[str, float] = field(default_factory=dict)
    water_day: float = 0.0
    water_total: float = 0.0


@dataclass
class Summary:
    mean_coverage: float
    mean_diversity: float
    water_total: float
    window: tuple[int, int]
    n_days: int

    def as_dict(self) -> dict:
        return {
            "mean_coverage": self.mean_coverage,
            "mean_diversity": self.mean_diversity,
            "water_total_mL": self.water_total,
            "window": list(self.window),
            "n_days": self.n_days,
        }


def per_type_coverage(state: GardenState,
                      allocation: LightAllocation | None = None) -> dict[str, float]:
    """Fraction of the canopy grid won by each configured plant type."""
    if allocation is None:
        allocation = light_allocation(state)
    out = {name: 0.0 for name in state.types}
    owner = allocation.owner
    total = owner.size
    taken = owner[owner != UNASSIGNED]
    if taken.size:
        counts = np.bincount(taken, minlength=len(state.plants))
        for idx, count in enumerate(counts):
            if count:
                out[state.plants[idx].type_ref] += int(count) / total
    return out


def type_weights(max_radii: Sequence[float]) -> np.ndarray:
    """Size normalization ``(mean_R / R_k)**2`` for each type."""
    radii = np.asarray(max_radii, dtype=float)
    return (radii.mean() / radii) ** 2


def normalized_entropy(values: Iterable[float]) -> float:
    """Shannon entropy of ``values`` (normalized to a distribution) divided by ``ln k``.

    Returns 0 for an all-zero vector and for ``k <= 1``.
    """
    v = np.asarray(list(values), dtype=float)
    k = v.size
    total = v.sum()
    if k <= 1 or total <= 0:
        return 0.0
    p = v / total
    p = p[p > 0]
    h = float(-(p * np.log(p)).sum() / math.log(k))
    if h <= 0:
        return 0.0
    return min(h, 1.0)


def normalized_shares(state: GardenState, coverage: dict[str, float]) -> dict[str, float]:
    """Size-normalized coverage ``v_k``, keyed by type name in configuration order."""
    names = list(state.types)
    weights = type_weights([state.types[n].max_radius for n in names])
    return {n: coverage[n] * w for n, w in zip(names, weights)}


def diversity(state: GardenState, coverage: dict[str, float] | None = None) -> float:
    if coverage is None:
        coverage = per_type_coverage(state)
    return normalized_entropy(normalized_shares(state, coverage).values())


def max_water_bound(n_plants: int, days: int, dose_ml: float = DEFAULT_DOSE_ML) -> float:
    """Water used when every plant gets ``dose_ml`` every day."""
    if n_plants < 0 or days < 0:
        raise ValueError("n_plants and days must be >= 0")
    return n_plants * dose_ml * days


def snapshot(state: GardenState, water_day: float) -> DayRecord:
    alloc = light_allocation(state)
    cov = per_type_coverage(state, alloc)
    return DayRecord(
        day=state.day,
        coverage=float(sum(cov.values())),
        diversity=diversity(state, cov),
        per_type_coverage=cov,
        water_day=water_day,
        water_total=state.water_total,
    )


def summarize(records: Sequence[DayRecord], window: tuple[int, int]) -> Summary:
    """Window means (inclusive bounds on ``day``) plus the final cumulative water."""
    lo, hi = window
    picked = [r for r in records if lo <= r.day <= hi]
    if not picked:
        raise ValueError(f"window {window} selects no records")
    return Summary(
        mean_coverage=float(np.mean([r.coverage for r in picked])),
        mean_diversity=float(np.mean([r.diversity for r in picked])),
        water_total=records[-1].water_total,
        window=(lo, hi),
        n_days=len(picked),
    )


def timeseries_csv(records: Sequence[DayRecord], type_names: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["day", "coverage", "diversity", "water_day_mL", "water_total_mL",
                     *type_names])
    for r in records:
        writer.writerow([
            r.day,
            f"{r.coverage:.6f}",
            f"{r.diversity:.6f}",
            f"{r.water_day:.6f}",
            f"{r.water_total:.6f}",
            *(f"{r.per_type_coverage.get(n, 0.0):.6f}" for n in type_names),
        ])
    return buf.getvalue()


def read_timeseries_csv(text: str) -> list[DayRecord]:
    rows = list(csv.DictReader(io.StringIO(text)))
    fixed = {"day", "coverage", "diversity", "water_day_mL", "water_total_mL"}
    out = []
    for row in rows:
        out.append(DayRecord(
            day=int(row["day"]),
            coverage=float(row["coverage"]),
            diversity=float(row["diversity"]),
            per_type_coverage={k: float(v) for k, v in row.items() if k not in fixed},
            water_day=float(row["water_day_mL"]),
            water_total=float(row["water_total_mL"]),
        ))
    return out
