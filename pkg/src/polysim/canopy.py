"""Canopy rasterization and light competition.

Every living plant's disk is rasterized onto a canopy grid (each soil cell
split ``canopy_subdivision`` times per side). A canopy cell is covered by a
plant when the cell center lies inside the disk. Shared cells go to the
plant with the largest radius, then the earliest emergence day, then the
lowest id.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from polysim.garden import GardenState

UNASSIGNED = -1


@dataclass
class LightAllocation:
    owner: np.ndarray       # canopy-grid array of plant list positions, UNASSIGNED where bare
    covered: np.ndarray     # canopy cells inside each plant's disk
    assigned: np.ndarray    # canopy cells won by each plant
    f_light: np.ndarray

    @property
    def n_cells(self) -> int:
        return self.owner.size


def canopy_centers(state: GardenState) -> tuple[np.ndarray, np.ndarray]:
    sub = state.params.canopy_subdivision
    rows, cols = state.soil.vwc.shape
    size = state.soil.cell_size / sub
    xs = (np.arange(cols * sub) + 0.5) * size
    ys = (np.arange(rows * sub) + 0.5) * size
    return np.meshgrid(xs, ys)


def priority_order(state: GardenState) -> list[int]:
    """Plant list positions of living, nonzero-radius plants, highest priority first."""
    live = [i for i, p in enumerate(state.plants) if p.living and p.radius > 0]

    def key(i):
        p = state.plants[i]
        emerged = p.emerged_day if p.emerged_day is not None else np.inf
        return (-p.radius, emerged, p.id)

    return sorted(live, key=key)


def light_allocation(state: GardenState) -> LightAllocation:
    cx, cy = canopy_centers(state)
    owner = np.full(cx.shape, UNASSIGNED, dtype=np.int64)
    n = len(state.plants)
    covered = np.zeros(n, dtype=np.int64)
    assigned = np.zeros(n, dtype=np.int64)
    for i in priority_order(state):
        p = state.plants[i]
        disk = (cx - p.x) ** 2 + (cy - p.y) ** 2 <= p.radius ** 2
        covered[i] = int(disk.sum())
        free = disk & (owner == UNASSIGNED)
        owner[free] = i
        assigned[i] = int(free.sum())
    f_light = np.ones(n)
    has = covered > 0
    f_light[has] = assigned[has] / covered[has]
    return LightAllocation(owner, covered, assigned, f_light)
