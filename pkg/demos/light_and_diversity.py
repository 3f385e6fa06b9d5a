"""
Light competition and diversity
===============================

Overlapping canopies split light cell by cell: the larger plant wins a
shared cell, ties go to the earlier emergence and then the lower id.
"""

from polysim import LifecycleStage, load_preset, new_garden
from polysim.canopy import light_allocation
from polysim.metrics import diversity, normalized_entropy, per_type_coverage

state = new_garden(load_preset("golden_small"))
for plant, r in zip(state.plants, (20.0, 12.0, 18.0, 10.0)):
    plant.planted = plant.germinated = True
    plant.stage = LifecycleStage.VEGETATIVE
    plant.emerged_day = 0
    plant.radius = r

alloc = light_allocation(state)
for plant, f in zip(state.plants, alloc.f_light):
    print(f"{plant.type_ref:>12}  radius {plant.radius:4.1f}  light share {f:.2f}")

print({k: round(v, 3) for k, v in per_type_coverage(state, alloc).items()})
print("diversity", round(diversity(state), 3))

# %%
# The entropy index on its own.

print(normalized_entropy([1, 0, 0, 0]), normalized_entropy([1, 1, 1, 1]),
      normalized_entropy([1, 1, 0, 0]))
