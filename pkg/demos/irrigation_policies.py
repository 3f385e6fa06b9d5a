"""
Comparing irrigation policies
=============================

Four open-loop watering policies run on the same 16-plant bed and seed.
Coverage and diversity are averaged over days 20 to 70.
"""

from polysim import compare, load_preset

cfg = load_preset("fig5_irrigation")
report = compare(cfg, ["baseline", "binary", "continuous", "discrete"])

# %%
# Water is reported relative to the first policy in the list.

for row in report.rows:
    print(f"{row.policy:>11}  coverage {row.mean_coverage:.3f}  "
          f"diversity {row.mean_diversity:.3f}  water {row.water_total / 1000:6.1f} L  "
          f"({row.water_pct_vs_first:+.1f}%)")

# %%
# The discrete policy rounds each continuous dose up to the next valve level.

from polysim.policies import DISCRETE_LEVELS_ML, quantize

for amount in (0, 10, 66, 150, 399, 520):
    print(amount, "->", quantize(amount, DISCRETE_LEVELS_ML))
