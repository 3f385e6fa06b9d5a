"""
Sensor-driven watering
======================

Six moisture sensors are sampled every 30 minutes. Two threshold rules open
a single valve feeding every emitter.
"""

import numpy as np

from polysim import load_preset, simulate
from polysim.closed_loop import EmitterSpec, duration_to_volume
from polysim.garden import WaterGroup

result = simulate(load_preset("closed_loop_period2"))
ctl = result.controller

for day, minute, rule, seconds, volume in ctl.firings:
    print(f"day {day} {minute // 60:02d}:{minute % 60:02d}  rule {rule}  "
          f"{seconds:.0f} s  {volume:.0f} mL")

# %%
# Daily mean of the sensor readings.

vwc = np.array([[r.timestamp[0], r.vwc] for r in ctl.readings])
for day in range(result.config.cycle_length):
    print(day, round(float(vwc[vwc[:, 0] == day, 1].mean()), 3))

# %%
# Emitter calibration: mL delivered per minute at each setting.

for turns in (6, 7, 8):
    print(turns, "turns:", duration_to_volume(EmitterSpec(0, WaterGroup.GROUP1, turns), 60), "mL")
