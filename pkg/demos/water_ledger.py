"""
Auditing the water balance
==========================

Every simulated day books irrigation against storage change, plant uptake,
evaporation and drainage.
"""

from polysim import load_preset, simulate

result = simulate(load_preset("cycle2_schedule"))
ledger = result.state.ledger

print(f"irrigation {ledger.irrigation_in / 1000:.1f} L")
print(f"uptake     {ledger.uptake / 1000:.1f} L")
print(f"evaporated {ledger.evaporation / 1000:.1f} L")
print(f"drained    {ledger.drainage / 1000:.1f} L")
print(f"stored     {(result.state.soil.storage_ml() - result.state.initial_storage) / 1000:.1f} L")

worst = max(result.audits, key=lambda a: a.relative_error)
print(f"worst day {worst.day}: relative error {worst.relative_error:.1e}")
