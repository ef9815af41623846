"""
Elevation-mask sweep
====================

Raising the mask removes satellites; the trace of (A^T A)^-1 can only grow,
so PDOP is non-decreasing in the mask angle.  The same table is available from
the command line with ``gnsspdop sweep --sweep mask_elevation=...``.
"""

# %%
from pathlib import Path

from gnsspdop import InsufficientSatellites, load_scenario, pdop

path = Path(__file__).resolve().parent.parent / "scenarios" / "walker24.json"

print("mask   S    PDOP")
for mask in range(0, 45, 5):
    scenario = load_scenario(path, {"mask_elevation": mask})
    try:
        A, model, _, _ = scenario.resolve()
    except InsufficientSatellites:
        print(f"{mask:4d}   -    (fewer than 3 satellites)")
        continue
    print(f"{mask:4d}  {A.S:2d}  {pdop(A, model).pdop:.4f}")
