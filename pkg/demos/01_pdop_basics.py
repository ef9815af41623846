"""
PDOP of simple geometries
=========================

PDOP depends only on the line-of-sight directions and on the shape of the
error covariance, not on its overall scale.  This script walks through the
textbook cases and a synthetic GPS-like sky.
"""

# %%
# Three orthogonal lines of sight give (A^T A)^-1 = I, so PDOP = sqrt(3).
import numpy as np

from gnsspdop import (
    DesignMatrix,
    GeodeticPosition,
    WalkerSpec,
    build_design_matrix,
    geodetic_to_ecef,
    pdop,
    scaled_identity,
    walker_constellation,
)

print("orthogonal axes      PDOP =", pdop(np.eye(3), scaled_identity(1.0, 3)).pdop)

# %%
# Adding a fourth satellite opposite the first halves the x variance:
# (A^T A)^-1 = diag(0.5, 1, 1) and PDOP = sqrt(2.5).
A4 = DesignMatrix.from_rows([[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, 0, 0]])
print("four rows            PDOP =", pdop(A4, scaled_identity(1.0, 4)).pdop)

# %%
# With Sigma = gamma I the PDOP is the same for every gamma; RMS scales as sqrt(gamma).
for gamma in (1.0, 4.0, 100.0):
    r = pdop(A4, scaled_identity(gamma, 4))
    print(f"gamma = {gamma:6.1f}        PDOP = {r.pdop:.7f}   RMS = {r.rms:.4f} m")

# %%
# A 24/3/1 Walker constellation at GPS altitude seen from Tampere, Finland.
receiver = GeodeticPosition(61.45, 23.86, 120.0)
sats = walker_constellation(WalkerSpec(24, 3, 1, inclination=55.0, altitude=20_200_000.0))
A = build_design_matrix(geodetic_to_ecef(receiver), sats, mask_elevation=5.0)
r = pdop(A, scaled_identity(1.0, A.S))
print(f"\nWalker sky: {A.S} visible satellites")
for sid, el, az in zip(A.satellite_ids, A.elevation, A.azimuth):
    print(f"  {sid:5s} el {el:5.1f}  az {az:5.1f}")
print(f"PDOP {r.pdop:.4f}  HDOP {r.hdop:.4f}  VDOP {r.vdop:.4f}")
