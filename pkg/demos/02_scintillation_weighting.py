"""
Weighting for scintillation and the optimism of naive PDOP
==========================================================

When some satellites suffer ionospheric scintillation their ranging errors
grow.  A receiver that still assumes Sigma = gamma I reports a PDOP that is
too small: the real mean squared error is larger than gamma * PDOP^2.
Modeling the extra variance fixes the prediction and, by Gauss-Markov,
also lowers the actual error.
"""

# %%
import numpy as np

from gnsspdop import (
    GeodeticPosition,
    build_design_matrix,
    composite,
    expected_sq_error,
    from_azel,
    geodetic_to_ecef,
    pdop,
    precision_via_lemma,
    scaled_identity,
    scintillation_diagonal,
)

receiver = GeodeticPosition(-5.0, 120.0, 0.0)  # low latitude: scintillation-prone
sky = [("G01", 20, 70), ("G02", 95, 40), ("G03", 160, 25), ("G04", 210, 55),
       ("G05", 275, 15), ("G06", 330, 35), ("G07", 45, 12), ("G08", 120, 80)]
sats = from_azel(receiver, [(s, az, el) for s, az, el in sky])
A = build_design_matrix(geodetic_to_ecef(receiver), sats, mask_elevation=10.0)
print("visible:", " ".join(A.satellite_ids))

# %%
# Per-satellite (S4, sigma_phi); low-elevation links are hit hardest here.
indices = {"G03": (0.7, 0.4), "G05": (0.9, 0.6), "G07": (0.8, 0.5)}
entries = [indices.get(s, (0.0, 0.0)) for s in A.satellite_ids]
known = scintillation_diagonal(entries, c1=4.0, c2=25.0)
gamma = 1.0
naive = scaled_identity(gamma, A.S)
truth = composite(gamma, known)

# %%
# The lemma form of the precision matches a dense inverse (here the known
# component is singular, so we nudge it to show the identity).
K = known + 1e-3 * np.eye(A.S)
print("lemma vs dense inverse:",
      np.linalg.norm(precision_via_lemma(gamma, K) - np.linalg.inv(gamma * np.eye(A.S) + K)))

# %%
rep_naive = expected_sq_error(A, naive, truth)
rep_weighted = expected_sq_error(A, truth, truth)
print(f"\nnaive     PDOP {pdop(A, naive).pdop:.4f}  predicts {rep_naive.pdop_predicted_sq_error:.3f} m^2, "
      f"actual {rep_naive.expected_sq_error:.3f} m^2, optimism {rep_naive.optimism_ratio:.3f}")
print(f"weighted  PDOP {pdop(A, truth).pdop:.4f}  predicts {rep_weighted.pdop_predicted_sq_error:.3f} m^2, "
      f"actual {rep_weighted.expected_sq_error:.3f} m^2, optimism {rep_weighted.optimism_ratio:.3f}")
