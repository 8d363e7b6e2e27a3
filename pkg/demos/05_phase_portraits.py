"""
Phase portraits on the Bloch sphere
===================================

A 12 x 12 lattice of seeds, each integrated and labelled JO or MST. The
fraction of trapped (MST) seeds grows with kappa and shrinks with eta.
"""

import numpy as np

from bec_dimer.classical import portrait
from bec_dimer.model import ModelParams

N = 100

print("self collisions (eta = 0):")
for label, kappa in [("0", 0.0), ("1.0/2N", 0.5 / N), ("1.1/2N", 0.55 / N), ("1/N", 1.0 / N), ("2/N", 2.0 / N)]:
    result = portrait(ModelParams(N, 1.0, kappa))
    print(f"  kappa = {label:7s} MST fraction = {result.mst_fraction:.3f}")

print("cross collisions at kappa = 1/N:")
for r in (100, 40, 10):
    kappa = 1.0 / N
    result = portrait(ModelParams.with_overlap_lambda(N, 1.0, kappa, kappa / r))
    print(f"  eta = kappa/{r:<3d} MST fraction = {result.mst_fraction:.3f}")

# Each orbit is a closed curve; for kappa = 0 it is a circle of constant Z.
result = portrait(ModelParams(N, 1.0, 0.0), seeds=[(0.8, 0.0), (2.0, 1.0)])
print("\nkappa = 0, spread of Z along each orbit:", np.ptp(result.orbits.Z, axis=0))
