"""
Fixed points and the pitchfork
==============================

Sweep kappa through kappa_c with eta = Lambda = 0. Below threshold the north
pole is a center; above it the pole turns into a saddle and a pair of new
centers (family b) leaves it along the x-z great circle.
"""

from bec_dimer.classical import fixed_points, fixed_point_residual
from bec_dimer.model import ModelParams, critical_kappa

N = 100
kc = critical_kappa(N, 1.0)
print(f"kappa_c = {kc:.6f}\n")
print(" kappa/kc   north pole        theta_b    freq_b    residual_b")
for ratio in (0.5, 0.9, 0.99, 1.0, 1.01, 1.1, 1.5, 2.0, 4.0):
    p = ModelParams(N, 1.0, ratio * kc)
    fps = fixed_points(p)
    d = [fp for fp in fps if fp.family == "d"][0]
    b = [fp for fp in fps if fp.family == "b"][0]
    if b.exists and b.qp is not None:
        extra = f"{b.theta:9.5f} {b.frequency:9.5f} {fixed_point_residual(b, p):11.1e}"
    elif b.exists:
        extra = "  at the pole (critical line)"
    else:
        extra = "  absent"
    print(f"{ratio:8.2f}   {d.stability:16s} {extra}")

# Full report for one bifurcated case.
print()
for fp in fixed_points(ModelParams(N, 1.0, 0.01)):
    print(fp.family, fp.to_dict())
