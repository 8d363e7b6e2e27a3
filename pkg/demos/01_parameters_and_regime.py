"""
Parameters, the admissible regime and the bifurcation threshold
===============================================================

Start from a trap, get the two-mode parameters, then look at where the
north pole of the Bloch sphere bifurcates.
"""

from bec_dimer.model import (
    ModelParams,
    TrapGeometry,
    bifurcation_sides,
    critical_kappa,
    derive,
    from_trap,
    validate_regime,
)

# A double well in units where hbar = m = omega = 1. The minima sit at +-q0;
# the overlap of the two localized Gaussians is eps = exp(-q0^2 / d^2).
trap = TrapGeometry(mass=1.0, omega_trap=1.0, q0=1.6, a_scatter=0.02)
print(f"overlap eps = {trap.epsilon:.4g}")

for n_atoms in (10, 100, 1000):
    p = from_trap(trap, n_atoms)
    print(
        f"N={n_atoms:5d}  Omega={p.Omega:+.4g}  kappa={p.kappa:.4g}  "
        f"eta={p.eta:.3g}  Lambda={p.Lambda:.3g}  Omega'={p.OmegaPrime:+.4g}"
    )
# The cross collisions shift the tunneling by 4 Lambda (N - 1): it grows with N.

# The figures in the text work with Omega = 1 and kappa in units of 1/N.
# Lambda is not given there, so it is derived from the same overlap.
p = ModelParams.with_overlap_lambda(100, 1.0, 2 / 100, 2 / 100 / 10)
print("\nderived:", derive(p))
print("regime violations:", validate_regime(p) or "none")

bad = ModelParams(100, 1.0, 0.01, 0.02, 0.0)
print("eta > kappa:", validate_regime(bad))

# Pitchfork: (kappa - 3 eta)(N - 1) against 2 Lambda (N - 1) + Omega / 2.
kc = critical_kappa(100, 1.0)
print(f"\nkappa_c = {kc:.6g} (1/198 = {1 / 198:.6g})")
for factor in (1.0, 1.1):
    k = factor / 200
    s = bifurcation_sides(ModelParams(100, 1.0, k))
    print(f"kappa = {factor}/2N: lhs={s.lhs:.4f} rhs={s.rhs:.4f} bifurcated={s.bifurcated}")

# with cross collisions the threshold moves up
print(f"kappa_c with eta = Lambda = 1e-4: {critical_kappa(100, 1.0, 1e-4, 1e-4):.6g}")
