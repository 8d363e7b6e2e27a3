"""
Husimi functions, collapse and revival
======================================

Q(theta, phi) = |<theta, phi | psi(t)>|^2 for the trapped initial state.
The packet spreads along its classical orbit, splits into a superposition of
separated lobes and then re-forms near Omega t = 63.
"""

import math

import numpy as np

from bec_dimer import quantum
from bec_dimer.model import ModelParams

N = 100
basis = quantum.SpinBasis(N)
psi0 = quantum.coherent_state(math.pi / 2, 0.0, basis)

for kappa_label, kappa in (("2/N", 2 / N), ("1/N", 1 / N)):
    p = ModelParams.with_overlap_lambda(N, 1.0, kappa, kappa / 100)
    prop = quantum.Propagator(quantum.build_hamiltonian(p, basis), basis)
    print(f"kappa = {kappa_label}, eta = kappa/100")
    for t in (0, 5, 10, 20, 30, 63):
        grid = quantum.husimi_grid(prop.state(psi0, t), 201, 201)
        peaks = quantum.husimi_maxima(grid, 0.2)
        where = ", ".join(f"({th:.2f}, {ph:+.2f}) Q={q:.2f}" for th, ph, q in peaks)
        print(f"  Omega t = {t:2d}: max Q = {grid.Q.max():.3f}; peaks >= 0.2: {where or 'none'}")

    t = np.linspace(0, 80, 8001)
    F = quantum.evolve(psi0, quantum.build_hamiltonian(p, basis), t, eig=prop.eig).fidelity
    late = t > 40
    i = np.argmax(np.where(late, F, -1))
    print(f"  best revival after Omega t = 40: F = {F[i]:.3f} at Omega t = {t[i]:.2f}\n")

# With kappa = 1/N the (pi/2, 0) state sits on a Josephson orbit, so it spreads
# around the whole sphere and the packet never splits into trapped lobes.
