"""Two-mode Bose-Einstein condensate in a double well with cross collisions.

Exact quantum dynamics in the (N+1)-dimensional symmetric subspace and the
matching mean-field (classical spin) dynamics.
"""

from .model import (
    ModelParams,
    TrapGeometry,
    bifurcation_sides,
    critical_kappa,
    derive,
    effective_tunneling,
    from_trap,
    lambda_from_overlap,
    validate_regime,
)
from .numerics import ConvergenceError, NonFiniteError, eigh, integrate_fixed_rk4
from .quantum import (
    SpinBasis,
    analyze_spectrum,
    build_hamiltonian,
    coherent_state,
    evolve,
    husimi_grid,
    husimi_maxima,
)
from .classical import (
    JO,
    MST,
    SEPARATRIX,
    classical_hamiltonian,
    classify_orbit,
    fixed_points,
    integrate_orbit,
    portrait,
)

__version__ = "0.1.0"
