"""Parameters of the two-mode double-well condensate and their algebra.

Units: hbar = 1. Energies are in whatever unit ``Omega`` is given in, and
time is reported as the dimensionless ``Omega * t`` by the front end.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import List, NamedTuple, Optional

import numpy as np

from .numerics import quad_gauss_hermite_like

DEFAULT_RATIO_MIN = 5.0
DEFAULT_MAX_OVERLAP = 0.5


@dataclass(frozen=True)
class ModelParams:
    """Hamiltonian parameters: particle number, bare tunneling and collisions.

    ``kappa`` is the self-collision strength, ``eta`` and ``Lambda`` the two
    cross-collision strengths between atoms in different wells.
    """

    N: int
    Omega: float
    kappa: float
    eta: float = 0.0
    Lambda: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        for name in ("Omega", "kappa", "eta", "Lambda"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        for name in ("kappa", "eta", "Lambda"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @classmethod
    def with_overlap_lambda(cls, N, Omega, kappa, eta=0.0):
        """Build parameters with ``Lambda`` tied to ``kappa`` and ``eta``
        through a single well overlap (see :func:`lambda_from_overlap`)."""
        return cls(N, Omega, kappa, eta, lambda_from_overlap(kappa, eta))

    @property
    def J(self) -> float:
        return self.N / 2.0

    @property
    def OmegaPrime(self) -> float:
        return effective_tunneling(self)

    def to_dict(self) -> dict:
        return asdict(self)


class DerivedParams(NamedTuple):
    J: float
    OmegaPrime: float
    k_small: float
    n_small: float
    R: float


def effective_tunneling(params: ModelParams) -> float:
    """Tunneling dressed by the cross collisions: 2 [2 Lambda (N-1) + Omega/2]."""
    return 2.0 * (2.0 * params.Lambda * (params.N - 1) + params.Omega / 2.0)


def derive(params: ModelParams) -> DerivedParams:
    J = params.N / 2.0
    k = (params.kappa - params.eta) * (2 * J - 1) / (4 * J)
    n = params.eta * (2 * J - 1) / (2 * J)
    return DerivedParams(J, effective_tunneling(params), k, n, 2.0 * math.sqrt(J))


def lambda_from_overlap(kappa: float, eta: float) -> float:
    """Cross-collision ``Lambda = kappa * eps**1.5`` with ``eps**2 = eta/kappa``."""
    if eta == 0:
        return 0.0
    if not kappa > 0:
        raise ValueError("kappa must be positive when eta > 0")
    if eta < 0 or eta > kappa:
        raise ValueError("need 0 <= eta <= kappa")
    return kappa * (eta / kappa) ** 0.75


def validate_regime(params: ModelParams, ratio_min: float = DEFAULT_RATIO_MIN) -> List[str]:
    """Check the two-mode approximation is self-consistent.

    Returns a list of human-readable violations; an empty list means the
    parameters are admissible. "Much larger than" is read as a ratio of at
    least ``ratio_min``.
    """
    p = params
    out = []
    if p.eta * ratio_min > p.kappa:
        out.append(f"eta > kappa/{ratio_min:g}: eta={p.eta:g}, kappa={p.kappa:g}")
    if p.Lambda * ratio_min > p.kappa:
        out.append(f"Lambda > kappa/{ratio_min:g}: Lambda={p.Lambda:g}, kappa={p.kappa:g}")
    if p.Lambda * ratio_min > p.Omega:
        out.append(f"Lambda > Omega/{ratio_min:g}: Lambda={p.Lambda:g}, Omega={p.Omega:g}")
    if p.eta > 0 and p.Lambda > 0 and p.eta > p.Lambda:
        out.append(f"eta > Lambda: eta={p.eta:g}, Lambda={p.Lambda:g}")
    d = derive(p)
    if d.R ** 2 * d.n_small >= d.OmegaPrime / 2:
        out.append(
            "family-(c) region: R^2 n >= Omega'/2 "
            f"({d.R ** 2 * d.n_small:g} >= {d.OmegaPrime / 2:g})"
        )
    return out


class BifurcationSides(NamedTuple):
    lhs: float
    rhs: float
    bifurcated: bool


def bifurcation_sides(params: ModelParams) -> BifurcationSides:
    """Both sides of the pitchfork condition
    ``(kappa - 3 eta)(N-1)`` vs ``2 Lambda (N-1) + Omega/2``."""
    p = params
    lhs = (p.kappa - 3.0 * p.eta) * (p.N - 1)
    rhs = 2.0 * p.Lambda * (p.N - 1) + p.Omega / 2.0
    return BifurcationSides(lhs, rhs, lhs > rhs)


def critical_kappa(N: int, Omega: float, eta: float = 0.0, Lambda: float = 0.0) -> float:
    """Self-collision strength at which the north pole bifurcates."""
    if N < 2:
        raise ValueError("N must be >= 2")
    return (2.0 * Lambda * (N - 1) + Omega / 2.0) / (N - 1) + 3.0 * eta


@dataclass(frozen=True)
class TrapGeometry:
    """Symmetric double well along x with isotropic harmonic confinement.

    The barrier coefficient is fixed to ``b = m omega^2 / 8`` so that each
    minimum is locally an isotropic oscillator of frequency ``omega``.
    """

    mass: float
    omega_trap: float
    q0: float
    a_scatter: float

    def __post_init__(self):
        for name in ("mass", "omega_trap", "q0", "a_scatter"):
            value = float(getattr(self, name))
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number")
            object.__setattr__(self, name, value)

    @property
    def d(self) -> float:
        return math.sqrt(1.0 / (self.mass * self.omega_trap))

    @property
    def b(self) -> float:
        return self.mass * self.omega_trap ** 2 / 8.0

    @property
    def V0(self) -> float:
        return 4.0 * math.pi * self.a_scatter / self.mass

    @property
    def epsilon(self) -> float:
        return math.exp(-(self.q0 / self.d) ** 2)

    def to_dict(self) -> dict:
        return asdict(self)


def _gaussian_1d(x, center, d):
    return math.pi ** -0.25 / math.sqrt(d) * np.exp(-((x - center) ** 2) / (2 * d * d))


def tunneling_x(trap: TrapGeometry, n_points: int = 512) -> float:
    """<g_-| p^2/2m + b/q0^2 (x^2 - q0^2)^2 |g_+> for the 1-D Gaussians along x."""
    d, q0, m, b = trap.d, trap.q0, trap.mass, trap.b
    half_width = q0 + 10.0 * d

    def integrand(x):
        gm = _gaussian_1d(x, -q0, d)
        gp = _gaussian_1d(x, q0, d)
        # g_+'' = g_+ [(x - q0)^2 / d^4 - 1/d^2]
        kinetic = -gm * gp * ((x - q0) ** 2 / d ** 4 - 1.0 / d ** 2) / (2.0 * m)
        potential = gm * gp * b / q0 ** 2 * (x ** 2 - q0 ** 2) ** 2
        return kinetic + potential

    return quad_gauss_hermite_like(integrand, half_width, n_points)


def from_trap(
    trap: TrapGeometry,
    N: int,
    max_overlap: float = DEFAULT_MAX_OVERLAP,
    n_points: int = 512,
) -> ModelParams:
    """Two-mode parameters for ``N`` atoms in ``trap``.

    kappa uses the closed-form Gaussian quartic integral; Omega is
    ``2 <u_-|H|u_+>`` with the x-factor done by quadrature and the two
    transverse oscillators contributing ``eps * omega / 2`` each.
    """
    eps = trap.epsilon
    if eps >= max_overlap:
        raise ValueError(
            f"overlap eps={eps:.4g} >= {max_overlap:g}: wells are not well separated"
        )
    kappa = 0.5 * trap.V0 * (2.0 * math.pi) ** -1.5 * trap.d ** -3
    hx = tunneling_x(trap, n_points)
    transverse = 2.0 * eps * (trap.omega_trap / 2.0)
    Omega = 2.0 * (hx + transverse)
    return ModelParams(N, Omega, kappa, kappa * eps ** 2, kappa * eps ** 1.5)


def resolve_lambda(N, Omega, kappa, eta, Lambda: Optional[float] = None) -> ModelParams:
    """Explicit ``Lambda`` wins; otherwise it is derived from the overlap."""
    if Lambda is None:
        return ModelParams.with_overlap_lambda(N, Omega, kappa, eta)
    return ModelParams(N, Omega, kappa, eta, Lambda)
