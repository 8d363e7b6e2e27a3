"""Exact quantum dynamics in the |J, M> basis.

The Hamiltonian only involves J_z, J_z^2 and J_x^2, which are real symmetric
in this basis, so the spectrum and eigenvectors are real; complex numbers only
show up in state coefficients and time phases.

Angle convention for coherent states: theta = 0 is |J, -J> (south pole),
theta = pi is |J, +J>, and tau = exp(-i phi) tan(theta / 2).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.integrate import simpson
from scipy.ndimage import maximum_filter
from scipy.special import gammaln, xlogy

from . import numerics
from .model import ModelParams, effective_tunneling


@dataclass(frozen=True)
class SpinBasis:
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def J(self) -> float:
        return self.N / 2.0

    @property
    def dim(self) -> int:
        return self.N + 1

    @property
    def M_values(self) -> np.ndarray:
        return np.arange(self.dim) - self.J


@dataclass(frozen=True)
class QuantumState:
    basis: SpinBasis
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (self.basis.dim,):
            raise ValueError(f"expected {self.basis.dim} coefficients, got shape {c.shape}")
        norm = np.vdot(c, c).real
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state is not normalised: <psi|psi> = {norm!r}")
        object.__setattr__(self, "coeffs", c)

    def expect(self, op) -> complex:
        return np.vdot(self.coeffs, op @ self.coeffs)


class SpinOperators(NamedTuple):
    """Angular-momentum matrices; J_y = -1j * ``jy_carrier``."""

    jx: np.ndarray
    jy_carrier: np.ndarray
    jz: np.ndarray
    jx2: np.ndarray
    jz2: np.ndarray

    @property
    def jy(self) -> np.ndarray:
        return -1j * self.jy_carrier


def build_operators(basis: SpinBasis) -> SpinOperators:
    J = basis.J
    M = basis.M_values
    # <M+1| J_+ |M>
    ladder = np.sqrt(J * (J + 1) - M[:-1] * (M[:-1] + 1))
    jplus = np.diag(ladder, -1)
    jx = 0.5 * (jplus + jplus.T)
    jy_carrier = 0.5 * (jplus - jplus.T)
    jz = np.diag(M.astype(float))
    return SpinOperators(jx, jy_carrier, jz, jx @ jx, jz @ jz)


def build_hamiltonian(params: ModelParams, basis: Optional[SpinBasis] = None) -> np.ndarray:
    """Omega' J_z + 2 (kappa - eta) J_x^2 + 4 eta J_z^2 as a dense symmetric matrix."""
    if basis is None:
        basis = SpinBasis(params.N)
    if basis.N != params.N:
        raise ValueError("basis and parameters disagree on N")
    ops = build_operators(basis)
    h = (
        effective_tunneling(params) * ops.jz
        + 2.0 * (params.kappa - params.eta) * ops.jx2
        + 4.0 * params.eta * ops.jz2
    )
    return numerics.symmetric_matrix(h)


def _coherent_amplitudes(theta, N):
    """sqrt(C(N, k)) sin^k(theta/2) cos^(N-k)(theta/2), shape (len(theta), N+1)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    k = np.arange(N + 1)
    log_binom = gammaln(N + 1) - gammaln(k + 1) - gammaln(N - k + 1)
    s = np.abs(np.sin(theta / 2))[:, None]
    c = np.abs(np.cos(theta / 2))[:, None]
    log_amp = 0.5 * log_binom + xlogy(k, s) + xlogy(N - k, c)
    return np.exp(log_amp)


def coherent_state(theta: float, phi: float, basis: SpinBasis) -> QuantumState:
    """Atomic coherent state |theta, phi>.

    Coefficients are computed in log space, so large N does not overflow.
    """
    if not 0.0 <= theta <= np.pi:
        raise ValueError("theta must lie in [0, pi]")
    amp = _coherent_amplitudes(theta, basis.N)[0]
    k = np.arange(basis.dim)
    c = amp * np.exp(-1j * k * phi)
    c /= np.sqrt(np.vdot(c, c).real)
    return QuantumState(basis, c)


def energy_expectation(state: QuantumState, H) -> float:
    return float(state.expect(np.asarray(H)).real)


@dataclass(frozen=True)
class Evolution:
    """Observables along a unitary trajectory, sampled at ``t``."""

    t: np.ndarray
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray
    fidelity: np.ndarray
    norm: np.ndarray
    max_imag: float


class Propagator:
    """Spectral propagator exp(-i H t) for a fixed Hamiltonian."""

    def __init__(self, H, basis: SpinBasis, eig: Optional[numerics.EigenDecomposition] = None):
        self.basis = basis
        self.eig = numerics.eigh(H) if eig is None else eig

    def amplitudes(self, state0: QuantumState, times) -> np.ndarray:
        """Coefficient vectors psi(t); shape (len(times), dim)."""
        if state0.basis.dim != self.basis.dim:
            raise ValueError("state and Hamiltonian live in different bases")
        E, V = self.eig
        a = V.T @ state0.coeffs
        phases = np.exp(-1j * np.outer(np.asarray(times, dtype=float), E))
        return (phases * a) @ V.T

    def state(self, state0: QuantumState, t: float) -> QuantumState:
        psi = self.amplitudes(state0, [t])[0]
        return QuantumState(self.basis, psi / np.sqrt(np.vdot(psi, psi).real))


def evolve(state0: QuantumState, H, times, eig=None) -> Evolution:
    """<J_x>/J, <J_y>/J, <J_z>/J, fidelity |<psi0|psi(t)>|^2 and norm over ``times``."""
    basis = state0.basis
    prop = Propagator(H, basis, eig)
    psi = prop.amplitudes(state0, times)
    ops = build_operators(basis)
    J = basis.J

    def sandwich(op):
        return np.einsum("ti,ij,tj->t", psi.conj(), op, psi)

    jx = sandwich(ops.jx)
    jy = sandwich(ops.jy)
    jz = np.einsum("ti,i,ti->t", psi.conj(), basis.M_values, psi)
    norm = np.einsum("ti,ti->t", psi.conj(), psi)
    overlap = psi @ state0.coeffs.conj()
    max_imag = float(max(np.abs(x.imag).max() for x in (jx, jy, jz, norm)))
    return Evolution(
        t=np.asarray(times, dtype=float),
        jx=jx.real / J,
        jy=jy.real / J,
        jz=jz.real / J,
        fidelity=np.abs(overlap) ** 2,
        norm=norm.real,
        max_imag=max_imag,
    )


def phi_grid(n_phi: int) -> np.ndarray:
    """``n_phi`` uniform azimuths in (-pi, pi]; always contains phi = 0."""
    j = np.arange(n_phi) - (n_phi - 1) // 2
    return 2.0 * np.pi * j / n_phi


@dataclass(frozen=True)
class HusimiGrid:
    theta: np.ndarray
    phi: np.ndarray
    Q: np.ndarray  # shape (len(theta), len(phi))


def husimi_grid(state: QuantumState, n_theta: int, n_phi: int) -> HusimiGrid:
    """Q(theta, phi) = |<theta, phi|psi>|^2 on a uniform grid (theta outer)."""
    if n_theta < 2 or n_phi < 2:
        raise ValueError("need at least 2 grid points per axis")
    theta = np.linspace(0.0, np.pi, n_theta)
    phi = phi_grid(n_phi)
    N = state.basis.N
    amp = _coherent_amplitudes(theta, N)
    k = np.arange(N + 1)
    # <theta,phi|psi> = sum_k amp_k(theta) e^{i k phi} psi_k
    overlap = (amp * state.coeffs) @ np.exp(1j * np.outer(k, phi))
    Q = np.abs(overlap) ** 2
    return HusimiGrid(theta, phi, np.clip(Q, 0.0, 1.0))


def husimi_normalization(grid: HusimiGrid, J: float) -> float:
    """(2J+1)/(4 pi) * integral of Q over the sphere.

    Simpson in theta (endpoints included) and the periodic rectangle rule in phi.
    """
    ring = grid.Q.mean(axis=1) * 2.0 * np.pi
    total = simpson(ring * np.sin(grid.theta), x=grid.theta)
    return float((2 * J + 1) / (4 * np.pi) * total)


def husimi_maxima(grid: HusimiGrid, threshold: float = 0.0):
    """Local maxima of Q (periodic in phi) at or above ``threshold``.

    Returns a list of (theta, phi, Q) sorted by decreasing Q.
    """
    Q = grid.Q
    peak = maximum_filter(Q, size=3, mode=("nearest", "wrap"))
    mask = (Q >= peak) & (Q >= threshold)
    ii, jj = np.nonzero(mask)
    found = [(grid.theta[i], grid.phi[j], Q[i, j]) for i, j in zip(ii, jj)]
    # a whole pole row collapses to one point on the sphere
    merged = []
    for th, ph, q in sorted(found, key=lambda r: -r[2]):
        if any(angular_distance(th, ph, t2, p2) < 1e-12 for t2, p2, _ in merged):
            continue
        merged.append((th, ph, q))
    return merged


def angular_distance(theta1, phi1, theta2, phi2) -> float:
    """Great-circle distance between two points given in the module's angles."""
    c = np.cos(theta1) * np.cos(theta2) + np.sin(theta1) * np.sin(theta2) * np.cos(phi1 - phi2)
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


@dataclass(frozen=True)
class SpectrumAnalysis:
    energies: np.ndarray
    inflection_index: Optional[int]
    doublet_flags: np.ndarray
    doublet_count: int


def analyze_spectrum(energies, doublet_tol: float = 0.1) -> SpectrumAnalysis:
    """Find near-degenerate pairs and the first curvature sign change of E_n.

    A pair (E_i, E_{i+1}) is a doublet when its gap is below ``doublet_tol``
    times the local level spacing, taken as the median over the five
    positions around i of the two-level spacing E_{j+2} - E_j. (A median of
    plain gaps would itself collapse to zero inside a run of doublets.)
    """
    E = np.asarray(energies, dtype=float)
    if E.ndim != 1 or E.size < 5:
        raise ValueError("need at least 5 levels")
    if np.any(np.diff(E) < 0):
        raise ValueError("energies must be ascending")
    gaps = np.diff(E)
    two_step = E[2:] - E[:-2]
    m = two_step.size
    flags = np.zeros(gaps.size, dtype=bool)
    for i in range(gaps.size):
        lo = min(max(i - 2, 0), max(m - 5, 0))
        ref = np.median(two_step[lo:lo + 5])
        flags[i] = gaps[i] < doublet_tol * ref

    d2 = E[2:] - 2.0 * E[1:-1] + E[:-2]
    scale = max(float(np.max(np.abs(gaps))), np.finfo(float).tiny)
    sign = np.where(np.abs(d2) <= 1e-9 * scale, 0, np.sign(d2)).astype(int)
    inflection = None
    last = 0
    for j, s in enumerate(sign):
        if s == 0:
            continue
        if last != 0 and s != last:
            inflection = j + 1  # d2[j] is centred on level j + 1
            break
        last = s
    return SpectrumAnalysis(E, inflection, flags, int(flags.sum()))


def spectrum(params: ModelParams) -> np.ndarray:
    return numerics.eigh(build_hamiltonian(params)).values
