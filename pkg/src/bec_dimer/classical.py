"""Mean-field dynamics on the Bloch sphere.

The canonical chart (q, p) is related to the coherent-state label by
``tau = (q + i p) / sqrt(4J - q^2 - p^2)``; it covers the whole sphere except
the north pole (theta = pi), which sits on the circle q^2 + p^2 = 4J.

Bloch coordinates: X = sin(theta) cos(phi), Y = sin(theta) sin(phi),
Z = -cos(theta). These are the coherent-state expectation values of
J_x/J, J_y/J, J_z/J, so theta = 0 (the south pole) is Z = -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from .model import ModelParams, bifurcation_sides, derive
from .numerics import OdeSpec, integrate_fixed_rk4

JO = "JO"
MST = "MST"
SEPARATRIX = "SEPARATRIX"

STABLE_CENTER = "stable_center"
UNSTABLE_SADDLE = "unstable_saddle"
CRITICAL = "critical"

DEFAULT_STEP = 1e-3  # in units of 1/|Omega|
PORTRAIT_STEP = 1e-2
_CHART_MARGIN = 1e-12


class ChartError(ValueError):
    """State on or outside the boundary of the (q, p) chart."""


class ClassifierDisagreement(RuntimeError):
    pass


class ClassicalState(NamedTuple):
    q: float
    p: float


class BlochPoint(NamedTuple):
    X: float
    Y: float
    Z: float


def _coefficients(params: ModelParams):
    d = derive(params)
    J = d.J
    a = (params.kappa - params.eta) * (2 * J - 1) / (2 * J)
    b = params.eta * (2 * J - 1) / J
    return J, d.OmegaPrime, a, b


def _check_chart(q, p, J):
    r2 = np.asarray(q) ** 2 + np.asarray(p) ** 2
    if np.any(r2 >= 4 * J):
        raise ChartError("state outside the (q, p) chart: q^2 + p^2 >= 4J")


def classical_hamiltonian(q, p, params: ModelParams, include_constant: bool = False):
    """Mean-field energy H(q, p); accepts scalars or arrays.

    This is the coherent-state expectation of the Hamiltonian with the
    constant ``(kappa - eta) J + 4 eta J^2`` dropped. Pass
    ``include_constant=True`` to get the full expectation value.

    Written as a polynomial in (q, p) so it stays accurate near the north
    pole, where tau blows up.
    """
    J, Wp, a, b = _coefficients(params)
    _check_chart(q, p, J)
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    r2 = q * q + p * p
    room = 4 * J - r2
    H = -J * Wp + 0.5 * Wp * r2 + 0.5 * a * q * q * room - 0.5 * b * r2 * room
    if include_constant:
        H = H + hamiltonian_constant(params)
    return H if H.ndim else float(H)


def hamiltonian_constant(params: ModelParams) -> float:
    """Difference between the exact coherent-state energy and
    :func:`classical_hamiltonian`."""
    J = params.N / 2.0
    return (params.kappa - params.eta) * J + 4.0 * params.eta * J * J


def separatrix_energy(params: ModelParams) -> float:
    """Energy of the north pole, +J Omega'. The separatrix passes through it
    once the pole has bifurcated."""
    J, Wp, _, _ = _coefficients(params)
    return J * Wp


def eom_rhs(q, p, params: ModelParams):
    """Hamilton's equations (dq/dt, dp/dt) = (dH/dp, -dH/dq)."""
    J, Wp, a, b = _coefficients(params)
    q2 = q * q
    p2 = p * p
    s = 2 * q2 + 2 * p2 - 4 * J
    qdot = Wp * p - a * q2 * p + b * p * s
    pdot = -Wp * q - a * q * (4 * J - 2 * q2 - p2) - b * q * s
    return qdot, pdot


def jacobian(q, p, params: ModelParams) -> np.ndarray:
    """Exact 2x2 Jacobian of :func:`eom_rhs` at (q, p)."""
    J, Wp, a, b = _coefficients(params)
    q2, p2 = q * q, p * p
    s = 2 * q2 + 2 * p2 - 4 * J
    dqdot_dq = -2 * a * q * p + 4 * b * q * p
    dqdot_dp = Wp - a * q2 + b * s + 4 * b * p2
    dpdot_dq = -Wp - a * (4 * J - 6 * q2 - p2) - b * s - 4 * b * q2
    dpdot_dp = 2 * a * q * p - 4 * b * q * p
    return np.array([[dqdot_dq, dqdot_dp], [dpdot_dq, dpdot_dp]])


def angles_to_qp(theta, phi, J: float) -> ClassicalState:
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0) or np.any(theta >= np.pi):
        raise ChartError("theta must lie in [0, pi); the north pole is not in the chart")
    r = 2.0 * math.sqrt(J) * np.sin(theta / 2)
    q = r * np.cos(phi)
    p = -r * np.sin(phi)
    if q.ndim == 0:
        return ClassicalState(float(q), float(p))
    return ClassicalState(q, p)


def qp_to_angles(q, p, J: float):
    """Inverse of :func:`angles_to_qp`; phi in (-pi, pi]."""
    r2 = np.asarray(q, dtype=float) ** 2 + np.asarray(p, dtype=float) ** 2
    theta = 2.0 * np.arcsin(np.sqrt(np.clip(r2 / (4 * J), 0.0, 1.0)))
    phi = np.arctan2(-np.asarray(p, dtype=float), np.asarray(q, dtype=float))
    phi = np.where(phi <= -np.pi, np.pi, phi)
    return theta, phi


def to_bloch(q, p, J: float) -> BlochPoint:
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    root = np.sqrt(np.clip(4 * J - q * q - p * p, 0.0, None))
    X = q * root / (2 * J)
    Y = -p * root / (2 * J)
    Z = (q * q + p * p) / (2 * J) - 1.0
    if X.ndim == 0:
        return BlochPoint(float(X), float(Y), float(Z))
    return BlochPoint(X, Y, Z)


def bloch_to_angles(X, Y, Z):
    theta = np.arccos(np.clip(-np.asarray(Z), -1.0, 1.0))
    phi = np.arctan2(Y, X)
    return theta, phi


def _time_scale(params: ModelParams) -> float:
    return abs(params.Omega) if params.Omega != 0 else 1.0


@dataclass(frozen=True)
class Orbit:
    t: np.ndarray
    q: np.ndarray
    p: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    H: np.ndarray

    @property
    def energy_drift(self) -> np.ndarray:
        """|H(t) - H(0)| / max(|H(0)|, 1) along the orbit (per trajectory)."""
        H0 = self.H[0]
        return np.max(np.abs(self.H - H0), axis=0) / np.maximum(np.abs(H0), 1.0)


def integrate_orbit(
    initial,
    params: ModelParams,
    t_end: float,
    step: Optional[float] = None,
    sample_every: int = 1,
) -> Orbit:
    """RK4 trajectory from ``initial`` (a ClassicalState, or arrays of q and p
    for a batch of orbits integrated together).

    ``t_end`` and ``step`` are in raw time units; the default step is
    1e-3 / |Omega|.
    """
    J = params.N / 2.0
    q0 = np.asarray(initial[0], dtype=float)
    p0 = np.asarray(initial[1], dtype=float)
    _check_chart(q0, p0, J)
    if step is None:
        step = DEFAULT_STEP / _time_scale(params)
    limit = 4 * J * (1 - _CHART_MARGIN)

    def rhs(y):
        return np.array(eom_rhs(y[0], y[1], params))

    def guard(t, y):
        r2 = y[0] ** 2 + y[1] ** 2
        if np.any(r2 >= limit):
            raise ChartError(
                f"trajectory reached the north pole boundary at t={t:.6g} "
                f"(q^2+p^2={np.max(r2):.15g}, 4J={4 * J:g})"
            )

    spec = OdeSpec(2, rhs, step, t_end)
    t, y = integrate_fixed_rk4(spec, np.array([q0, p0]), sample_every=sample_every, check=guard)
    q, p = y[:, 0], y[:, 1]
    X, Y, Z = to_bloch(q, p, J)
    H = classical_hamiltonian(q, p, params)
    return Orbit(t, q, p, np.asarray(X), np.asarray(Y), np.asarray(Z), np.asarray(H))


@dataclass
class FixedPointReport:
    family: str
    theta: float
    phi: float
    qp: Optional[ClassicalState]  # None for the north pole
    exists: bool
    stability: Optional[str] = None
    eigenvalues: Optional[tuple] = None
    jacobian: Optional[np.ndarray] = field(default=None, repr=False)
    metadata: dict = field(default_factory=dict)

    @property
    def frequency(self) -> float:
        """Small-oscillation angular frequency (0 unless a stable center)."""
        if self.stability != STABLE_CENTER:
            return 0.0
        return float(abs(self.eigenvalues[0].imag))

    def to_dict(self) -> dict:
        out = {
            "family": self.family,
            "theta": self.theta,
            "phi": self.phi,
            "q": None if self.qp is None else self.qp.q,
            "p": None if self.qp is None else self.qp.p,
            "exists": self.exists,
            "stability": self.stability,
            "eigenvalues": None
            if self.eigenvalues is None
            else [[ev.real, ev.imag] for ev in self.eigenvalues],
        }
        out.update(self.metadata)
        return out


def _north_pole_curvatures(params: ModelParams):
    """Quadratic coefficients of H - J Omega' in canonical coordinates
    centred on the north pole: H ~ J Omega' + A u^2 + B v^2, with u along
    the x axis."""
    d = derive(params)
    A = d.R ** 2 * (d.k_small - d.n_small) - d.OmegaPrime / 2
    B = -(d.R ** 2 * d.n_small + d.OmegaPrime / 2)
    return A, B


def fixed_points(params: ModelParams, tie_tol: float = 1e-12) -> List[FixedPointReport]:
    """Fixed points of the mean-field flow, families (a)-(d).

    (a) south pole; (b) pair on the x-z great circle (phi = 0, pi), present
    once the north pole has bifurcated; (c) pair on the y-z great circle
    (phi = +-pi/2), present only when R^2 n >= Omega'/2; (d) north pole.
    Families (b) and (c) are always listed, with ``exists=False`` when absent.
    """
    d = derive(params)
    J, Wp, R2 = d.J, d.OmegaPrime, d.R ** 2
    X_b = R2 * (d.k_small - d.n_small)
    X_c = R2 * d.n_small
    out = [FixedPointReport("a", 0.0, 0.0, ClassicalState(0.0, 0.0), True)]

    scale = max(abs(X_b), abs(Wp) / 2, 1e-300)
    gap_b = X_b - Wp / 2
    if abs(gap_b) <= tie_tol * scale:
        # on the critical line the pair coincides with the north pole
        for phi in (0.0, np.pi):
            out.append(
                FixedPointReport("b", np.pi, phi, None, True, metadata={"critical_line": True})
            )
    elif gap_b > 0 and X_b + Wp / 2 >= 0:
        theta = 2 * math.atan(math.sqrt((X_b + Wp / 2) / (X_b - Wp / 2)))
        for phi in (0.0, np.pi):
            out.append(FixedPointReport("b", theta, phi, angles_to_qp(theta, phi, J), True))
    else:
        for phi in (0.0, np.pi):
            out.append(FixedPointReport("b", float("nan"), phi, None, False))

    if X_c > 0 and X_c >= Wp / 2 and X_c + Wp / 2 > 0:
        theta = 2 * math.atan(math.sqrt((X_c - Wp / 2) / (X_c + Wp / 2)))
        for phi in (np.pi / 2, -np.pi / 2):
            out.append(FixedPointReport("c", theta, phi, angles_to_qp(theta, phi, J), True))
    else:
        for phi in (np.pi / 2, -np.pi / 2):
            out.append(FixedPointReport("c", float("nan"), phi, None, False))

    A, B = _north_pole_curvatures(params)
    meta = {}
    if A > 0 and B < 0:
        meta["saddle_direction_phi"] = math.atan(math.sqrt(-A / B))
    out.append(FixedPointReport("d", np.pi, 0.0, None, True, metadata=meta))

    return [stability(fp, params) if fp.exists else fp for fp in out]


def _classify_eigen(lam2: float, scale: float, tol: float = 1e-10):
    if lam2 < -tol * scale:
        return STABLE_CENTER
    if lam2 > tol * scale:
        return UNSTABLE_SADDLE
    return CRITICAL


def stability(fp: FixedPointReport, params: ModelParams, tol: float = 1e-10) -> FixedPointReport:
    """Fill in the linearisation of the flow at ``fp``.

    Points inside the (q, p) chart use the analytic Jacobian of
    :func:`eom_rhs`; the north pole uses the complementary chart, where the
    energy is ``J Omega' + A u^2 + B v^2`` to second order and the Jacobian
    is [[0, 2B], [-2A, 0]].
    """
    if not fp.exists:
        raise ValueError("cannot linearise a fixed point that does not exist")
    d = derive(params)
    scale = (abs(d.OmegaPrime) + d.R ** 2 * (abs(d.k_small) + abs(d.n_small))) ** 2 or 1.0
    if fp.qp is None:
        A, B = _north_pole_curvatures(params)
        jac = np.array([[0.0, 2 * B], [-2 * A, 0.0]])
    else:
        jac = jacobian(fp.qp.q, fp.qp.p, params)
    # lambda^2 = -det for a traceless 2x2 matrix
    lam2 = float(-np.linalg.det(jac))
    kind = _classify_eigen(lam2, scale, tol)
    if fp.metadata.get("critical_line"):
        kind = CRITICAL
    lam = complex(np.sqrt(complex(lam2)))
    fp.stability = kind
    fp.eigenvalues = (lam, -lam)
    fp.jacobian = jac
    return fp


def fixed_point_residual(fp: FixedPointReport, params: ModelParams) -> float:
    """Size of the vector field at ``fp``. The north pole is checked through
    the Bloch-space flow dn/dt = grad H x n / J, evaluated at n = (0, 0, 1)."""
    if fp.qp is not None:
        qdot, pdot = eom_rhs(fp.qp.q, fp.qp.p, params)
        return float(math.hypot(qdot, pdot))
    J, Wp, a, b = _coefficients(params)
    n = np.array([0.0, 0.0, 1.0])
    # gradient of J Omega' Z + (k-eta) J(2J-1) X^2 - 2 eta J(2J-1)(1 - Z^2)
    X, Z = n[0], n[2]
    grad = np.array(
        [
            2 * (params.kappa - params.eta) * J * (2 * J - 1) * X,
            0.0,
            J * Wp + 4 * params.eta * J * (2 * J - 1) * Z,
        ]
    )
    return float(np.linalg.norm(np.cross(grad, n)) / J)


def _nearest_center_frequency(theta, phi, centers):
    best, best_d = None, np.inf
    for fp in centers:
        c = math.cos(theta) * math.cos(fp.theta) + math.sin(theta) * math.sin(fp.theta) * math.cos(
            phi - fp.phi
        )
        dist = math.acos(max(-1.0, min(1.0, c)))
        if dist < best_d:
            best, best_d = fp, dist
    return 0.0 if best is None else best.frequency


def default_t_end(
    params: ModelParams, theta: float, phi: float, periods: float = 8.0, centers=None
) -> float:
    """``periods`` small-oscillation periods of the center nearest to the
    seed; the frequency is floored at 0.25 |Omega| so the window stays finite
    close to the bifurcation, where the energy test carries the decision."""
    if centers is None:
        centers = [
            fp for fp in fixed_points(params) if fp.exists and fp.stability == STABLE_CENTER
        ]
    omega = _nearest_center_frequency(theta, phi, centers)
    omega = max(omega, 0.25 * _time_scale(params))
    return periods * 2 * math.pi / omega


def _sign_changes(X):
    s = np.sign(X)
    s = s[s != 0] if s.ndim == 1 else s
    return int(np.count_nonzero(s[1:] != s[:-1]))


def energy_class(E, params: ModelParams, sep_tol: float = 1e-9):
    """Regime implied by the orbit energy alone."""
    E_sep = separatrix_energy(params)
    if abs(E - E_sep) <= sep_tol * max(abs(E_sep), 1.0):
        return SEPARATRIX
    if not bifurcation_sides(params).bifurcated:
        return JO
    # with the north pole a saddle, the energy maxima are the (b) centres,
    # so orbits above the saddle energy are trapped on one side of x = 0
    return MST if E > E_sep else JO


def _combine(primary, secondary, E, params, agree_tol, label=""):
    if secondary == SEPARATRIX or primary == secondary:
        return secondary
    E_sep = separatrix_energy(params)
    if abs(E - E_sep) > agree_tol * max(abs(E_sep), 1.0):
        raise ClassifierDisagreement(
            f"{label}sign-change classifier says {primary}, energy classifier says "
            f"{secondary} (E={E:.12g}, E_sep={E_sep:.12g})"
        )
    return secondary


def classify_orbit(
    initial,
    params: ModelParams,
    t_end: Optional[float] = None,
    step: Optional[float] = None,
    agree_tol: float = 1e-3,
) -> str:
    """JO, MST or SEPARATRIX for the orbit through ``initial``.

    Primary test: does X(t) change sign within ``t_end``? Secondary test:
    orbit energy against the separatrix energy. Near the separatrix (within
    ``agree_tol`` relative) the energy verdict wins; further out the two must
    agree or :class:`ClassifierDisagreement` is raised.
    """
    J = params.N / 2.0
    q0, p0 = float(initial[0]), float(initial[1])
    E = classical_hamiltonian(q0, p0, params)
    secondary = energy_class(E, params)
    if secondary == SEPARATRIX:
        return SEPARATRIX
    if t_end is None:
        theta, phi = qp_to_angles(q0, p0, J)
        t_end = default_t_end(params, float(theta), float(phi))
    orbit = integrate_orbit((q0, p0), params, t_end, step, sample_every=10)
    primary = JO if _sign_changes(orbit.X) > 0 else MST
    return _combine(primary, secondary, E, params, agree_tol)


def default_seeds(n_theta: int = 12, n_phi: int = 12):
    """Lattice of (theta, phi) seeds avoiding both poles."""
    thetas = np.pi * np.arange(1, n_theta + 1) / (n_theta + 1)
    phis = -np.pi + 2 * np.pi * np.arange(1, n_phi + 1) / n_phi
    return [(float(t), float(p)) for t in thetas for p in phis]


@dataclass
class Portrait:
    """``orbits`` holds one column per entry of ``columns`` (seed indices)."""

    seeds: list
    orbits: Optional[Orbit]
    columns: list
    classes: list
    errors: dict

    @property
    def mst_fraction(self) -> float:
        ok = [c for c in self.classes if c is not None]
        return sum(c == MST for c in ok) / len(ok) if ok else float("nan")


def portrait(
    params: ModelParams,
    seeds: Optional[Sequence] = None,
    t_end: Optional[float] = None,
    step: Optional[float] = None,
    sample_every: int = 10,
    agree_tol: float = 1e-3,
) -> Portrait:
    """Integrate and classify one orbit per (theta, phi) seed.

    The default step is 1e-2 / |Omega|, ten times coarser than for single
    orbits: the sign-change test needs the shape of the orbit, not 1e-8
    energy conservation. All seeds are integrated together as one batch over a common window
    (the longest per-seed default when ``t_end`` is not given). A seed that
    fails (outside the chart, classifier disagreement) is recorded in
    ``errors`` and the others are kept.
    """
    seeds = default_seeds() if seeds is None else [tuple(s) for s in seeds]
    J = params.N / 2.0
    classes: list = [None] * len(seeds)
    errors = {}
    good = []
    for i, (theta, phi) in enumerate(seeds):
        try:
            angles_to_qp(theta, phi, J)
            good.append(i)
        except ChartError as exc:
            errors[i] = str(exc)
    if not good:
        return Portrait(seeds, None, [], classes, errors)

    q0, p0 = angles_to_qp(np.array([seeds[i][0] for i in good]), np.array([seeds[i][1] for i in good]), J)
    if step is None:
        step = PORTRAIT_STEP / _time_scale(params)
    if t_end is None:
        centers = [
            fp for fp in fixed_points(params) if fp.exists and fp.stability == STABLE_CENTER
        ]
        t_end = max(default_t_end(params, *seeds[i], centers=centers) for i in good)
    try:
        orbit = integrate_orbit((q0, p0), params, t_end, step, sample_every=sample_every)
    except ChartError:
        # fall back to per-seed integration so one bad orbit does not sink the rest
        return _portrait_one_by_one(params, seeds, good, t_end, step, sample_every, agree_tol, errors)

    E0 = orbit.H[0]
    for col, i in enumerate(good):
        secondary = energy_class(E0[col], params)
        if secondary == SEPARATRIX:
            classes[i] = SEPARATRIX
            continue
        primary = JO if _sign_changes(orbit.X[:, col]) > 0 else MST
        try:
            classes[i] = _combine(primary, secondary, E0[col], params, agree_tol, f"seed {i}: ")
        except ClassifierDisagreement as exc:
            errors[i] = str(exc)
    return Portrait(seeds, orbit, good, classes, errors)


def _portrait_one_by_one(params, seeds, good, t_end, step, sample_every, agree_tol, errors):
    J = params.N / 2.0
    classes: list = [None] * len(seeds)
    cols = {}
    for i in good:
        qp = angles_to_qp(*seeds[i], J)
        try:
            orbit = integrate_orbit(qp, params, t_end, step, sample_every=sample_every)
        except ChartError as exc:
            errors[i] = str(exc)
            continue
        cols[i] = orbit
        E = orbit.H[0]
        secondary = energy_class(E, params)
        if secondary == SEPARATRIX:
            classes[i] = SEPARATRIX
            continue
        primary = JO if _sign_changes(orbit.X) > 0 else MST
        try:
            classes[i] = _combine(primary, secondary, E, params, agree_tol, f"seed {i}: ")
        except ClassifierDisagreement as exc:
            errors[i] = str(exc)
    if not cols:
        return Portrait(seeds, None, [], classes, errors)
    # stack surviving orbits column-wise; missing seeds are filled with nan
    ref = next(iter(cols.values()))
    shape = (ref.t.size, len(good))
    arrays = {k: np.full(shape, np.nan) for k in ("q", "p", "X", "Y", "Z", "H")}
    for col, i in enumerate(good):
        if i in cols:
            for k in arrays:
                arrays[k][:, col] = getattr(cols[i], k)
    return Portrait(seeds, Orbit(ref.t, **arrays), list(good), classes, errors)
