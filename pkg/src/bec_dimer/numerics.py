"""Numerical kernels with no physics in them.

* :func:`eigh` -- dense real-symmetric eigensolver (Householder reduction to
  tridiagonal form, then implicit-shift QL).
* :func:`integrate_fixed_rk4` -- classical fixed-step Runge-Kutta.
* :func:`quad_gauss_hermite_like` -- composite Gauss-Legendre rule on a
  symmetric interval, meant for Gaussian-weighted integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

_EPS = np.finfo(float).eps


class ConvergenceError(RuntimeError):
    """Raised when the QL iteration does not converge."""


class NonFiniteError(FloatingPointError):
    """Raised when an integrand or a right-hand side returns inf/nan."""

    def __init__(self, message, t=None, y=None):
        super().__init__(message)
        self.t = t
        self.y = y


class EigenDecomposition(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


def symmetric_matrix(a) -> np.ndarray:
    """Return a symmetric copy of ``a`` built from its lower triangle only."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    low = np.tril(a)
    return low + np.tril(a, -1).T


def _tridiagonalize(a):
    """Householder reduction A = Q T Q^T.

    Returns the diagonal, the subdiagonal (padded with a trailing zero) and Q.
    """
    a = a.copy()
    n = a.shape[0]
    q = np.eye(n)
    for k in range(n - 2):
        x = a[k + 1:, k]
        tail = np.linalg.norm(x[1:])
        if tail == 0.0:
            continue
        alpha = -math.copysign(math.hypot(x[0], tail), x[0])
        v = x.copy()
        v[0] -= alpha
        v /= np.linalg.norm(v)

        sub = a[k + 1:, k + 1:]
        p = sub @ v
        w = p - (v @ p) * v
        sub -= 2.0 * (np.outer(v, w) + np.outer(w, v))

        a[k + 1:, k] = 0.0
        a[k, k + 1:] = 0.0
        a[k + 1, k] = a[k, k + 1] = alpha

        q[:, k + 1:] -= 2.0 * np.outer(q[:, k + 1:] @ v, v)

    d = np.diag(a).copy()
    e = np.zeros(n)
    e[:-1] = np.diag(a, -1)
    return d, e, q


def _tql_implicit(d, e, zt, max_iter):
    """Implicit-shift QL on a symmetric tridiagonal matrix, in place.

    ``e[i]`` couples rows i and i+1. Row i of ``zt`` is the i-th eigenvector
    estimate; rotations act on rows so every update is a contiguous slice.
    """
    n = d.size
    for l in range(n):
        iters = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            if iters == max_iter:
                worst = float(np.max(np.abs(e[:-1]))) if n > 1 else 0.0
                raise ConvergenceError(
                    f"QL iteration did not converge: dim={n}, "
                    f"worst off-diagonal={worst:.3e}"
                )
            iters += 1

            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b

                z1 = zt[i + 1].copy()
                zt[i + 1] = s * zt[i] + c * z1
                zt[i] = c * zt[i] - s * z1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0


def eigh(a, max_iter: int = 60) -> EigenDecomposition:
    """Eigen-decomposition of a real symmetric matrix.

    Only the lower triangle of ``a`` is read. Eigenvalues come back in
    ascending order; each eigenvector is normalised and its largest-magnitude
    component is made positive, so the output is deterministic.

    Raises
    ------
    ConvergenceError
        If some eigenvalue needs more than ``max_iter`` QL sweeps.
    """
    a = symmetric_matrix(a)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    n = a.shape[0]
    if n == 1:
        return EigenDecomposition(a[0].copy(), np.ones((1, 1)))

    d, e, q = _tridiagonalize(a)
    zt = np.ascontiguousarray(q.T)
    _tql_implicit(d, e, zt, max_iter)

    order = np.argsort(d, kind="stable")
    values = d[order]
    vectors = zt[order].T.copy()
    lead = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[lead, np.arange(n)])
    signs[signs == 0] = 1.0
    vectors *= signs
    return EigenDecomposition(values, vectors)


@dataclass(frozen=True)
class OdeSpec:
    """Autonomous ODE ``dy/dt = rhs(y)`` integrated from t=0 to ``t_end``.

    ``rhs`` receives arrays whose leading axis has length ``dimension``;
    extra trailing axes are carried along, so a batch of trajectories can be
    integrated in one call.
    """

    dimension: int
    rhs: Callable[[np.ndarray], np.ndarray]
    step: float
    t_end: float

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")


def integrate_fixed_rk4(
    spec: OdeSpec,
    y0,
    sample_every: int = 1,
    check: Optional[Callable[[float, np.ndarray], None]] = None,
):
    """Classical 4th-order Runge-Kutta with a fixed step.

    Returns ``(t, y)`` where ``y[i]`` is the state at ``t[i]``. The first
    sample is t=0 and the last is exactly ``t_end``; the final step is
    shortened when ``t_end`` is not a multiple of ``spec.step``. With
    ``sample_every > 1`` only every ``sample_every``-th step is stored (the
    final state is always stored).

    ``check(t, y)`` is called after each step and may raise to stop the run.
    """
    y = np.array(y0, dtype=float)
    if y.shape[0] != spec.dimension:
        raise ValueError(f"y0 has leading length {y.shape[0]}, expected {spec.dimension}")
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")

    h = spec.step
    n_steps = max(1, math.ceil(spec.t_end / h - 1e-9))
    last_h = spec.t_end - (n_steps - 1) * h
    f = spec.rhs

    k = np.asarray(f(y))
    if not np.all(np.isfinite(k)):
        raise NonFiniteError("non-finite derivative at t=0", 0.0, y.copy())

    ts = [0.0]
    ys = [y.copy()]
    t = 0.0
    for i in range(n_steps):
        dt = h if i < n_steps - 1 else last_h
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y_new = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y_new)):
            raise NonFiniteError(f"non-finite derivative near t={t:.6g}", t, y.copy())
        y = y_new
        t = spec.t_end if i == n_steps - 1 else (i + 1) * h
        if check is not None:
            check(t, y)
        if (i + 1) % sample_every == 0 or i == n_steps - 1:
            ts.append(t)
            ys.append(y.copy())
    return np.array(ts), np.array(ys)


_GL_ORDER = 8


def quad_gauss_hermite_like(f, half_width: float, n_points: int = 256) -> float:
    """Integrate ``f`` over ``[-half_width, half_width]``.

    Composite 8-point Gauss-Legendre on ``n_points // 8`` equal panels; ``f``
    must accept a numpy array. Intended for smooth, Gaussian-decaying
    integrands truncated where the tails are negligible.
    """
    if n_points < _GL_ORDER:
        raise ValueError(f"n_points must be >= {_GL_ORDER}")
    if not half_width > 0:
        raise ValueError("half_width must be positive")
    nodes, weights = np.polynomial.legendre.leggauss(_GL_ORDER)
    panels = n_points // _GL_ORDER
    edges = np.linspace(-half_width, half_width, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    x = mid + half * nodes
    fx = np.asarray(f(x), dtype=float)
    if not np.all(np.isfinite(fx)):
        bad = x[~np.isfinite(fx)][0]
        raise NonFiniteError(f"non-finite integrand at x={bad:.6g}")
    return float(np.sum(half * weights * fx))
