import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from bec_dimer import model
from bec_dimer.model import (
    ModelParams,
    TrapGeometry,
    bifurcation_sides,
    critical_kappa,
    derive,
    from_trap,
    lambda_from_overlap,
    validate_regime,
)


def test_derive_examples():
    d = derive(ModelParams(100, 1.0, 0.01))
    assert d.J == 50 and d.OmegaPrime == 1.0 and d.n_small == 0.0
    assert d.k_small == pytest.approx(0.00495, rel=1e-14)
    assert d.R ** 2 == pytest.approx(200, rel=1e-14)

    assert derive(ModelParams(2, 1.0, 1.0)).k_small == 0.25

    d = derive(ModelParams(100, 1.0, 0.02, 0.002, 0.0035566))
    assert d.OmegaPrime == pytest.approx(2 * (2 * 0.0035566 * 99 + 0.5), rel=1e-14)
    # the quoted 2.40844 is a rounded hand value; the exact product is 2.4084136
    assert d.OmegaPrime == pytest.approx(2.40844, rel=2e-5)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(1, 1.0, 0.1)
    with pytest.raises(ValueError):
        ModelParams(10.5, 1.0, 0.1)
    with pytest.raises(ValueError):
        ModelParams(10, 1.0, -0.1)
    with pytest.raises(ValueError):
        ModelParams(10, float("nan"), 0.1)
    assert ModelParams(10.0, 1, 0).N == 10


def test_validate_regime_examples():
    p = ModelParams.with_overlap_lambda(100, 1.0, 0.02, 0.002)
    assert validate_regime(p) == []

    out = validate_regime(ModelParams(100, 1.0, 0.01, 0.02, 0.0))
    assert any(v.startswith("eta > kappa") for v in out)

    # choose eta so that R^2 n equals Omega' (Lambda = 0, so Omega' = Omega)
    N, Omega = 100, 1.0
    eta = Omega / (2 * (N - 1))
    p = ModelParams(N, Omega, 1.0, eta, 0.0)
    d = derive(p)
    assert d.R ** 2 * d.n_small == pytest.approx(d.OmegaPrime)
    assert any("family-(c) region" in v for v in validate_regime(p))


def test_validate_regime_ratio_configurable():
    p = ModelParams(100, 1.0, 0.02, 0.005, 0.006)
    assert validate_regime(p, ratio_min=3.0) == []
    assert validate_regime(p) != []
    assert any("eta > Lambda" in v for v in validate_regime(ModelParams(100, 1.0, 0.1, 0.005, 0.001)))


def test_lambda_from_overlap():
    assert lambda_from_overlap(0.02, 0.0002) == pytest.approx(6.3246e-4, rel=1e-4)
    assert lambda_from_overlap(0.02, 0.0002) == pytest.approx(0.02 * 0.1 ** 1.5, rel=1e-12)
    assert lambda_from_overlap(0.3, 0.0) == 0.0
    assert lambda_from_overlap(0.0, 0.0) == 0.0
    assert lambda_from_overlap(0.3, 0.3) == pytest.approx(0.3, rel=1e-15)
    with pytest.raises(ValueError):
        lambda_from_overlap(0.1, 0.2)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 10.0), st.floats(1e-6, 1 - 1e-9))
def test_lambda_consistency(kappa, eps):
    assert abs(lambda_from_overlap(kappa, kappa * eps ** 2) - kappa * eps ** 1.5) <= 1e-12 * max(kappa, 1)


def test_bifurcation_examples():
    s = bifurcation_sides(ModelParams(100, 1.0, 1.0 / 200))
    assert s.lhs == pytest.approx(0.495) and s.rhs == 0.5 and not s.bifurcated
    s = bifurcation_sides(ModelParams(100, 1.0, 1.1 / 200))
    assert s.lhs == pytest.approx(0.5445) and s.bifurcated
    s = bifurcation_sides(ModelParams(100, 1.0, 1.0 / 198))
    assert abs(s.lhs - s.rhs) < 1e-12 and not s.bifurcated


def test_bifurcation_equivalence_random():
    rng = np.random.default_rng(10)
    for _ in range(1000):
        N = int(rng.integers(2, 2000))
        kappa = 10 ** rng.uniform(-4, 0)
        eta = kappa * 10 ** rng.uniform(-4, np.log10(0.2))
        p = ModelParams(N, 10 ** rng.uniform(-2, 1), kappa, eta, lambda_from_overlap(kappa, eta))
        s = bifurcation_sides(p)
        d = derive(p)
        alt = d.R ** 2 * (d.k_small - d.n_small) - d.OmegaPrime / 2
        diff = s.lhs - s.rhs
        assert abs(alt - diff) <= 1e-10 * max(abs(s.lhs), abs(s.rhs), 1e-300)
        if abs(diff) > 1e-10 * max(abs(s.lhs), abs(s.rhs)):
            assert (alt > 0) == s.bifurcated


def test_critical_kappa_examples():
    assert abs(critical_kappa(100, 1.0) - 1 / 198) < 1e-12
    assert critical_kappa(2, 1.0) == 0.5
    expected = 1 / 198 + 3e-4 + 2e-4
    assert critical_kappa(100, 1.0, 1e-4, 1e-4) == pytest.approx(expected, rel=1e-12)


def test_critical_kappa_root_scan():
    # independent oracle: locate the sign change of lhs - rhs by bisection
    N, Omega, eta, Lam = 100, 1.0, 1e-4, 1e-4

    def gap(k):
        s = bifurcation_sides(ModelParams(N, Omega, k, eta, Lam))
        return s.lhs - s.rhs

    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if gap(mid) < 0 else (lo, mid)
    kc = critical_kappa(N, Omega, eta, Lam)
    assert kc == pytest.approx(lo, abs=1e-15)
    s = bifurcation_sides(ModelParams(N, Omega, kc, eta, Lam))
    assert abs(s.lhs - s.rhs) <= 1e-12 * max(abs(s.lhs), 1)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 10_000), st.floats(-5, 5), st.floats(0, 0.1), st.floats(0, 0.1))
def test_critical_kappa_is_root(N, Omega, eta, Lam):
    kc = critical_kappa(N, Omega, eta, Lam)
    if kc < 0:
        return
    s = bifurcation_sides(ModelParams(N, Omega, kc, eta, Lam))
    assert abs(s.lhs - s.rhs) <= 1e-12 * max(abs(s.lhs), 1)


def test_trap_geometry():
    t = TrapGeometry(2.0, 3.0, 0.4, 0.01)
    assert t.b == 2.0 * 9.0 / 8
    assert t.d == pytest.approx(1 / math.sqrt(6))
    assert t.V0 == pytest.approx(4 * math.pi * 0.01 / 2)
    assert 0 < t.epsilon < 1
    with pytest.raises(ValueError):
        TrapGeometry(1.0, 1.0, 0.0, 0.1)


def test_overlap_at_q0_equal_d():
    t = TrapGeometry(1.0, 1.0, 1.0, 0.05)
    assert t.epsilon == pytest.approx(math.exp(-1))
    p = from_trap(t, 10)
    assert p.eta == pytest.approx(p.kappa * math.exp(-2))
    with pytest.raises(ValueError):
        from_trap(t, 10, max_overlap=0.3)


def test_kappa_against_3d_quadrature():
    t = TrapGeometry(1.0, 1.0, 2.0, 0.1)
    x, w = np.polynomial.hermite.hermgauss(40)
    # u^4 = pi^-3 exp(-2 r^2) for the unit-width Gaussian; the Hermite weight
    # exp(-|x|^2) is divided back out of the integrand
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    W = w[:, None, None] * w[None, :, None] * w[None, None, :]
    integrand = np.pi ** -3 * np.exp(-2 * (X ** 2 + Y ** 2 + Z ** 2)) * np.exp(X ** 2 + Y ** 2 + Z ** 2)
    quartic = float(np.sum(W * integrand))
    assert from_trap(t, 10).kappa == pytest.approx(0.5 * t.V0 * quartic, rel=1e-8)


def test_definition_identities():
    for q0 in (1.2, 1.7, 2.5):
        t = TrapGeometry(1.3, 0.8, q0, 0.02)
        p = from_trap(t, 50)
        assert p.eta / p.kappa == pytest.approx(t.epsilon ** 2, rel=1e-12)
        assert p.Lambda / p.kappa == pytest.approx(t.epsilon ** 1.5, rel=1e-12)


def test_tunneling_against_adaptive_quadrature():
    t = TrapGeometry(1.0, 1.0, 1.5, 0.02)
    d, q0, m, b = t.d, t.q0, t.mass, t.b

    def g(x, c):
        return math.pi ** -0.25 / math.sqrt(d) * math.exp(-((x - c) ** 2) / (2 * d * d))

    h = 1e-4

    def integrand(x):
        second = (g(x + h, q0) - 2 * g(x, q0) + g(x - h, q0)) / h ** 2
        return g(x, -q0) * (-second / (2 * m) + b / q0 ** 2 * (x * x - q0 * q0) ** 2 * g(x, q0))

    oracle, _ = quad(integrand, -20, 20, epsabs=1e-13, limit=200)
    assert model.tunneling_x(t) == pytest.approx(oracle, abs=1e-7)


def test_epsilon_decreases_with_q0():
    eps = [TrapGeometry(1.0, 1.0, q0, 0.05).epsilon for q0 in np.linspace(0.9, 3.0, 20)]
    assert np.all(np.diff(eps) < 0)


def test_effective_tunneling_shift_linear_in_N():
    t = TrapGeometry(1.0, 1.0, 1.6, 0.05)
    shifts = []
    for N in (10, 20, 40, 80):
        p = from_trap(t, N)
        shifts.append(p.OmegaPrime - p.Omega)
        assert shifts[-1] == pytest.approx(4 * p.Lambda * (N - 1), rel=1e-12)
    per_atom = np.array(shifts) / (np.array([10, 20, 40, 80]) - 1)
    np.testing.assert_allclose(per_atom, per_atom[0], rtol=1e-12)


def test_resolve_lambda():
    assert model.resolve_lambda(10, 1.0, 0.02, 0.0002).Lambda == pytest.approx(6.32455532e-4)
    assert model.resolve_lambda(10, 1.0, 0.02, 0.0002, 0.0).Lambda == 0.0
