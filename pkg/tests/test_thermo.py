import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st
from scipy.optimize import brentq

from common.errors import NegativeChi, SonicProximity, SupersonicChi
from thermo.coefficients import background_ellipticity, coefficients, energy, mach, pressure
from thermo.density import (
    chi_from_gradient,
    chi_max,
    chi_max_of,
    h,
    max_density,
    solve_density,
    sonic_density,
)


def _states(stream, n=100, seed=1):
    """隨機次音速狀態 (psi, p1, p2)"""
    rng = np.random.default_rng(seed)
    psi = rng.uniform(0.0, 0.5, n)
    cmax = chi_max(psi, stream)
    chi = rng.uniform(0.05, 0.8, n) * cmax
    angle = rng.uniform(0.0, 2.0 * np.pi, n)
    r = np.sqrt(2.0 * chi)
    return psi, r * np.cos(angle), r * np.sin(angle)


def _bundle(stream, psi, p1, p2):
    density = solve_density(chi_from_gradient(p1, p2), psi, stream)
    return coefficients(psi, (p1, p2), density, stream), density


# ----------------------------
# 密度反解
# ----------------------------
def test_background_density(stream):
    d = solve_density(0.005, 0.3, stream)
    assert float(d.rho) == pytest.approx(1.0, abs=1e-12)
    assert float(d.rho_chi) == pytest.approx(-1.0 / 1.39, abs=1e-10)
    assert float(d.rho_psi) == 0.0
    assert d.min_margin > 0.0


def test_stagnation_density_matches_bisection(stream):
    A, B, g = 3.5, 3.505, 1.4
    oracle = brentq(lambda r: h(r, A, B, g), sonic_density(A, B, g), 2.0, xtol=1e-15)
    d = solve_density(0.0, 0.1, stream)
    assert float(d.rho) == pytest.approx(oracle, abs=1e-10)
    assert float(d.rho) == pytest.approx(max_density(A, B, g), abs=1e-10)


def test_chi_max_value(stream):
    assert chi_max_of(3.5, 3.505, 1.4) == pytest.approx(0.23642, rel=1e-3)
    assert float(chi_max(0.2, stream)) == pytest.approx(chi_max_of(3.5, 3.505, 1.4), rel=1e-14)


def test_supersonic_chi(stream):
    cmax = chi_max_of(3.5, 3.505, 1.4)
    with pytest.raises(SupersonicChi) as err:
        solve_density(np.array([0.01, 1.01 * cmax, 0.02]), 0.1, stream)
    assert err.value.indices == [1]


def test_sonic_band_is_clipped(stream):
    cmax = chi_max_of(3.5, 3.505, 1.4)
    with pytest.warns(SonicProximity):
        d = solve_density(cmax * (1.0 + 5e-13), 0.1, stream)
    assert float(d.rho) == pytest.approx(sonic_density(3.5, 3.505, 1.4), rel=1e-5)


def test_negative_chi(stream):
    with pytest.raises(NegativeChi):
        solve_density(-1e-3, 0.1, stream)


@given(st.floats(0.0, 0.999))
@settings(max_examples=80, deadline=None)
def test_density_inverts_bernoulli(stream, frac):
    cmax = chi_max_of(3.5, 3.505, 1.4)
    chi = frac * cmax
    rho = float(solve_density(chi, 0.1, stream).rho)
    assert h(rho, 3.5, 3.505, 1.4) == pytest.approx(chi, abs=1e-12)
    assert sonic_density(3.5, 3.505, 1.4) <= rho <= max_density(3.5, 3.505, 1.4) + 1e-15


def test_density_derivatives_match_differences(sheared_stream):
    psi, p1, p2 = _states(sheared_stream)
    chi = chi_from_gradient(p1, p2)
    d = solve_density(chi, psi, sheared_stream)
    hc = 1e-7 * chi
    up = solve_density(chi + hc, psi, sheared_stream).rho
    down = solve_density(chi - hc, psi, sheared_stream).rho
    np.testing.assert_allclose((up - down) / (2 * hc), d.rho_chi, rtol=1e-5)
    hp = 1e-4
    up = solve_density(chi, psi + hp, sheared_stream).rho
    down = solve_density(chi, psi - hp, sheared_stream).rho
    fd = (up - down) / (2 * hp)
    scale = np.max(np.abs(d.rho_psi))
    assert np.max(np.abs(fd - d.rho_psi)) <= 1e-5 * scale


# ----------------------------
# 係數
# ----------------------------
def test_background_coefficients(stream):
    co, _ = _bundle(stream, np.array([0.3]), np.array([0.0]), np.array([0.1]))
    assert float(co.a11) == pytest.approx(1.39, rel=1e-12)
    assert float(co.a22) == pytest.approx(1.4, rel=1e-12)
    assert float(co.a12) == 0.0
    assert float(co.F) == 0.0


def test_background_ellipticity(stream):
    assert background_ellipticity(stream) == pytest.approx(1.39, rel=1e-12)


def test_ellipticity_identity(sheared_stream):
    psi, p1, p2 = _states(sheared_stream)
    co, d = _bundle(sheared_stream, psi, p1, p2)
    A = sheared_stream.A(psi)
    K = 0.4 * A * d.rho**2.4
    expected = K * (K - (p1**2 + p2**2))
    np.testing.assert_allclose(co.determinant, expected, rtol=1e-10)
    assert np.all(co.determinant > 0.0)


def _fd_check(stream, which: str, h: float, hp: float = 1e-5):
    psi, p1, p2 = _states(stream)

    def field(ps, q1, q2):
        co, _ = _bundle(stream, ps, q1, q2)
        return {"a22": co.a22, "F": co.F}[which]

    co, _ = _bundle(stream, psi, p1, p2)
    exact = {
        "psi": {"a22": co.da22_dpsi, "F": co.dF_dpsi},
        "p1": {"a22": co.da22_dgrad[0], "F": co.dF_dgrad[0]},
        "p2": {"a22": co.da22_dgrad[1], "F": co.dF_dgrad[1]},
    }
    fd = {
        "psi": (field(psi + hp, p1, p2) - field(psi - hp, p1, p2)) / (2 * hp),
        "p1": (field(psi, p1 + h, p2) - field(psi, p1 - h, p2)) / (2 * h),
        "p2": (field(psi, p1, p2 + h) - field(psi, p1, p2 - h)) / (2 * h),
    }
    for var in ("psi", "p1", "p2"):
        ex = exact[var][which]
        scale = max(float(np.max(np.abs(ex))), 1e-300)
        assert np.max(np.abs(fd[var] - ex)) <= 1e-5 * scale, (which, var)


def test_a22_partials(sheared_stream):
    _fd_check(sheared_stream, "a22", 1e-6)


def test_F_partials(sheared_stream):
    _fd_check(sheared_stream, "F", 1e-6)


def test_pressure_energy_mach(stream):
    rho = np.array([1.0])
    p = pressure(rho, np.array([0.2]), stream)
    assert float(p) == pytest.approx(1.0)
    assert float(energy(np.array([0.1]), np.array([0.0]), rho, p, 1.4)) == pytest.approx(0.005 + 2.5)
    assert float(mach(np.array([0.1]), np.array([0.0]), rho, p, 1.4)) == pytest.approx(0.1 / np.sqrt(1.4))
