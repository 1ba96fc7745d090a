import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpgpml.exact_solutions import (
    ExactSolution,
    GreensParams,
    SingularityError,
    acoustic_exact_2d,
    elastic_exact_2d,
    elastic_stress_2d,
    maxwell_exact_2d,
    plane_wave_2d,
)
from dpgpml.special_functions import hankel1

P = GreensParams()
POINTS = [(1.3, 0.4), (0.7, 1.9), (2.2, 2.5)]


def _d(f, x, y, h, axis):
    if axis == 0:
        return (f(x + h, y) - f(x - h, y)) / (2 * h)
    return (f(x, y + h) - f(x, y - h)) / (2 * h)


def _lap(f, x, y, h):
    return (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4 * f(x, y)) / h**2


def _orders(residual, scale):
    """Residuals at h and h/2 relative to scale, and their ratio."""
    h = 2e-3
    r1, r2 = abs(residual(h)) / scale, abs(residual(h / 2)) / scale
    return r1, r2, r1 / r2


def test_wavenumbers():
    assert P.k0 == pytest.approx(6 * math.pi)
    assert P.kp == pytest.approx(3 * math.pi)
    assert P.ks == pytest.approx(6 * math.pi)
    assert P.kp < P.ks


def test_acoustic_pressure_formula():
    x, y = 1.1, 0.6
    p, _, _ = acoustic_exact_2d(x, y)
    assert p == pytest.approx(0.25j * hankel1(0, 6 * math.pi * math.hypot(x, y)), rel=1e-15)


@pytest.mark.parametrize("x,y", POINTS)
def test_acoustic_velocity_fd(x, y):
    pf = lambda a, b: acoustic_exact_2d(a, b)[0]
    _, ux, uy = acoustic_exact_2d(x, y)
    h = 1e-6
    # -i w u = grad p
    for comp, axis in ((ux, 0), (uy, 1)):
        fd = _d(pf, x, y, h, axis) / (-1j * P.omega)
        assert abs(fd - comp) / abs(comp) < 1e-6


@pytest.mark.parametrize("x,y", POINTS)
def test_helmholtz_residual_second_order(x, y):
    pf = lambda a, b: acoustic_exact_2d(a, b)[0]
    scale = P.omega**2 * abs(pf(x, y))
    r1, r2, ratio = _orders(lambda h: -_lap(pf, x, y, h) - P.omega**2 * pf(x, y), scale)
    assert r2 < 1e-2
    assert 3.5 < ratio < 4.5


def test_maxwell_ey_vanishes_on_x_axis():
    ex, ey, _ = maxwell_exact_2d(np.array([0.5, 1.7, 2.9]), np.zeros(3))
    assert np.max(np.abs(ey)) < 1e-15
    assert np.min(np.abs(ex)) > 0


@pytest.mark.parametrize("x,y", POINTS)
def test_maxwell_e_against_fd_of_g(x, y):
    k = P.k0
    g = lambda a, b: 0.25j * hankel1(0, k * math.hypot(a, b))
    h = 1e-4
    gxx = (g(x + h, y) - 2 * g(x, y) + g(x - h, y)) / h**2
    gxy = (g(x + h, y + h) - g(x + h, y - h) - g(x - h, y + h) + g(x - h, y - h)) / (4 * h * h)
    pref = 1j * P.omega * P.mu0 / k**2
    ex, ey, _ = maxwell_exact_2d(x, y)
    assert abs(pref * (k**2 * g(x, y) + gxx) - ex) / abs(ex) < 1e-5
    assert abs(pref * gxy - ey) / max(abs(ey), abs(ex)) < 1e-5


@pytest.mark.parametrize("x,y", POINTS)
def test_maxwell_curl_e_matches_h(x, y):
    ex = lambda a, b: maxwell_exact_2d(a, b)[0]
    ey = lambda a, b: maxwell_exact_2d(a, b)[1]
    hz = maxwell_exact_2d(x, y)[2]
    h = 1e-6
    curl = _d(ey, x, y, h, 0) - _d(ex, x, y, h, 1)
    assert abs(curl - 1j * P.omega * P.mu0 * hz) / abs(hz * P.omega) < 1e-6


@pytest.mark.parametrize("x,y", POINTS)
def test_maxwell_ampere_residual_second_order(x, y):
    hf = lambda a, b: maxwell_exact_2d(a, b)[2]
    ex, ey, _ = maxwell_exact_2d(x, y)
    scale = P.omega * max(abs(ex), abs(ey))
    # curl of the scalar H is (d_y H, -d_x H); curl H + i w eps0 E = 0
    res = lambda h: abs(_d(hf, x, y, h, 1) + 1j * P.omega * P.eps0 * ex) + abs(
        -_d(hf, x, y, h, 0) + 1j * P.omega * P.eps0 * ey
    )
    r1, r2, ratio = _orders(res, scale)
    assert r2 < 1e-3
    assert 3.5 < ratio < 4.5


def _navier_residual(x, y, h, drop_uy_factor_i=False):
    lam, mu, rho, w = P.lam, P.mu, P.rho0, P.omega
    u = lambda a, b, c: elastic_exact_2d(a, b, P, drop_uy_factor_i=drop_uy_factor_i)[c]
    out = []
    for c in (0, 1):
        o = 1 - c
        lap = _lap(lambda a, b: u(a, b, c), x, y, h)
        # d_c (div u) = d_cc u_c + d_c d_o u_o
        dcc = (u(x + h * (c == 0), y + h * (c == 1), c) - 2 * u(x, y, c)
               + u(x - h * (c == 0), y - h * (c == 1), c)) / h**2
        dco = (u(x + h, y + h, o) - u(x + h, y - h, o) - u(x - h, y + h, o) + u(x - h, y - h, o)) / (4 * h * h)
        out.append(mu * lap + (lam + mu) * (dcc + dco) + rho * w**2 * u(x, y, c))
    return out


@pytest.mark.parametrize("x,y", POINTS)
def test_navier_residual_second_order(x, y):
    ux, uy = elastic_exact_2d(x, y)
    scale = P.rho0 * P.omega**2 * max(abs(ux), abs(uy))
    res = lambda h: max(abs(r) for r in _navier_residual(x, y, h))
    r1, r2, ratio = _orders(res, scale)
    assert r2 < 1e-2
    assert 3.5 < ratio < 4.5


def test_drop_uy_factor_i_fails_navier():
    x, y = 1.3, 0.4
    ux, uy = elastic_exact_2d(x, y, P, drop_uy_factor_i=True)
    scale = P.rho0 * P.omega**2 * max(abs(ux), abs(uy))
    r = max(abs(v) for v in _navier_residual(x, y, 1e-3, drop_uy_factor_i=True)) / scale
    assert r > 0.1


def test_stress_is_hooke_of_fd_strain():
    x, y, h = 1.3, 0.4, 1e-6
    u = lambda a, b, c: elastic_exact_2d(a, b)[c]
    exx = _d(lambda a, b: u(a, b, 0), x, y, h, 0)
    eyy = _d(lambda a, b: u(a, b, 1), x, y, h, 1)
    exy = 0.5 * (_d(lambda a, b: u(a, b, 0), x, y, h, 1) + _d(lambda a, b: u(a, b, 1), x, y, h, 0))
    tr = exx + eyy
    sxx, syy, sxy = elastic_stress_2d(x, y)
    ref = (P.lam * tr + 2 * P.mu * exx, P.lam * tr + 2 * P.mu * eyy, 2 * P.mu * exy)
    for a, b in zip((sxx, syy, sxy), ref):
        assert abs(a - b) / abs(sxx) < 1e-6


def test_elastic_uy_vanishes_on_axes():
    t = np.array([0.3, 1.1, 2.8])
    assert np.max(np.abs(elastic_exact_2d(t, 0 * t)[1])) < 1e-15
    assert np.max(np.abs(elastic_exact_2d(0 * t, t)[1])) < 1e-15


def test_singularity():
    for f in (acoustic_exact_2d, maxwell_exact_2d, elastic_exact_2d):
        with pytest.raises(SingularityError):
            f(0.0, 0.0)
    with pytest.raises(SingularityError):
        acoustic_exact_2d(np.array([1.0, 0.0]), np.array([1.0, 0.0]))


def test_plane_wave_satisfies_first_order_system():
    x, y, w, t, h = 0.3, 0.8, math.pi, math.pi / 7, 1e-6
    p, ux, uy = plane_wave_2d(x, y, w, t)
    pf = lambda a, b: plane_wave_2d(a, b, w, t)[0]
    assert abs(-1j * w * ux - _d(pf, x, y, h, 0)) < 1e-7
    assert abs(-1j * w * uy - _d(pf, x, y, h, 1)) < 1e-7


def test_exact_solution_traces():
    ex = ExactSolution("acoustics_A")
    f = ex.fields(1.2, 0.5)
    assert ex.trace("un_hat", 0, 1.2, 0.5, (1.0, 0.0)) == f[("u", 0)]
    assert ex.trace("un_hat", 0, 1.2, 0.5, (0.0, 1.0)) == f[("u", 1)]
    mw = ExactSolution("maxwell2d")
    g = mw.fields(1.2, 0.5)
    # tangent of a +x normal is +y
    assert mw.trace("E_hat", 0, 1.2, 0.5, (1.0, 0.0)) == g[("E", 1)]
    assert mw.trace("E_hat", 0, 1.2, 0.5, (0.0, 1.0)) == -g[("E", 0)]
    with pytest.raises(ValueError):
        ExactSolution("maxwell2d", plane_wave_angle=0.1)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=5.0, max_value=50.0), st.floats(min_value=0.0, max_value=math.pi / 2))
def test_cylindrical_spreading(r, theta):
    c, s = math.cos(theta), math.sin(theta)
    for f in (acoustic_exact_2d, elastic_exact_2d, maxwell_exact_2d):
        if f is maxwell_exact_2d and theta < math.pi / 6:
            # the Maxwell source radiates as an x-directed dipole: no far field on its axis
            continue
        a = np.linalg.norm(np.abs(np.array(f(r * c, r * s))))
        b = np.linalg.norm(np.abs(np.array(f(2 * r * c, 2 * r * s))))
        assert 0.6 <= b / a <= 0.85
