"""Outgoing 2D Green's functions (point source at the origin).

Each evaluator takes coordinate arrays ``x, y`` of equal shape and returns
complex arrays of the same shape. The companion fields (acoustic velocity,
magnetic field) follow analytically from the first-order systems:

    acoustics:   -i w u - grad p = 0            ->  u = i grad p / w
    maxwell:     curl E - i w mu0 H = 0         ->  H = curl E / (i w mu0)

Second derivatives of radial Hankel functions use

    d_i d_j H_0(k r) = k^2 [ H_2(k r) x_i x_j / r^2 - H_1(k r) / (k r) delta_ij ].
"""

import math
from dataclasses import dataclass

import numpy as np

from .special_functions import hankel1_012


class SingularityError(ValueError):
    """Raised when a Green's function is evaluated at the source point."""


@dataclass(frozen=True)
class GreensParams:
    omega: float = 6.0 * math.pi
    eps0: float = 1.0
    mu0: float = 1.0
    lam: float = 2.0
    mu: float = 1.0
    rho0: float = 1.0

    @property
    def k0(self):
        return self.omega * math.sqrt(self.eps0 * self.mu0)

    @property
    def kp(self):
        return self.omega * math.sqrt(self.rho0 / (self.lam + 2.0 * self.mu))

    @property
    def ks(self):
        return self.omega * math.sqrt(self.rho0 / self.mu)


def _radius(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    if np.any(r == 0.0):
        raise SingularityError("Green's function evaluated at the source point r = 0")
    return x, y, r


def acoustic_exact_2d(x, y, params=GreensParams()):
    """Pressure p = (i/4) H_0(w r) and velocity u = (u_x, u_y)."""
    x, y, r = _radius(x, y)
    w = params.omega
    h0, h1, _ = hankel1_012(w * r)
    p = 0.25j * h0
    # grad p = -(i/4) w H_1(w r) x / r ; u = i grad p / w = H_1 x / (4 r)
    ux = 0.25 * h1 * x / r
    uy = 0.25 * h1 * y / r
    return p, ux, uy


def maxwell_exact_2d(x, y, params=GreensParams()):
    """In-plane electric field (E_x, E_y) and out-of-plane magnetic field H.

    E = (i w mu0 / k0^2) (k0^2 + d_xx, d_xy) g with g = (i/4) H_0(k0 r); since
    curl(grad d_x g) = 0, curl E = -i w mu0 d_y g and H = -d_y g.
    """
    x, y, r = _radius(x, y)
    k = params.k0
    h0, h1, h2 = hankel1_012(k * r)
    pref = 1j * params.omega * params.mu0 * 0.25j
    cx = x / r
    cy = y / r
    ex = pref * (h0 - h1 / (k * r) + h2 * cx * cx)
    ey = pref * (h2 * cx * cy)
    hz = 0.25j * k * h1 * cy
    return ex, ey, hz


def elastic_exact_2d(x, y, params=GreensParams(), drop_uy_factor_i=False):
    """Displacement (u_x, u_y) for a unit x-directed point load.

    u_i = (i / 4 mu) (Psi delta_ix + chi x_i x / r^2). ``drop_uy_factor_i=True``
    gives the variant with a real prefactor on u_y, which fails the Navier
    equation (kept for the FD oracle test).
    """
    x, y, r = _radius(x, y)
    kp, ks = params.kp, params.ks
    hs0, hs1, hs2 = hankel1_012(ks * r)
    _, hp1, hp2 = hankel1_012(kp * r)
    ratio2 = (kp / ks) ** 2
    psi = hs0 + ratio2 * hp1 / (kp * r) - hs1 / (ks * r)
    chi = hs2 - ratio2 * hp2
    pref = 1.0 / (4.0 * params.mu)
    ux = 1j * pref * (psi + chi * x * x / (r * r))
    uy = (1.0 if drop_uy_factor_i else 1j) * pref * chi * x * y / (r * r)
    return ux, uy


def elastic_stress_2d(x, y, params=GreensParams()):
    """Plane-strain stress (s_xx, s_yy, s_xy) of the elastic Green's function.

    Derivatives of u_i = (i/4mu)(Psi delta_ix + chi n_i n_x) follow from
    Psi'(r) and chi'(r), obtained from H_n' = H_{n-1} - n H_n / z.
    """
    x, y, r = _radius(x, y)
    kp, ks, mu, lam = params.kp, params.ks, params.mu, params.lam
    zs = ks * r
    zp = kp * r
    hs0, hs1, hs2 = hankel1_012(zs)
    hp0, hp1, hp2 = hankel1_012(zp)
    ratio2 = (kp / ks) ** 2
    chi = hs2 - ratio2 * hp2

    # d/dr of each piece
    d_hs0 = -ks * hs1
    # d/dr [H_1(z)/z] = k (H_1'(z) z - H_1) / z^2 = k (H_0 - 2 H_1 / z) / z = -k H_2 / z
    d_hs1_over = -ks * hs2 / zs
    d_hp1_over = -kp * hp2 / zp
    d_hs2 = ks * (hs1 - 2.0 * hs2 / zs)
    d_hp2 = kp * (hp1 - 2.0 * hp2 / zp)
    dpsi = d_hs0 + ratio2 * d_hp1_over - d_hs1_over
    dchi = d_hs2 - ratio2 * d_hp2

    nx = x / r
    ny = y / r
    c = 1j / (4.0 * mu)
    # u_x = c (Psi + chi nx^2), u_y = c chi nx ny
    # d_j n_i = (delta_ij - n_i n_j) / r
    dnx_dx = (1.0 - nx * nx) / r
    dnx_dy = -nx * ny / r
    dny_dx = -nx * ny / r
    dny_dy = (1.0 - ny * ny) / r
    dux_dx = c * (dpsi * nx + dchi * nx * nx * nx + chi * 2.0 * nx * dnx_dx)
    dux_dy = c * (dpsi * ny + dchi * ny * nx * nx + chi * 2.0 * nx * dnx_dy)
    duy_dx = c * (dchi * nx * nx * ny + chi * (dnx_dx * ny + nx * dny_dx))
    duy_dy = c * (dchi * ny * nx * ny + chi * (dnx_dy * ny + nx * dny_dy))
    div = dux_dx + duy_dy
    sxx = lam * div + 2.0 * mu * dux_dx
    syy = lam * div + 2.0 * mu * duy_dy
    sxy = mu * (dux_dy + duy_dx)
    return sxx, syy, sxy


def plane_wave_2d(x, y, omega, theta):
    """Acoustic plane wave p = exp(i w d.x), d = (cos t, sin t), with u = -d p."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx, dy = math.cos(theta), math.sin(theta)
    p = np.exp(1j * omega * (dx * x + dy * y))
    return p, -dx * p, -dy * p


class ExactSolution:
    """Field and trace values of a closed-form solution for one physics.

    ``fields(x, y)`` returns {(variable, component): values} for the element
    fields; ``trace(variable, component, x, y, normal)`` returns the skeleton
    trace for an edge with the given global unit normal (the tangent of an
    edge is the normal rotated by +90 degrees).
    """

    def __init__(self, physics, params=GreensParams(), plane_wave_angle=None):
        self.physics = physics
        self.params = params
        self.plane_wave_angle = plane_wave_angle
        if plane_wave_angle is not None and not physics.startswith("acoustics"):
            raise ValueError("plane-wave solutions are only available for acoustics")

    def fields(self, x, y):
        P = self.params
        if self.physics.startswith("acoustics"):
            if self.plane_wave_angle is not None:
                p, ux, uy = plane_wave_2d(x, y, P.omega, self.plane_wave_angle)
            else:
                p, ux, uy = acoustic_exact_2d(x, y, P)
            return {("p", 0): p, ("u", 0): ux, ("u", 1): uy}
        if self.physics == "maxwell2d":
            ex, ey, hz = maxwell_exact_2d(x, y, P)
            return {("E", 0): ex, ("E", 1): ey, ("H", 0): hz}
        if self.physics == "elasticity2d":
            ux, uy = elastic_exact_2d(x, y, P)
            sxx, syy, sxy = elastic_stress_2d(x, y, P)
            return {("u", 0): ux, ("u", 1): uy, ("sigma", 0): sxx, ("sigma", 1): syy, ("sigma", 2): sxy}
        raise ValueError(f"unknown physics {self.physics!r}")

    def trace(self, variable, component, x, y, normal):
        f = self.fields(x, y)
        nx, ny = normal
        if variable == "p_hat":
            return f[("p", 0)]
        if variable == "un_hat":
            return f[("u", 0)] * nx + f[("u", 1)] * ny
        if variable == "E_hat":
            return -f[("E", 0)] * ny + f[("E", 1)] * nx
        if variable == "H_hat":
            return f[("H", 0)]
        if variable == "u_hat":
            return f[("u", component)]
        if variable == "tn_hat":
            if component == 0:
                return f[("sigma", 0)] * nx + f[("sigma", 2)] * ny
            return f[("sigma", 2)] * nx + f[("sigma", 1)] * ny
        raise ValueError(f"unknown trace variable {variable!r}")
