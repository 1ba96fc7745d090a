"""Bessel functions J_n, Y_n and Hankel functions H_n^(1) for n = 0, 1, 2.

Real arguments only. Small arguments use the ascending power series; large
arguments use the Hankel asymptotic expansion truncated at its smallest term.
The two branches meet at ``CROSSOVER``: at that point the series has lost
under 1e-12 absolute to cancellation and the asymptotic expansion's
smallest term is near 1e-12.

All functions accept scalars or numpy arrays.
"""

import math

import numpy as np

CROSSOVER = 12.0
SUPPORTED_ORDERS = (0, 1, 2)

_EULER_GAMMA = 0.57721566490153286061
_SERIES_TERMS = 80
_ASYMPTOTIC_TERMS = 60


def _check_order(order):
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported Bessel order {order!r}; expected one of {SUPPORTED_ORDERS}")


def _digamma_int(k):
    # psi(k) for positive integer k
    return -_EULER_GAMMA + sum(1.0 / j for j in range(1, k))


# Series coefficients, computed once. J_n(x) = (x/2)^n sum_k a_k (-(x/2)^2)^k,
# a_k = 1 / (k! (n+k)!). The logarithmic part of Y_n reuses a_k with
# weights psi(k+1) + psi(n+k+1).
_J_COEFFS = {}
_Y_COEFFS = {}
for _n in SUPPORTED_ORDERS:
    _a = np.array([1.0 / (math.factorial(k) * math.factorial(_n + k)) for k in range(_SERIES_TERMS)])
    _J_COEFFS[_n] = _a
    _Y_COEFFS[_n] = _a * np.array(
        [_digamma_int(k + 1) + _digamma_int(_n + k + 1) for k in range(_SERIES_TERMS)]
    )


def _poly_in_z(coeffs, z):
    # sum_k c_k z^k, Horner; z may be an array
    out = np.zeros_like(z)
    for c in coeffs[::-1]:
        out = out * z + c
    return out


def _series_j(order, x):
    half = 0.5 * x
    return half**order * _poly_in_z(_J_COEFFS[order], -(half * half))


def _series_y(order, x):
    half = 0.5 * x
    z = -(half * half)
    jn = half**order * _poly_in_z(_J_COEFFS[order], z)
    out = (2.0 / math.pi) * np.log(half) * jn
    out -= (1.0 / math.pi) * half**order * _poly_in_z(_Y_COEFFS[order], z)
    for k in range(order):
        out -= (1.0 / math.pi) * math.factorial(order - k - 1) / math.factorial(k) * half ** (2 * k - order)
    return out


def _asymptotic_coeffs(order):
    mu = 4.0 * order * order
    coeffs = [1.0]
    for k in range(1, _ASYMPTOTIC_TERMS):
        coeffs.append(coeffs[-1] * (mu - (2 * k - 1) ** 2) / (k * 8.0))
    return np.array(coeffs)


_ASY_COEFFS = {n: _asymptotic_coeffs(n) for n in SUPPORTED_ORDERS}


def _asymptotic_h1(order, x):
    """H_n^(1)(x) ~ sqrt(2/(pi x)) e^{i(x - n pi/2 - pi/4)} sum_k i^k a_k / x^k."""
    x = np.asarray(x, dtype=float)
    coeffs = _ASY_COEFFS[order]
    total = np.zeros(x.shape, dtype=complex)
    best = np.full(x.shape, np.inf)
    done = np.zeros(x.shape, dtype=bool)
    term_scale = np.ones(x.shape)
    for k, a in enumerate(coeffs):
        mag = np.abs(a) * term_scale
        # stop each point once its terms start growing
        grow = mag > best
        done |= grow
        active = ~done
        if not active.any():
            break
        total[active] += (1j**k) * a * term_scale[active]
        best = np.where(active, mag, best)
        term_scale = term_scale / x
    phase = x - order * math.pi / 2.0 - math.pi / 4.0
    return np.sqrt(2.0 / (math.pi * x)) * np.exp(1j * phase) * total


def bessel_j(order, x):
    """J_n(x) for real x >= 0 (negative x is accepted through parity)."""
    _check_order(order)
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    small = ax < CROSSOVER
    out = np.empty(ax.shape)
    if small.any():
        out[small] = _series_j(order, ax[small])
    if (~small).any():
        out[~small] = _asymptotic_h1(order, ax[~small]).real
    if order % 2:
        out = np.where(x < 0, -out, out)
    return out[()] if out.ndim == 0 else out


def bessel_y(order, x):
    """Y_n(x) for real x > 0."""
    _check_order(order)
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("Y_n(x) requires x > 0")
    small = x < CROSSOVER
    out = np.empty(x.shape)
    if small.any():
        out[small] = _series_y(order, x[small])
    if (~small).any():
        out[~small] = _asymptotic_h1(order, x[~small]).imag
    return out[()] if out.ndim == 0 else out


def bessel_jy(order, x, need_y=True):
    """Return ``(J_n(x), Y_n(x))``; with ``need_y=False`` the second entry is None.

    ``x = 0`` is allowed only when Y is not requested.
    """
    _check_order(order)
    x = np.asarray(x, dtype=float)
    if need_y:
        if np.any(~(x > 0)):
            raise ValueError("Y_n(x) requires x > 0")
    elif np.any(x < 0):
        raise ValueError("bessel_jy expects x >= 0")
    j = bessel_j(order, x)
    return j, (bessel_y(order, x) if need_y else None)


def hankel1(order, x):
    """H_n^(1)(x) = J_n(x) + i Y_n(x) for real x > 0."""
    _check_order(order)
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("H_n^(1)(x) requires x > 0")
    small = x < CROSSOVER
    out = np.empty(x.shape, dtype=complex)
    if small.any():
        xs = x[small]
        out[small] = _series_j(order, xs) + 1j * _series_y(order, xs)
    if (~small).any():
        out[~small] = _asymptotic_h1(order, x[~small])
    return out[()] if out.ndim == 0 else out


def hankel1_012(x):
    """H_0, H_1, H_2 of the first kind at once; H_2 via the three-term recurrence."""
    h0 = hankel1(0, x)
    h1 = hankel1(1, x)
    h2 = 2.0 * h1 / np.asarray(x, dtype=float) - h0
    return h0, h1, h2
