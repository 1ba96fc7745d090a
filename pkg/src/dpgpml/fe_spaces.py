"""Reference-square shape functions, edge trace bases and Gauss-Legendre rules.

Element fields and broken test functions use tensor products of normalized
Legendre polynomials on [-1, 1]^2. Continuous skeleton traces use the
Lobatto family (two vertex hats plus integrated-Legendre bubbles) so vertex
values can be shared between edges; discontinuous traces use plain Legendre
polynomials per edge.

With field degree p the default trace degrees are p + 1 for continuous
traces and p for discontinuous ones, which keeps the L2 field error at the
best-approximation order p + 1. Both are adjustable through SpaceSpec.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg

MAX_GAUSS_POINTS = 32


def legendre_1d(degree, s):
    """Values and derivatives of sqrt((2k+1)/2) P_k(s), k = 0..degree.

    Returns two arrays of shape (degree + 1, len(s)).
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    vals = np.zeros((degree + 1, s.size))
    ders = np.zeros((degree + 1, s.size))
    vals[0] = 1.0
    if degree >= 1:
        vals[1] = s
        ders[1] = 1.0
    for k in range(2, degree + 1):
        vals[k] = ((2 * k - 1) * s * vals[k - 1] - (k - 1) * vals[k - 2]) / k
        ders[k] = ders[k - 2] + (2 * k - 1) * vals[k - 1]
    scale = np.sqrt((2.0 * np.arange(degree + 1) + 1.0) / 2.0)[:, None]
    return vals * scale, ders * scale


def lobatto_1d(degree, s):
    """H1 hierarchical edge functions: (1-s)/2, (1+s)/2, then bubbles k = 2..degree.

    Bubble k is (P_k - P_{k-2}) / sqrt(2 (2k - 1)), which vanishes at s = +-1.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.zeros((degree + 1, s.size))
    out[0] = 0.5 * (1.0 - s)
    if degree >= 1:
        out[1] = 0.5 * (1.0 + s)
    if degree >= 2:
        p = np.zeros((degree + 1, s.size))
        p[0] = 1.0
        p[1] = s
        for k in range(2, degree + 1):
            p[k] = ((2 * k - 1) * s * p[k - 1] - (k - 1) * p[k - 2]) / k
        for k in range(2, degree + 1):
            out[k] = (p[k] - p[k - 2]) / np.sqrt(2.0 * (2 * k - 1))
    return out


def scalar_basis(degree, xi, eta):
    """Tensor Legendre basis of Q_degree at points (xi, eta).

    Returns ``values`` of shape (n, npts) and ``grads`` of shape (2, n, npts)
    with n = (degree + 1)^2, ordered with the eta index fastest.
    """
    vx, dx = legendre_1d(degree, xi)
    vy, dy = legendre_1d(degree, eta)
    n = (degree + 1) ** 2
    values = (vx[:, None, :] * vy[None, :, :]).reshape(n, -1)
    gx = (dx[:, None, :] * vy[None, :, :]).reshape(n, -1)
    gy = (vx[:, None, :] * dy[None, :, :]).reshape(n, -1)
    return values, np.stack([gx, gy])


def edge_trace_basis(kind, degree, s):
    """Edge functions of a skeleton trace on the reference edge [-1, 1].

    ``continuous``: 2 vertex functions followed by degree - 1 bubbles.
    ``discontinuous``: degree + 1 normalized Legendre polynomials.
    """
    if kind == "continuous":
        if degree < 1:
            raise ValueError("continuous traces need degree >= 1")
        return lobatto_1d(degree, s)
    if kind == "discontinuous":
        return legendre_1d(degree, s)[0]
    raise ValueError(f"unknown trace kind {kind!r}")


def trace_dofs_per_edge(kind, degree):
    return degree + 1


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (npts, 2)
    weights: np.ndarray  # (npts,)
    m: int


@lru_cache(maxsize=None)
def gauss_1d(m):
    if not 1 <= m <= MAX_GAUSS_POINTS:
        raise ValueError(f"number of Gauss points must be in [1, {MAX_GAUSS_POINTS}], got {m}")
    s, w = npleg.leggauss(m)
    return s, w


def gauss_rule(m):
    """Tensor Gauss-Legendre rule with m points per direction on [-1, 1]^2."""
    s, w = gauss_1d(m)
    xi, eta = np.meshgrid(s, s, indexing="ij")
    pts = np.column_stack([xi.ravel(), eta.ravel()])
    wts = np.outer(w, w).ravel()
    return QuadratureRule(pts, wts, m)


# Reference edge parametrizations for local edges (bottom, right, top, left),
# each running in the direction of increasing global coordinate.
def edge_to_reference(k, s):
    s = np.asarray(s, dtype=float)
    one = np.ones_like(s)
    if k == 0:
        return s, -one
    if k == 1:
        return one, s
    if k == 2:
        return s, one
    if k == 3:
        return -one, s
    raise ValueError(k)


# element-local vertex numbering (ll, lr, ur, ul) at the start/end of each edge
EDGE_VERTICES = ((0, 1), (1, 2), (3, 2), (0, 3))


@dataclass
class SpaceSpec:
    """Polynomial degrees of one discretization."""

    p: int = 4
    dp: int = 1
    extra_quadrature: int = 5
    flux_degree: int = None  # discontinuous trace degree; None means p
    cont_degree: int = None  # continuous trace degree; None means p + 1

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("trial degree p must be >= 1")
        if self.dp < 1:
            raise ValueError("test enrichment dp must be >= 1")
        if self.flux < 0 or self.cont < 1:
            raise ValueError("need flux_degree >= 0 and cont_degree >= 1")

    @property
    def cont(self):
        return self.p + 1 if self.cont_degree is None else self.cont_degree

    @property
    def flux(self):
        return self.p if self.flux_degree is None else self.flux_degree

    def trace_degree(self, kind):
        return self.cont if kind == "continuous" else self.flux

    @property
    def test_degree(self):
        return self.p + self.dp

    @property
    def n_field(self):
        return (self.p + 1) ** 2

    @property
    def n_test(self):
        return (self.p + self.dp + 1) ** 2

    @property
    def quadrature_points(self):
        return self.p + self.dp + self.extra_quadrature

    def n_trace_element(self, kind):
        # unique element dofs of one trace variable: 4 vertices + bubbles, or 4 edges of modes
        if kind == "continuous":
            return 4 * self.cont
        return 4 * (self.flux + 1)


class ReferenceElement:
    """Basis tables on the reference square and its four edges for one SpaceSpec."""

    def __init__(self, spec: SpaceSpec, m=None):
        self.spec = spec
        m = spec.quadrature_points if m is None else m
        self.m = m
        rule = gauss_rule(m)
        self.points = rule.points
        self.weights = rule.weights
        xi, eta = rule.points.T
        self.phi, _ = scalar_basis(spec.p, xi, eta)
        self.psi, self.dpsi = scalar_basis(spec.test_degree, xi, eta)

        s, w = gauss_1d(m)
        self.edge_s = s
        self.edge_w = w
        self.edge_psi = []
        for k in range(4):
            ex, ey = edge_to_reference(k, s)
            vals, _ = scalar_basis(spec.test_degree, ex, ey)
            self.edge_psi.append(vals)
        self.edge_cont = edge_trace_basis("continuous", spec.cont, s)
        self.edge_disc = edge_trace_basis("discontinuous", spec.flux, s)
        self.cont_gather = self._continuous_gather(spec.cont)

    @staticmethod
    def _continuous_gather(p):
        """Matrix mapping unique element dofs of a continuous trace to per-edge functions.

        Per-edge layout: edge k holds (start vertex, end vertex, bubbles 2..p).
        Unique layout: 4 vertex dofs, then bubbles edge by edge.
        """
        per_edge = p + 1
        P = np.zeros((4 * per_edge, 4 * p))
        for k, (a, b) in enumerate(EDGE_VERTICES):
            P[k * per_edge + 0, a] = 1.0
            P[k * per_edge + 1, b] = 1.0
            for j in range(p - 1):
                P[k * per_edge + 2 + j, 4 + k * (p - 1) + j] = 1.0
        return P
