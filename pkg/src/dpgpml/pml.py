"""Uniaxial complex coordinate stretch and the PML coefficient bundles.

The stretch in each Cartesian direction is

    x~ = x                                   for 0 < x <= l
    x~ = x + i (C / w) ((x - l) / (L - l))^n   for l < x <= L

so the Jacobian is diag(j1, j2) with j_k depending on x_k only. Coefficients
below are written for that diagonal case; ``dense_coefficients`` evaluates
the same tensors from full 2x2 (or embedded 3x3) matrices and is used as a
cross-check.
"""

from dataclasses import dataclass

import numpy as np

FORMULATIONS = ("acoustics_A", "acoustics_B", "maxwell2d", "elasticity2d")


class StretchDomainError(ValueError):
    pass


class SingularStretchError(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class StretchProfile:
    l: float = 2.0
    L: float = 3.0
    C: float = 5.0
    n: int = 2
    omega: float = 6.0 * np.pi

    def __post_init__(self):
        if not 0.0 < self.l < self.L:
            raise ValueError("need 0 < l < L")
        if self.C < 0:
            raise ValueError("stretch amplitude C must be >= 0")
        if self.n < 1:
            raise ValueError("stretch exponent n must be >= 1")


def stretch_point(profile, x, check=True):
    """Stretched coordinate and its derivative at real coordinate(s) x."""
    x = np.asarray(x, dtype=float)
    if check and np.any((x <= 0.0) | (x > profile.L * (1 + 1e-14))):
        raise StretchDomainError(f"coordinate outside (0, {profile.L}]")
    return _stretch(profile, x)


def _stretch(profile, x):
    x = np.asarray(x, dtype=float)
    t = np.clip((x - profile.l) / (profile.L - profile.l), 0.0, None)
    amp = profile.C / profile.omega
    xt = x + 1j * amp * t**profile.n
    dxt = 1.0 + 1j * amp * profile.n * t ** (profile.n - 1) / (profile.L - profile.l)
    inside = x <= profile.l
    xt = np.where(inside, x + 0j, xt)
    dxt = np.where(inside, 1.0 + 0j, dxt)
    return xt, dxt


@dataclass
class PmlPointData:
    j1: np.ndarray
    j2: np.ndarray

    @property
    def detJ(self):
        return self.j1 * self.j2


def jacobian_at(profile, x, y, check=True):
    """Diagonal Jacobian entries at points (x, y).

    ``check=False`` skips the domain test; points at x = 0 then map to the
    identity, which is what quadrature on the full-square mesh needs.
    """
    if check:
        stretch_point(profile, x)
        stretch_point(profile, y)
    _, j1 = _stretch(profile, x)
    _, j2 = _stretch(profile, y)
    return PmlPointData(np.asarray(j1, dtype=complex), np.asarray(j2, dtype=complex))


def _require_nonsingular(data):
    if np.any(data.j1 == 0) or np.any(data.j2 == 0):
        raise SingularStretchError("stretch Jacobian entry is zero")


def coefficients(formulation, data):
    """Coefficient bundle for one formulation as a dict of complex arrays.

    acoustics_A:  mass_u = diag(j1/j2, j2/j1) (= detJ^-1 J^T J), mass_p = detJ
    acoustics_B:  mass_u = diag(1/j2, 1/j1) (= detJ^-1 J), div_w = 1/detJ,
                  grad_w = diag(1/j1, 1/j2) (= J^-1), mass_p = 1
    maxwell2d:    mass_E = diag(j2/j1, j1/j2), mass_H = detJ
                  (in-plane / out-of-plane blocks of detJ J^-1 J^-T)
    elasticity2d: jac = (j1, j2), inv_det = 1/detJ, mass = detJ
    """
    _require_nonsingular(data)
    j1, j2 = data.j1, data.j2
    det = j1 * j2
    one = np.ones_like(det)
    if formulation == "acoustics_A":
        return {
            "mass_u": (j1 / j2, j2 / j1),
            "div_w": one,
            "grad_w": (one, one),
            "mass_p": det,
        }
    if formulation == "acoustics_B":
        return {
            "mass_u": (1.0 / j2, 1.0 / j1),
            "div_w": 1.0 / det,
            "grad_w": (1.0 / j1, 1.0 / j2),
            "mass_p": one,
        }
    if formulation == "maxwell2d":
        return {"mass_E": (j2 / j1, j1 / j2), "mass_H": det}
    if formulation == "elasticity2d":
        return {"jac": (j1, j2), "inv_det": 1.0 / det, "mass": det}
    raise ValueError(f"unknown formulation {formulation!r}")


def dense_coefficients(formulation, j1, j2):
    """Same bundles as ``coefficients`` at a single point, from dense matrices.

    Independent of the diagonal shortcuts: builds J as a full matrix and
    evaluates the tensor expressions with generic linear algebra.
    """
    J = np.diag([j1, j2]).astype(complex)
    det = np.linalg.det(J)
    Jinv = np.linalg.inv(J)
    if formulation == "acoustics_A":
        return {"mass_u": J.T @ J / det, "mass_p": det}
    if formulation == "acoustics_B":
        return {"mass_u": J / det, "div_w": 1.0 / det, "grad_w": Jinv}
    if formulation == "maxwell2d":
        J3 = np.diag([j1, j2, 1.0]).astype(complex)
        det3 = np.linalg.det(J3)
        J3inv = np.linalg.inv(J3)
        M = det3 * J3inv @ J3inv.T
        return {"mass_E": M[:2, :2], "mass_H": M[2, 2], "full": M}
    if formulation == "elasticity2d":
        return {"jac": J, "inv_det": 1.0 / det, "mass": det}
    raise ValueError(f"unknown formulation {formulation!r}")


def isotropic_compliance_2d(lam, mu):
    """Plane-strain compliance as a 2x2x2x2 array (inverse of C on symmetric tensors)."""
    d = np.eye(2)
    I_sym = 0.5 * (np.einsum("ik,jl->ijkl", d, d) + np.einsum("il,jk->ijkl", d, d))
    return (I_sym - lam / (2.0 * (lam + mu)) * np.einsum("ij,kl->ijkl", d, d)) / (2.0 * mu)


def isotropic_stiffness_2d(lam, mu):
    d = np.eye(2)
    return lam * np.einsum("ij,kl->ijkl", d, d) + mu * (
        np.einsum("ik,jl->ijkl", d, d) + np.einsum("il,jk->ijkl", d, d)
    )


def stretched_compliance(S, J):
    """[S_J]_ijkl = conj(J)_ni conj(J)_mk S_njml for a (possibly full) 2x2 J."""
    Jb = np.conj(np.asarray(J))
    return np.einsum("ni,mk,njml->ijkl", Jb, Jb, S)
