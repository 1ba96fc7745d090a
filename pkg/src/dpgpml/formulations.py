"""Element matrices of the broken ultraweak PML formulations.

Every formulation is written as

    b(u, v) = sum_c (u_c, A_c v) + sum_traces <u_hat, T v>_dK

with all PML coefficients applied on the trial side, unconjugated, so the
discrete problem is the analytic continuation of the unstretched one. A
test function v = sum_i a_i psi_i with real basis psi_i then has adjoint
components L*v_c = sum_i a_i conj(A_c psi_i), and the adjoint graph norm

    ||v||^2 = sum_c ||L*v_c||^2 + ||v||^2

gives G = sum_c A_c W A_c^H + M. Each formulation below only has to fill
the arrays A_c (test rows x quadrature points) and the boundary blocks.
"""

from dataclasses import dataclass, field

import numpy as np

from .fe_spaces import ReferenceElement, edge_to_reference
from .mesh import LOCAL_SIGNS
from .pml import (
    StretchProfile,
    coefficients,
    isotropic_compliance_2d,
    isotropic_stiffness_2d,
    jacobian_at,
)

# outward unit normals of local edges bottom, right, top, left
LOCAL_NORMALS = ((0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0))


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class MaterialParams:
    omega: float = 6.0 * np.pi
    eps0: float = 1.0
    mu0: float = 1.0
    sigma: float = 0.0
    lam: float = 2.0
    mu: float = 1.0
    rho0: float = 1.0
    elastic_variant: str = "transformed_stress"

    @property
    def compliance(self):
        return isotropic_compliance_2d(self.lam, self.mu)

    @property
    def stiffness(self):
        return isotropic_stiffness_2d(self.lam, self.mu)


@dataclass
class ElementSystem:
    B: np.ndarray
    G: np.ndarray
    load: np.ndarray
    n_field: int  # leading columns of B belong to element fields
    element: int = -1


@dataclass(frozen=True)
class Layout:
    """Variable layout of one formulation (names and scalar component counts)."""

    fields: tuple  # ((name, ncomp), ...)
    traces: tuple  # ((name, kind, ncomp), ...)
    tests: tuple  # ((name, ncomp), ...)

    def n_field(self, spec):
        return sum(c for _, c in self.fields) * spec.n_field

    def n_trace(self, spec):
        return sum(c * spec.n_trace_element(k) for _, k, c in self.traces)

    def n_test(self, spec):
        return sum(c for _, c in self.tests) * spec.n_test

    def field_slices(self, spec):
        out, start = {}, 0
        for name, c in self.fields:
            for k in range(c):
                out[(name, k)] = slice(start, start + spec.n_field)
                start += spec.n_field
        return out

    def trace_slices(self, spec):
        """Element-local trace column slices, offset after the field columns."""
        out, start = {}, self.n_field(spec)
        for name, kind, c in self.traces:
            n = spec.n_trace_element(kind)
            for k in range(c):
                out[(name, k)] = slice(start, start + n)
                start += n
        return out

    def test_slices(self, spec):
        out, start = {}, 0
        for name, c in self.tests:
            for k in range(c):
                out[(name, k)] = slice(start, start + spec.n_test)
                start += spec.n_test
        return out


LAYOUTS = {
    "acoustics_A": Layout(
        fields=(("p", 1), ("u", 2)),
        traces=(("p_hat", "continuous", 1), ("un_hat", "discontinuous", 1)),
        tests=(("v", 2), ("q", 1)),
    ),
    "maxwell2d": Layout(
        fields=(("E", 2), ("H", 1)),
        traces=(("E_hat", "discontinuous", 1), ("H_hat", "continuous", 1)),
        tests=(("F", 1), ("G", 2)),
    ),
    "elasticity2d": Layout(
        fields=(("u", 2), ("sigma", 3)),
        traces=(("u_hat", "continuous", 2), ("tn_hat", "discontinuous", 2)),
        tests=(("tau", 3), ("v", 2)),
    ),
}
LAYOUTS["acoustics_B"] = LAYOUTS["acoustics_A"]

# variable roles used by boundary conditions and error metrics
PRIMARY_FIELDS = {
    "acoustics_A": ("p", "u"),
    "acoustics_B": ("p", "u"),
    "maxwell2d": ("E", "H"),
    "elasticity2d": ("u",),
}


@dataclass
class _Work:
    """Per-element quadrature data shared by the assemblers."""

    ref: ReferenceElement
    h: float
    x: np.ndarray
    y: np.ndarray
    wq: np.ndarray  # physical quadrature weights
    psi: np.ndarray  # test values (nt, npts)
    dpsi: np.ndarray  # physical test gradients (2, nt, npts)
    adjoint: list = field(default_factory=list)  # [(trial key, {test key: row array})]


def _element_work(element, ref):
    h = element.h
    xi, eta = ref.points.T
    x = element.x0 + 0.5 * h * (xi + 1.0)
    y = element.y0 + 0.5 * h * (eta + 1.0)
    return _Work(
        ref=ref,
        h=h,
        x=x,
        y=y,
        wq=ref.weights * (0.5 * h) ** 2,
        psi=ref.psi,
        dpsi=ref.dpsi * (2.0 / h),
    )


def _finish(layout, spec, work, trial_map, boundary, element_index):
    """Assemble B, G from the adjoint component arrays and boundary blocks.

    ``work.adjoint`` holds (name, {test key: (nt, npts) array}) for each adjoint
    component; ``trial_map`` maps trial field keys to [(component name, factor)].
    """
    ref = work.ref
    tslc = layout.test_slices(spec)
    n_test = layout.n_test(spec)
    n_field = layout.n_field(spec)
    n_trial = n_field + layout.n_trace(spec)
    npts = work.x.size

    comps = {}
    for name, rows in work.adjoint:
        A = np.zeros((n_test, npts), dtype=complex)
        for key, arr in rows.items():
            A[tslc[key]] += arr
        comps[name] = A

    G = np.zeros((n_test, n_test), dtype=complex)
    for A in comps.values():
        G += (A * work.wq) @ A.conj().T
    mass = (work.psi * work.wq) @ work.psi.T
    for key in tslc:
        G[tslc[key], tslc[key]] += mass
    G = 0.5 * (G + G.conj().T)

    B = np.zeros((n_test, n_trial), dtype=complex)
    fslc = layout.field_slices(spec)
    phi_w = ref.phi * work.wq  # (nf, npts)
    for key, parts in trial_map.items():
        A = sum(f * comps[name] for name, f in parts)
        B[:, fslc[key]] = A @ phi_w.T

    boundary(B, tslc, layout.trace_slices(spec))
    return ElementSystem(B, G, np.zeros(n_test, dtype=complex), n_field, element_index)


def _edge_blocks(ref, spec, k, h, weight=None):
    """Test values on local edge k, continuous and discontinuous trace tables, ds weights.

    ``weight`` optionally multiplies the integrand at the edge quadrature points.
    """
    ds = ref.edge_w * (0.5 * h)
    if weight is not None:
        ds = ds * weight
    psi_e = ref.edge_psi[k] * ds  # weighted test values (nt, m)
    # continuous trace: per-edge functions mapped to unique element dofs
    per_edge = spec.cont + 1
    gather = ref.cont_gather[k * per_edge : (k + 1) * per_edge]
    cont = psi_e @ ref.edge_cont.T @ gather  # (nt, 4p)
    disc = psi_e @ ref.edge_disc.T  # (nt, flux+1)
    return cont, disc


def _add_disc(B, rows, cols, spec, k, block):
    n = spec.flux + 1
    start = cols.start + k * n
    B[rows, start : start + n] += block


def _stretch_data(profile, work):
    return jacobian_at(profile, work.x, work.y, check=False)


# ---------------------------------------------------------------- acoustics


def _assemble_acoustics(formulation, element, spec, ref, profile, params):
    layout = LAYOUTS[formulation]
    work = _element_work(element, ref)
    c = coefficients(formulation, _stretch_data(profile, work))
    w = params.omega
    psi, dpsi = work.psi, work.dpsi
    mux, muy = c["mass_u"]
    gwx, gwy = c["grad_w"]
    work.adjoint = [
        ("u_x", {("v", 0): -1j * w * mux * psi, ("q", 0): gwx * dpsi[0]}),
        ("u_y", {("v", 1): -1j * w * muy * psi, ("q", 0): gwy * dpsi[1]}),
        (
            "p",
            {
                ("q", 0): -1j * w * c["mass_p"] * psi,
                ("v", 0): c["div_w"] * dpsi[0],
                ("v", 1): c["div_w"] * dpsi[1],
            },
        ),
    ]
    trial_map = {("u", 0): [("u_x", 1.0)], ("u", 1): [("u_y", 1.0)], ("p", 0): [("p", 1.0)]}

    def boundary(B, tslc, trslc):
        for k in range(4):
            nx, ny = LOCAL_NORMALS[k]
            cont, disc = _edge_blocks(ref, spec, k, element.h)
            # -<p_hat, v.n>
            B[tslc[("v", 0)], trslc[("p_hat", 0)]] -= nx * cont
            B[tslc[("v", 1)], trslc[("p_hat", 0)]] -= ny * cont
            # -<un_hat, q>, un_hat signed by the element orientation
            _add_disc(B, tslc[("q", 0)], trslc[("un_hat", 0)], spec, k, -LOCAL_SIGNS[k] * disc)

    return _finish(layout, spec, work, trial_map, boundary, element.index)


def assemble_acoustics_A(element, spec, ref, profile, params):
    """Pulled-back-equation formulation: detJ^-1 J^T J mass on u, detJ mass on p."""
    return _assemble_acoustics("acoustics_A", element, spec, ref, profile, params)


def assemble_acoustics_B(element, spec, ref, profile, params):
    """Pulled-back variational formulation: stretch weights on the test derivatives."""
    return _assemble_acoustics("acoustics_B", element, spec, ref, profile, params)


# ----------------------------------------------------------------- maxwell


def assemble_maxwell_2d(element, spec, ref, profile, params):
    """In-plane E, out-of-plane H. Scalar test F for Faraday, vector test G for Ampere.

    2D curls: curl E = dx E_y - dy E_x, curl H = (dy H, -dx H).
    """
    layout = LAYOUTS["maxwell2d"]
    work = _element_work(element, ref)
    c = coefficients("maxwell2d", _stretch_data(profile, work))
    w = params.omega
    psi, dpsi = work.psi, work.dpsi
    mex, mey = c["mass_E"]
    ampere = 1j * w * params.eps0 - params.sigma
    work.adjoint = [
        ("E_x", {("F", 0): dpsi[1], ("G", 0): ampere * mex * psi}),
        ("E_y", {("F", 0): -dpsi[0], ("G", 1): ampere * mey * psi}),
        (
            "H",
            {
                ("G", 0): -dpsi[1],
                ("G", 1): dpsi[0],
                ("F", 0): -1j * w * params.mu0 * c["mass_H"] * psi,
            },
        ),
    ]
    trial_map = {("E", 0): [("E_x", 1.0)], ("E", 1): [("E_y", 1.0)], ("H", 0): [("H", 1.0)]}

    def boundary(B, tslc, trslc):
        for k in range(4):
            nx, ny = LOCAL_NORMALS[k]
            cont, disc = _edge_blocks(ref, spec, k, element.h)
            # +<E.t_K, F>, t_K = (-n_y, n_x); E_hat is stored along the global tangent
            _add_disc(B, tslc[("F", 0)], trslc[("E_hat", 0)], spec, k, LOCAL_SIGNS[k] * disc)
            # -<H_hat, G.t_K>
            B[tslc[("G", 0)], trslc[("H_hat", 0)]] += ny * cont
            B[tslc[("G", 1)], trslc[("H_hat", 0)]] -= nx * cont

    return _finish(layout, spec, work, trial_map, boundary, element.index)


# -------------------------------------------------------------- elasticity

# symmetric Voigt components (11, 22, 12) as full 2x2 tensors
_VOIGT = (
    np.array([[1.0, 0.0], [0.0, 0.0]]),
    np.array([[0.0, 0.0], [0.0, 1.0]]),
    np.array([[0.0, 1.0], [1.0, 0.0]]),
)
_FULL = ((0, 0), (1, 1), (0, 1), (1, 0))


def _edge_stretch(profile, element, ref, k):
    """Stretch factor tangential to local edge k at the edge quadrature points.

    This is the boundary Jacobian |detJ J^-T n| of an axis-aligned edge: j2 on
    vertical edges, j1 on horizontal ones.
    """
    xs, ys = edge_to_reference(k, ref.edge_s)
    h = element.h
    x = element.x0 + 0.5 * h * (xs + 1.0)
    y = element.y0 + 0.5 * h * (ys + 1.0)
    data = jacobian_at(profile, x, y, check=False)
    return data.j2 if k in (1, 3) else data.j1


def assemble_elasticity_2d(element, spec, ref, profile, params):
    """Stress-displacement ultraweak elasticity with symmetric stress in Voigt form.

    ``params.elastic_variant == "transformed_stress"`` (default): the constitutive pairing is
    (detJ^-1 S:(J sigma), J tau) with unweighted (u, div tau) and (sigma, grad v),
    and the momentum mass carries detJ rho w^2. The stress block of the adjoint
    is kept as a full 2x2 tensor so the Gram matches
    || grad v + detJ^-1 J (S:(J tau)) ||.

    ``"stretched_stress"``: the symmetric unknown is the stretched stress itself,
    giving (detJ S:sigma, tau) + (u_a, c_b d_b tau_ab) - <u_hat, c tau n> and
    (sigma_ab, c_b d_b v_a) with c = (j2, j1). For diagonal stretches this is the
    exact pullback of the stretched equations.
    """
    variant = params.elastic_variant
    if variant not in ("transformed_stress", "stretched_stress"):
        raise AssemblyError(f"unknown elastic variant {variant!r}")
    layout = LAYOUTS["elasticity2d"]
    work = _element_work(element, ref)
    data = _stretch_data(profile, work)
    c = coefficients("elasticity2d", data)
    S = params.compliance
    psi, dpsi = work.psi, work.dpsi
    j = np.stack(c["jac"])  # (2, npts)
    inv_det = c["inv_det"]
    rho_w2 = params.rho0 * params.omega**2
    exact = variant == "stretched_stress"
    # derivative weights c_b = detJ / j_b; unity for the transformed-stress form
    cw = np.stack([data.j2, data.j1]) if exact else np.ones_like(j)

    adjoint = []
    # stress components (a, b) of the full tensor
    for a, b in _FULL:
        rows = {("v", a): cw[b] * dpsi[b]}
        for t, E in enumerate(_VOIGT):
            if exact:
                # detJ [S:E_t]_ab
                coef = c["mass"] * np.sum(S[a, b] * E) * np.ones_like(inv_det)
            else:
                # detJ^-1 j_a [S:(J E)]_ab, (J E)_cd = j_c E_cd
                coef = inv_det * j[a] * np.einsum("cd,cp->p", S[a, b] * E, j)
            rows[("tau", t)] = coef * psi
        adjoint.append((f"s{a}{b}", rows))
    # displacement: div tau - detJ rho w^2 v
    mass = -rho_w2 * c["mass"] * psi
    adjoint.append(
        ("u_x", {("tau", 0): cw[0] * dpsi[0], ("tau", 2): cw[1] * dpsi[1], ("v", 0): mass})
    )
    adjoint.append(
        ("u_y", {("tau", 2): cw[0] * dpsi[0], ("tau", 1): cw[1] * dpsi[1], ("v", 1): mass})
    )
    work.adjoint = adjoint
    trial_map = {
        ("u", 0): [("u_x", 1.0)],
        ("u", 1): [("u_y", 1.0)],
        ("sigma", 0): [("s00", 1.0)],
        ("sigma", 1): [("s11", 1.0)],
        ("sigma", 2): [("s01", 1.0), ("s10", 1.0)],
    }

    def boundary(B, tslc, trslc):
        for k in range(4):
            nx, ny = LOCAL_NORMALS[k]
            weight = _edge_stretch(profile, element, ref, k) if exact else None
            cont, _ = _edge_blocks(ref, spec, k, element.h, weight)
            _, disc = _edge_blocks(ref, spec, k, element.h)
            # -<u_hat, tau n>: (tau n)_x = t11 nx + t12 ny, (tau n)_y = t12 nx + t22 ny
            B[tslc[("tau", 0)], trslc[("u_hat", 0)]] -= nx * cont
            B[tslc[("tau", 2)], trslc[("u_hat", 0)]] -= ny * cont
            B[tslc[("tau", 2)], trslc[("u_hat", 1)]] -= nx * cont
            B[tslc[("tau", 1)], trslc[("u_hat", 1)]] -= ny * cont
            # -<tn_hat, v>
            for a in range(2):
                _add_disc(B, tslc[("v", a)], trslc[("tn_hat", a)], spec, k, -LOCAL_SIGNS[k] * disc)

    return _finish(layout, spec, work, trial_map, boundary, element.index)


ASSEMBLERS = {
    "acoustics_A": assemble_acoustics_A,
    "acoustics_B": assemble_acoustics_B,
    "maxwell2d": assemble_maxwell_2d,
    "elasticity2d": assemble_elasticity_2d,
}


def assemble_element(formulation, element, spec, ref=None, profile=None, params=None):
    """Element system for one formulation; builds reference tables on demand."""
    if formulation not in ASSEMBLERS:
        raise AssemblyError(f"unknown formulation {formulation!r}")
    ref = ReferenceElement(spec) if ref is None else ref
    if ref.spec != spec:
        raise AssemblyError("reference element was built for a different SpaceSpec")
    profile = StretchProfile() if profile is None else profile
    params = MaterialParams() if params is None else params
    return ASSEMBLERS[formulation](element, spec, ref, profile, params)
