"""Static condensation, skeleton assembly, boundary conditions and the global solve.

Element level: with G = L L^H, W = L^-1 B and l = L^-1 f, the DPG normal
equations B^H G^-1 B u = B^H G^-1 f are the normal equations of the
least-squares problem min ||W u - l||. Field dofs are eliminated by a QR
factorization of the field columns W_f = Q R, which leaves the trace block

    K = Y^H Y,  Y = (I - Q Q^H) W_t,   rhs = Y^H (I - Q Q^H) l

without ever forming B^H G^-1 B explicitly.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.csgraph import reverse_cuthill_mckee

from .fe_spaces import ReferenceElement, edge_trace_basis, gauss_1d
from .formulations import LAYOUTS, assemble_element

BOUNDARY_RULES = {
    # tag -> [(trace variable, component, "exact" | 0)]
    "acoustics": {
        "hole_dirichlet": [("p_hat", 0, "exact")],
        "symmetry_x0": [("un_hat", 0, 0)],
        "symmetry_y0": [("un_hat", 0, 0)],
        "outer": [("p_hat", 0, 0)],
    },
    "maxwell2d": {
        "hole_dirichlet": [("E_hat", 0, "exact")],
        "symmetry_x0": [("E_hat", 0, 0)],
        "symmetry_y0": [("H_hat", 0, 0)],
        "outer": [("E_hat", 0, 0)],
    },
    "elasticity2d": {
        "hole_dirichlet": [("u_hat", 0, "exact"), ("u_hat", 1, "exact")],
        "symmetry_x0": [("tn_hat", 0, 0), ("u_hat", 1, 0)],
        "symmetry_y0": [("tn_hat", 0, 0), ("u_hat", 1, 0)],
        "outer": [("u_hat", 0, 0), ("u_hat", 1, 0)],
    },
}

# all-Dirichlet rule for manufactured solutions on the full square
DIRICHLET_ALL = {
    "acoustics": [("p_hat", 0, "exact")],
    "maxwell2d": [("E_hat", 0, "exact")],
    "elasticity2d": [("u_hat", 0, "exact"), ("u_hat", 1, "exact")],
}


class DPGSolverError(RuntimeError):
    pass


class IllConditionedElementError(DPGSolverError):
    pass


class SingularSystemError(DPGSolverError):
    pass


class BoundaryConfigError(ValueError):
    pass


def _physics_family(formulation):
    return "acoustics" if formulation.startswith("acoustics") else formulation


class DofMap:
    """Global numbering of skeleton trace dofs.

    Continuous trace component of degree p: one dof per vertex followed by
    p - 1 bubbles per edge. Discontinuous component of degree q: q + 1 modes
    per edge. Degrees come from ``spec.trace_degree``.
    """

    def __init__(self, mesh, formulation, spec):
        self.mesh = mesh
        self.spec = spec
        self.p = p = spec.cont
        self.q = q = spec.flux
        self.layout = LAYOUTS[formulation]
        self.offsets = {}
        self.kinds = {}
        n = 0
        for name, kind, ncomp in self.layout.traces:
            for c in range(ncomp):
                self.offsets[(name, c)] = n
                self.kinds[(name, c)] = kind
                if kind == "continuous":
                    n += mesh.n_vertices + mesh.n_edges * (p - 1)
                else:
                    n += mesh.n_edges * (q + 1)
        self.n_dofs = n
        self._element_dofs = [self._build_element_dofs(el) for el in mesh.elements]

    def _build_element_dofs(self, el):
        p, q = self.p, self.q
        out = []
        for name, kind, ncomp in self.layout.traces:
            for c in range(ncomp):
                base = self.offsets[(name, c)]
                if kind == "continuous":
                    out.extend(base + v for v in el.vertices)
                    for e in el.edges:
                        start = base + self.mesh.n_vertices + e * (p - 1)
                        out.extend(range(start, start + p - 1))
                else:
                    for e in el.edges:
                        start = base + e * (q + 1)
                        out.extend(range(start, start + q + 1))
        return np.array(out, dtype=int)

    def element_dofs(self, k):
        return self._element_dofs[k]

    def edge_dofs(self, name, comp, e):
        """(vertex dofs, interior dofs) of an edge for one trace component."""
        base = self.offsets[(name, comp)]
        p = self.p
        if self.kinds[(name, comp)] == "continuous":
            edge = self.mesh.edges[e]
            start = base + self.mesh.n_vertices + e * (p - 1)
            return [base + edge.v0, base + edge.v1], list(range(start, start + p - 1))
        start = base + e * (self.q + 1)
        return [], list(range(start, start + self.q + 1))


@dataclass
class CondensedElement:
    K: np.ndarray  # Hermitian trace block
    rhs: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    Wt: np.ndarray
    lw: np.ndarray  # L^-1 f
    Wf: np.ndarray


def condense_element(sys, element_id=None):
    """Trial-to-test inversion and elimination of the element field dofs."""
    try:
        L = sla.cholesky(sys.G, lower=True)
    except sla.LinAlgError as exc:
        raise IllConditionedElementError(
            f"Gram matrix of element {sys.element if element_id is None else element_id} "
            f"is not positive definite"
        ) from exc
    W = sla.solve_triangular(L, sys.B, lower=True)
    lw = sla.solve_triangular(L, sys.load, lower=True)
    nf = sys.n_field
    Wf, Wt = W[:, :nf], W[:, nf:]
    Q, R = np.linalg.qr(Wf)
    Y = Wt - Q @ (Q.conj().T @ Wt)
    y = lw - Q @ (Q.conj().T @ lw)
    K = Y.conj().T @ Y
    K = 0.5 * (K + K.conj().T)
    return CondensedElement(K, Y.conj().T @ y, Q, R, Wt, lw, Wf)


def recover_fields(ce, trace_values):
    """Element field dofs minimizing ||W_f u_f + W_t u_t - l|| for given traces."""
    rhs = ce.Q.conj().T @ (ce.lw - ce.Wt @ trace_values)
    return sla.solve_triangular(ce.R, rhs, lower=False)


def normal_equations(sys):
    """Dense B^H G^-1 B and B^H G^-1 f (reference path for tests)."""
    X = np.linalg.solve(sys.G, sys.B)
    y = np.linalg.solve(sys.G, sys.load)
    return sys.B.conj().T @ X, sys.B.conj().T @ y


@dataclass
class SkeletonSystem:
    K: sp.csr_matrix
    rhs: np.ndarray
    dofmap: DofMap
    condensed: list
    systems: list
    formulation: str = ""
    spec: object = None
    constraints: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)


@dataclass
class SolutionFields:
    formulation: str
    fields: list  # per element field coefficient vectors
    traces: np.ndarray
    dofmap: DofMap
    spec: object
    algebraic_residual: float = float("nan")
    residuals: np.ndarray = None

    def element_field(self, k, name, comp):
        sl = LAYOUTS[self.formulation].field_slices(self.spec)[(name, comp)]
        return self.fields[k][sl]


def assemble_skeleton(mesh, formulation, spec, profile, params, threads=1, order=None):
    """Assemble and condense every element, then scatter into the global trace matrix."""
    t0 = time.perf_counter()
    ref = ReferenceElement(spec)
    dofmap = DofMap(mesh, formulation, spec)
    order = list(range(mesh.n_elements)) if order is None else list(order)

    def work(k):
        sys = assemble_element(formulation, mesh.elements[k], spec, ref, profile, params)
        return sys, condense_element(sys, k)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(zip(order, pool.map(work, order)))
    else:
        results = {k: work(k) for k in order}
    t1 = time.perf_counter()

    rows, cols, vals = [], [], []
    rhs = np.zeros(dofmap.n_dofs, dtype=complex)
    for k in order:
        ce = results[k][1]
        idx = dofmap.element_dofs(k)
        rows.append(np.repeat(idx, idx.size))
        cols.append(np.tile(idx, idx.size))
        vals.append(ce.K.ravel())
        np.add.at(rhs, idx, ce.rhs)
    K = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dofmap.n_dofs, dofmap.n_dofs),
    ).tocsr()
    t2 = time.perf_counter()
    return SkeletonSystem(
        K,
        rhs,
        dofmap,
        [results[k][1] for k in range(mesh.n_elements)],
        [results[k][0] for k in range(mesh.n_elements)],
        formulation=formulation,
        spec=spec,
        timings={"element_assembly": t1 - t0, "global_assembly": t2 - t1},
    )


def project_edge_trace(kind, p, values_at, n_quad=None):
    """Edge-wise projection of boundary data onto one edge's trace functions.

    ``values_at(s)`` evaluates the data at reference coordinates s in [-1, 1].
    Continuous kind returns (vertex values, bubble coefficients): vertex values by
    point evaluation, bubbles by L2 projection of the remainder. Discontinuous
    kind returns ([], Legendre coefficients) of the L2 projection.
    """
    m = n_quad or max(2 * p + 6, 12)
    s, w = gauss_1d(m)
    g = np.asarray(values_at(s), dtype=complex)
    if kind == "discontinuous":
        basis = edge_trace_basis("discontinuous", p, s)
        return [], basis @ (w * g)
    ends = np.asarray(values_at(np.array([-1.0, 1.0])), dtype=complex)
    if p < 2:
        return list(ends), np.zeros(0, dtype=complex)
    basis = edge_trace_basis("continuous", p, s)
    remainder = g - ends[0] * basis[0] - ends[1] * basis[1]
    bub = basis[2:]
    M = (bub * w) @ bub.T
    coeffs = np.linalg.solve(M, (bub * w) @ remainder)
    return list(ends), coeffs


def boundary_constraints(mesh, formulation, dofmap, exact=None, rules=None):
    """Map constrained global dof -> value per the boundary rules."""
    family = _physics_family(formulation)
    if rules is None:
        rules = BOUNDARY_RULES[family]
    known = {t for t, _, _ in dofmap.layout.traces}
    constraints = {}
    # homogeneous constraints first so exact data wins at shared vertices
    ordered = sorted(
        ((tag, rule) for tag, rs in rules.items() for rule in rs), key=lambda tr: tr[1][2] == "exact"
    )
    for tag, (name, comp, value) in ordered:
        if name not in known:
            raise BoundaryConfigError(f"trace {name!r} does not exist for {formulation}")
        edges = mesh.boundary_edges(None if tag == "*" else tag)
        if not edges and tag not in ("*", "hole_dirichlet"):
            if tag not in ("symmetry_x0", "symmetry_y0", "outer"):
                raise BoundaryConfigError(f"unknown boundary tag {tag!r}")
        for e in edges:
            vdofs, idofs = dofmap.edge_dofs(name, comp, e)
            if value == "exact":
                if exact is None:
                    raise BoundaryConfigError("nonhomogeneous boundary data needs an exact solution")
                for d, v in zip(*_project_exact_on_edge(mesh, dofmap, exact, name, comp, e)):
                    constraints[d] = v
            elif value == 0:
                for d in list(vdofs) + list(idofs):
                    constraints[d] = 0.0
            else:
                raise BoundaryConfigError(f"unsupported boundary value {value!r}")
    return constraints


def _project_exact_on_edge(mesh, dofmap, exact, name, comp, e):
    """(global dofs, values) of the edge-wise projection of an exact trace."""
    vdofs, idofs = dofmap.edge_dofs(name, comp, e)
    a, b = mesh.edge_points(e)
    normal = (1.0, 0.0) if mesh.edges[e].vertical else (0.0, 1.0)

    def at(s):
        t = 0.5 * (np.asarray(s) + 1.0)
        return exact.trace(name, comp, a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), normal)

    kind = dofmap.kinds[(name, comp)]
    vv, iv = project_edge_trace(kind, dofmap.spec.trace_degree(kind), at)
    return list(vdofs) + list(idofs), list(vv) + list(iv)


def interpolate_exact(mesh, formulation, spec, exact, elements=None):
    """Discrete representative of an exact solution.

    Element fields are L2 projections; traces use the same edge-wise
    projection as the boundary data. ``elements`` restricts the work to a
    subset (other fields and traces are left at zero).
    """
    dofmap = DofMap(mesh, formulation, spec)
    chosen = range(mesh.n_elements) if elements is None else list(elements)
    edges = sorted({e for k in chosen for e in mesh.elements[k].edges})
    traces = np.zeros(dofmap.n_dofs, dtype=complex)
    for name, _, ncomp in dofmap.layout.traces:
        for comp in range(ncomp):
            for e in edges:
                dofs, vals = _project_exact_on_edge(mesh, dofmap, exact, name, comp, e)
                traces[dofs] = vals
    ref = ReferenceElement(spec, m=spec.quadrature_points + 2)
    slices = dofmap.layout.field_slices(spec)
    M = (ref.phi * ref.weights) @ ref.phi.T
    fields = [np.zeros(dofmap.layout.n_field(spec), dtype=complex) for _ in mesh.elements]
    for k in chosen:
        el = mesh.elements[k]
        xi, eta = ref.points.T
        f = exact.fields(el.x0 + 0.5 * el.h * (xi + 1.0), el.y0 + 0.5 * el.h * (eta + 1.0))
        for key, sl in slices.items():
            fields[k][sl] = np.linalg.solve(M, (ref.phi * ref.weights) @ f[key])
    return SolutionFields(formulation, fields, traces, dofmap, spec)


def apply_bcs(system, mesh, formulation, exact=None, rules=None):
    """Attach boundary constraints to a skeleton system and return it."""
    system.constraints = boundary_constraints(mesh, formulation, system.dofmap, exact, rules)
    return system


class BandedCholesky:
    """RCM-reordered banded Cholesky factorization of a sparse HPD matrix."""

    def __init__(self, A):
        A = sp.csr_matrix(A)
        n = A.shape[0]
        self.perm = perm = reverse_cuthill_mckee(A, symmetric_mode=True)
        Ap = A[perm][:, perm].tocoo()
        self.bandwidth = bw = int(np.max(np.abs(Ap.row - Ap.col))) if Ap.nnz else 0
        ab = np.zeros((bw + 1, n), dtype=complex)
        mask = Ap.row >= Ap.col
        r, c = Ap.row[mask], Ap.col[mask]
        ab[r - c, c] = Ap.data[mask]
        try:
            self.factor = sla.cholesky_banded(ab, lower=True)
        except sla.LinAlgError as exc:
            digits = [int(t) for t in str(exc).replace("-", " ").split() if t.isdigit()]
            bad = int(perm[digits[0] - 1]) if digits and 0 < digits[0] <= n else -1
            err = SingularSystemError(
                f"global matrix not positive definite; first failing pivot at free dof {bad}"
            )
            err.dof = bad
            raise err from exc

    def solve(self, b):
        xp = sla.cho_solve_banded((self.factor, True), b[self.perm])
        x = np.empty_like(xp)
        x[self.perm] = xp
        return x


def flux_null_modes(system, tol=1e-9):
    """Trace-only null vectors of the constrained skeleton matrix.

    With broken Q_{p+dp} tests and flux traces of degree p, each element admits
    one flux pattern, concentrated at its corners, that pairs to zero with every
    test function. When a flux component carries no essential condition anywhere,
    these patterns glue into one global null vector of that component. The
    vectors are found by inverse iteration on the component block and returned
    as (dof indices, unit vector) pairs; they never touch the element fields.
    """
    K = system.K
    cons = system.constraints
    dm = system.dofmap
    modes = []
    for (name, comp), kind in dm.kinds.items():
        if kind != "discontinuous":
            continue
        lo = dm.offsets[(name, comp)]
        idx = np.arange(lo, lo + dm.mesh.n_edges * (dm.q + 1))
        if any(int(d) in cons for d in idx):
            continue
        Kcc = K[idx][:, idx]
        scale = float(np.max(np.abs(Kcc.diagonal()))) or 1.0
        shifted = BandedCholesky(Kcc + tol * scale * sp.identity(idx.size, format="csr"))
        rng = np.random.default_rng(0)
        z = rng.standard_normal(idx.size) + 0j
        for _ in range(3):
            z = shifted.solve(z)
            z /= np.linalg.norm(z)
        if np.linalg.norm(Kcc @ z) <= 10 * tol * scale:
            modes.append((idx, z))
    return modes


def solve(system, method="cholesky"):
    """Solve the constrained skeleton system and recover element fields.

    Flux null modes (see ``flux_null_modes``) are gauged by pinning one dof
    each during the factorization and projecting the mode out afterwards, so
    the returned traces have no component along them.
    """
    K = system.K
    n = K.shape[0]
    x = np.zeros(n, dtype=complex)
    t0 = time.perf_counter()
    modes = flux_null_modes(system) if method == "cholesky" else []
    cons = system.constraints
    pinned = {int(idx[np.argmax(np.abs(z))]) for idx, z in modes}
    fixed = np.array(sorted(set(cons) | pinned), dtype=int)
    free = np.setdiff1d(np.arange(n), fixed)
    if fixed.size:
        x[fixed] = [cons.get(d, 0.0) for d in fixed]
    rhs = system.rhs[free] - K[free][:, fixed] @ x[fixed]
    Kff = K[free][:, free]
    if free.size:
        if method == "cholesky":
            chol = BandedCholesky(Kff)
            xf = chol.solve(rhs)
            system.timings["bandwidth"] = chol.bandwidth
        elif method == "lu":
            import scipy.sparse.linalg as spla

            xf = spla.splu(Kff.tocsc()).solve(rhs)
        else:
            raise ValueError(f"unknown solver method {method!r}")
        x[free] = xf
        for idx, z in modes:
            x[idx] -= np.vdot(z, x[idx]) * z
        # residual of the unpinned free system, gauge dofs included
        bc = np.array(sorted(cons), dtype=int)
        keep = np.setdiff1d(np.arange(n), bc)
        r_rhs = system.rhs[keep] - K[keep][:, bc] @ x[bc]
        res = np.linalg.norm(K[keep][:, keep] @ x[keep] - r_rhs)
        scale = np.linalg.norm(r_rhs)
        alg = res / scale if scale > 0 else res
    else:
        alg = 0.0
    system.timings["factorization_and_solve"] = time.perf_counter() - t0
    system.timings["gauged_flux_modes"] = len(modes)

    fields = []
    for k, ce in enumerate(system.condensed):
        idx = system.dofmap.element_dofs(k)
        fields.append(recover_fields(ce, x[idx]))
    sol = SolutionFields(
        system.formulation, fields, x, system.dofmap, system.spec, algebraic_residual=float(alg)
    )
    sol.residuals = residual_indicator(sol, system.condensed)[0]
    return sol


def residual_indicator(solution, condensed):
    """Per-element energy residual r_K = ||L^-1 (B u - f)||^2 and the total."""
    r = np.zeros(len(condensed))
    for k, ce in enumerate(condensed):
        idx = solution.dofmap.element_dofs(k)
        res = ce.Wf @ solution.fields[k] + ce.Wt @ solution.traces[idx] - ce.lw
        r[k] = float(np.vdot(res, res).real)
    return r, float(r.sum())
