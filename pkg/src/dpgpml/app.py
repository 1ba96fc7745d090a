"""Configuration-driven experiments: Green's function runs, A/B comparison,
convergence studies and field export."""

import csv
import dataclasses
import json
import math
import time
from dataclasses import dataclass

import numpy as np

from .dpg_solver import (
    DIRICHLET_ALL,
    apply_bcs,
    assemble_skeleton,
    solve,
)
from .exact_solutions import ExactSolution, GreensParams
from .fe_spaces import ReferenceElement, SpaceSpec, edge_trace_basis, gauss_1d, scalar_basis
from .formulations import LAYOUTS, PRIMARY_FIELDS, MaterialParams
from .mesh import build_lshape_mesh
from .pml import FORMULATIONS, StretchProfile


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Flat run configuration; defaults reproduce the 2D Green's function experiments."""

    physics: str = "acoustics_A"
    omega: float = 6.0 * math.pi
    p: int = 4
    dp: int = 1
    n_int: int = 8
    n_pml: int = 4
    l: float = 2.0
    L: float = 3.0
    hole: float = 1.0
    C: float = 5.0
    n: int = 2
    eps0: float = 1.0
    mu0: float = 1.0
    sigma: float = 0.0
    lam: float = 2.0
    mu: float = 1.0
    rho0: float = 1.0
    elastic_variant: str = "transformed_stress"
    solver: str = "cholesky"
    threads: int = 1
    report: str = ""
    samples: str = ""
    grid: int = 60

    def validate(self):
        if self.physics not in FORMULATIONS:
            raise ConfigError(f"physics must be one of {FORMULATIONS}, got {self.physics!r}")
        if not self.omega > 0:
            raise ConfigError("omega must be positive")
        if self.p < 1 or self.dp < 1:
            raise ConfigError("need p >= 1 and dp >= 1")
        if self.solver not in ("cholesky", "lu"):
            raise ConfigError(f"unknown solver {self.solver!r}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.grid < 1:
            raise ConfigError("grid must be >= 1")
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        names = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(data) - set(names)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {k: _coerce(names[k], v) for k, v in data.items()}
        return cls(**kwargs).validate()

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def with_overrides(self, items):
        """Apply ``key=value`` strings."""
        data = self.to_dict()
        for item in items or ():
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not key=value")
            key, value = item.split("=", 1)
            data[key.strip()] = value.strip()
        return RunConfig.from_dict(data)

    # derived objects
    def space(self):
        return SpaceSpec(p=self.p, dp=self.dp)

    def profile(self):
        return StretchProfile(l=self.l, L=self.L, C=self.C, n=self.n, omega=self.omega)

    def materials(self):
        return MaterialParams(
            omega=self.omega,
            eps0=self.eps0,
            mu0=self.mu0,
            sigma=self.sigma,
            lam=self.lam,
            mu=self.mu,
            rho0=self.rho0,
            elastic_variant=self.elastic_variant,
        )

    def greens(self):
        return GreensParams(
            omega=self.omega, eps0=self.eps0, mu0=self.mu0, lam=self.lam, mu=self.mu, rho0=self.rho0
        )

    def mesh(self):
        return build_lshape_mesh(self.n_int, self.n_pml, self.l, self.L, self.hole)


def _coerce(f, value):
    kind = f.type if isinstance(f.type, type) else {"int": int, "float": float, "str": str}[f.type]
    try:
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(float(value)) if isinstance(value, str) else int(value)
        if kind is float:
            return float(value)
        return str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value {value!r} for {f.name}") from exc


@dataclass
class Report:
    config: dict
    dofs: dict
    errors: dict
    residual_total: float
    timings: dict
    solver: dict

    # attached run objects (not serialized)
    solution: object = None
    mesh: object = None
    exact: object = None

    def to_dict(self):
        return {
            "config": self.config,
            "dofs": self.dofs,
            "errors": self.errors,
            "residual_total": self.residual_total,
            "timings": self.timings,
            "solver": self.solver,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# ---------------------------------------------------------------- evaluation


def _element_points(el, ref):
    xi, eta = ref.points.T
    x = el.x0 + 0.5 * el.h * (xi + 1.0)
    y = el.y0 + 0.5 * el.h * (eta + 1.0)
    return x, y, ref.weights * (0.5 * el.h) ** 2


def relative_error(solution, mesh, exact, region="interior", variables=None, quadrature=None):
    """Relative L2 errors in percent, per variable and combined.

    ``region`` is ``interior`` (elements tagged interior) or ``full``. The
    combined value pools numerators and denominators over ``variables``
    (default: the physics' primary fields).
    """
    if region not in ("interior", "full"):
        raise ValueError(f"region must be 'interior' or 'full', got {region!r}")
    spec = solution.spec
    layout = LAYOUTS[solution.formulation]
    variables = PRIMARY_FIELDS[solution.formulation] if variables is None else tuple(variables)
    ref = ReferenceElement(spec, m=quadrature or spec.quadrature_points + 2)
    slices = layout.field_slices(spec)
    num, den = {}, {}
    for el in mesh.elements:
        if region == "interior" and el.region != "interior":
            continue
        x, y, w = _element_points(el, ref)
        f = exact.fields(x, y)
        for (name, comp), sl in slices.items():
            uh = ref.phi.T @ solution.fields[el.index][sl]
            num[name] = num.get(name, 0.0) + float(np.sum(w * np.abs(uh - f[(name, comp)]) ** 2))
            den[name] = den.get(name, 0.0) + float(np.sum(w * np.abs(f[(name, comp)]) ** 2))

    def pct(a, b):
        return 100.0 * math.sqrt(a / b) if b > 0 else None

    per = {name: pct(num[name], den[name]) for name in num}
    cn = sum(num[v] for v in variables)
    cd = sum(den[v] for v in variables)
    out = {"per_variable": per, "combined": pct(cn, cd), "region": region}
    out["undefined"] = out["combined"] is None or any(v is None for v in per.values())
    return out


def evaluate_fields(solution, mesh, x, y):
    """Discrete field values at points; NaN for points outside the mesh."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    spec = solution.spec
    slices = LAYOUTS[solution.formulation].field_slices(spec)
    out = {key: np.full(x.shape, np.nan + 0j) for key in slices}
    for i, (px, py) in enumerate(zip(x, y)):
        k = mesh.locate(px, py)
        if k < 0:
            continue
        el = mesh.elements[k]
        xi = np.array([2.0 * (px - el.x0) / el.h - 1.0])
        eta = np.array([2.0 * (py - el.y0) / el.h - 1.0])
        phi, _ = scalar_basis(spec.p, xi, eta)
        for key, sl in slices.items():
            out[key][i] = (phi[:, 0] @ solution.fields[k][sl])
    return out


# ----------------------------------------------------------------- running


def _build_and_solve(cfg, mesh=None, exact=None, rules=None):
    t0 = time.perf_counter()
    mesh = cfg.mesh() if mesh is None else mesh
    t1 = time.perf_counter()
    exact = ExactSolution(cfg.physics, cfg.greens()) if exact is None else exact
    system = assemble_skeleton(
        mesh, cfg.physics, cfg.space(), cfg.profile(), cfg.materials(), threads=cfg.threads
    )
    apply_bcs(system, mesh, cfg.physics, exact, rules)
    solution = solve(system, method=cfg.solver)
    t2 = time.perf_counter()
    timings = dict(system.timings)
    timings.update({"mesh": t1 - t0, "total": t2 - t0})
    return mesh, exact, system, solution, timings


def run_experiment(config):
    """Build, assemble, solve and measure one configuration."""
    cfg = config.validate() if isinstance(config, RunConfig) else RunConfig.from_dict(config)
    mesh, exact, system, solution, timings = _build_and_solve(cfg)
    t0 = time.perf_counter()
    errors = relative_error(solution, mesh, exact, "interior")
    errors["full_region_combined"] = relative_error(solution, mesh, exact, "full")["combined"]
    timings["errors"] = time.perf_counter() - t0
    n_field = LAYOUTS[cfg.physics].n_field(cfg.space()) * mesh.n_elements
    report = Report(
        config=cfg.to_dict(),
        dofs={
            "skeleton": system.dofmap.n_dofs,
            "constrained": len(system.constraints),
            "field": n_field,
            "elements": mesh.n_elements,
            "edges": mesh.n_edges,
            "vertices": mesh.n_vertices,
        },
        errors=errors,
        residual_total=float(np.sum(solution.residuals)),
        timings=timings,
        solver={
            "method": cfg.solver,
            "algebraic_residual": solution.algebraic_residual,
            "bandwidth": system.timings.get("bandwidth"),
            "gauged_flux_modes": system.timings.get("gauged_flux_modes", 0),
        },
        solution=solution,
        mesh=mesh,
        exact=exact,
    )
    if cfg.report:
        write_text(cfg.report, report.to_json())
    return report


def write_text(path, text):
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def edge_trace_l2(solution, mesh, name, comp, edges, other=None):
    """L2 norm over ``edges`` of a trace component (or of its difference with ``other``)."""
    dm = solution.dofmap
    kind = dm.kinds[(name, comp)]
    s, w = gauss_1d(dm.spec.trace_degree(kind) + 3)
    basis = edge_trace_basis(kind, dm.spec.trace_degree(kind), s)
    total = 0.0
    for e in edges:
        vd, idd = dm.edge_dofs(name, comp, e)
        idx = list(vd) + list(idd)
        c = solution.traces[idx]
        if other is not None:
            c = c - other.traces[idx]
        vals = basis.T @ c
        total += float(np.sum(w * 0.5 * mesh.h * np.abs(vals) ** 2))
    return math.sqrt(total)


def compare_formulations(config):
    """Solve acoustics A and B on one mesh and measure their discrepancies.

    Field discrepancy: ||p_A - p_B|| / ||p_exact|| over interior elements.
    Trace discrepancy: L2 norm of the trace difference on edges touching PML
    elements relative to the A trace norm there, for p_hat, un_hat and pooled.
    """
    base = config if isinstance(config, RunConfig) else RunConfig.from_dict(config)
    if not base.physics.startswith("acoustics"):
        raise ConfigError("compare_formulations needs an acoustics configuration")
    runs = {}
    for phys in ("acoustics_A", "acoustics_B"):
        cfg = dataclasses.replace(base, physics=phys, report="", samples="")
        runs[phys] = run_experiment(cfg)
    a, b = runs["acoustics_A"], runs["acoustics_B"]
    mesh, exact = a.mesh, a.exact
    sa, sb = a.solution, b.solution

    spec = sa.spec
    ref = ReferenceElement(spec, m=spec.quadrature_points + 2)
    sl = LAYOUTS["acoustics_A"].field_slices(spec)[("p", 0)]
    num = den = 0.0
    for el in mesh.elements:
        if el.region != "interior":
            continue
        x, y, w = _element_points(el, ref)
        d = ref.phi.T @ (sa.fields[el.index][sl] - sb.fields[el.index][sl])
        num += float(np.sum(w * np.abs(d) ** 2))
        den += float(np.sum(w * np.abs(exact.fields(x, y)[("p", 0)]) ** 2))
    field_disc = math.sqrt(num / den)

    pml_edges = [
        e.index for e in mesh.edges if any(mesh.elements[o[0]].region == "pml" for o in e.owners)
    ]
    traces = {}
    pooled_num = pooled_den = 0.0
    for name in ("p_hat", "un_hat"):
        dn = edge_trace_l2(sa, mesh, name, 0, pml_edges, other=sb)
        nn = edge_trace_l2(sa, mesh, name, 0, pml_edges)
        traces[name] = dn / nn if nn > 0 else None
        pooled_num += dn**2
        pooled_den += nn**2
    traces["pooled"] = math.sqrt(pooled_num / pooled_den) if pooled_den > 0 else None
    return {
        "field_discrepancy": field_disc,
        "trace_discrepancy": traces,
        "error_A": a.errors["combined"],
        "error_B": b.errors["combined"],
        "error_A_p": a.errors["per_variable"]["p"],
        "error_B_p": b.errors["per_variable"]["p"],
        "pml_edges": len(pml_edges),
        "config": base.to_dict(),
    }


def convergence_study(
    p_values=(1, 2, 3),
    meshes=(4, 8, 16),
    omega=math.pi,
    angle=math.pi / 7,
    side=1.0,
    threads=1,
):
    """h-convergence for an acoustic plane wave on the full square, no PML.

    Every mesh is an N x N grid of [0, side]^2 (built as N/2 interior plus N/2
    PML cells with C = 0, so the stretch is the identity). Exact p_hat is
    imposed on the whole boundary and the error is measured over all elements.
    """
    rows = []
    for p in p_values:
        prev = None
        for N in meshes:
            if N % 2:
                raise ConfigError("mesh sizes must be even")
            cfg = RunConfig(
                physics="acoustics_A",
                omega=omega,
                p=p,
                n_int=N // 2,
                n_pml=N // 2,
                l=side / 2,
                L=side,
                hole=0.0,
                C=0.0,
                threads=threads,
            ).validate()
            exact = ExactSolution("acoustics_A", cfg.greens(), plane_wave_angle=angle)
            t0 = time.perf_counter()
            mesh, exact, system, solution, _ = _build_and_solve(
                cfg, exact=exact, rules={"*": DIRICHLET_ALL["acoustics"]}
            )
            err = relative_error(solution, mesh, exact, "full")
            e = err["combined"]
            rows.append(
                {
                    "p": p,
                    "n": N,
                    "h": side / N,
                    "error": e,
                    "error_p": err["per_variable"]["p"],
                    "rate": math.log2(prev / e) if prev else None,
                    "dofs": system.dofmap.n_dofs,
                    "seconds": time.perf_counter() - t0,
                }
            )
            prev = e
    return rows


def _variable_labels(formulation):
    names = {
        ("p", 0): "p",
        ("u", 0): "u_x",
        ("u", 1): "u_y",
        ("E", 0): "E_x",
        ("E", 1): "E_y",
        ("H", 0): "H",
        ("sigma", 0): "sigma_xx",
        ("sigma", 1): "sigma_yy",
        ("sigma", 2): "sigma_xy",
    }
    return [(key, names[key]) for key in LAYOUTS[formulation].field_slices(SpaceSpec(p=1))]


def sample_grid(mesh, resolution):
    """Cell-centred uniform grid over [0, L]^2 in row-major order, hole points removed."""
    c = (np.arange(resolution) + 0.5) * mesh.L / resolution
    pts = [(x, y) for y in c for x in c if mesh.locate(x, y) >= 0]
    return np.array(pts).reshape(-1, 2)


def export_fields(solution, mesh, exact, path, resolution=60):
    """Write solved and exact field samples as CSV; returns the number of points."""
    pts = sample_grid(mesh, resolution)
    labels = _variable_labels(solution.formulation)
    if len(pts):
        num = evaluate_fields(solution, mesh, pts[:, 0], pts[:, 1])
        ex = exact.fields(pts[:, 0], pts[:, 1])
    try:
        fh = open(path, "w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    with fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "variable", "re_h", "im_h", "re_exact", "im_exact", "region"])
        for i, (x, y) in enumerate(pts):
            region = mesh.elements[mesh.locate(x, y)].region
            for key, label in labels:
                vh = num[key][i]
                ve = ex[key][i]
                writer.writerow(
                    [repr(float(x)), repr(float(y)), label]
                    + [repr(float(v)) for v in (vh.real, vh.imag, ve.real, ve.imag)]
                    + [region]
                )
    return len(pts)
