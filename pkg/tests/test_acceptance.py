"""Acceptance criteria 1-8 with their pinned tolerances.

Each test records one PASS/FAIL line (printed in the terminal summary) and
then asserts the same condition, so a failing criterion fails its test.
"""

import math
import time

import numpy as np
from dpgpml.app import RunConfig, compare_formulations, convergence_study, relative_error, run_experiment
from dpgpml.dpg_solver import DPGSolverError, apply_bcs, assemble_skeleton, interpolate_exact, solve
from dpgpml.exact_solutions import ExactSolution, GreensParams, acoustic_exact_2d, elastic_exact_2d, maxwell_exact_2d
from dpgpml.fe_spaces import ReferenceElement
from dpgpml.formulations import assemble_element
from dpgpml.pml import FORMULATIONS
from dpgpml.special_functions import bessel_j, bessel_y

ERROR_BOUND = 1.0  # percent, combined interior relative L2 error
RUNTIME = {"acoustics_A": 60.0, "maxwell2d": 60.0, "elasticity2d": 120.0}


def _timed_run(physics, **kw):
    t0 = time.perf_counter()
    rep = run_experiment(RunConfig(physics=physics, **kw))
    return rep, time.perf_counter() - t0


def _floor(rep):
    """Interior error of the element-wise L2 projection of the exact solution (diagnostic)."""
    proj = interpolate_exact(rep.mesh, rep.solution.formulation, rep.solution.spec, rep.exact)
    return relative_error(proj, rep.mesh, rep.exact)["combined"]


def _green_case(physics, criterion, record):
    rep, dt = _timed_run(physics)
    err = rep.errors["combined"]
    ok = err < ERROR_BOUND and dt < RUNTIME[physics] and rep.solver["algebraic_residual"] < 1e-10
    per = ", ".join(f"{k} {v:.4f}%" for k, v in rep.errors["per_variable"].items())
    record(
        criterion,
        ok,
        f"{physics}: combined interior error {err:.4f}% (bound < {ERROR_BOUND}%), {per}; "
        f"runtime {dt:.2f}s (bound < {RUNTIME[physics]:.0f}s); "
        f"algebraic residual {rep.solver['algebraic_residual']:.1e}; "
        f"diagnostic L2-projection floor {_floor(rep):.4f}%",
    )
    return ok


def test_criterion_1_acoustics_a(record):
    assert _green_case("acoustics_A", 1, record)


def test_criterion_2_acoustics_b(record):
    rep, _ = _timed_run("acoustics_B")
    cmp = compare_formulations(RunConfig())
    err_b = rep.errors["combined"]
    bound = cmp["error_A"] + cmp["error_B"]
    field = cmp["field_discrepancy"] * 100.0  # percent, same scale as the errors
    trace = cmp["trace_discrepancy"]["pooled"]
    ok_err = err_b < ERROR_BOUND
    ok_tri = field <= bound
    ok_trace = trace > 10 * cmp["field_discrepancy"]
    record(
        2,
        ok_err and ok_tri and ok_trace,
        f"acoustics_B interior error {err_b:.4f}% (bound < {ERROR_BOUND}%) [{'ok' if ok_err else 'not met'}]; "
        f"field discrepancy {field:.2e}% <= error_A + error_B = {bound:.4f}% [{'ok' if ok_tri else 'not met'}]; "
        f"PML trace discrepancy {trace:.2e} > 10 x {cmp['field_discrepancy']:.2e} "
        f"[{'ok' if ok_trace else 'not met'}]; diagnostic L2-projection floor {_floor(rep):.4f}%",
    )
    assert ok_err and ok_tri and ok_trace


def test_criterion_3_maxwell(record):
    assert _green_case("maxwell2d", 3, record)


def test_criterion_4_elasticity(record):
    assert _green_case("elasticity2d", 4, record)


def test_criterion_5_reflection_control(record):
    rep, dt = _timed_run("acoustics_A", C=0.0)
    err = rep.errors["combined"]
    ok = err > 10.0
    record(5, ok, f"C = 0 with outer p_hat = 0: interior error {err:.2f}% (bound > 10%); runtime {dt:.2f}s")
    assert ok


def test_criterion_6_identity_stretch(record, default_mesh):
    cfg = RunConfig()
    spec, ref = cfg.space(), ReferenceElement(cfg.space())
    worst = 0.0
    for el in default_mesh.elements:
        if el.region != "interior":
            continue
        a = assemble_element("acoustics_A", el, spec, ref, cfg.profile(), cfg.materials())
        b = assemble_element("acoustics_B", el, spec, ref, cfg.profile(), cfg.materials())
        worst = max(worst, np.max(np.abs(a.B - b.B)), np.max(np.abs(a.G - b.G)), np.max(np.abs(a.load - b.load)))
    cmp = compare_formulations(RunConfig(C=0.0))
    disc = max(cmp["field_discrepancy"], cmp["trace_discrepancy"]["pooled"])
    ok = worst <= 1e-14 and disc < 1e-9
    record(
        6,
        ok,
        f"max entrywise |A - B| on interior elements {worst:.1e} (bound 1e-14); "
        f"full-solve discrepancy at C = 0 {disc:.1e} (bound < 1e-9)",
    )
    assert ok


def _fd_ratio(residual):
    h = 2e-3
    return abs(residual(h)) / abs(residual(h / 2))


def _fd_oracles():
    P = GreensParams()
    x, y = 1.3, 0.4
    lap = lambda f, h: (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4 * f(x, y)) / h**2
    pf = lambda a, b: acoustic_exact_2d(a, b)[0]
    helm = lambda h: -lap(pf, h) - P.omega**2 * pf(x, y)
    hf = lambda a, b: maxwell_exact_2d(a, b)[2]
    ex = maxwell_exact_2d(x, y)[0]
    amp = lambda h: (hf(x, y + h) - hf(x, y - h)) / (2 * h) + 1j * P.omega * P.eps0 * ex
    u = lambda c: (lambda a, b: elastic_exact_2d(a, b)[c])

    def nav(h):
        ux, uy = u(0), u(1)
        dxx = (ux(x + h, y) - 2 * ux(x, y) + ux(x - h, y)) / h**2
        dxy = (uy(x + h, y + h) - uy(x + h, y - h) - uy(x - h, y + h) + uy(x - h, y - h)) / (4 * h * h)
        return P.mu * lap(ux, h) + (P.lam + P.mu) * (dxx + dxy) + P.rho0 * P.omega**2 * ux(x, y)

    return {"helmholtz": _fd_ratio(helm), "maxwell": _fd_ratio(amp), "navier": _fd_ratio(nav)}


def test_criterion_7_property_suite(record, default_mesh):
    cfg = RunConfig()
    spec = cfg.space()
    ref = ReferenceElement(spec)
    ref2 = ReferenceElement(spec, m=spec.quadrature_points + 2)
    herm = quad = 0.0
    min_eig = np.inf
    global_ok = True
    global_herm = 0.0
    for phys in FORMULATIONS:
        params = cfg.materials()
        for el in default_mesh.elements:
            sys = assemble_element(phys, el, spec, ref, cfg.profile(), params)
            herm = max(herm, np.max(np.abs(sys.G - sys.G.conj().T)) / np.max(np.abs(sys.G)))
            min_eig = min(min_eig, np.linalg.eigvalsh(sys.G).min())
            if el.index % 9 == 0 or (el.region == "pml" and el.x0 == el.y0):
                s2 = assemble_element(phys, el, spec, ref2, cfg.profile(), params)
                quad = max(quad, np.max(np.abs(sys.B - s2.B)), np.max(np.abs(sys.G - s2.G)))
        system = assemble_skeleton(default_mesh, phys, spec, cfg.profile(), cfg.materials())
        global_herm = max(global_herm, abs(system.K - system.K.conj().T).max() / abs(system.K).max())
        apply_bcs(system, default_mesh, phys, ExactSolution(phys, cfg.greens()))
        try:
            sol = solve(system)
            global_ok &= sol.algebraic_residual < 1e-10
        except DPGSolverError:
            global_ok = False
    xs = np.logspace(-2, math.log10(200.0), 1000)
    wr = 0.0
    for n in (0, 1):
        w = bessel_j(n + 1, xs) * bessel_y(n, xs) - bessel_j(n, xs) * bessel_y(n + 1, xs)
        wr = max(wr, np.max(np.abs(w * math.pi * xs / 2 - 1)))
    fd = _fd_oracles()
    fd_ok = all(3.5 < r < 4.5 for r in fd.values())
    ok = herm < 1e-13 and min_eig > 0 and global_herm < 1e-12 and global_ok and quad < 1e-10 and wr < 1e-10 and fd_ok
    record(
        7,
        ok,
        f"Gram Hermitian rel. {herm:.1e}, min eig {min_eig:.2e}; global K Hermitian rel. {global_herm:.1e}, "
        f"factorizations {'succeeded' if global_ok else 'FAILED'}; quadrature m -> m+2 change {quad:.1e} "
        f"(bound 1e-10); Wronskian rel. {wr:.1e} (bound 1e-10); FD residual ratios h -> h/2 "
        + ", ".join(f"{k} {v:.2f}" for k, v in fd.items())
        + " (O(h^2) means about 4)",
    )
    assert ok


def test_criterion_8_convergence(record):
    t0 = time.perf_counter()
    rows = convergence_study(p_values=(1, 2, 3))
    dt = time.perf_counter() - t0
    rates = {p: [r["rate"] for r in rows if r["p"] == p and r["rate"] is not None] for p in (1, 2, 3)}
    err16 = {r["p"]: r["error"] for r in rows if r["n"] == 16}
    ok_rates = all(min(rates[p]) >= p + 0.8 for p in (1, 2))
    gap = err16[1] / err16[3]
    ok = ok_rates and dt < 120.0 and gap >= 100.0
    record(
        8,
        ok,
        "rates " + "; ".join(f"p={p}: " + ", ".join(f"{r:.3f}" for r in rates[p]) for p in (1, 2, 3))
        + f" (bound >= p + 0.8 for p = 1, 2); error ratio p=1/p=3 on 16x16 {gap:.0f} (bound >= 100); "
        f"runtime {dt:.2f}s (bound < 120s)",
    )
    assert ok
