import csv
import json
import math

import numpy as np
import pytest

from dpgpml.app import (
    ConfigError,
    RunConfig,
    evaluate_fields,
    export_fields,
    relative_error,
    run_experiment,
    sample_grid,
)
from dpgpml.cli import main
from dpgpml.dpg_solver import interpolate_exact

FAST = ["p=2", "n_int=4", "n_pml=2", "omega=6.283185307179586"]


def test_defaults():
    c = RunConfig()
    assert (c.physics, c.p, c.dp, c.n_int, c.n_pml) == ("acoustics_A", 4, 1, 8, 4)
    assert (c.l, c.L, c.hole, c.C, c.n) == (2.0, 3.0, 1.0, 5.0, 2)
    assert c.omega == pytest.approx(6 * math.pi)
    assert (c.eps0, c.mu0, c.sigma, c.lam, c.mu, c.rho0) == (1.0, 1.0, 0.0, 2.0, 1.0, 1.0)


def test_config_round_trip_and_overrides():
    c = RunConfig().with_overrides(["physics=maxwell2d", "p=3", "C=8"])
    assert (c.physics, c.p, c.C) == ("maxwell2d", 3, 8.0)
    assert RunConfig.from_json(c.to_json()) == c
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"bogus": 1})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"physics": "optics"})
    with pytest.raises(ConfigError):
        RunConfig.from_json("[1, 2]")
    with pytest.raises(ConfigError):
        RunConfig().with_overrides(["p"])


def test_report_echo_reproduces_run():
    cfg = RunConfig().with_overrides(FAST)
    a = run_experiment(cfg)
    b = run_experiment(RunConfig.from_dict(a.to_dict()["config"]))
    assert a.errors == b.errors
    assert a.residual_total == b.residual_total
    assert json.loads(a.to_json())["errors"]["region"] == "interior"


def test_zero_fields_give_hundred_percent(acoustics_a_run):
    r = acoustics_a_run
    sol = interpolate_exact(r.mesh, "acoustics_A", r.solution.spec, r.exact, elements=[])
    assert relative_error(sol, r.mesh, r.exact)["combined"] == pytest.approx(100.0)


def test_projection_error_below_solved_error(acoustics_a_run):
    r = acoustics_a_run
    proj = interpolate_exact(r.mesh, "acoustics_A", r.solution.spec, r.exact)
    e_proj = relative_error(proj, r.mesh, r.exact)["combined"]
    assert e_proj <= r.errors["combined"]


def test_full_region_error_much_larger(acoustics_a_run):
    r = acoustics_a_run
    assert r.errors["full_region_combined"] > 10 * r.errors["combined"]
    with pytest.raises(ValueError):
        relative_error(r.solution, r.mesh, r.exact, region="pml")


def test_pml_strength_insensitivity(acoustics_a_run):
    c8 = run_experiment(RunConfig(C=8.0))
    e5 = acoustics_a_run.errors["combined"]
    assert abs(c8.errors["combined"] - e5) < 0.05 * e5


def test_pml_decay(acoustics_a_run):
    r = acoustics_a_run
    pts = sample_grid(r.mesh, 60)
    p = evaluate_fields(r.solution, r.mesh, pts[:, 0], pts[:, 1])[("p", 0)]
    band = pts[:, 0] >= 2.75
    interior = np.maximum(pts[:, 0], pts[:, 1]) <= 2.0
    assert np.abs(p[band]).max() < 0.2 * np.abs(p[interior]).max()


def test_sample_grid_skips_hole(default_mesh):
    pts = sample_grid(default_mesh, 4)
    assert len(pts) == 15
    assert np.all(np.maximum(pts[:, 0], pts[:, 1]) > 1.0)


def test_export_rows_and_exact_columns(acoustics_a_run, tmp_path):
    r = acoustics_a_run
    path = tmp_path / "f.csv"
    assert export_fields(r.solution, r.mesh, r.exact, path, resolution=4) == 15
    assert export_fields(r.solution, r.mesh, r.exact, path, resolution=3) == 8
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["x", "y", "variable", "re_h", "im_h", "re_exact", "im_exact", "region"]
    assert len(rows) == 8 * 3
    centre = [row for row in rows if float(row["x"]) == 1.5 and float(row["y"]) == 1.5]
    ref = r.exact.fields(np.array([1.5]), np.array([1.5]))
    for row, key in zip(centre, [("p", 0), ("u", 0), ("u", 1)]):
        assert float(row["re_exact"]) == ref[key][0].real
        assert float(row["im_exact"]) == ref[key][0].imag
        assert row["region"] == "interior"


def test_export_unwritable(acoustics_a_run, tmp_path):
    r = acoustics_a_run
    with pytest.raises(OSError):
        export_fields(r.solution, r.mesh, r.exact, tmp_path / "missing" / "f.csv", resolution=2)


def _overrides():
    return [a for o in FAST for a in ("--override", o)]


def test_cli_solve(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["solve", "--out", str(out)] + _overrides()) == 0
    rep = json.loads(out.read_text())
    assert set(rep) == {"config", "dofs", "errors", "residual_total", "timings", "solver"}
    assert rep["solver"]["algebraic_residual"] < 1e-10


def test_cli_config_file_and_export(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(RunConfig().with_overrides(FAST).to_json())
    csv_path = tmp_path / "f.csv"
    assert main(["export", "--config", str(cfg), "--out", str(csv_path), "--override", "grid=4"]) == 0
    assert json.loads(capsys.readouterr().out)["points"] == 15


def test_cli_compare(capsys):
    assert main(["compare", "--override", "C=0"] + _overrides()) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["field_discrepancy"] < 1e-9


@pytest.mark.parametrize(
    "argv,code,category",
    [
        (["solve", "--override", "physics=optics"], 2, "config"),
        (["solve", "--override", "hole=0.3"], 3, "mesh"),
        (["solve", "--config", "/nonexistent/c.json"], 6, "io"),
    ],
)
def test_cli_error_codes(argv, code, category, capsys):
    assert main(argv) == code
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == category
