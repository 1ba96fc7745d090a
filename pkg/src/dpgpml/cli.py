"""Command line entry point: ``dpgpml {solve,compare,converge,export}``."""

import argparse
import json
import sys

from .app import (
    ConfigError,
    RunConfig,
    compare_formulations,
    convergence_study,
    export_fields,
    run_experiment,
    write_text,
)
from .dpg_solver import BoundaryConfigError, DPGSolverError
from .exact_solutions import SingularityError
from .formulations import AssemblyError
from .mesh import MeshConfigError
from .pml import SingularStretchError, StretchDomainError

# (category, exit code) by exception type, most specific first
ERROR_CATEGORIES = (
    (ConfigError, "config", 2),
    (MeshConfigError, "mesh", 3),
    (BoundaryConfigError, "boundary", 3),
    (StretchDomainError, "pml", 4),
    (SingularStretchError, "pml", 4),
    (AssemblyError, "assembly", 4),
    (SingularityError, "exact_solution", 4),
    (DPGSolverError, "solver", 5),
    (OSError, "io", 6),
)


def _parser():
    ap = argparse.ArgumentParser(prog="dpgpml", description="DPG + PML time-harmonic solver")
    ap.add_argument("verb", choices=["solve", "compare", "converge", "export"])
    ap.add_argument("--config", help="JSON config file (flat RunConfig schema)")
    ap.add_argument("--out", help="output path (report JSON, or CSV for export)")
    ap.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("--threads", type=int, default=None, help="element assembly threads")
    return ap


def _load_config(args):
    cfg = RunConfig()
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc}") from exc
        cfg = RunConfig.from_json(text)
    overrides = list(args.override)
    if args.threads is not None:
        overrides.append(f"threads={args.threads}")
    return cfg.with_overrides(overrides)


def _emit(payload, out):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        write_text(out, text)
    else:
        print(text)


def run(argv=None):
    args = _parser().parse_args(argv)
    cfg = _load_config(args)
    if args.verb == "solve":
        rep = run_experiment(cfg)
        _emit(rep.to_dict(), args.out)
    elif args.verb == "compare":
        _emit(compare_formulations(cfg), args.out)
    elif args.verb == "converge":
        rows = convergence_study(threads=cfg.threads)
        _emit({"rows": rows}, args.out)
    else:
        rep = run_experiment(cfg)
        path = args.out or cfg.samples or "fields.csv"
        n = export_fields(rep.solution, rep.mesh, rep.exact, path, cfg.grid)
        print(json.dumps({"path": path, "points": n}))
    return 0


def main(argv=None):
    try:
        return run(argv)
    except Exception as exc:  # noqa: BLE001 - mapped to a category below
        for etype, category, code in ERROR_CATEGORIES:
            if isinstance(exc, etype):
                break
        else:
            category, code = "internal", 1
        print(json.dumps({"error": category, "message": str(exc)}), file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
