"""2D DPG solver with perfectly matched layers for time-harmonic waves."""

from .app import RunConfig, compare_formulations, convergence_study, export_fields, run_experiment
from .mesh import build_lshape_mesh

__all__ = [
    "RunConfig",
    "build_lshape_mesh",
    "compare_formulations",
    "convergence_study",
    "export_fields",
    "run_experiment",
]
__version__ = "0.1.0"
