"""Numerical laboratory for the damped Euler physical-vacuum problem.

Barenblatt reference flow (:mod:`.gas`), ansatz correction ODE
(:mod:`.ansatz`), Lagrangian finite-difference solver (:mod:`.solver`),
weighted energies and rate checks (:mod:`.diagnostics`) and the run harness
(:mod:`.harness`).
"""
from .gas import GasParameters, derive_constants
from .ansatz import AnsatzTable, integrate_ansatz
from .solver import Grid, PerturbationSpec, SolverState, build_grid, run
from .diagnostics import fit_rate, theorem_report
from .harness import RunConfig, parse_config, run_scenario

__version__ = "0.1.0"

__all__ = [
    "GasParameters",
    "derive_constants",
    "AnsatzTable",
    "integrate_ansatz",
    "Grid",
    "PerturbationSpec",
    "SolverState",
    "build_grid",
    "run",
    "fit_rate",
    "theorem_report",
    "RunConfig",
    "parse_config",
    "run_scenario",
]
