"""
Reference numerical solvers checked against exact solutions.
"""

from src.solver.convergence import ConvergenceReport, StudyPlan, convergence_study, run_ladder, summarize
from src.solver.elliptic import solve_liouville
from src.solver.grid import Grid1D, Grid2D, GridSolution, SolverConfig
from src.solver.ode import ChargeTransferAnsatz, check_printed_reduction, integrate_ode22, system22_ansatz_residual
from src.solver.parabolic import Trajectory, solve_fast1d, solve_fast2d

__all__ = [
    "ConvergenceReport", "ChargeTransferAnsatz", "Grid1D", "Grid2D", "GridSolution", "SolverConfig",
    "StudyPlan", "Trajectory", "check_printed_reduction", "convergence_study", "integrate_ode22",
    "run_ladder", "solve_fast1d", "solve_fast2d", "solve_liouville", "summarize",
    "system22_ansatz_residual",
]
