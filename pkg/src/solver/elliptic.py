"""
Elliptic Liouville solver
Damped Newton on the 5-point discretization of
    Laplacian(w) = s(x, y) exp(lam w),  s = 1 or a harmonic source,
with Dirichlet data from an exact Field.
"""

import logging
from typing import Optional

import numpy as np

from src.analytic.expr import Expr, evaluate
from src.analytic.field import Field
from src.config import config
from src.errors import InputError, ParameterError, UsageError
from src.solver.grid import Grid2D, GridSolution, boundary_mask, boundary_values, newton

logger = logging.getLogger(__name__)


def solve_liouville(grid: Grid2D, lam: float, boundary: Field, source: Optional[Expr] = None,
                    tol: Optional[float] = None, max_iter: Optional[int] = None) -> GridSolution:
    """
    Returns the converged node values; the initial guess is the discrete
    harmonic extension of the boundary data.

    Raises:
        InputError: boundary data singular or not finite
        SolverError: Newton divergence
    """
    if lam == 0:
        raise ParameterError("lambda must be nonzero")
    if boundary.variables != tuple(grid.coords):
        raise UsageError(f"expected a boundary field over {grid.coords}, got {boundary.variables}")
    tol = config.NEWTON_TOL if tol is None else tol
    max_iter = config.NEWTON_MAX_ITER if max_iter is None else max_iter

    mask = boundary_mask(grid)
    edge = {k: v[mask] for k, v in grid.points().items()}
    if boundary.singular_mask(edge).any():
        raise InputError(f"boundary samples of {boundary!r} meet its singular set")
    frame = np.zeros(grid.shape)
    frame[mask] = boundary_values(boundary, grid, mask)

    m = (grid.nx - 2) * (grid.ny - 2)
    if source is None:
        s = np.ones(m)
    else:
        s = grid.interior(np.asarray(evaluate(source, grid.points(), strict=False), dtype=float)
                          * np.ones(grid.shape))

    # harmonic extension of the boundary data
    harmonic = grid.solve(np.zeros(m), np.ones(m), grid.laplacian(frame))
    start = harmonic

    def residual(inner):
        return grid.laplacian(grid.with_interior(frame, inner)) - s * np.exp(lam * inner)

    def solve_step(inner, rhs):
        # J = L - diag(lam s e^(lam w)); solve() takes diag(d) - diag(c) L
        return -grid.solve(lam * s * np.exp(lam * inner), np.ones(m), rhs)

    inner, iterations, trace = newton(residual, solve_step, start, tol, max_iter, "liouville")
    logger.info(f"✅ liouville: {grid.shape} nodes, {iterations} Newton iterations, |F|={trace[-1]:.3e}")
    return GridSolution(grid, grid.with_interior(frame, inner), None, iterations)
