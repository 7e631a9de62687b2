"""
Parabolic solvers
Theta-method time stepping of u_t = f Laplacian(ln u) - lam u in the log
variable s = ln u, so every iterate u = exp(s) stays positive. theta=0.5
is Crank-Nicolson; theta=1 is the first-order implicit scheme.
Dirichlet data come from an exact reference Field.
"""

import logging
from dataclasses import dataclass, field as dataclass_field
from typing import List, Optional

import numpy as np

from src.analytic.expr import Expr, evaluate
from src.analytic.field import Field
from src.errors import InputError, UsageError
from src.solver.grid import (
    Grid1D, Grid2D, GridSolution, SolverConfig, boundary_mask, boundary_values, newton, sample_exact,
)

logger = logging.getLogger(__name__)


@dataclass
class Trajectory:
    """
    Snapshots at t0, at the first step reaching each multiple of
    cfg.output_every past t0 (when set), and at T.
    """
    grid: object
    times: List[float] = dataclass_field(default_factory=list)
    snapshots: List[np.ndarray] = dataclass_field(default_factory=list)
    newton_iterations: List[int] = dataclass_field(default_factory=list)

    @property
    def final(self) -> GridSolution:
        return GridSolution(self.grid, self.snapshots[-1], self.times[-1], sum(self.newton_iterations))


def _check_domain(exact: Field, grid, cfg: SolverConfig) -> None:
    for t in np.linspace(cfg.t0, cfg.T, 5):
        sample_exact(exact, grid, float(t))


def _march(exact: Field, grid, cfg: SolverConfig, weight: np.ndarray, sink: float,
           initial: Optional[np.ndarray], factor: float, power: int, label: str) -> Trajectory:
    _check_domain(exact, grid, cfg)
    u0 = sample_exact(exact, grid, cfg.t0) if initial is None else np.asarray(initial, dtype=float)
    if u0.shape != grid.shape:
        raise InputError(f"initial data has shape {u0.shape}, grid is {grid.shape}")
    if not np.all(u0 > 0):
        raise InputError("initial data must be strictly positive")

    n_steps, dt = cfg.steps(grid.h, factor, power)
    theta = cfg.theta
    mask = boundary_mask(grid)
    s = np.log(u0)
    trajectory = Trajectory(grid, [cfg.t0], [u0])
    next_output = cfg.t0 + cfg.output_every if cfg.output_every else np.inf
    logger.info(f"{label}: {grid.shape} nodes, {n_steps} steps of dt={dt:.3e}, theta={theta:g}")

    for k in range(n_steps):
        t_new = cfg.t0 + (k + 1) * dt
        s_old = s
        e_old = np.exp(grid.interior(s_old))
        explicit = weight * grid.laplacian(s_old) - sink * e_old

        frame = s_old.copy()
        frame[mask] = np.log(boundary_values(exact, grid, mask, t_new))

        def residual(inner):
            e = np.exp(inner)
            implicit = weight * grid.laplacian(grid.with_interior(frame, inner)) - sink * e
            return e - e_old - dt * (theta * implicit + (1.0 - theta) * explicit)

        def solve_step(inner, rhs):
            diagonal = np.exp(inner) * (1.0 + dt * theta * sink)
            return grid.solve(diagonal, dt * theta * weight, rhs)

        inner, iterations, _ = newton(residual, solve_step, grid.interior(s_old), cfg.newton_tol,
                                      cfg.max_iter, f"{label} step {k + 1}")
        s = grid.with_interior(frame, inner)
        trajectory.newton_iterations.append(iterations)
        if t_new >= next_output - 1e-12 and k < n_steps - 1:
            trajectory.times.append(t_new)
            trajectory.snapshots.append(np.exp(s))
            while next_output <= t_new + 1e-12:
                next_output += cfg.output_every

    if n_steps:
        trajectory.times.append(cfg.T)
        trajectory.snapshots.append(np.exp(s))
    return trajectory


def solve_fast1d(exact: Field, grid: Grid1D, cfg: SolverConfig,
                 initial: Optional[np.ndarray] = None) -> Trajectory:
    """v_t = (ln v)_eta_eta; dt defaults to h^2"""
    if exact.variables != (grid.variable, "t"):
        raise UsageError(f"expected an exact field over ({grid.variable}, t), got {exact.variables}")
    weight = np.ones(grid.n - 2)
    return _march(exact, grid, cfg, weight, 0.0, initial, 1.0, 2, "fast1d")


def solve_fast2d(exact: Field, grid: Grid2D, cfg: SolverConfig, weight: Optional[Expr] = None,
                 sink: float = 0.0, initial: Optional[np.ndarray] = None) -> Trajectory:
    """u_t = f Laplacian(ln u) - lam u; f = 1 and lam = 0 by default, dt defaults to h/2"""
    if exact.variables != tuple(grid.coords) + ("t",):
        raise UsageError(f"expected an exact field over {grid.coords + ('t',)}, got {exact.variables}")
    if weight is None:
        weights = np.ones((grid.nx - 2) * (grid.ny - 2))
    else:
        weights = grid.interior(np.asarray(evaluate(weight, grid.points(), strict=False), dtype=float)
                                * np.ones(grid.shape))
        if not np.all(weights > 0):
            raise InputError("diffusion weight must be positive on the grid")
    return _march(exact, grid, cfg, weights, float(sink), initial, 0.5, 1, "fast2d")
