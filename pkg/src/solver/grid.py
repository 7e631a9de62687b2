"""
Grids and solver configuration
Uniform node grids in one and two dimensions, the 3- and 5-point
Laplacians on their interior, and the shared damped Newton iteration.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field as PydanticField, model_validator
from scipy.linalg import solve_banded
from scipy.sparse import diags, identity, kron
from scipy.sparse.linalg import spsolve

from src.analytic.field import Field
from src.config import config
from src.errors import InputError, SolverError

logger = logging.getLogger(__name__)


class SolverConfig(BaseModel):
    """
    Time stepping and Newton settings. dt=None ties the step to the grid:
    dt_factor * h**dt_power, with per-solver defaults when those are unset.
    """
    t0: float = 0.0
    T: float = 0.0
    dt: Optional[float] = PydanticField(default=None, gt=0.0)
    dt_factor: Optional[float] = PydanticField(default=None, gt=0.0)
    dt_power: Optional[int] = PydanticField(default=None, ge=1, le=2)
    theta: float = PydanticField(default=0.5, ge=0.5, le=1.0)
    newton_tol: float = PydanticField(default_factory=lambda: config.NEWTON_TOL, gt=0.0)
    max_iter: int = PydanticField(default_factory=lambda: config.NEWTON_MAX_ITER, ge=1)
    output_every: Optional[float] = PydanticField(default=None, gt=0.0)

    @model_validator(mode="after")
    def _times(self):
        if self.T < self.t0:
            raise ValueError(f"final time T={self.T} precedes t0={self.t0}")
        return self

    def steps(self, h: float, factor: float = 1.0, power: int = 2) -> Tuple[int, float]:
        """Number of steps and the adjusted step landing exactly on T"""
        span = self.T - self.t0
        if span == 0:
            return 0, 0.0
        factor = factor if self.dt_factor is None else self.dt_factor
        power = power if self.dt_power is None else self.dt_power
        dt = self.dt if self.dt is not None else factor * h ** power
        n = max(1, int(np.ceil(span / dt - 1e-9)))
        return n, span / n


@dataclass(frozen=True)
class Grid1D:
    lo: float
    hi: float
    n: int
    variable: str = "eta"

    def __post_init__(self):
        if self.n < 3:
            raise InputError(f"grid needs at least 3 nodes, got {self.n}")
        if not self.hi > self.lo:
            raise InputError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    @property
    def shape(self) -> Tuple[int]:
        return (self.n,)

    def points(self, **extra: float) -> dict:
        pts = {self.variable: self.nodes}
        pts.update({k: np.full(self.n, v) for k, v in extra.items()})
        return pts

    def interior(self, values: np.ndarray) -> np.ndarray:
        return values[1:-1]

    def with_interior(self, values: np.ndarray, inner: np.ndarray) -> np.ndarray:
        out = values.copy()
        out[1:-1] = inner
        return out

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        return (values[2:] - 2.0 * values[1:-1] + values[:-2]) / self.h ** 2

    def solve(self, diagonal: np.ndarray, scale: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        """Solve (diag(diagonal) - diag(scale) L) x = rhs on the interior"""
        h2 = self.h ** 2
        m = diagonal.size
        ab = np.zeros((3, m))
        ab[1] = diagonal + 2.0 * scale / h2
        ab[0, 1:] = -scale[:-1] / h2
        ab[2, :-1] = -scale[1:] / h2
        return solve_banded((1, 1), ab, rhs)

    def rows(self, values: np.ndarray):
        for x, v in zip(self.nodes, values):
            yield float(x), 0.0, float(v)


@dataclass(frozen=True)
class Grid2D:
    box: Tuple[Tuple[float, float], Tuple[float, float]]
    nx: int
    ny: int
    coords: Tuple[str, str] = ("x", "y")

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise InputError(f"grid needs at least 3x3 nodes, got {self.nx}x{self.ny}")
        (x0, x1), (y0, y1) = self.box
        if not (x1 > x0 and y1 > y0):
            raise InputError(f"empty box {self.box}")

    @property
    def hx(self) -> float:
        return (self.box[0][1] - self.box[0][0]) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.box[1][1] - self.box[1][0]) / (self.ny - 1)

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(*self.box[0], self.nx)

    @property
    def y(self) -> np.ndarray:
        return np.linspace(*self.box[1], self.ny)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.ny, self.nx)

    def points(self, **extra: float) -> dict:
        X, Y = np.meshgrid(self.x, self.y, indexing="xy")
        pts = {self.coords[0]: X, self.coords[1]: Y}
        pts.update({k: np.full(X.shape, v) for k, v in extra.items()})
        return pts

    def interior(self, values: np.ndarray) -> np.ndarray:
        return values[1:-1, 1:-1].ravel()

    def with_interior(self, values: np.ndarray, inner: np.ndarray) -> np.ndarray:
        out = values.copy()
        out[1:-1, 1:-1] = inner.reshape(self.ny - 2, self.nx - 2)
        return out

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        c = values[1:-1, 1:-1]
        lap = (values[1:-1, 2:] - 2.0 * c + values[1:-1, :-2]) / self.hx ** 2
        lap += (values[2:, 1:-1] - 2.0 * c + values[:-2, 1:-1]) / self.hy ** 2
        return lap.ravel()

    def _operator(self):
        mx, my = self.nx - 2, self.ny - 2
        tx = diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(mx, mx)) / self.hx ** 2
        ty = diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(my, my)) / self.hy ** 2
        return kron(identity(my), tx) + kron(ty, identity(mx))

    def solve(self, diagonal: np.ndarray, scale: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        """Solve (diag(diagonal) - diag(scale) L) x = rhs on the interior"""
        matrix = diags(diagonal) - diags(scale) @ self._operator()
        return np.atleast_1d(spsolve(matrix.tocsc(), rhs))

    def rows(self, values: np.ndarray):
        X, Y = np.meshgrid(self.x, self.y, indexing="xy")
        for x, y, v in zip(X.ravel(), Y.ravel(), values.ravel()):
            yield float(x), float(y), float(v)


def sample_exact(exact: Field, grid, time: Optional[float] = None) -> np.ndarray:
    """Exact node values; a singular node inside the grid is an input error"""
    extra = {} if time is None else {"t": time}
    pts = grid.points(**extra)
    if exact.singular_mask(pts).any():
        raise InputError(f"{exact!r} is singular inside the solver domain (t={time})")
    values = exact.evaluate_array(pts)
    if not np.all(np.isfinite(values)):
        raise InputError(f"{exact!r} is not finite on the grid (t={time})")
    return values


def newton(residual: Callable[[np.ndarray], np.ndarray],
           solve_step: Callable[[np.ndarray, np.ndarray], np.ndarray],
           start: np.ndarray, tol: float, max_iter: int, label: str = "newton") -> Tuple[np.ndarray, int, List[float]]:
    """
    Damped Newton: step halving until the max-norm residual decreases;
    stops when the accepted update is below tol.

    Raises:
        SolverError: no convergence within max_iter, or no decreasing step
    """
    x = start.copy()
    F = residual(x)
    norm = float(np.max(np.abs(F))) if F.size else 0.0
    trace = [norm]
    for iteration in range(1, max_iter + 1):
        delta = solve_step(x, -F)
        step = 1.0
        while True:
            trial = x + step * delta
            F_trial = residual(trial)
            trial_norm = float(np.max(np.abs(F_trial))) if F_trial.size else 0.0
            small = step * float(np.max(np.abs(delta), initial=0.0)) < tol
            if np.isfinite(trial_norm) and (trial_norm < norm or small):
                break
            step *= 0.5
            if step < 1e-6:
                logger.error(f"❌ {label}: no decreasing step at iteration {iteration}")
                raise SolverError(f"{label}: line search failed at iteration {iteration}", trace)
        if small and trial_norm >= norm:
            if trial_norm > norm:
                logger.warning(f"⚠️ {label}: final update raised |F| from {norm:.3e} to {trial_norm:.3e}; "
                               f"keeping the previous iterate")
            return x, iteration - 1, trace
        x, F, norm = trial, F_trial, trial_norm
        trace.append(norm)
        logger.debug(f"{label}: iteration {iteration}, |F|={norm:.3e}, step={step:g}")
        if small:
            return x, iteration, trace
    logger.error(f"❌ {label}: no convergence in {max_iter} iterations")
    raise SolverError(f"{label}: Newton did not converge in {max_iter} iterations", trace)


def boundary_mask(grid) -> np.ndarray:
    mask = np.ones(grid.shape, dtype=bool)
    if isinstance(grid, Grid1D):
        mask[1:-1] = False
    else:
        mask[1:-1, 1:-1] = False
    return mask


def boundary_values(exact: Field, grid, mask: np.ndarray, time: Optional[float] = None) -> np.ndarray:
    """Dirichlet data: exact values on the boundary nodes"""
    extra = {} if time is None else {"t": time}
    pts = {k: v[mask] for k, v in grid.points(**extra).items()}
    values = exact.evaluate_array(pts)
    if not np.all(np.isfinite(values)):
        raise InputError(f"singular boundary sample of {exact!r} (t={time})")
    return values


@dataclass
class GridSolution:
    """Node values on a grid at one time (None for steady problems)"""
    grid: object
    values: np.ndarray
    time: Optional[float] = None
    iterations: int = 0

    def max_error(self, exact: Field) -> float:
        return float(np.max(np.abs(self.values - sample_exact(exact, self.grid, self.time))))

    def to_frame(self) -> pd.DataFrame:
        """Columns x, y, value; one node per row, y outer, x inner"""
        return pd.DataFrame(list(self.grid.rows(self.values)), columns=["x", "y", "value"])
