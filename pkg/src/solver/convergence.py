"""
Convergence studies
Runs a solver over a ladder of grids against an exact Field and reports
observed orders p = log(e1/e2) / log(h1/h2) per refinement pair.
"""

import json
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field as PydanticField

from src.analytic.expr import Expr
from src.analytic.field import Field
from src.config import config
from src.errors import InputError, UsageError
from src.solver.elliptic import solve_liouville
from src.solver.grid import Grid1D, Grid2D, GridSolution, SolverConfig
from src.solver.parabolic import solve_fast1d, solve_fast2d

logger = logging.getLogger(__name__)

STUDY_EQUATIONS = ("fast1d", "fast2d", "liouville")


class GridLevel(BaseModel):
    n: int
    h: float
    max_error: float
    newton_iterations: int = 0


class ConvergenceReport(BaseModel):
    equation: str
    theta: Optional[float] = None
    levels: List[GridLevel]
    orders: List[Optional[float]]
    flagged: List[int] = PydanticField(default_factory=list)
    expected_band: Tuple[float, float] = config.EXPECTED_ORDER_BAND

    @property
    def passed(self) -> bool:
        return not self.flagged

    def to_json(self) -> str:
        return json.dumps(self.model_dump(), sort_keys=True, indent=2)


@dataclass
class StudyPlan:
    """What to solve on each grid of a ladder"""
    equation: str
    box: Tuple[Tuple[float, float], ...]
    solver: SolverConfig = None
    weight: Optional[Expr] = None
    sink: float = 0.0
    lam: float = 0.0
    source: Optional[Expr] = None

    def __post_init__(self):
        if self.equation not in STUDY_EQUATIONS:
            raise UsageError(f"unknown study equation '{self.equation}', expected one of {STUDY_EQUATIONS}")
        if self.solver is None:
            self.solver = SolverConfig()

    def grid(self, n: int):
        if self.equation == "fast1d":
            (lo, hi), = self.box
            return Grid1D(lo, hi, n)
        return Grid2D(tuple(self.box), n, n)

    def run(self, exact: Field, n: int) -> GridSolution:
        grid = self.grid(n)
        if self.equation == "fast1d":
            return solve_fast1d(exact, grid, self.solver).final
        if self.equation == "fast2d":
            return solve_fast2d(exact, grid, self.solver, self.weight, self.sink).final
        return solve_liouville(grid, self.lam, exact, self.source, self.solver.newton_tol, self.solver.max_iter)


def observed_order(e1: float, e2: float, h1: float, h2: float) -> Optional[float]:
    if e1 <= 0 or e2 <= 0 or not (np.isfinite(e1) and np.isfinite(e2)):
        return None
    return float(np.log(e1 / e2) / np.log(h1 / h2))


def run_ladder(plan: StudyPlan, exact: Field, ladder: Sequence[int]) -> List[Tuple[GridLevel, GridSolution]]:
    """Solve on every grid of the ladder; max-norm error against the exact field"""
    runs = []
    for n in ladder:
        solution = plan.run(exact, n)
        error = solution.max_error(exact)
        if not np.isfinite(error):
            raise InputError(f"non-finite error on the {n}-node grid")
        level = GridLevel(n=n, h=solution.grid.h, max_error=error, newton_iterations=solution.iterations)
        logger.info(f"{plan.equation}: n={n}, h={solution.grid.h:.4e}, max error={error:.3e}")
        runs.append((level, solution))
    return runs


def summarize(plan: StudyPlan, levels: Sequence[GridLevel],
              band: Optional[Tuple[float, float]] = None) -> ConvergenceReport:
    """Observed orders per refinement pair; a single level gives an empty order list"""
    band = band or config.EXPECTED_ORDER_BAND
    orders, flagged = [], []
    for i, (coarse, fine) in enumerate(zip(levels, levels[1:])):
        ratio = coarse.h / fine.h
        if not 1.8 <= ratio <= 2.2:
            raise UsageError(f"grid {fine.n} does not refine grid {coarse.n} by 2x (ratio {ratio:.3f})")
        p = observed_order(coarse.max_error, fine.max_error, coarse.h, fine.h)
        orders.append(p)
        if p is not None and not band[0] <= p <= band[1]:
            flagged.append(i)
            logger.warning(f"⚠️ {plan.equation}: observed order {p:.3f} outside {band} for n={coarse.n}->{fine.n}")
        elif p is not None:
            logger.info(f"✅ {plan.equation}: observed order {p:.3f} for n={coarse.n}->{fine.n}")

    theta = None if plan.equation == "liouville" else plan.solver.theta
    return ConvergenceReport(equation=plan.equation, theta=theta, levels=list(levels), orders=orders,
                             flagged=flagged, expected_band=tuple(band))


def convergence_study(plan: StudyPlan, exact: Field, ladder: Sequence[int],
                      band: Optional[Tuple[float, float]] = None) -> ConvergenceReport:
    """
    Raises:
        UsageError: fewer than two grids, or a ladder that does not refine by about 2x
        InputError: exact field singular inside the domain
    """
    if len(ladder) < 2:
        raise UsageError("a convergence study needs at least two grids")
    runs = run_ladder(plan, exact, ladder)
    return summarize(plan, [level for level, _ in runs], band)
