"""
Charge-transfer ODE system
Classic RK4 integration of
    f'' = e^f + A phi'^2,  psi'' = e^psi - B phi'^2,  phi'' = e^psi - e^f
with quintic Hermite dense output, the ansatz
    u = f(eta) + ln|grad eta|^2,  v = psi(eta) + ln|grad eta|^2,  Phi = phi(eta)
and the reduced-equation check for A = -B, f = psi, phi = eta.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel
from scipy.interpolate import BPoly

from src.analytic.expr import Expr, as_expr, evaluate, laplacian, ln
from src.analytic.harmonic import PLANE, grad_sq
from src.analytic.singular import zero_band
from src.config import config
from src.errors import DegenerateInputError, InputError, ParameterError
from src.verify import ResidualReport, SampleSpec, system22_sampled_residual

logger = logging.getLogger(__name__)

STATE = ("f", "df", "psi", "dpsi", "phi", "dphi")


def ode22_rhs(state: np.ndarray, A: float, B: float) -> np.ndarray:
    f, df, psi, dpsi, phi, dphi = state
    ef, epsi = np.exp(f), np.exp(psi)
    return np.array([df, ef + A * dphi ** 2, dpsi, epsi - B * dphi ** 2, dphi, epsi - ef])


@dataclass
class Ode22Trajectory:
    eta: np.ndarray
    states: np.ndarray
    A: float
    B: float
    blew_up: bool = False
    blow_up_at: Optional[float] = None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def second_derivatives(self) -> np.ndarray:
        return np.array([ode22_rhs(s, self.A, self.B)[1::2] for s in self.states])

    def dense(self) -> Dict[str, BPoly]:
        """Quintic Hermite interpolants of f, psi, phi from values, slopes and curvatures"""
        curvature = self.second_derivatives()
        out = {}
        for k, name in enumerate(("f", "psi", "phi")):
            data = np.column_stack([self.states[:, 2 * k], self.states[:, 2 * k + 1], curvature[:, k]])
            out[name] = BPoly.from_derivatives(self.eta, data)
        return out

    def report(self) -> Dict[str, object]:
        return {
            "steps": int(self.eta.size - 1),
            "eta_range": [float(self.eta[0]), float(self.eta[-1])],
            "blew_up": self.blew_up,
            "blow_up_at": self.blow_up_at,
            "final_state": dict(zip(STATE, map(float, self.final))),
        }


def integrate_ode22(initial: Sequence[float], A: float, B: float,
                    eta_range: Tuple[float, float], step: float) -> Ode22Trajectory:
    """
    RK4 from eta_range[0] to eta_range[1]. Stops early when a state
    component exceeds the blow-up bound or turns non-finite.
    """
    if not step > 0:
        raise ParameterError(f"step must be positive, got {step}")
    y = np.asarray(initial, dtype=float)
    if y.shape != (6,) or not np.all(np.isfinite(y)):
        raise InputError(f"initial state must be 6 finite numbers {STATE}, got {initial}")
    eta0, eta1 = map(float, eta_range)
    if not eta1 > eta0:
        raise ParameterError(f"empty eta range {eta_range}")

    n = max(1, int(np.ceil((eta1 - eta0) / step - 1e-9)))
    h = (eta1 - eta0) / n
    etas, states = [eta0], [y]
    for j in range(n):
        k1 = ode22_rhs(y, A, B)
        k2 = ode22_rhs(y + 0.5 * h * k1, A, B)
        k3 = ode22_rhs(y + 0.5 * h * k2, A, B)
        k4 = ode22_rhs(y + h * k3, A, B)
        y_next = y + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        eta = eta0 + (j + 1) * h
        if not np.all(np.isfinite(y_next)) or np.max(np.abs(y_next)) > config.BLOW_UP:
            logger.warning(f"⚠️ ode22 blow-up near eta={eta:.6g}")
            return Ode22Trajectory(np.array(etas), np.array(states), A, B, True, eta)
        y = y_next
        etas.append(eta)
        states.append(y)
    return Ode22Trajectory(np.array(etas), np.array(states), A, B)


def self_convergence_ratio(initial: Sequence[float], A: float, B: float,
                           eta_range: Tuple[float, float], step: float) -> float:
    """|y_h - y_h/2| / |y_h/2 - y_h/4| at the end point; about 16 for RK4"""
    ends = [integrate_ode22(initial, A, B, eta_range, step / 2 ** k).final for k in range(3)]
    return float(np.max(np.abs(ends[0] - ends[1])) / np.max(np.abs(ends[1] - ends[2])))


class ChargeTransferAnsatz:
    """(u, v, Phi) built from a harmonic eta(x, y) and an ODE trajectory"""

    def __init__(self, eta: Expr, trajectory: Ode22Trajectory):
        self.eta = as_expr(eta)
        self.rho = grad_sq(self.eta)
        if self.rho.is_const(0.0):
            raise DegenerateInputError("the ansatz needs a non-constant harmonic eta")
        self.trajectory = trajectory
        self.lap_ln_rho = laplacian(ln(self.rho), PLANE)
        self.singular = zero_band(self.rho, "critical points of eta")
        self._dense = trajectory.dense()

    def sample(self, pts: Dict[str, np.ndarray]) -> Tuple[Dict[str, np.ndarray], np.ndarray]:
        """Sampled Laplacians, values and |grad Phi|^2; mask of unusable points"""
        eta = np.asarray(evaluate(self.eta, pts, strict=False), dtype=float)
        rho = np.asarray(evaluate(self.rho, pts, strict=False), dtype=float)
        lap_ln_rho = np.asarray(evaluate(self.lap_ln_rho, pts, strict=False), dtype=float) * np.ones_like(eta)
        lo, hi = self.trajectory.eta[0], self.trajectory.eta[-1]
        skip = self.singular.mask(pts) | (eta < lo) | (eta > hi)
        inside = np.clip(eta, lo, hi)
        f, psi, phi = (self._dense[k] for k in ("f", "psi", "phi"))
        with np.errstate(all="ignore"):
            ln_rho = np.log(rho)
            samples = {
                "u": f(inside) + ln_rho,
                "v": psi(inside) + ln_rho,
                "lap_u": f(inside, 2) * rho + lap_ln_rho,
                "lap_v": psi(inside, 2) * rho + lap_ln_rho,
                "lap_phi": phi(inside, 2) * rho,
                "grad_phi_sq": phi(inside, 1) ** 2 * rho,
            }
        return samples, skip


def system22_ansatz_residual(ansatz: ChargeTransferAnsatz, spec: SampleSpec) -> ResidualReport:
    """Charge-transfer residual of the ODE-based ansatz at sampled (x, y)"""
    pts = spec.draw()
    samples, skip = ansatz.sample(pts)
    trajectory = ansatz.trajectory
    return system22_sampled_residual(samples, pts, skip, trajectory.A, trajectory.B, spec.seed)


class ReductionCheck(BaseModel):
    """Which scalar ODE the A = -B, f = psi, phi = eta reduction satisfies"""
    A: float
    eta_range: Tuple[float, float]
    direct_form_max: float
    printed_form_max: float
    phi_second_max: float
    confirmed: str


def check_printed_reduction(A: float, f0: float, df0: float, eta_range: Tuple[float, float] = (0.0, 1.0),
                            step: float = 1e-2, tolerance: float = 1e-6) -> ReductionCheck:
    """
    Integrates the system with B = -A, psi = f and phi = eta, then measures
    f'' - e^f - A (direct substitution) and f'' - f - A (printed form) on
    the dense output at the midpoints between steps.
    """
    eta0 = float(eta_range[0])
    trajectory = integrate_ode22([f0, df0, f0, df0, eta0, 1.0], A, -A, eta_range, step)
    dense = trajectory.dense()
    mid = 0.5 * (trajectory.eta[1:] + trajectory.eta[:-1])
    f, f2 = dense["f"](mid), dense["f"](mid, 2)
    direct = float(np.max(np.abs(f2 - np.exp(f) - A)))
    printed = float(np.max(np.abs(f2 - f - A)))
    phi_second = float(np.max(np.abs(dense["phi"](mid, 2))))
    confirmed = {
        (True, True): "both", (True, False): "direct", (False, True): "printed", (False, False): "neither",
    }[(direct < tolerance, printed < tolerance)]
    if confirmed != "printed" and confirmed != "both":
        logger.warning(f"⚠️ reduced ODE: printed form residual {printed:.3e}, direct form {direct:.3e}")
    return ReductionCheck(A=A, eta_range=(eta0, float(trajectory.eta[-1])), direct_form_max=direct,
                          printed_form_max=printed, phi_second_max=phi_second, confirmed=confirmed)
