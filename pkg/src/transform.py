"""
Solution-generating transformations
Branching by a conjugate pair, lifting of source systems, reduction to
one dimension, conformal weighting and the Liouville shift. All of them
compose expression trees; only the precondition checks are numerical.
"""

import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.analytic.expr import Expr, as_expr, evaluate, exp, gradient_squared, laplacian, ln, symbols
from src.analytic.field import Field
from src.analytic.harmonic import HarmonicPair, grad_sq
from src.analytic.singular import SingularSet, floor_band, zero_band
from src.config import config
from src.errors import DegenerateInputError, DomainError, ParameterError, PreconditionError, UsageError

logger = logging.getLogger(__name__)

XI, ETA, T = symbols("xi eta t")
PAIR_COORDS = {"x": "xi", "y": "eta"}


def _describe_pair(pair: HarmonicPair) -> str:
    params = ", ".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}"
                       for k, v in pair.params.items() if not isinstance(v, (dict, list)))
    return f"{pair.kind}({params})"


def to_pair_coordinates(field: Field) -> Field:
    """Read a field over (x, y[, t]) as a field over (xi, eta[, t])"""
    if not set(PAIR_COORDS) <= set(field.variables):
        raise UsageError(f"expected a field over (x, y, ...), got {field.variables}")
    return field.rename(PAIR_COORDS)


# ================================
# BRANCHING
# ================================

def branch(pair: HarmonicPair, v: Field) -> Field:
    """u(x, y, t) = |grad eta|^2 v(xi(x, y), eta(x, y), t)"""
    if v.variables != ("xi", "eta", "t"):
        raise UsageError(f"branch needs a field over (xi, eta, t), got {v.variables}")
    composed = v.compose({"xi": pair.xi, "eta": pair.eta}, ("x", "y", "t"), extra=pair.singular_set)
    return Field(
        pair.rho * composed.expr,
        composed.variables,
        composed.singular_set,
        f"branch[{pair.kind}]({v.name})",
        v.provenance + (f"branch by pair {_describe_pair(pair)}",),
    )


# ================================
# SOURCE SYSTEMS
# ================================

class SourceSystem:
    """
    Vector source f(u_1..u_m) given as a black-box evaluator on an (m, N)
    array of values, returning an (n, N) array.
    """

    def __init__(self, name: str, size: int, evaluator: Callable[[np.ndarray], np.ndarray]):
        if size < 1:
            raise UsageError("a source system needs at least one component")
        self.name = name
        self.size = size
        self.evaluator = evaluator

    def __repr__(self) -> str:
        return f"SourceSystem({self.name}, n={self.size})"

    def __call__(self, values) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(values, dtype=float)), dtype=float)


def zero_source(size: int = 1) -> SourceSystem:
    return SourceSystem("zero", size, lambda u: np.zeros_like(u))


def exchange_coupling() -> SourceSystem:
    """f = (u2 - u1, u1 - u2)"""
    return SourceSystem("exchange", 2, lambda u: np.stack([u[1] - u[0], u[0] - u[1]]))


def linear_sink(c: float, size: int = 2) -> SourceSystem:
    """f_i = -c u_i"""
    return SourceSystem(f"sink({c:g})", size, lambda u: -c * u)


def homogeneity_residual(f: Callable, u, lam: float) -> np.ndarray:
    """f(lam u) - lam f(u), zero for degree-1 homogeneous sources"""
    if not lam > 0:
        raise ParameterError(f"homogeneity scale must be positive, got {lam}")
    u = np.asarray(u, dtype=float)
    return np.asarray(f(lam * u), dtype=float) - lam * np.asarray(f(u), dtype=float)


def check_homogeneity(source: SourceSystem, size: Optional[int] = None, samples: Optional[int] = None,
                      seed: Optional[int] = None, tolerance: float = 1e-9) -> float:
    """Worst scaled homogeneity residual over random positive samples"""
    m = size or source.size
    count = samples or config.PRECONDITION_SAMPLES
    rng = np.random.default_rng(config.SEED if seed is None else seed)
    u = rng.uniform(0.1, 10.0, size=(m, count))
    lam = rng.uniform(0.1, 10.0, size=count)
    residual = source(u * lam) - lam * source(u)
    scale = 1.0 + np.abs(lam * source(u))
    worst = np.max(np.abs(residual) / scale, axis=0)
    worst = np.where(np.isfinite(worst), worst, np.inf)
    i = int(np.argmax(worst))
    if worst[i] > tolerance:
        point = {f"u{k + 1}": float(u[k, i]) for k in range(m)}
        point["lambda"] = float(lam[i])
        logger.warning(f"❌ Source {source.name} is not degree-1 homogeneous at {point}")
        raise PreconditionError(
            f"source {source.name} fails the homogeneity check: residual {worst[i]:.3e} at {point}",
            point, float(worst[i]),
        )
    return float(worst[i])


def lift_system(pair: HarmonicPair, vs: Sequence[Field], source: SourceSystem) -> List[Field]:
    """u_i = |grad eta|^2 v_i(xi, eta, t) for a system with a homogeneous source"""
    if len(vs) != source.size:
        raise UsageError(f"{source!r} has {source.size} components, got {len(vs)} fields")
    check_homogeneity(source, len(vs))
    return [branch(pair, v).with_provenance(f"lifted with source {source.name}") for v in vs]


def exchange_seed_fields() -> List[Field]:
    """v1 = e^xi (1 + e^-2t), v2 = e^xi (1 - e^-2t): the exchange system in (xi, eta)"""
    decay = exp(-2 * T)
    singular = SingularSet.of(floor_band(T, "v2 vanishes at t = 0", margin=config.T_MIN))
    signature = ("xi", "eta", "t")
    return [
        Field(exp(XI) * (1 + decay), signature, singular, "exchange.v1"),
        Field(exp(XI) * (1 - decay), signature, singular, "exchange.v2"),
    ]


def sink_seed_fields(c: float, size: int = 2) -> List[Field]:
    """v_i = i e^(xi - c t): the linear-sink system in (xi, eta)"""
    return [Field((i + 1) * exp(XI - c * T), ("xi", "eta", "t"), None, f"sink.v{i + 1}") for i in range(size)]


# ================================
# REDUCTION / CONFORMAL LIFT
# ================================

def reduce_via_harmonic(eta: Expr, v: Field) -> Field:
    """u(x, y, t) = |grad eta|^2 v(eta(x, y), t)"""
    eta = as_expr(eta)
    rho = grad_sq(eta)
    if rho.is_const(0.0):
        raise DegenerateInputError("reduction needs a non-constant harmonic eta")
    if v.variables != ("eta", "t"):
        raise UsageError(f"reduction needs a field over (eta, t), got {v.variables}")
    composed = v.compose({"eta": eta}, ("x", "y", "t"),
                         extra=SingularSet.of(zero_band(rho, "critical points of eta")))
    return Field(
        rho * composed.expr,
        composed.variables,
        composed.singular_set,
        f"reduce({v.name})",
        v.provenance + (f"reduced along eta = {eta!r}",),
    )


def _sample_box(coords: Sequence[str], box, count: int, seed: Optional[int]) -> Dict[str, np.ndarray]:
    rng = np.random.default_rng(config.SEED if seed is None else seed)
    return {c: rng.uniform(low, high, count) for c, (low, high) in zip(coords, box)}


def conformal_lift(f: Expr, v: Field, coords: Tuple[str, str] = ("x", "y"),
                   box=((-1.0, 1.0), (-1.0, 1.0)), samples: Optional[int] = None,
                   seed: Optional[int] = None) -> Field:
    """
    u = (f_q1^2 + f_q2^2) / f * v(ln f, t), a solution of u_t = f Laplacian(ln u)
    whenever Laplacian(ln f) = 0.
    """
    f = as_expr(f)
    stray = f.free - set(coords)
    if stray:
        raise UsageError(f"weight must depend on {coords} only, found {sorted(stray)}")
    if v.variables != ("eta", "t"):
        raise UsageError(f"conformal lift needs a field over (eta, t), got {v.variables}")
    grad = gradient_squared(f, coords)
    if not f.free or grad.is_const(0.0):
        raise DegenerateInputError("constant weight makes the conformal lift vanish")

    pts = _sample_box(coords, box, samples or config.PRECONDITION_SAMPLES, seed)
    values = np.asarray(evaluate(f, pts, strict=False), dtype=float)
    bad = ~(values > 0)
    if bad.any():
        i = int(np.argmax(bad))
        point = {c: float(pts[c][i]) for c in coords}
        raise DomainError(f"weight is not positive at {point}: {values[i]:.3e}")
    lap = np.abs(np.asarray(evaluate(laplacian(ln(f), coords), pts, strict=False), dtype=float))
    lap = np.where(np.isfinite(lap), lap, np.inf)
    i = int(np.argmax(lap))
    if lap[i] > 1e-8:
        point = {c: float(pts[c][i]) for c in coords}
        logger.warning(f"❌ Laplacian of ln f = {lap[i]:.3e} at {point}")
        raise PreconditionError(f"ln f is not harmonic: |Laplacian ln f| = {lap[i]:.3e} at {point}",
                                point, float(lap[i]))

    eta = f.args[0] if f.op == "exp" else ln(f)
    composed = v.compose({"eta": eta}, tuple(coords) + ("t",),
                         extra=SingularSet.of(zero_band(grad, "critical points of f")))
    return Field(
        grad / f * composed.expr,
        composed.variables,
        composed.singular_set,
        f"conformal({v.name})",
        v.provenance + (f"conformal lift with weight f = {f!r}",),
    )


# ================================
# LIOUVILLE
# ================================

def liouville_shift(pair: HarmonicPair, v: Field, lam: float) -> Field:
    """w(x, y) = v(xi, eta) + (1/lam) ln |grad eta|^2"""
    if lam == 0:
        raise ParameterError("lambda must be nonzero")
    if v.variables != ("xi", "eta"):
        raise UsageError(f"liouville_shift needs a field over (xi, eta), got {v.variables}")
    extra = pair.singular_set | SingularSet.of(zero_band(pair.rho, "critical points of eta"))
    composed = v.compose({"xi": pair.xi, "eta": pair.eta}, ("x", "y"), extra=extra)
    return Field(
        composed.expr + ln(pair.rho) / lam,
        composed.variables,
        composed.singular_set,
        f"shift[{pair.kind}]({v.name})",
        v.provenance + (f"Liouville shift by pair {_describe_pair(pair)} (lambda={lam:g})",),
    )
