"""
Conjugate harmonic pairs
Construction, validation and the pointwise identity residuals
(Cauchy-Riemann, gradient orthogonality, harmonicity of ln|grad eta|^2).
"""

import logging
from functools import cached_property
from math import comb
from typing import Any, Dict, Optional, Tuple

import numpy as np

from src.analytic.expr import (
    Expr, Point, as_expr, cos, cosh, differentiate, evaluate, exp, gradient_squared,
    laplacian, ln, power, sin, sinh, substitute, symbols,
)
from src.analytic.singular import SingularSet, zero_band
from src.config import config
from src.errors import (
    DegenerateInputError, ParameterError, RejectedPairError, SingularEvaluationError,
    SkippedSample, UsageError,
)

logger = logging.getLogger(__name__)

X, Y = symbols("x y")
PLANE = ("x", "y")
PAIR_KINDS = ("monomial", "exponential", "affine", "sinh", "cos", "custom")


class HarmonicPair:
    """
    Conjugate pair (xi, eta) of harmonic functions of (x, y), i.e. the real and
    imaginary parts of an analytic F(z). Immutable after construction.
    """

    def __init__(self, xi: Expr, eta: Expr, singular_set: Optional[SingularSet] = None,
                 kind: str = "custom", params: Optional[Dict[str, Any]] = None):
        self.xi = as_expr(xi)
        self.eta = as_expr(eta)
        for label, e in (("xi", self.xi), ("eta", self.eta)):
            stray = e.free - set(PLANE)
            if stray:
                raise UsageError(f"{label} must depend on (x, y) only, found {sorted(stray)}")
        self.singular_set = singular_set or SingularSet.empty()
        self.kind = kind
        self.params = dict(params or {})

    def __repr__(self) -> str:
        return f"HarmonicPair({self.kind}, {self.params})"

    @cached_property
    def xi_x(self) -> Expr:
        return differentiate(self.xi, "x")

    @cached_property
    def xi_y(self) -> Expr:
        return differentiate(self.xi, "y")

    @cached_property
    def eta_x(self) -> Expr:
        return differentiate(self.eta, "x")

    @cached_property
    def eta_y(self) -> Expr:
        return differentiate(self.eta, "y")

    @cached_property
    def rho(self) -> Expr:
        """|grad eta|^2, the branching factor"""
        return gradient_squared(self.eta, PLANE)

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.kind, "params": self.params, "xi": repr(self.xi), "eta": repr(self.eta)}

    def _guard(self, point: Point) -> None:
        if self.singular_set.contains(point):
            raise SingularEvaluationError(f"point {dict(point)} lies in the singular set of {self!r}",
                                          point=dict(point))


# ================================
# CONSTRUCTORS
# ================================

def re_im_power(n: int) -> Tuple[Expr, Expr]:
    """Re and Im of z^n in Cartesian form, by the binomial expansion"""
    re_terms, im_terms = [], []
    for k in range(n + 1):
        c = comb(n, k)
        monomial = c * power(X, n - k) * power(Y, k)
        if k % 2 == 0:
            re_terms.append(monomial if (k // 2) % 2 == 0 else -monomial)
        else:
            im_terms.append(monomial if ((k - 1) // 2) % 2 == 0 else -monomial)
    return _sum(re_terms), _sum(im_terms)


def _sum(terms):
    total = as_expr(0.0)
    for term in terms:
        total = total + term
    return total


def monomial_pair(n: int) -> HarmonicPair:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ParameterError(f"monomial degree must be a positive integer, got {n!r}")
    xi, eta = re_im_power(int(n))
    singular = SingularSet.empty()
    if n >= 2:
        singular = SingularSet.of(zero_band(X ** 2 + Y ** 2, "critical point of eta at the origin"))
    return HarmonicPair(xi, eta, singular, "monomial", {"n": int(n)})


def exponential_pair(k: float) -> HarmonicPair:
    if k == 0:
        raise DegenerateInputError("exponential pair with k = 0 is constant")
    xi = exp(k * X) * cos(k * Y)
    eta = exp(k * X) * sin(k * Y)
    return HarmonicPair(xi, eta, SingularSet.empty(), "exponential", {"k": float(k)})


def affine_pair(a: float, b: float, c: float = 0.0, d: float = 0.0) -> HarmonicPair:
    """F(z) = (a - i b) z + (c + i d): xi = a x + b y + c, eta = -b x + a y + d"""
    if a == 0 and b == 0:
        raise DegenerateInputError("affine pair with a = b = 0 is constant")
    xi = a * X + b * Y + c
    eta = -b * X + a * Y + d
    return HarmonicPair(xi, eta, SingularSet.empty(), "affine",
                        {"a": float(a), "b": float(b), "c": float(c), "d": float(d)})


def sinh_pair() -> HarmonicPair:
    """F(z) = sinh z; |F'|^2 = sinh^2 x + cos^2 y"""
    xi = sinh(X) * cos(Y)
    eta = cosh(X) * sin(Y)
    rho = sinh(X) ** 2 + cos(Y) ** 2
    return HarmonicPair(xi, eta, SingularSet.of(zero_band(rho, "zeros of cosh z")), "sinh", {})


def cos_pair() -> HarmonicPair:
    """F(z) = cos z; |F'|^2 = sin^2 x + sinh^2 y"""
    xi = cos(X) * cosh(Y)
    eta = -(sin(X) * sinh(Y))
    rho = sin(X) ** 2 + sinh(Y) ** 2
    return HarmonicPair(xi, eta, SingularSet.of(zero_band(rho, "zeros of sin z")), "cos", {})


def custom_pair(xi: Expr, eta: Expr, singular_set: Optional[SingularSet] = None,
                box: Tuple[Tuple[float, float], Tuple[float, float]] = ((-2.0, 2.0), (-2.0, 2.0)),
                seed: Optional[int] = None, samples: Optional[int] = None,
                tolerance: Optional[float] = None) -> HarmonicPair:
    """User pair, validated against the Cauchy-Riemann equations at random points"""
    pair = HarmonicPair(xi, eta, singular_set, "custom", {})
    validate_pair(pair, box, seed, samples, tolerance)
    return pair


def harmonic_pair(kind: str, **params) -> HarmonicPair:
    """Dispatch on kind: monomial(n), exponential(k), affine(a,b,c,d), sinh, cos, custom(xi, eta)"""
    if kind == "monomial":
        return monomial_pair(params["n"])
    if kind == "exponential":
        return exponential_pair(params["k"])
    if kind == "affine":
        return affine_pair(params.get("a", 1.0), params.get("b", 0.0), params.get("c", 0.0), params.get("d", 0.0))
    if kind == "sinh":
        return sinh_pair()
    if kind == "cos":
        return cos_pair()
    if kind == "custom":
        return custom_pair(**params)
    raise UsageError(f"unknown pair kind '{kind}', expected one of {PAIR_KINDS}")


def random_harmonic_pair(degree: int, rng: np.random.Generator, low: float = -2.0, high: float = 2.0) -> HarmonicPair:
    """Conjugate pair of the polynomial sum_k (a_k - i b_k) z^k, k = 1..degree"""
    if degree < 1:
        raise ParameterError("degree must be at least 1")
    xi_terms, eta_terms, coefficients = [], [], []
    for k in range(1, degree + 1):
        a, b = (float(c) for c in rng.uniform(low, high, size=2))
        re_k, im_k = re_im_power(k)
        xi_terms.append(a * re_k + b * im_k)
        eta_terms.append(a * im_k - b * re_k)
        coefficients.append([a, b])
    eta = _sum(eta_terms)
    singular = SingularSet.of(
        zero_band(gradient_squared(eta, PLANE), "near-critical points of eta", margin=config.GRADIENT_FLOOR)
    )
    return HarmonicPair(_sum(xi_terms), eta, singular, "polynomial",
                        {"degree": degree, "coefficients": coefficients})


def compose_pairs(outer: HarmonicPair, inner: HarmonicPair) -> HarmonicPair:
    """Pair of F_outer(F_inner(z))"""
    mapping = {"x": inner.xi, "y": inner.eta}
    return HarmonicPair(
        substitute(outer.xi, mapping),
        substitute(outer.eta, mapping),
        inner.singular_set | outer.singular_set.substitute(mapping),
        "composed",
        {"outer": outer.describe(), "inner": inner.describe()},
    )


# ================================
# RESIDUALS
# ================================

def sample_plane(rng: np.random.Generator, box, count: int) -> Dict[str, np.ndarray]:
    (x0, x1), (y0, y1) = box
    return {"x": rng.uniform(x0, x1, count), "y": rng.uniform(y0, y1, count)}


def validate_pair(pair: HarmonicPair, box=((-2.0, 2.0), (-2.0, 2.0)), seed: Optional[int] = None,
                  samples: Optional[int] = None, tolerance: Optional[float] = None) -> float:
    """Worst scaled CR residual over random non-singular points; raises RejectedPairError"""
    rng = np.random.default_rng(config.SEED if seed is None else seed)
    count = samples or config.PAIR_SAMPLES
    tolerance = config.PAIR_TOLERANCE if tolerance is None else tolerance
    pts = sample_plane(rng, box, count)
    keep = ~pair.singular_set.mask(pts)
    pts = {k: v[keep] for k, v in pts.items()}
    if not keep.any():
        raise RejectedPairError("no non-singular sample available to validate the pair", {}, float("nan"))

    r1, r2 = cauchy_riemann_residual(pair, pts, strict=False)
    scale = 1.0 + np.abs(evaluate(pair.xi_x, pts, strict=False)) + np.abs(evaluate(pair.xi_y, pts, strict=False))
    worst = np.maximum(np.abs(r1), np.abs(r2)) / scale
    worst = np.where(np.isfinite(worst), worst, np.inf)
    i = int(np.argmax(worst))
    if worst[i] > tolerance:
        point = {k: float(v[i]) for k, v in pts.items()}
        logger.warning(f"❌ Rejected pair: CR residual {worst[i]:.3e} at {point}")
        raise RejectedPairError(
            f"pair fails the Cauchy-Riemann equations: residual {worst[i]:.3e} at {point}",
            point, float(worst[i]),
        )
    return float(worst[i])


def cauchy_riemann_residual(pair: HarmonicPair, point: Point, strict: bool = True):
    """(xi_x - eta_y, xi_y + eta_x) at point"""
    if strict:
        pair._guard(point)
    r1 = evaluate(pair.xi_x - pair.eta_y, point, strict)
    r2 = evaluate(pair.xi_y + pair.eta_x, point, strict)
    return r1, r2


def orthogonality_residual(pair: HarmonicPair, point: Point, strict: bool = True):
    """((grad xi, grad eta), |grad xi|^2 - |grad eta|^2) at point"""
    if strict:
        pair._guard(point)
    dot = evaluate(pair.xi_x * pair.eta_x + pair.xi_y * pair.eta_y, point, strict)
    normdiff = evaluate(pair.xi_x ** 2 + pair.xi_y ** 2 - pair.rho, point, strict)
    return dot, normdiff


def laplacian_residual(pair: HarmonicPair, point: Point, strict: bool = True):
    """(Delta xi, Delta eta) at point"""
    if strict:
        pair._guard(point)
    return (evaluate(laplacian(pair.xi, PLANE), point, strict),
            evaluate(laplacian(pair.eta, PLANE), point, strict))


def grad_sq(eta: Expr) -> Expr:
    """eta_x^2 + eta_y^2"""
    eta = as_expr(eta)
    stray = eta.free - set(PLANE)
    if stray:
        raise UsageError(f"grad_sq expects a function of (x, y), found {sorted(stray)}")
    return gradient_squared(eta, PLANE)


def lemma1_residual(eta: Expr, point: Point, floor: Optional[float] = None):
    """
    Delta ln(eta_x^2 + eta_y^2) at point; vanishes for harmonic eta.

    Scalar points below the gradient floor raise SkippedSample; for array
    points those entries come back as nan.
    """
    floor = config.GRADIENT_FLOOR if floor is None else floor
    rho = grad_sq(eta)
    rho_value = np.asarray(evaluate(rho, point, strict=False), dtype=float)
    below = ~(rho_value > floor)
    if rho_value.ndim == 0:
        if below:
            raise SkippedSample(f"|grad eta|^2 = {float(rho_value):.3e} below floor {floor:g}")
        return evaluate(laplacian(ln(rho), PLANE), point, strict=True)
    value = np.asarray(evaluate(laplacian(ln(rho), PLANE), point, strict=False), dtype=float)
    return np.where(below, np.nan, value)
