"""
Solution catalog
Closed-form solution families of the fast diffusion and Liouville
equations, packaged as Fields with parameters, default sampling domains
and singular-set metadata.
"""

import logging
from dataclasses import dataclass, field as dataclass_field
from functools import lru_cache
from types import MappingProxyType
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from src.analytic.expr import (
    Expr, absolute, as_expr, cos, cosh, coth, exp, ln, power, sec, sech, sin, sinh, symbols, tan, tanh,
)
from src.analytic.field import Field
from src.analytic.harmonic import grad_sq, harmonic_pair
from src.analytic.singular import SingularSet, floor_band, pole_band, zero_band
from src.config import config
from src.errors import DegenerateInputError, EmptyReportError, ParameterError, UsageError
from src.verify import (
    Equation, ResidualReport, SampleSpec, equation_for_tag, fast_diffusion_residual, run_sweep,
)

logger = logging.getLogger(__name__)

X, Y, T = symbols("x y t")
XI, ETA = symbols("xi eta")

FAMILIES = ("trig_sh", "trig_cos", "hyp_cos", "hyp_sh")
LIOUVILLE_KINDS = ("sec", "sech")

Box = Dict[str, Tuple[float, float]]


@dataclass(frozen=True)
class SolutionEntry:
    """A cataloged exact solution with its governing equation; read-only once built"""
    id: str
    equation_tag: str
    field: Field
    params: Mapping[str, Any] = dataclass_field(default_factory=dict)
    domain: Box = dataclass_field(default_factory=dict)
    weight: Optional[Expr] = None
    source: Optional[Expr] = None

    def __post_init__(self):
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        object.__setattr__(self, "domain", dict(self.domain))

    @property
    def singular_set(self) -> SingularSet:
        return self.field.singular_set

    @property
    def provenance(self) -> Tuple[str, ...]:
        return self.field.provenance

    def equation(self) -> Equation:
        return equation_for_tag(self.equation_tag, {
            "lambda": self.params.get("lambda"), "weight": self.weight, "source": self.source,
        })

    def sample_spec(self, count: Optional[int] = None, seed: Optional[int] = None,
                    box: Optional[Box] = None) -> SampleSpec:
        return SampleSpec(
            box=box or self.domain,
            count=count or config.DEFAULT_SAMPLES,
            seed=config.SEED if seed is None else seed,
        )

    def residual(self, spec: Optional[SampleSpec] = None) -> ResidualReport:
        return run_sweep(self.equation(), self.field, spec or self.sample_spec())

    def metadata(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "equation_tag": self.equation_tag,
            "params": dict(self.params),
            "provenance": list(self.provenance),
            "singular_set_description": self.singular_set.describe(),
        }


def _time_floor() -> SingularSet:
    return SingularSet.of(floor_band(T, "t = 0, tanh-based seeds", margin=config.T_MIN))


# ================================
# BRANCHED SOLUTIONS
# ================================

def base_seed() -> SolutionEntry:
    """v(xi, eta, t) = 2 tanh(t) / (xi^2 + eta^2 tanh^2(t))"""
    th = tanh(T)
    v = 2 * th / (XI ** 2 + ETA ** 2 * th ** 2)
    singular = SingularSet.of(zero_band(XI ** 2 + ETA ** 2, "origin of the (xi, eta) plane")) | _time_floor()
    f = Field(v, ("xi", "eta", "t"), singular, "base_seed",
              ("self-similar seed solution in (xi, eta, t)",))
    return SolutionEntry("base_seed", "fast2d", f, {},
                         {"xi": (0.2, 1.5), "eta": (-1.0, 1.0), "t": (0.1, 3.0)})


def _tan_tanh_form(num_a: Expr, num_b: Expr, prefactor: Expr) -> Expr:
    """prefactor * (a + b) tanh t / (1 + a b tanh^2 t)"""
    th = tanh(T)
    return prefactor * (num_a + num_b) * th / (1 + num_a * num_b * th ** 2)


def _exponential_candidates():
    a = cos(Y) ** 3 - 3 * cos(Y) * sin(Y) ** 2
    b = 3 * cos(Y) ** 2 * sin(Y) - sin(Y) ** 3
    xi, eta = exp(3 * X) * a, exp(3 * X) * b
    singular = SingularSet.of(pole_band(xi, "poles of tan(exp(3x) a(y))")) | _time_floor()
    printed = _tan_tanh_form(tan(xi) ** 2, tanh(eta) ** 2, 18 * exp(X))
    corrected = _tan_tanh_form(tan(xi) ** 2, tanh(eta) ** 2, 18 * exp(6 * X))
    return singular, [("printed prefactor 18 exp(x)", printed),
                      ("rho-consistent prefactor 18 exp(6x) = 2 |grad eta|^2", corrected)]


def _resolve_exponential(domain: Box) -> Field:
    """Ship whichever exponential-argument prefactor passes the residual oracle"""
    singular, candidates = _exponential_candidates()
    spec = SampleSpec(box=domain, count=config.PAIR_SAMPLES, seed=config.SEED)
    outcomes = []
    for label, expr in candidates:
        f = Field(expr, ("x", "y", "t"), singular, "branched.exponential")
        try:
            max_rel = fast_diffusion_residual(f, spec).max_rel
        except EmptyReportError:
            max_rel = float("nan")
        outcomes.append((label, f, max_rel))
    notes = [f"{label}: max_rel={max_rel:.3e}" for label, _, max_rel in outcomes]
    for label, f, max_rel in outcomes:
        if max_rel < 1e-7:
            if label != outcomes[0][0]:
                logger.warning(f"⚠️ Printed exponential-argument solution fails the oracle; shipping {label}")
            return f.with_provenance(f"shipped: {label}", *notes)
    logger.warning("⚠️ No exponential-argument prefactor validates; shipping the printed form")
    return outcomes[0][1].with_provenance("shipped: printed form (no candidate validated)", *notes)


def example1_solutions() -> List[SolutionEntry]:
    """The four anisotropic solutions obtained by branching the base seed"""
    t_box = (0.1, 3.0)
    coth_tan = _tan_tanh_form(coth(X) ** 2, tan(Y) ** 2, as_expr(2.0))
    coth_tan_set = SingularSet.of(zero_band(X, "pole of coth at x = 0"),
                                  pole_band(Y, "poles of tan y")) | _time_floor()
    tan_tanh = _tan_tanh_form(tan(X) ** 2, tanh(Y) ** 2, as_expr(2.0))
    tan_tanh_set = SingularSet.of(pole_band(X, "poles of tan x")) | _time_floor()
    xi3, eta3 = X ** 3 - 3 * X * Y ** 2, 3 * X ** 2 * Y - Y ** 3
    cubic = _tan_tanh_form(tan(xi3) ** 2, tanh(eta3) ** 2, 18 * (X ** 2 + Y ** 2) ** 2)
    cubic_set = SingularSet.of(pole_band(xi3, "poles of tan(x^3 - 3xy^2)")) | _time_floor()

    plane = ("x", "y", "t")
    entries = [
        SolutionEntry("branched.coth_tan", "fast2d",
                      Field(coth_tan, plane, coth_tan_set, "branched.coth_tan",
                            ("branch of base_seed by F(z) = sinh z",)),
                      {}, {"x": (0.2, 1.5), "y": (-1.2, 1.2), "t": t_box}),
        SolutionEntry("branched.tan_tanh", "fast2d",
                      Field(tan_tanh, plane, tan_tanh_set, "branched.tan_tanh",
                            ("branch of base_seed by F(z) = cos z",)),
                      {}, {"x": (0.1, 1.2), "y": (-1.0, 1.0), "t": t_box}),
        SolutionEntry("branched.cubic", "fast2d",
                      Field(cubic, plane, cubic_set, "branched.cubic",
                            ("branch of branched.tan_tanh read in (xi, eta) by F(z) = z^3",)),
                      {}, {"x": (0.1, 0.8), "y": (0.1, 0.8), "t": t_box}),
    ]
    domain4 = {"x": (-1.0, 0.0), "y": (-0.5, 0.5), "t": t_box}
    entries.append(SolutionEntry("branched.exponential", "fast2d",
                                 _resolve_exponential(domain4).with_provenance("branch by F(z) = exp(3z)"),
                                 {}, domain4))
    return entries


# ================================
# ONE-DIMENSIONAL FAMILIES
# ================================

_FAMILY_DOMAINS = {
    "trig_sh": {"eta": (-3.0, 3.0), "t": (0.1, 3.0)},
    "trig_cos": {"eta": (-0.5, 0.5), "t": (0.1, 0.4)},
    "hyp_cos": {"eta": (-1.0, 1.0), "t": (0.1, 1.2)},
    "hyp_sh": {"eta": (1.0, 2.0), "t": (0.1, 0.8)},
}

_FAMILY_DEFAULTS = {
    "trig_sh": (1.0, 0.0, 1.0),
    "trig_cos": (1.0, 0.0, 1.0),
    "hyp_cos": (2.0, 1.0, 1.0),
    "hyp_sh": (2.0, 1.0, 1.0),
}


def one_dim_family(family: str, k1: float, k2: float, lam: float) -> SolutionEntry:
    """
    Solutions v(eta, t) of v_t = (ln v)_eta_eta.

    trig_sh   S sinh(lam t) / (lam (k1 cos eta + k2 sin eta + S cosh(lam t))),  S = sqrt(k1^2 + k2^2)
    trig_cos  S cos(lam t)  / (lam (k1 cos eta + k2 sin eta - S sin(lam t)))
    hyp_cos   S cos(lam t)  / (lam (k1 cosh eta + k2 sinh eta + S sin(lam t))), S = sqrt(k1^2 - k2^2)
    hyp_sh    S sinh(lam t) / (lam (k1 cosh eta + k2 sinh eta - S cosh(lam t)))
    """
    if family not in FAMILIES:
        raise UsageError(f"unknown family '{family}', expected one of {FAMILIES}")
    if lam == 0:
        raise ParameterError("lambda must be nonzero")
    if family.startswith("trig"):
        if k1 == 0 and k2 == 0:
            raise ParameterError("k1 and k2 cannot both vanish")
        s = float(np.hypot(k1, k2))
        g = k1 * cos(ETA) + k2 * sin(ETA)
    else:
        if not k1 > abs(k2):
            raise ParameterError(f"hyperbolic families need k1 > |k2|, got k1={k1}, k2={k2}")
        s = float(np.sqrt(k1 ** 2 - k2 ** 2))
        g = k1 * cosh(ETA) + k2 * sinh(ETA)

    lt = lam * T
    numerator, shift = {
        "trig_sh": (sinh(lt), s * cosh(lt)),
        "trig_cos": (cos(lt), -(s * sin(lt))),
        "hyp_cos": (cos(lt), s * sin(lt)),
        "hyp_sh": (sinh(lt), -(s * cosh(lt))),
    }[family]
    denominator = g + shift
    v = s * numerator / (lam * denominator)

    singular = SingularSet.of(zero_band(denominator, "zeros of the denominator"))
    if family.endswith("_sh"):
        singular = singular | _time_floor()
    params = {"family": family, "k1": float(k1), "k2": float(k2), "lambda": float(lam)}
    f = Field(v, ("eta", "t"), singular, f"line.{family}",
              (f"one-dimensional family {family} (k1={k1:g}, k2={k2:g}, lambda={lam:g})",))
    return SolutionEntry(f"line.{family}", "fast1d", f, params, dict(_FAMILY_DOMAINS[family]))


# ================================
# LIOUVILLE
# ================================

def _check_harmonic_argument(eta: Expr) -> Expr:
    eta = as_expr(eta)
    rho = grad_sq(eta)
    if rho.is_const(0.0):
        raise DegenerateInputError("eta must be a non-constant harmonic function")
    return rho


def liouville_solutions(A: float, lam: float, eta: Expr, kind: str = "sec",
                        strict_sign: bool = True, entry_id: Optional[str] = None,
                        domain: Optional[Box] = None) -> SolutionEntry:
    """
    w = (1/lam) ln |(2 A^2 / lam) |grad eta|^2 sec^2(A eta)|   (or sech^2).

    Delta w = exp(lam w) holds for sec with lam > 0 and for sech with lam < 0;
    strict_sign=False builds the formula for either sign.
    """
    if kind not in LIOUVILLE_KINDS:
        raise UsageError(f"unknown kind '{kind}', expected one of {LIOUVILLE_KINDS}")
    if A == 0 or lam == 0:
        raise ParameterError("A and lambda must be nonzero")
    if strict_sign and (kind == "sec") != (lam > 0):
        raise ParameterError(f"{kind} solutions need lambda {'> 0' if kind == 'sec' else '< 0'}, got {lam}")
    eta = as_expr(eta)
    rho = _check_harmonic_argument(eta)
    profile = sec(A * eta) if kind == "sec" else sech(A * eta)
    w = ln(absolute(2 * A ** 2 / lam * rho * profile ** 2)) / lam

    singular = SingularSet.of(zero_band(rho, "critical points of eta"))
    if kind == "sec":
        singular = singular | SingularSet.of(pole_band(A * eta, "poles of sec(A eta)"))
    params = {"A": float(A), "lambda": float(lam), "kind": kind, "eta": repr(eta)}
    f = Field(w, ("x", "y"), singular, entry_id or f"liouville.{kind}",
              (f"Liouville {kind}^2 solution (A={A:g}, lambda={lam:g})",))
    return SolutionEntry(entry_id or f"liouville.{kind}", "liouville", f, params,
                         domain or {"x": (-1.0, 1.0), "y": (-1.0, 1.0)})


def liouville_inhomogeneous_solution(lam: float, eta: Expr, entry_id: Optional[str] = None,
                                     domain: Optional[Box] = None) -> SolutionEntry:
    """
    w = (1/lam) ln |(3/lam) |grad eta|^2 / eta^3| solves Delta w = eta exp(lam w)
    where lam * eta > 0.
    """
    if lam == 0:
        raise ParameterError("lambda must be nonzero")
    eta = as_expr(eta)
    rho = _check_harmonic_argument(eta)
    w = ln(absolute(3 / lam * rho / eta ** 3)) / lam
    singular = SingularSet.of(
        zero_band(rho, "critical points of eta"),
        floor_band(lam * eta, "lambda * eta <= 0"),
    )
    params = {"lambda": float(lam), "eta": repr(eta)}
    f = Field(w, ("x", "y"), singular, entry_id or "liouville_inhomogeneous",
              (f"inhomogeneous Liouville solution (lambda={lam:g})",))
    return SolutionEntry(entry_id or "liouville_inhomogeneous", "liouville_inhomogeneous", f, params,
                         domain or {"x": (0.2, 0.8), "y": (0.2, 0.8)}, source=eta)


def sink_steady_field(entry: SolutionEntry) -> Field:
    """u = exp(lam w) for a Liouville entry; steady solution of u_t = Delta ln u - lam u"""
    if entry.equation_tag != "liouville":
        raise UsageError(f"sink steady state needs a liouville entry, got {entry.equation_tag}")
    lam = entry.params["lambda"]
    w = entry.field
    return Field(exp(lam * w.expr), w.variables, w.singular_set, f"exp({lam:g} {w.name})",
                 w.provenance + ("u = exp(lambda w), steady sink solution",))


# ================================
# CATALOG
# ================================

class Catalog:
    """Immutable collection of SolutionEntry objects keyed by id"""

    def __init__(self, entries: List[SolutionEntry]):
        self._entries: Dict[str, SolutionEntry] = {}
        for entry in entries:
            if entry.id in self._entries:
                raise UsageError(f"duplicate catalog id '{entry.id}'")
            self._entries[entry.id] = entry

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries.values())

    def __contains__(self, entry_id: str) -> bool:
        return entry_id in self._entries

    def get(self, entry_id: str) -> SolutionEntry:
        try:
            return self._entries[entry_id]
        except KeyError:
            raise UsageError(f"unknown catalog id '{entry_id}'") from None

    def ids(self) -> List[str]:
        return list(self._entries)

    def list(self, tag: Optional[str] = None) -> List[Dict[str, Any]]:
        return [e.metadata() for e in self._entries.values() if tag is None or e.equation_tag == tag]


def _composed_entries() -> List[SolutionEntry]:
    from src.transform import conformal_lift, reduce_via_harmonic

    trig_sh = one_dim_family("trig_sh", *_FAMILY_DEFAULTS["trig_sh"])
    quartic = 4 * (X ** 3 * Y - X * Y ** 3)
    reduced = reduce_via_harmonic(quartic, trig_sh.field)
    weight = exp(X ** 2 - Y ** 2)
    lifted = conformal_lift(weight, trig_sh.field, box=((0.2, 1.0), (0.2, 1.0)))
    return [
        SolutionEntry("reduced.quartic", "fast2d", reduced, dict(trig_sh.params),
                      {"x": (0.2, 0.8), "y": (0.2, 0.8), "t": (0.1, 3.0)}),
        SolutionEntry("conformal.gaussian", "weighted", lifted, dict(trig_sh.params),
                      {"x": (0.2, 1.0), "y": (0.2, 1.0), "t": (0.1, 2.0)}, weight=weight),
    ]


@lru_cache(maxsize=1)
def build_catalog() -> Catalog:
    logger.info("Building solution catalog...")
    entries = [base_seed()]
    entries.extend(example1_solutions())
    entries.extend(one_dim_family(name, *_FAMILY_DEFAULTS[name]) for name in FAMILIES)
    entries.append(liouville_solutions(1.0, 2.0, Y, "sec"))
    entries.append(liouville_solutions(1.0, -2.0, Y, "sech"))
    entries.append(liouville_inhomogeneous_solution(1.0, 2 * X * Y))
    entries.extend(_composed_entries())
    catalog = Catalog(entries)
    logger.info(f"✅ Catalog ready: {len(catalog)} entries")
    return catalog
