"""
Residual oracles
Independent evaluators of how well a Field satisfies each governing
equation, at seeded random samples, with exact (symbolic) and
finite-difference term evaluation.
"""

import json
import logging
from abc import ABC, abstractmethod
from dataclasses import replace
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field as PydanticField, field_validator

from src.analytic.expr import Expr, as_expr, evaluate, exp, gradient_squared
from src.analytic.field import Field
from src.config import config
from src.errors import EmptyReportError, SingularEvaluationError, SkippedSample, UsageError

logger = logging.getLogger(__name__)

FIRST_STEP = 1e-4
SECOND_STEP = 1e-3
# non-finite samples this many margins from a declared band count as singular
NEAR_SINGULAR_FACTOR = 10.0

EQUATION_TAGS = ("fast2d", "fast1d", "weighted", "sink", "liouville", "liouville_inhomogeneous", "system22")


# ================================
# SAMPLING / REPORTS
# ================================

class SampleSpec(BaseModel):
    """Sampling box per variable, sample count, seed and extra singular margin"""
    box: Dict[str, Tuple[float, float]]
    count: int = PydanticField(default_factory=lambda: config.DEFAULT_SAMPLES, ge=1)
    seed: int = PydanticField(default_factory=lambda: config.SEED)
    margin: float = PydanticField(default=0.0, ge=0.0)

    @field_validator("box")
    @classmethod
    def _non_degenerate(cls, box):
        if not box:
            raise ValueError("sampling box must name at least one variable")
        for name, (low, high) in box.items():
            if not (np.isfinite(low) and np.isfinite(high) and low < high):
                raise ValueError(f"degenerate interval for '{name}': ({low}, {high})")
        return box

    def draw(self) -> Dict[str, np.ndarray]:
        rng = np.random.default_rng(self.seed)
        return {name: rng.uniform(low, high, self.count) for name, (low, high) in sorted(self.box.items())}

    def with_count(self, count: int) -> "SampleSpec":
        return SampleSpec.model_validate({**self.model_dump(), "count": count})


class ResidualReport(BaseModel):
    equation: str
    max_abs: float
    max_rel: float
    n_evaluated: int
    n_skipped_singular: int
    argmax: Dict[str, float]
    seed: int
    n_nonfinite: int = 0
    components: Dict[str, "ResidualReport"] = PydanticField(default_factory=dict)

    def passed(self, threshold: float) -> bool:
        """Below threshold and defined at every sample outside the singular set"""
        return self.n_nonfinite == 0 and self.max_rel < threshold

    def to_json(self) -> str:
        return json.dumps(self.model_dump(), sort_keys=True, indent=2)


def _restrict(pts: Mapping[str, np.ndarray], mask: np.ndarray) -> Dict[str, np.ndarray]:
    return {k: v[mask] for k, v in pts.items()}


def _reduce(name: str, components: Dict[str, List[np.ndarray]], pts: Dict[str, np.ndarray],
            skip: np.ndarray, seed: int, near: Optional[np.ndarray] = None) -> ResidualReport:
    """
    Combine per-sample terms into a report; max/count reductions only.

    Samples in skip are singular or non-positive. Non-finite residuals
    elsewhere count as singular inside near (a widened singular mask) and as
    non-finite outside it; any non-finite sample fails the report.
    """
    residuals, scales = {}, {}
    finite = np.ones(skip.shape, dtype=bool)
    for label, terms in components.items():
        residual = np.sum(terms, axis=0)
        scale = 1.0 + np.sum(np.abs(terms), axis=0)
        residuals[label], scales[label] = residual, scale
        finite &= np.isfinite(residual) & np.isfinite(scale)

    valid = ~skip & finite
    undefined = ~skip & ~finite
    if near is not None:
        undefined &= ~near
    n_total = skip.size
    n_evaluated = int(valid.sum())
    n_nonfinite = int(undefined.sum())
    n_skipped = n_total - n_evaluated - n_nonfinite
    if n_evaluated == 0 and n_nonfinite == 0:
        raise EmptyReportError(f"{name}: all {n_total} samples skipped (singular or non-positive)")

    reports = {}
    for label in components:
        if n_evaluated:
            abs_r = np.where(valid, np.abs(residuals[label]), -np.inf)
            rel_r = np.where(valid, np.abs(residuals[label]) / scales[label], -np.inf)
            i = int(np.argmax(rel_r))
            max_abs, max_rel = float(abs_r.max()), float(rel_r.max())
        else:
            i = int(np.argmax(undefined))
            max_abs = max_rel = float("inf")
        reports[label] = ResidualReport(
            equation=f"{name}.{label}" if len(components) > 1 else name,
            max_abs=max_abs,
            max_rel=max_rel,
            n_evaluated=n_evaluated,
            n_skipped_singular=n_skipped,
            n_nonfinite=n_nonfinite,
            argmax={k: float(v[i]) for k, v in pts.items()},
            seed=seed,
        )
    if len(reports) == 1:
        report = next(iter(reports.values()))
    else:
        worst = max(reports.values(), key=lambda r: r.max_rel)
        report = ResidualReport(
            equation=name,
            max_abs=max(r.max_abs for r in reports.values()),
            max_rel=worst.max_rel,
            n_evaluated=n_evaluated,
            n_skipped_singular=n_skipped,
            n_nonfinite=n_nonfinite,
            argmax=worst.argmax,
            seed=seed,
            components=reports,
        )
    if n_nonfinite:
        logger.warning(f"❌ {name}: {n_nonfinite} samples undefined outside the declared singular set")
    logger.info(
        f"{'✅' if report.passed(config.RESIDUAL_THRESHOLD) else '⚠️'} {name}: "
        f"{n_evaluated} evaluated, {n_skipped} skipped, max_rel={report.max_rel:.3e}"
    )
    return report


# ================================
# FINITE DIFFERENCES
# ================================

def _shift(pts: Mapping[str, np.ndarray], variable: str, delta: float) -> Dict[str, np.ndarray]:
    moved = dict(pts)
    moved[variable] = pts[variable] + delta
    return moved


def fd_first(g: Callable, pts, variable: str, h: float = FIRST_STEP) -> np.ndarray:
    """Central first difference with one Richardson refinement"""
    def central(step):
        return (g(_shift(pts, variable, step)) - g(_shift(pts, variable, -step))) / (2.0 * step)
    return (4.0 * central(h / 2.0) - central(h)) / 3.0


def fd_second(g: Callable, pts, variable: str, h: float = SECOND_STEP) -> np.ndarray:
    """Central second difference with one Richardson refinement"""
    centre = g(pts)

    def central(step):
        return (g(_shift(pts, variable, step)) - 2.0 * centre + g(_shift(pts, variable, -step))) / step ** 2
    return (4.0 * central(h / 2.0) - central(h)) / 3.0


def fd_derivative_oracle(field: Field, variable: str, order: int, point: Mapping[str, float],
                         step: Optional[float] = None) -> float:
    """
    Richardson-refined central difference of field at a scalar point.

    Raises:
        SkippedSample: a stencil node is singular
    """
    if order not in (1, 2):
        raise UsageError(f"order must be 1 or 2, got {order}")
    if variable not in field.variables:
        raise UsageError(f"{field!r} has no variable '{variable}'")
    h = step or (FIRST_STEP if order == 1 else SECOND_STEP)
    offsets = np.array([-h, -h / 2.0, 0.0, h / 2.0, h])
    stencil = {k: np.full(offsets.size, float(v)) for k, v in point.items()}
    stencil[variable] = stencil[variable] + offsets
    if field.singular_mask(stencil).any():
        raise SkippedSample(f"stencil around {dict(point)} meets the singular set")
    try:
        values = np.asarray(field.evaluate(stencil), dtype=float)
    except SingularEvaluationError as e:
        raise SkippedSample(f"stencil around {dict(point)} is singular: {e}") from e
    fm, fhm, f0, fhp, fp = values
    if order == 1:
        coarse = (fp - fm) / (2.0 * h)
        fine = (fhp - fhm) / h
    else:
        coarse = (fp - 2.0 * f0 + fm) / h ** 2
        fine = (fhp - 2.0 * f0 + fhm) / (h / 2.0) ** 2
    return float((4.0 * fine - coarse) / 3.0)


# ================================
# EQUATIONS
# ================================

class Equation(ABC):
    """A governing equation written as a sum of terms that vanishes on solutions"""

    tag = "equation"
    requires_positive = False

    @abstractmethod
    def exact_terms(self, field: Field) -> List[Expr]:
        ...

    @abstractmethod
    def numeric_terms(self, field: Field, pts: Dict[str, np.ndarray]) -> List[np.ndarray]:
        ...


class FastDiffusion(Equation):
    """
    u_t = f * Laplacian(ln u) - lam * u over the field's spatial variables.

    f = 1, lam = 0 is the fast diffusion equation in (x, y), in (xi, eta) or,
    for a field over (eta, t), its one-dimensional analog.
    """

    requires_positive = True

    def __init__(self, weight: Optional[Expr] = None, sink: float = 0.0, tag: str = "fast2d"):
        self.weight = None if weight is None else as_expr(weight)
        self.sink = float(sink)
        self.tag = tag

    def exact_terms(self, field: Field) -> List[Expr]:
        if not field.time_dependent:
            raise UsageError(f"{self.tag} needs a time-dependent field, got {field!r}")
        lap = field.log().laplacian()
        diffusion = lap if self.weight is None else self.weight * lap
        terms = [field.partial("t"), -diffusion]
        if self.sink:
            terms.append(self.sink * field.expr)
        return terms

    def numeric_terms(self, field: Field, pts) -> List[np.ndarray]:
        u = field.evaluate_array
        log_u = lambda p: np.log(u(p))
        lap = sum(fd_second(log_u, pts, v) for v in field.spatial)
        if self.weight is not None:
            lap = lap * np.asarray(evaluate(self.weight, pts, strict=False))
        terms = [fd_first(u, pts, "t"), -lap]
        if self.sink:
            terms.append(self.sink * u(pts))
        return terms


class Liouville(Equation):
    """Laplacian(w) = s * exp(lam * w), s = 1 or a harmonic source eta(x, y)"""

    def __init__(self, lam: float, source: Optional[Expr] = None):
        self.lam = float(lam)
        self.source = None if source is None else as_expr(source)
        self.tag = "liouville" if source is None else "liouville_inhomogeneous"

    def exact_terms(self, field: Field) -> List[Expr]:
        forcing = exp(self.lam * field.expr)
        if self.source is not None:
            forcing = self.source * forcing
        return [field.laplacian(), -forcing]

    def numeric_terms(self, field: Field, pts) -> List[np.ndarray]:
        w = field.evaluate_array
        lap = sum(fd_second(w, pts, v) for v in field.spatial)
        forcing = np.exp(self.lam * w(pts))
        if self.source is not None:
            forcing = forcing * np.asarray(evaluate(self.source, pts, strict=False))
        return [lap, -forcing]


def equation_for_tag(tag: str, params: Optional[Mapping] = None) -> Equation:
    """Residual operator belonging to a catalog equation tag"""
    params = params or {}
    if tag in ("fast2d", "fast1d"):
        return FastDiffusion(tag=tag)
    if tag == "weighted":
        return FastDiffusion(weight=params["weight"], tag=tag)
    if tag == "sink":
        return FastDiffusion(sink=params["lambda"], tag=tag)
    if tag == "liouville":
        return Liouville(params["lambda"])
    if tag == "liouville_inhomogeneous":
        return Liouville(params["lambda"], params["source"])
    raise UsageError(f"no single-field residual operator for tag '{tag}'")


# ================================
# SWEEPS
# ================================

def _check_box(fields: Sequence[Field], spec: SampleSpec) -> None:
    for f in fields:
        missing = set(f.variables) - set(spec.box)
        if missing:
            raise UsageError(f"sampling box lacks variable(s) {sorted(missing)} of {f!r}")


def _singular_skip(fields: Sequence[Field], pts, spec: SampleSpec, factor: float = 1.0) -> np.ndarray:
    """Samples within factor * max(band margin, spec.margin) of any declared band"""
    skip = np.zeros(spec.count, dtype=bool)
    for f in fields:
        for band in f.singular_set.bands:
            skip |= replace(band, margin=factor * max(band.margin, spec.margin)).mask(pts)
    return skip


def _near_singular(fields: Sequence[Field], pts, spec: SampleSpec) -> np.ndarray:
    return _singular_skip(fields, pts, spec, NEAR_SINGULAR_FACTOR)


def _non_positive(values: np.ndarray) -> np.ndarray:
    return np.isfinite(values) & (values <= config.POSITIVITY_FLOOR)


def _evaluate_terms(terms: Sequence[Expr], pts) -> List[np.ndarray]:
    count = len(next(iter(pts.values())))
    chunk = max(1, config.SAMPLE_CHUNK)
    out = [np.empty(count) for _ in terms]
    for start in range(0, count, chunk):
        part = {k: v[start:start + chunk] for k, v in pts.items()}
        for i, term in enumerate(terms):
            out[i][start:start + chunk] = evaluate(term, part, strict=False)
    return out


def run_sweep(equation: Equation, field: Field, spec: SampleSpec, exact: bool = True) -> ResidualReport:
    """Residual of one equation on one field over the sampled box"""
    _check_box([field], spec)
    pts = spec.draw()
    values = field.evaluate_array(pts)
    skip = _singular_skip([field], pts, spec)
    if equation.requires_positive:
        skip |= _non_positive(values)
    near = _near_singular([field], pts, spec)
    if exact:
        terms = _evaluate_terms(equation.exact_terms(field), pts)
    else:
        with np.errstate(all="ignore"):
            terms = equation.numeric_terms(field, pts)
        # a non-finite stencil around a defined sample is a singular skip
        near |= np.isfinite(values)
    name = equation.tag if exact else f"{equation.tag}[fd]"
    return _reduce(name, {"r": terms}, pts, skip, spec.seed, near)


def fast_diffusion_residual(u: Field, spec: SampleSpec) -> ResidualReport:
    """u_t - Laplacian(ln u)"""
    tag = "fast1d" if len(u.spatial) == 1 else "fast2d"
    return run_sweep(FastDiffusion(tag=tag), u, spec)


def weighted_residual(u: Field, f: Expr, spec: SampleSpec) -> ResidualReport:
    """u_t - f * Laplacian(ln u)"""
    return run_sweep(FastDiffusion(weight=f, tag="weighted"), u, spec)


def reduced_residual(v: Field, spec: SampleSpec) -> ResidualReport:
    """v_t - (ln v)_eta_eta"""
    if v.spatial != ("eta",):
        raise UsageError(f"reduced residual expects a field over (eta, t), got {v.variables}")
    return run_sweep(FastDiffusion(tag="fast1d"), v, spec)


def quadratic_form_residual(v: Field, spec: SampleSpec) -> ResidualReport:
    """w_t - w w_eta_eta + w_eta^2 for w = 1/v"""
    if v.spatial != ("eta",):
        raise UsageError(f"quadratic form expects a field over (eta, t), got {v.variables}")
    _check_box([v], spec)
    pts = spec.draw()
    skip = _singular_skip([v], pts, spec)
    w = Field(1 / v.expr, v.variables, v.singular_set, f"1/{v.name}")
    w_val, w_t, w_e, w_ee = _evaluate_terms([w.expr, w.partial("t"), w.partial("eta"), w.partial("eta", "eta")], pts)
    return _reduce("quadratic", {"r": [w_t, -w_val * w_ee, w_e ** 2]}, pts, skip, spec.seed,
                   _near_singular([v], pts, spec))


def sink_residual(u: Field, lam: float, spec: SampleSpec) -> ResidualReport:
    """u_t - Laplacian(ln u) + lam * u; time-independent fields have u_t = 0"""
    if not u.time_dependent:
        u = Field(u.expr, u.variables + ("t",), u.singular_set, u.name, u.provenance)
        spec = spec if "t" in spec.box else spec.model_copy(update={"box": {**spec.box, "t": (0.0, 1.0)}})
    return run_sweep(FastDiffusion(sink=lam, tag="sink"), u, spec)


def liouville_residual(w: Field, lam: float, source: Optional[Expr] = None,
                       spec: Optional[SampleSpec] = None) -> ResidualReport:
    """Laplacian(w) - exp(lam w), or Laplacian(w) - eta exp(lam w) with a source"""
    if spec is None:
        raise UsageError("liouville_residual needs a SampleSpec")
    return run_sweep(Liouville(lam, source), w, spec)


def fd_residual(equation: Equation, field: Field, spec: SampleSpec) -> ResidualReport:
    """Same residual with every derivative taken by finite differences"""
    return run_sweep(equation, field, spec, exact=False)


def system_residual(fields: Sequence[Field], source: Callable[[np.ndarray], np.ndarray],
                    spec: SampleSpec, name: str = "system") -> ResidualReport:
    """
    Parabolic system with sources: r_i = u_i,t - Laplacian(ln u_i) - f_i(u_1..u_m).
    source maps an (m, N) array of field values to an (n, N) array.
    """
    _check_box(fields, spec)
    pts = spec.draw()
    skip = _singular_skip(fields, pts, spec)
    values = np.array([f.evaluate_array(pts) for f in fields])
    skip |= np.any(_non_positive(values), axis=0)
    with np.errstate(all="ignore"):
        forcing = np.asarray(source(values), dtype=float)
    components = {}
    for i, f in enumerate(fields):
        u_t, lap = _evaluate_terms([f.partial("t"), f.log().laplacian()], pts)
        components[f"u{i + 1}"] = [u_t, -lap, -forcing[i]]
    return _reduce(name, components, pts, skip, spec.seed, _near_singular(fields, pts, spec))


def system22_terms(samples: Mapping[str, np.ndarray], A: float, B: float) -> Dict[str, List[np.ndarray]]:
    """Charge-transfer terms from sampled Laplacians, exponentials and |grad Phi|^2"""
    g = samples["grad_phi_sq"]
    return {
        "r1": [samples["lap_u"], -np.exp(samples["u"]), -A * g],
        "r2": [samples["lap_v"], -np.exp(samples["v"]), B * g],
        "r3": [samples["lap_phi"], -np.exp(samples["v"]), np.exp(samples["u"])],
    }


def system22_residual(u: Field, v: Field, phi: Field, A: float, B: float, spec: SampleSpec) -> ResidualReport:
    """
    Steady charge-transfer system:
        r1 = Lu - e^u - A|grad Phi|^2, r2 = Lv - e^v + B|grad Phi|^2, r3 = L Phi - e^v + e^u
    """
    fields = [u, v, phi]
    _check_box(fields, spec)
    pts = spec.draw()
    skip = _singular_skip(fields, pts, spec)
    lap_u, lap_v, lap_phi, grad, u_val, v_val = _evaluate_terms(
        [u.laplacian(), v.laplacian(), phi.laplacian(),
         gradient_squared(phi.expr, phi.spatial), u.expr, v.expr], pts)
    samples = {"lap_u": lap_u, "lap_v": lap_v, "lap_phi": lap_phi,
               "grad_phi_sq": grad, "u": u_val, "v": v_val}
    with np.errstate(all="ignore"):
        components = system22_terms(samples, A, B)
    return _reduce("system22", components, pts, skip, spec.seed, _near_singular(fields, pts, spec))


def system22_sampled_residual(samples: Mapping[str, np.ndarray], pts: Dict[str, np.ndarray],
                              skip: np.ndarray, A: float, B: float, seed: int) -> ResidualReport:
    """system22 residual from pre-sampled terms (ODE-based ansatz)"""
    with np.errstate(all="ignore"):
        components = system22_terms(samples, A, B)
    return _reduce("system22", components, pts, skip, seed)
