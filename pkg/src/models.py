"""
File-based inputs of the CLI
Pydantic models for construction recipes and solver configurations, and
their resolution into catalog entries and study plans.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Type, TypeVar, Union

from pydantic import BaseModel, Field as PydanticField, ValidationError, model_validator

from src.analytic.expr import Expr
from src.analytic.field import Field
from src.analytic.harmonic import HarmonicPair, custom_pair, harmonic_pair
from src.analytic.sexpr import parse_sexpr
from src.catalog import FAMILIES, SolutionEntry, build_catalog, one_dim_family, sink_steady_field
from src.errors import ConfigError, UsageError
from src.solver.convergence import StudyPlan
from src.solver.grid import SolverConfig
from src.transform import branch, conformal_lift, liouville_shift, reduce_via_harmonic, to_pair_coordinates
from src.verify import SampleSpec

logger = logging.getLogger(__name__)

Model = TypeVar("Model", bound=BaseModel)

# equation each recipe operation produces
RECIPE_TAGS = {
    "branch": "fast2d",
    "reduce": "fast2d",
    "conformal": "weighted",
    "liouville_shift": "liouville",
}

# variables of an inline seed expression when the recipe does not list them
SEED_VARIABLES = {
    "branch": ("xi", "eta", "t"),
    "reduce": ("eta", "t"),
    "conformal": ("eta", "t"),
    "liouville_shift": ("xi", "eta"),
}

DEFAULT_BOXES = {
    "branch": {"x": (0.2, 0.8), "y": (0.2, 0.8), "t": (0.1, 1.0)},
    "reduce": {"x": (0.2, 0.8), "y": (0.2, 0.8), "t": (0.1, 1.0)},
    "conformal": {"x": (0.2, 0.8), "y": (0.2, 0.8), "t": (0.1, 1.0)},
    "liouville_shift": {"x": (0.2, 0.8), "y": (0.2, 0.8)},
}


def load_model(model: Type[Model], path: Union[str, Path]) -> Model:
    """Read a JSON file into a model; every failure is a configuration error"""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: malformed JSON ({e.msg} at line {e.lineno})") from None
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(p) for p in first["loc"]) or "<root>"
        raise ConfigError(f"{path}: {location}: {first['msg']}") from None


def _parse(text: str, what: str) -> Expr:
    try:
        return parse_sexpr(text)
    except UsageError as e:
        raise ConfigError(f"{what}: {e}") from None


class PairSpec(BaseModel):
    """Conjugate pair descriptor: a named kind with its parameters, or custom xi/eta"""
    kind: str
    params: Dict[str, float] = PydanticField(default_factory=dict)
    xi: Optional[str] = None
    eta: Optional[str] = None

    @model_validator(mode="after")
    def _custom_needs_expressions(self):
        if self.kind == "custom" and (self.xi is None or self.eta is None):
            raise ValueError("a custom pair needs both xi and eta expressions")
        return self

    def build(self) -> HarmonicPair:
        if self.kind == "custom":
            return custom_pair(_parse(self.xi, "pair.xi"), _parse(self.eta, "pair.eta"))
        params: Dict[str, Any] = dict(self.params)
        if "n" in params:
            params["n"] = int(params["n"])
        try:
            return harmonic_pair(self.kind, **params)
        except (KeyError, TypeError) as e:
            raise ConfigError(f"pair '{self.kind}' got parameters {sorted(params)}: {e}") from None


class SampleBox(BaseModel):
    box: Optional[Dict[str, Tuple[float, float]]] = None
    count: Optional[int] = PydanticField(default=None, ge=1)
    seed: Optional[int] = None


class Recipe(BaseModel):
    """
    One transformation applied to a seed solution. The seed is a catalog id
    or an inline S-expression over seed_variables.
    """
    op: Literal["branch", "reduce", "conformal", "liouville_shift"]
    seed: str
    pair: Optional[PairSpec] = None
    eta: Optional[str] = None
    weight: Optional[str] = None
    seed_variables: Optional[List[str]] = None
    params: Dict[str, float] = PydanticField(default_factory=dict)
    sample: SampleBox = PydanticField(default_factory=SampleBox)

    @model_validator(mode="after")
    def _operands(self):
        if self.op in ("branch", "liouville_shift") and self.pair is None:
            raise ValueError(f"'{self.op}' needs a pair")
        if self.op == "reduce" and self.eta is None:
            raise ValueError("'reduce' needs a harmonic eta expression")
        if self.op == "conformal" and self.weight is None:
            raise ValueError("'conformal' needs a weight expression")
        return self

    def _seed_entry(self) -> Optional[SolutionEntry]:
        catalog = build_catalog()
        if self.seed not in catalog:
            return None
        entry = catalog.get(self.seed)
        family = entry.params.get("family")
        overrides = {k: self.params[k] for k in ("k1", "k2", "lambda") if k in self.params}
        if family in FAMILIES and overrides:
            args = {k: overrides.get(k, entry.params[k]) for k in ("k1", "k2", "lambda")}
            entry = one_dim_family(family, args["k1"], args["k2"], args["lambda"])
        return entry

    def _seed_field(self, entry: Optional[SolutionEntry]) -> Field:
        if entry is None:
            variables = tuple(self.seed_variables or SEED_VARIABLES[self.op])
            return Field(_parse(self.seed, "seed"), variables, name="inline seed",
                         provenance=(f"inline seed over {variables}",))
        field = entry.field
        if self.op in ("branch", "liouville_shift") and {"x", "y"} <= set(field.variables):
            field = to_pair_coordinates(field).with_provenance(f"{entry.id} read in (xi, eta)")
        return field

    def _lam(self, entry: Optional[SolutionEntry]) -> float:
        if "lambda" in self.params:
            return self.params["lambda"]
        if entry is not None and "lambda" in entry.params:
            return float(entry.params["lambda"])
        raise ConfigError("liouville_shift needs params.lambda for an inline seed")

    def build(self) -> SolutionEntry:
        """Resolve the seed, apply the operation and package the result"""
        entry = self._seed_entry()
        seed = self._seed_field(entry)
        params: Dict[str, Any] = dict(entry.params) if entry is not None else {}
        params.update(self.params)
        weight = None

        if self.op == "branch":
            field = branch(self.pair.build(), seed)
        elif self.op == "reduce":
            field = reduce_via_harmonic(_parse(self.eta, "eta"), seed)
        elif self.op == "conformal":
            weight = _parse(self.weight, "weight")
            field = conformal_lift(weight, seed, seed=self.sample.seed)
        else:
            lam = self._lam(entry)
            params["lambda"] = lam
            field = liouville_shift(self.pair.build(), seed, lam)

        box = self.sample.box or dict(DEFAULT_BOXES[self.op])
        logger.info(f"Recipe {self.op} on seed '{self.seed}' built {field.name}")
        return SolutionEntry(f"recipe.{self.op}", RECIPE_TAGS[self.op], field, params, box, weight=weight)

    def sample_spec(self, entry: SolutionEntry, count: Optional[int] = None,
                    seed: Optional[int] = None) -> SampleSpec:
        return entry.sample_spec(count or self.sample.count,
                                 seed if seed is not None else self.sample.seed)


class SolveConfig(BaseModel):
    """
    A manufactured-solution solver run: the reference catalog entry supplies
    initial and boundary data and the error measure.
    """
    equation: Literal["fast1d", "fast2d", "liouville"]
    reference: str
    domain: Dict[str, Tuple[float, float]]
    grid: Union[int, List[int]]
    t0: float = 0.0
    T: float = 0.0
    dt: Optional[float] = PydanticField(default=None, gt=0.0)
    dt_factor: Optional[float] = PydanticField(default=None, gt=0.0)
    dt_power: Optional[int] = PydanticField(default=None, ge=1, le=2)
    theta: float = PydanticField(default=0.5, ge=0.5, le=1.0)
    sink: bool = False
    newton_tol: Optional[float] = PydanticField(default=None, gt=0.0)
    max_iter: Optional[int] = PydanticField(default=None, ge=1)

    @model_validator(mode="after")
    def _shape(self):
        expected = ("eta",) if self.equation == "fast1d" else ("x", "y")
        if tuple(sorted(self.domain)) != tuple(sorted(expected)):
            raise ValueError(f"{self.equation} domain must name {expected}, got {sorted(self.domain)}")
        for name, (lo, hi) in self.domain.items():
            if not hi > lo:
                raise ValueError(f"empty interval for '{name}': ({lo}, {hi})")
        if any(n < 3 for n in self.ladder):
            raise ValueError("every grid needs at least 3 nodes per direction")
        if self.T < self.t0:
            raise ValueError(f"final time T={self.T} precedes t0={self.t0}")
        if self.sink and self.equation != "fast2d":
            raise ValueError("the sink variant exists for fast2d only")
        return self

    @property
    def ladder(self) -> List[int]:
        return [self.grid] if isinstance(self.grid, int) else list(self.grid)

    def solver_config(self) -> SolverConfig:
        extra = {k: v for k, v in (("newton_tol", self.newton_tol), ("max_iter", self.max_iter)) if v is not None}
        return SolverConfig(t0=self.t0, T=self.T, dt=self.dt, dt_factor=self.dt_factor,
                            dt_power=self.dt_power, theta=self.theta, **extra)

    def box(self) -> Tuple[Tuple[float, float], ...]:
        if self.equation == "fast1d":
            return (tuple(self.domain["eta"]),)
        return (tuple(self.domain["x"]), tuple(self.domain["y"]))

    def resolve(self) -> Tuple[StudyPlan, Field]:
        """Study plan and exact field for the reference entry"""
        entry = build_catalog().get(self.reference)
        tag = entry.equation_tag
        solver = self.solver_config()

        if self.equation == "fast1d":
            if tag != "fast1d":
                raise ConfigError(f"fast1d needs a fast1d reference, '{self.reference}' is {tag}")
            return StudyPlan("fast1d", self.box(), solver), entry.field

        if self.equation == "liouville":
            if tag not in ("liouville", "liouville_inhomogeneous"):
                raise ConfigError(f"liouville needs a Liouville reference, '{self.reference}' is {tag}")
            plan = StudyPlan("liouville", self.box(), solver, lam=float(entry.params["lambda"]),
                             source=entry.source)
            return plan, entry.field

        if self.sink:
            if tag != "liouville":
                raise ConfigError(f"the sink variant needs a liouville reference, '{self.reference}' is {tag}")
            lam = float(entry.params["lambda"])
            steady = sink_steady_field(entry)
            exact = Field(steady.expr, steady.variables + ("t",), steady.singular_set,
                          steady.name, steady.provenance)
            return StudyPlan("fast2d", self.box(), solver, sink=lam), exact
        if tag not in ("fast2d", "weighted"):
            raise ConfigError(f"fast2d needs a fast2d or weighted reference, '{self.reference}' is {tag}")
        return StudyPlan("fast2d", self.box(), solver, weight=entry.weight), entry.field
