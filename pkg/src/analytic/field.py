"""
Scalar fields
A Field wraps a value expression with its variable signature, cached
partial derivatives and a declared singular set.
"""

from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.analytic.expr import Expr, Point, as_expr, differentiate, evaluate, ln, substitute, var
from src.analytic.singular import SingularSet
from src.errors import UsageError

TIME = "t"


class Field:
    """
    Scalar field over a fixed variable signature, e.g. ("x", "y", "t"),
    ("xi", "eta", "t"), ("eta", "t") or ("x", "y").
    """

    def __init__(
        self,
        expr: Expr,
        variables: Sequence[str],
        singular_set: Optional[SingularSet] = None,
        name: str = "",
        provenance: Iterable[str] = (),
    ):
        self.expr = as_expr(expr)
        self.variables: Tuple[str, ...] = tuple(variables)
        stray = self.expr.free - set(self.variables)
        if stray:
            raise UsageError(
                f"field '{name}' uses {sorted(stray)} outside its signature {self.variables}"
            )
        self.singular_set = singular_set or SingularSet.empty()
        self.name = name
        self.provenance: Tuple[str, ...] = tuple(provenance)
        self._partials: Dict[Tuple[str, ...], Expr] = {(): self.expr}
        self._log: Optional["Field"] = None

    def __repr__(self) -> str:
        return f"Field({self.name or 'anonymous'}{self.variables})"

    @property
    def spatial(self) -> Tuple[str, ...]:
        return tuple(v for v in self.variables if v != TIME)

    @property
    def time_dependent(self) -> bool:
        return TIME in self.variables

    def partial(self, *variables: str) -> Expr:
        """Cached mixed partial derivative in the given order"""
        key = tuple(variables)
        if key not in self._partials:
            unknown = [v for v in key if v not in self.variables]
            if unknown:
                raise UsageError(f"{self!r} has no variable(s) {unknown}")
            self._partials[key] = differentiate(self.partial(*key[:-1]), key[-1])
        return self._partials[key]

    def laplacian(self) -> Expr:
        terms = [self.partial(v, v) for v in self.spatial]
        total = terms[0]
        for term in terms[1:]:
            total = total + term
        return total

    def log(self) -> "Field":
        if self._log is None:
            self._log = Field(ln(self.expr), self.variables, self.singular_set, f"ln {self.name}")
        return self._log

    def evaluate(self, point: Point) -> float:
        """Strict evaluation; raises SingularEvaluationError at poles"""
        return evaluate(self.expr, point, strict=True)

    def evaluate_array(self, point: Point) -> np.ndarray:
        return np.asarray(evaluate(self.expr, point, strict=False), dtype=float)

    def singular_mask(self, point: Point) -> np.ndarray:
        return self.singular_set.mask(point)

    def with_provenance(self, *notes: str) -> "Field":
        return Field(self.expr, self.variables, self.singular_set, self.name, self.provenance + notes)

    def rename(self, mapping: Mapping[str, str]) -> "Field":
        """Rename variables, e.g. {"x": "xi", "y": "eta"}"""
        exprs = {old: var(new) for old, new in mapping.items()}
        variables = tuple(mapping.get(v, v) for v in self.variables)
        return Field(
            substitute(self.expr, exprs),
            variables,
            self.singular_set.substitute(exprs),
            self.name,
            self.provenance,
        )

    def compose(
        self,
        mapping: Mapping[str, Expr],
        variables: Sequence[str],
        extra: Optional[SingularSet] = None,
        name: str = "",
        provenance: Iterable[str] = (),
    ) -> "Field":
        """Substitute expressions for variables; singular sets are pulled back"""
        singular = self.singular_set.substitute(mapping)
        if extra is not None:
            singular = extra | singular
        return Field(
            substitute(self.expr, mapping),
            variables,
            singular,
            name or self.name,
            self.provenance + tuple(provenance),
        )

    def perturbed(self, epsilon: float) -> "Field":
        return Field(
            self.expr + epsilon,
            self.variables,
            self.singular_set,
            f"{self.name}+{epsilon:g}",
            self.provenance + (f"perturbed by {epsilon:g}",),
        )
