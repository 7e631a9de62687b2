"""
Expression trees
Immutable scalar expressions over named variables, with exact
rule-based differentiation and vectorised numpy evaluation.
"""

import logging
from typing import Callable, Dict, Iterable, Mapping, Tuple, Union

import numpy as np

from src.errors import SingularEvaluationError, UsageError

logger = logging.getLogger(__name__)

Number = Union[int, float]
Point = Mapping[str, Union[float, np.ndarray]]

OPERATORS = ("add", "mul", "div", "pow", "neg")

_NUMPY_FUNCTIONS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "exp": np.exp,
    "ln": np.log,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "coth": lambda a: 1.0 / np.tanh(a),
    "sec": lambda a: 1.0 / np.cos(a),
    "sech": lambda a: 1.0 / np.cosh(a),
    "arccos": np.arccos,
    "arcsin": np.arcsin,
    "sqrt": np.sqrt,
    "abs": np.abs,
}

FUNCTIONS = tuple(_NUMPY_FUNCTIONS)


class Expr:
    """
    Node of an immutable expression tree.

    op is one of "const", "var", the OPERATORS or the FUNCTIONS names.
    add and mul are n-ary; div and pow are binary; neg and functions unary.
    Equality is identity: two structurally equal trees are distinct objects.
    """

    __slots__ = ("op", "args", "value", "name", "free")

    def __init__(self, op: str, args: Tuple["Expr", ...] = (), value: float = None, name: str = None):
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "args", tuple(args))
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "name", name)
        if op == "var":
            free = frozenset((name,))
        elif op == "const":
            free = frozenset()
        else:
            free = frozenset().union(*(a.free for a in args))
        object.__setattr__(self, "free", free)

    def __setattr__(self, key, value):
        raise AttributeError("Expr is immutable")

    # Arithmetic sugar
    def __add__(self, other): return add(self, as_expr(other))
    def __radd__(self, other): return add(as_expr(other), self)
    def __sub__(self, other): return add(self, neg(as_expr(other)))
    def __rsub__(self, other): return add(as_expr(other), neg(self))
    def __mul__(self, other): return mul(self, as_expr(other))
    def __rmul__(self, other): return mul(as_expr(other), self)
    def __truediv__(self, other): return div(self, as_expr(other))
    def __rtruediv__(self, other): return div(as_expr(other), self)
    def __pow__(self, other): return power(self, as_expr(other))
    def __rpow__(self, other): return power(as_expr(other), self)
    def __neg__(self): return neg(self)
    def __pos__(self): return self

    def is_const(self, value: float = None) -> bool:
        if self.op != "const":
            return False
        return value is None or self.value == value

    def __repr__(self) -> str:
        from src.analytic.sexpr import to_sexpr
        return to_sexpr(self)


# ================================
# CONSTRUCTORS
# ================================

def const(value: Number) -> Expr:
    return Expr("const", value=float(value))


def var(name: str) -> Expr:
    if not isinstance(name, str) or not name:
        raise UsageError(f"invalid variable name: {name!r}")
    return Expr("var", name=name)


def symbols(names: str) -> Tuple[Expr, ...]:
    """symbols("x y t") -> (var x, var y, var t)"""
    return tuple(var(n) for n in names.split())


def as_expr(value: Union[Expr, Number]) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        return const(value)
    raise UsageError(f"cannot convert {type(value).__name__} to Expr")


ZERO = const(0.0)
ONE = const(1.0)


def add(*terms: Expr) -> Expr:
    flat = []
    total = 0.0
    for term in terms:
        term = as_expr(term)
        parts = term.args if term.op == "add" else (term,)
        for part in parts:
            if part.op == "const":
                total += part.value
            else:
                flat.append(part)
    if total != 0.0 or not flat:
        flat.append(const(total))
    if len(flat) == 1:
        return flat[0]
    return Expr("add", tuple(flat))


def mul(*factors: Expr) -> Expr:
    flat = []
    coefficient = 1.0
    for factor in factors:
        factor = as_expr(factor)
        while factor.op == "neg":
            coefficient = -coefficient
            factor = factor.args[0]
        parts = factor.args if factor.op == "mul" else (factor,)
        for part in parts:
            if part.op == "const":
                coefficient *= part.value
            else:
                flat.append(part)
    if coefficient == 0.0:
        return ZERO
    if not flat:
        return const(coefficient)
    if coefficient == -1.0:
        return neg(flat[0] if len(flat) == 1 else Expr("mul", tuple(flat)))
    if coefficient != 1.0:
        flat.insert(0, const(coefficient))
    if len(flat) == 1:
        return flat[0]
    return Expr("mul", tuple(flat))


def neg(a: Expr) -> Expr:
    a = as_expr(a)
    if a.op == "const":
        return const(-a.value)
    if a.op == "neg":
        return a.args[0]
    if a.op == "mul" and a.args[0].op == "const":
        return mul(const(-a.args[0].value), *a.args[1:])
    return Expr("neg", (a,))


def div(a: Expr, b: Expr) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if b.is_const(1.0):
        return a
    if a.is_const(0.0) and not b.is_const(0.0):
        return ZERO
    if a.op == "const" and b.op == "const" and b.value != 0.0:
        return const(a.value / b.value)
    return Expr("div", (a, b))


def power(a: Expr, b: Expr) -> Expr:
    a, b = as_expr(a), as_expr(b)
    if b.is_const(0.0):
        return ONE
    if b.is_const(1.0):
        return a
    if a.op == "const" and b.op == "const":
        with np.errstate(all="ignore"):
            value = np.power(a.value, b.value)
        if np.isfinite(value):
            return const(value)
    return Expr("pow", (a, b))


def func(name: str, a: Expr) -> Expr:
    if name not in _NUMPY_FUNCTIONS:
        raise UsageError(f"unknown function '{name}'")
    a = as_expr(a)
    if a.op == "const":
        with np.errstate(all="ignore"):
            value = _NUMPY_FUNCTIONS[name](np.float64(a.value))
        if np.isfinite(value):
            return const(value)
    return Expr(name, (a,))


def _unary(name: str) -> Callable[[Expr], Expr]:
    def build(a):
        return func(name, a)
    build.__name__ = name
    return build


exp = _unary("exp")
ln = _unary("ln")
sin = _unary("sin")
cos = _unary("cos")
tan = _unary("tan")
sinh = _unary("sinh")
cosh = _unary("cosh")
tanh = _unary("tanh")
coth = _unary("coth")
sec = _unary("sec")
sech = _unary("sech")
arccos = _unary("arccos")
arcsin = _unary("arcsin")
sqrt = _unary("sqrt")
absolute = _unary("abs")


def rebuild(node: Expr, args: Tuple[Expr, ...]) -> Expr:
    """Rebuild node with new children through the simplifying constructors"""
    op = node.op
    if op == "add":
        return add(*args)
    if op == "mul":
        return mul(*args)
    if op == "div":
        return div(*args)
    if op == "pow":
        return power(*args)
    if op == "neg":
        return neg(args[0])
    return func(op, args[0])


# ================================
# EVALUATION
# ================================

def evaluate(e: Expr, point: Point, strict: bool = True):
    """
    Evaluate e at a point (scalars or equally shaped numpy arrays).

    Args:
        e: expression
        point: variable name -> value
        strict: raise SingularEvaluationError on any non-finite intermediate;
            otherwise non-finite entries propagate as nan/inf

    Returns:
        float for scalar points, numpy array otherwise
    """
    bound = {name: np.asarray(value, dtype=float) for name, value in point.items()}
    missing = e.free - set(bound)
    if missing:
        raise UsageError(f"unbound variable(s): {', '.join(sorted(missing))}")
    memo: Dict[int, np.ndarray] = {}
    with np.errstate(all="ignore"):
        result = _evaluate(e, bound, memo, strict, point)
    result = np.asarray(result, dtype=float)
    shape = np.broadcast_shapes(result.shape, *(v.shape for v in bound.values()))
    if shape == ():
        return float(result)
    return np.broadcast_to(result, shape).copy()


def _evaluate(node: Expr, bound, memo, strict: bool, point) -> np.ndarray:
    key = id(node)
    if key in memo:
        return memo[key]
    op = node.op
    if op == "const":
        value = np.float64(node.value)
    elif op == "var":
        value = bound[node.name]
    else:
        args = [_evaluate(a, bound, memo, strict, point) for a in node.args]
        if op == "add":
            value = args[0]
            for a in args[1:]:
                value = value + a
        elif op == "mul":
            value = args[0]
            for a in args[1:]:
                value = value * a
        elif op == "neg":
            value = -args[0]
        elif op == "div":
            value = args[0] / args[1]
        elif op == "pow":
            value = np.power(args[0], args[1])
        else:
            value = _NUMPY_FUNCTIONS[op](args[0])
        if strict and not np.all(np.isfinite(value)):
            raise SingularEvaluationError(
                f"singular evaluation of {node!r}",
                subexpr=node,
                point={k: np.asarray(v).tolist() for k, v in point.items()},
            )
    memo[key] = value
    return value


# ================================
# DIFFERENTIATION / SUBSTITUTION
# ================================

def differentiate(e: Expr, variable: str) -> Expr:
    """Exact symbolic derivative of e with respect to variable"""
    if not isinstance(variable, str):
        raise UsageError(f"differentiation variable must be a name, got {variable!r}")
    return _diff(e, variable, {})


def _diff(node: Expr, v: str, memo: Dict[int, Expr]) -> Expr:
    key = id(node)
    if key in memo:
        return memo[key]
    result = _diff_rule(node, v, memo)
    memo[key] = result
    return result


def _diff_rule(e: Expr, v: str, memo) -> Expr:
    if v not in e.free:
        return ZERO
    op = e.op
    if op == "var":
        return ONE
    d = lambda node: _diff(node, v, memo)
    if op == "add":
        return add(*(d(a) for a in e.args))
    if op == "mul":
        terms = []
        for i, a in enumerate(e.args):
            da = d(a)
            if not da.is_const(0.0):
                terms.append(mul(*e.args[:i], da, *e.args[i + 1:]))
        return add(*terms)
    if op == "neg":
        return neg(d(e.args[0]))
    if op == "div":
        a, b = e.args
        da, db = d(a), d(b)
        quotient = div(da, b)
        if db.is_const(0.0):
            return quotient
        return add(quotient, neg(div(mul(a, db), power(b, 2))))
    if op == "pow":
        a, b = e.args
        da = d(a)
        if v not in b.free:
            return mul(b, power(a, add(b, -1.0)), da)
        return mul(e, add(mul(d(b), ln(a)), div(mul(b, da), a)))

    a = e.args[0]
    da = d(a)
    if op == "exp":
        return mul(e, da)
    if op == "ln":
        return div(da, a)
    if op == "sin":
        return mul(cos(a), da)
    if op == "cos":
        return neg(mul(sin(a), da))
    if op == "tan":
        return mul(power(sec(a), 2), da)
    if op == "sinh":
        return mul(cosh(a), da)
    if op == "cosh":
        return mul(sinh(a), da)
    if op == "tanh":
        return mul(power(sech(a), 2), da)
    if op == "coth":
        return mul(add(1.0, neg(power(e, 2))), da)
    if op == "sec":
        return mul(e, tan(a), da)
    if op == "sech":
        return neg(mul(e, tanh(a), da))
    if op == "arccos":
        return neg(div(da, sqrt(add(1.0, neg(power(a, 2))))))
    if op == "arcsin":
        return div(da, sqrt(add(1.0, neg(power(a, 2)))))
    if op == "sqrt":
        return div(da, mul(2.0, e))
    if op == "abs":
        return div(mul(a, da), e)
    raise UsageError(f"no derivative rule for '{op}'")


def substitute(e: Expr, mapping: Mapping[str, Union[Expr, Number]]) -> Expr:
    """Replace variables by expressions; untouched subtrees are shared"""
    replacements = {name: as_expr(value) for name, value in mapping.items()}
    memo: Dict[int, Expr] = {}

    def walk(node: Expr) -> Expr:
        key = id(node)
        if key in memo:
            return memo[key]
        if not (node.free & replacements.keys()):
            result = node
        elif node.op == "var":
            result = replacements[node.name]
        else:
            result = rebuild(node, tuple(walk(a) for a in node.args))
        memo[key] = result
        return result

    return walk(e)


def laplacian(e: Expr, variables: Iterable[str] = ("x", "y")) -> Expr:
    return add(*(differentiate(differentiate(e, v), v) for v in variables))


def gradient_squared(e: Expr, variables: Iterable[str] = ("x", "y")) -> Expr:
    return add(*(power(differentiate(e, v), 2) for v in variables))
