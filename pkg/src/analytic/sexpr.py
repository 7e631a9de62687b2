"""
Prefix S-expression text form for Expr trees, e.g.
    (add (pow (var x) 2) (neg (pow (var y) 2)))
Constants are bare numbers; add and mul accept any number of operands.
"""

import re
from typing import List

from src.analytic.expr import FUNCTIONS, Expr, add, const, div, func, mul, neg, power, var
from src.errors import UsageError

_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def to_sexpr(e: Expr) -> str:
    if e.op == "const":
        value = e.value
        return repr(int(value)) if value.is_integer() and abs(value) < 1e15 else repr(value)
    if e.op == "var":
        return f"(var {e.name})"
    return "(" + " ".join([e.op] + [to_sexpr(a) for a in e.args]) + ")"


def parse_sexpr(text: str) -> Expr:
    tokens = _TOKEN.findall(text)
    if not tokens:
        raise UsageError("empty S-expression")
    expr, position = _parse(tokens, 0)
    if position != len(tokens):
        raise UsageError(f"trailing tokens after position {position}: {' '.join(tokens[position:])}")
    return expr


def _parse(tokens: List[str], i: int):
    if i >= len(tokens):
        raise UsageError("unexpected end of S-expression")
    token = tokens[i]
    if token == ")":
        raise UsageError(f"unexpected ')' at token {i}")
    if token != "(":
        try:
            return const(float(token)), i + 1
        except ValueError:
            raise UsageError(f"bad atom {token!r}; variables are written (var name)")

    if i + 1 >= len(tokens):
        raise UsageError("unexpected end of S-expression")
    head = tokens[i + 1]
    if head == "var":
        if i + 3 >= len(tokens) or tokens[i + 3] != ")":
            raise UsageError("(var name) expects exactly one name")
        return var(tokens[i + 2]), i + 4

    args = []
    j = i + 2
    while j < len(tokens) and tokens[j] != ")":
        arg, j = _parse(tokens, j)
        args.append(arg)
    if j >= len(tokens):
        raise UsageError(f"unbalanced parentheses in ({head} ...)")
    return _build(head, args), j + 1


def _build(head: str, args: List[Expr]) -> Expr:
    arity = {"div": 2, "pow": 2, "neg": 1}
    if head in ("add", "mul"):
        if not args:
            raise UsageError(f"({head}) needs at least one operand")
        return add(*args) if head == "add" else mul(*args)
    if head in arity:
        if len(args) != arity[head]:
            raise UsageError(f"({head} ...) takes {arity[head]} operand(s), got {len(args)}")
        if head == "div":
            return div(*args)
        if head == "pow":
            return power(*args)
        return neg(args[0])
    if head in FUNCTIONS:
        if len(args) != 1:
            raise UsageError(f"({head} ...) takes 1 operand, got {len(args)}")
        return func(head, args[0])
    raise UsageError(f"unknown operator '{head}'")
