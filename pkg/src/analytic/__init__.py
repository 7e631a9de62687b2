"""
Expression-tree algebra and conjugate harmonic pairs.
"""

from src.analytic.expr import (
    Expr, add, const, differentiate, evaluate, gradient_squared, laplacian, mul,
    substitute, symbols, var,
)
from src.analytic.field import Field
from src.analytic.harmonic import (
    HarmonicPair, cauchy_riemann_residual, compose_pairs, grad_sq, harmonic_pair,
    laplacian_residual, lemma1_residual, orthogonality_residual, random_harmonic_pair,
)
from src.analytic.sexpr import parse_sexpr, to_sexpr
from src.analytic.singular import SingularBand, SingularSet

__all__ = [
    "Expr", "Field", "HarmonicPair", "SingularBand", "SingularSet",
    "add", "cauchy_riemann_residual", "compose_pairs", "const", "differentiate",
    "evaluate", "grad_sq", "gradient_squared", "harmonic_pair", "laplacian",
    "laplacian_residual", "lemma1_residual", "mul", "orthogonality_residual",
    "parse_sexpr", "random_harmonic_pair", "substitute", "symbols", "to_sexpr", "var",
]
