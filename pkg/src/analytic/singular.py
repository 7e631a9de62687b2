"""
Declared singular sets.

A SingularSet is a union of bands, each a condition on one expression:
    zero         |g| < margin
    pole         g within margin of pi/2 + k*pi (poles of tan / sec)
    nonpositive  g <= margin
Points where g itself cannot be evaluated count as singular.
"""

from dataclasses import dataclass, field
from typing import List, Mapping, Tuple

import numpy as np

from src.analytic.expr import Expr, Point, as_expr, evaluate, substitute
from src.config import config

BAND_KINDS = ("zero", "pole", "nonpositive")


@dataclass(frozen=True)
class SingularBand:
    expr: Expr
    kind: str
    margin: float = config.SINGULAR_MARGIN
    note: str = ""

    def __post_init__(self):
        if self.kind not in BAND_KINDS:
            raise ValueError(f"unknown band kind '{self.kind}'")

    def mask(self, point: Point) -> np.ndarray:
        values = np.asarray(evaluate(self.expr, point, strict=False), dtype=float)
        with np.errstate(all="ignore"):
            if self.kind == "zero":
                hit = np.abs(values) < self.margin
            elif self.kind == "pole":
                r = np.mod(values - np.pi / 2, np.pi)
                hit = np.minimum(r, np.pi - r) < self.margin
            else:
                hit = values <= self.margin
        return hit | ~np.isfinite(values)

    def substitute(self, mapping: Mapping[str, Expr]) -> "SingularBand":
        return SingularBand(substitute(self.expr, mapping), self.kind, self.margin, self.note)

    def describe(self) -> str:
        label = self.note or self.kind
        return f"{label}: {self.kind} band of {self.expr!r} (half-width {self.margin:g})"


@dataclass(frozen=True)
class SingularSet:
    bands: Tuple[SingularBand, ...] = field(default_factory=tuple)

    @classmethod
    def of(cls, *bands: SingularBand) -> "SingularSet":
        return cls(tuple(bands))

    @classmethod
    def empty(cls) -> "SingularSet":
        return cls(())

    def __or__(self, other: "SingularSet") -> "SingularSet":
        return SingularSet(self.bands + other.bands)

    def mask(self, point: Point) -> np.ndarray:
        shape = np.broadcast_shapes(*(np.shape(v) for v in point.values())) if point else ()
        hit = np.zeros(shape, dtype=bool)
        for band in self.bands:
            hit = hit | band.mask(point)
        return hit

    def contains(self, point: Point) -> bool:
        return bool(np.any(self.mask(point)))

    def substitute(self, mapping: Mapping[str, Expr]) -> "SingularSet":
        return SingularSet(tuple(b.substitute(mapping) for b in self.bands))

    def describe(self) -> List[str]:
        return [b.describe() for b in self.bands]


def zero_band(expr, note: str = "", margin: float = None) -> SingularBand:
    return SingularBand(as_expr(expr), "zero", config.SINGULAR_MARGIN if margin is None else margin, note)


def pole_band(expr, note: str = "", margin: float = None) -> SingularBand:
    return SingularBand(as_expr(expr), "pole", config.SINGULAR_MARGIN if margin is None else margin, note)


def floor_band(expr, note: str = "", margin: float = None) -> SingularBand:
    return SingularBand(as_expr(expr), "nonpositive", config.SINGULAR_MARGIN if margin is None else margin, note)
