"""Exact dyadic geometry: intervals, rectangles and periodic grid functions.

Interval endpoints are kept as integer (scale, position) pairs so containment,
disjointness and measures of grid sets are computed without floating point.
Functions are sampled on uniform periodic grids; every integral in the package
is a left-endpoint Riemann sum with uniform weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import ConfigError, DomainError, ResolutionError

__all__ = [
    "DyadicInterval",
    "DyadicRectangle",
    "Grid1D",
    "GridFunction1D",
    "GridFunction2D",
    "contains",
    "disjoint",
    "measure_intersection",
    "enumerate_dyadic",
    "tensor",
]


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """The half-open interval [n*2^k, (n+1)*2^k)."""

    k: int
    n: int

    @property
    def left(self) -> Fraction:
        return Fraction(self.n) * Fraction(2) ** self.k

    @property
    def right(self) -> Fraction:
        return Fraction(self.n + 1) * Fraction(2) ** self.k

    @property
    def length(self) -> Fraction:
        return Fraction(2) ** self.k

    def parent(self) -> "DyadicInterval":
        return DyadicInterval(self.k + 1, self.n // 2)

    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        return (DyadicInterval(self.k - 1, 2 * self.n),
                DyadicInterval(self.k - 1, 2 * self.n + 1))

    def contains_point(self, x) -> bool:
        return self.left <= Fraction(x) < self.right

    def __str__(self) -> str:  # e.g. I(k=-1,n=3)
        return f"I(k={self.k},n={self.n})"


def contains(a: DyadicInterval, b: DyadicInterval) -> bool:
    """True iff b is a subset of a (as sets of reals)."""
    if b.k > a.k:
        return False
    # b's ancestor at scale a.k has position b.n >> (a.k - b.k)
    return (b.n >> (a.k - b.k)) == a.n


def disjoint(a: DyadicInterval, b: DyadicInterval) -> bool:
    return not (contains(a, b) or contains(b, a))


@dataclass(frozen=True, order=True)
class DyadicRectangle:
    """Product R = I x J of two dyadic intervals."""

    x: DyadicInterval
    y: DyadicInterval

    @property
    def area(self) -> Fraction:
        return self.x.length * self.y.length

    def __str__(self) -> str:
        return f"R({self.x}x{self.y})"


def rect_contains(a: DyadicRectangle, b: DyadicRectangle) -> bool:
    return contains(a.x, b.x) and contains(a.y, b.y)


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid on [x0, x0 + 2^box_exp) with 2^res_exp points per unit."""

    box_exp: int
    res_exp: int
    x0: Fraction = Fraction(0)

    def __post_init__(self):
        if self.res_exp < 0:
            raise ConfigError("res_exp must be nonnegative")

    @property
    def length(self) -> Fraction:
        return Fraction(2) ** self.box_exp

    @property
    def n_points(self) -> int:
        return 2 ** (self.box_exp + self.res_exp)

    @property
    def cell_width(self) -> Fraction:
        return Fraction(1, 2 ** self.res_exp)

    def points(self) -> np.ndarray:
        """Left endpoints of the grid cells, as floats."""
        w = float(self.cell_width)
        return float(self.x0) + w * np.arange(self.n_points)

    def cell_of(self, x) -> int:
        """Index of the grid cell containing the point x."""
        off = (Fraction(x) - self.x0) / self.cell_width
        idx = int(off)  # floor for nonnegative
        if off < 0 or idx >= self.n_points:
            raise DomainError(f"point {x} outside domain")
        return idx

    def cell_range(self, interval: DyadicInterval) -> tuple[int, int]:
        """Half-open index range [a, b) of the cells making up the interval.

        Raises ResolutionError if the interval is not a union of grid cells and
        DomainError if it is not contained in the domain.
        """
        if interval.k < -self.res_exp:
            raise ResolutionError(
                f"{interval} finer than grid resolution 2^-{self.res_exp}")
        lo = (interval.left - self.x0) / self.cell_width
        hi = (interval.right - self.x0) / self.cell_width
        if lo.denominator != 1 or hi.denominator != 1:
            raise ResolutionError(f"{interval} is not a union of grid cells")
        a, b = int(lo), int(hi)
        if a < 0 or b > self.n_points:
            raise DomainError(f"{interval} outside domain")
        return a, b

    def full_interval(self) -> DyadicInterval:
        if self.x0 != 0:
            raise DomainError("full_interval assumes x0 = 0")
        return DyadicInterval(self.box_exp, 0)


@dataclass
class GridFunction1D:
    """Real- or complex-valued samples on a Grid1D (left-endpoint convention)."""

    grid: Grid1D
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.samples.shape != (self.grid.n_points,):
            raise ValueError(
                f"expected {self.grid.n_points} samples, got {self.samples.shape}")

    @classmethod
    def zeros(cls, grid: Grid1D) -> "GridFunction1D":
        return cls(grid, np.zeros(grid.n_points))

    @classmethod
    def from_callable(cls, grid: Grid1D, fn) -> "GridFunction1D":
        return cls(grid, np.asarray(fn(grid.points()), dtype=float))

    @classmethod
    def indicator(cls, grid: Grid1D, intervals: Iterable[DyadicInterval]) -> "GridFunction1D":
        s = np.zeros(grid.n_points)
        for iv in intervals:
            a, b = grid.cell_range(iv)
            s[a:b] = 1.0
        return cls(grid, s)

    def integral(self) -> float:
        return float(np.sum(self.samples) * float(self.grid.cell_width))

    def norm(self, p: float) -> float:
        w = float(self.grid.cell_width)
        a = np.abs(self.samples)
        if p == np.inf:
            return float(a.max(initial=0.0))
        return float((np.sum(a ** p) * w) ** (1.0 / p))

    def restrict(self, interval: DyadicInterval) -> np.ndarray:
        a, b = self.grid.cell_range(interval)
        return self.samples[a:b]

    def measure_above(self, level: float) -> float:
        """Measure of {|f| > level}, exact on the grid."""
        return float(np.count_nonzero(np.abs(self.samples) > level)
                     * float(self.grid.cell_width))


@dataclass
class GridFunction2D:
    """Samples on a product grid; axis 0 is x, axis 1 is y."""

    grid_x: Grid1D
    grid_y: Grid1D
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        expect = (self.grid_x.n_points, self.grid_y.n_points)
        if self.samples.shape != expect:
            raise ValueError(f"expected shape {expect}, got {self.samples.shape}")

    @classmethod
    def zeros(cls, grid_x: Grid1D, grid_y: Grid1D) -> "GridFunction2D":
        return cls(grid_x, grid_y, np.zeros((grid_x.n_points, grid_y.n_points)))

    @classmethod
    def indicator(cls, grid_x: Grid1D, grid_y: Grid1D,
                  rectangles: Iterable[DyadicRectangle]) -> "GridFunction2D":
        s = np.zeros((grid_x.n_points, grid_y.n_points))
        for r in rectangles:
            a, b = grid_x.cell_range(r.x)
            c, d = grid_y.cell_range(r.y)
            s[a:b, c:d] = 1.0
        return cls(grid_x, grid_y, s)

    @property
    def cell_area(self) -> float:
        return float(self.grid_x.cell_width) * float(self.grid_y.cell_width)

    def integral(self) -> float:
        return float(np.sum(self.samples) * self.cell_area)

    def norm(self, p: float) -> float:
        a = np.abs(self.samples)
        if p == np.inf:
            return float(a.max(initial=0.0))
        return float((np.sum(a ** p) * self.cell_area) ** (1.0 / p))

    def measure_above(self, level: float) -> float:
        return float(np.count_nonzero(np.abs(self.samples) > level) * self.cell_area)

    def restrict(self, rect: DyadicRectangle) -> np.ndarray:
        a, b = self.grid_x.cell_range(rect.x)
        c, d = self.grid_y.cell_range(rect.y)
        return self.samples[a:b, c:d]


def tensor(f: GridFunction1D, g: GridFunction1D) -> GridFunction2D:
    """(f tensor g)(x, y) = f(x) g(y)."""
    return GridFunction2D(f.grid, g.grid, np.outer(f.samples, g.samples))


def measure_intersection(interval: DyadicInterval, indicator: GridFunction1D) -> Fraction:
    """|I ∩ S| for S given by a 0/1 grid indicator; exact for unions of cells."""
    vals = np.unique(indicator.samples)
    if not np.all(np.isin(vals, (0.0, 1.0))):
        raise ValueError("indicator must take values in {0, 1}")
    a, b = indicator.grid.cell_range(interval)
    count = int(np.count_nonzero(indicator.samples[a:b]))
    return count * indicator.grid.cell_width


def enumerate_dyadic(domain: Grid1D | tuple[int, Fraction], k_min: int,
                     k_max: int) -> list[DyadicInterval]:
    """All dyadic subintervals of the domain with scales in [k_min, k_max].

    The domain is a Grid1D (its resolution is ignored here) or a pair
    (box_exp, x0); x0 must itself be dyadic so positions stay integral.
    """
    if k_min > k_max:
        raise ValueError("k_min must be <= k_max")
    if isinstance(domain, Grid1D):
        box_exp, x0 = domain.box_exp, domain.x0
    else:
        box_exp, x0 = domain
    out: list[DyadicInterval] = []
    for k in range(min(k_max, box_exp), k_min - 1, -1):
        base = (Fraction(x0) / (Fraction(2) ** k))
        if base.denominator != 1:
            raise ValueError("domain origin is not aligned at scale k")
        n0 = int(base)
        out.extend(DyadicInterval(k, n0 + j) for j in range(2 ** (box_exp - k)))
    return out
