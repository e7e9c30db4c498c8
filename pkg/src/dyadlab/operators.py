"""Dyadic maximal functions, square functions and the 2D hybrid operators."""

from __future__ import annotations

from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .dyadic import (DyadicInterval, DyadicRectangle, Grid1D, GridFunction1D,
                     GridFunction2D)
from .errors import ConfigError
from .wavelets import (CutoffFamily, CoefficientSequence, all_coefficients,
                       all_coefficients_2d, haar_coefficient_2d,
                       haar_pyramid_2d, HAAR_LACUNARY, HAAR_NONLACUNARY,
                       SMOOTH_LACUNARY, SMOOTH_NONLACUNARY)

__all__ = [
    "HybridKind",
    "maximal_1d",
    "maximal_function",
    "maximal_function_2d",
    "square_1d",
    "hybrid_2d",
    "estimate_operator_norm",
]


class HybridKind(str, Enum):
    M = "M"
    S = "S"
    SS = "SS"
    SS_H = "SS_H"
    MS = "MS"
    MS_H = "MS_H"
    SM = "SM"
    SM_H = "SM_H"
    MM = "MM"


def _scale_averages(f: GridFunction1D) -> dict[int, np.ndarray]:
    """Average of |f| over every dyadic block, per scale."""
    g = f.grid
    out: dict[int, np.ndarray] = {}
    cur = np.abs(f.samples).astype(float)
    k = -g.res_exp
    out[k] = cur
    while k < g.box_exp:
        cur = 0.5 * (cur[0::2] + cur[1::2])
        k += 1
        out[k] = cur
    return out


def maximal_function(f: GridFunction1D) -> GridFunction1D:
    """Dyadic Hardy-Littlewood maximal function on the whole grid.

    The supremum runs over all dyadic subintervals of the box, from single
    grid cells up to the box itself.
    """
    averages = _scale_averages(f)
    n = f.grid.n_points
    best = np.zeros(n)
    for k, avg in averages.items():
        reps = n // avg.shape[0]
        np.maximum(best, np.repeat(avg, reps), out=best)
    return GridFunction1D(f.grid, best)


def maximal_1d(f: GridFunction1D, x) -> float:
    """Dyadic maximal function at one point."""
    return float(maximal_function(f).samples[f.grid.cell_of(x)])


def _scale_averages_2d(h: GridFunction2D) -> dict[tuple[int, int], np.ndarray]:
    """Average of |h| over every dyadic rectangle shape (kx, ky)."""
    gx, gy = h.grid_x, h.grid_y
    rows: dict[int, np.ndarray] = {}
    cur = np.abs(h.samples).astype(float)
    kx = -gx.res_exp
    rows[kx] = cur
    while kx < gx.box_exp:
        cur = 0.5 * (cur[0::2, :] + cur[1::2, :])
        kx += 1
        rows[kx] = cur
    out: dict[tuple[int, int], np.ndarray] = {}
    for kx, arr in rows.items():
        cur = arr
        ky = -gy.res_exp
        out[(kx, ky)] = cur
        while ky < gy.box_exp:
            cur = 0.5 * (cur[:, 0::2] + cur[:, 1::2])
            ky += 1
            out[(kx, ky)] = cur
    return out


def maximal_function_2d(h: GridFunction2D,
                        rectangles: Iterable[DyadicRectangle] | None = None
                        ) -> GridFunction2D:
    """Dyadic strong maximal function MM.

    With rectangles=None the supremum runs over all dyadic rectangles of the
    box (the default used for exceptional-set enlargements); otherwise only
    over the rectangles of the given collection containing the point.
    """
    nx, ny = h.grid_x.n_points, h.grid_y.n_points
    if rectangles is None:
        best = np.zeros((nx, ny))
        for (kx, ky), avg in _scale_averages_2d(h).items():
            rx = nx // avg.shape[0]
            ry = ny // avg.shape[1]
            np.maximum(best, np.repeat(np.repeat(avg, rx, axis=0), ry, axis=1),
                       out=best)
        return GridFunction2D(h.grid_x, h.grid_y, best)
    best = np.zeros((nx, ny))
    area = h.cell_area
    for r in rectangles:
        a, b = h.grid_x.cell_range(r.x)
        c, d = h.grid_y.cell_range(r.y)
        avg = float(np.abs(h.samples[a:b, c:d]).sum()) * area / float(r.area)
        np.maximum(best[a:b, c:d], avg, out=best[a:b, c:d])
    return GridFunction2D(h.grid_x, h.grid_y, best)


def square_1d(f: GridFunction1D, collection: Sequence[DyadicInterval],
              family: CutoffFamily) -> GridFunction1D:
    """Discretized Littlewood-Paley square function over the collection."""
    if not family.lacunary:
        raise ConfigError("square function requires a lacunary family")
    coeffs = all_coefficients(f, collection, family)
    acc = np.zeros(f.grid.n_points)
    for iv, c in coeffs.items():
        a, b = f.grid.cell_range(iv)
        acc[a:b] += abs(c) ** 2 / float(iv.length)
    return GridFunction1D(f.grid, np.sqrt(acc))


def square_from_sequence(seq: CoefficientSequence, grid: Grid1D,
                         members: Iterable[DyadicInterval] | None = None
                         ) -> GridFunction1D:
    """Square function built from a given coefficient sequence."""
    acc = np.zeros(grid.n_points)
    keys = seq.collection if members is None else members
    for iv in keys:
        c = seq[iv]
        if c == 0.0:
            continue
        a, b = grid.cell_range(iv)
        acc[a:b] += abs(c) ** 2 / float(iv.length)
    return GridFunction1D(grid, np.sqrt(acc))


def _hybrid_families(kind: HybridKind,
                     families: tuple[CutoffFamily, CutoffFamily] | None
                     ) -> tuple[CutoffFamily, CutoffFamily]:
    haar = kind.value.endswith("_H")
    lac = HAAR_LACUNARY if haar else SMOOTH_LACUNARY
    nonlac = HAAR_NONLACUNARY if haar else SMOOTH_NONLACUNARY
    base = kind.value[:-2] if haar else kind.value
    defaults = {"SS": (lac, lac), "MS": (nonlac, lac), "SM": (lac, nonlac)}
    want_lac = {"SS": (True, True), "MS": (False, True), "SM": (True, False)}
    if families is None:
        return defaults[base]
    fx, fy = families
    if (fx.lacunary, fy.lacunary) != want_lac[base]:
        raise ConfigError(
            f"{kind.value} requires lacunarity pattern {want_lac[base]}")
    return fx, fy


def hybrid_2d(h: GridFunction2D, kind: HybridKind,
              rectangles: Sequence[DyadicRectangle],
              families: tuple[CutoffFamily, CutoffFamily] | None = None
              ) -> GridFunction2D:
    """The 2D hybrid operators SS, (SS)^H, MS, (MS)^H, SM, (SM)^H and MM."""
    kind = HybridKind(kind)
    if kind in (HybridKind.M, HybridKind.S):
        raise ConfigError(f"{kind.value} is one-dimensional; use the 1d entry points")
    if kind == HybridKind.MM:
        return maximal_function_2d(h, rectangles)

    fx, fy = _hybrid_families(kind, families)
    if fx.haar and fy.haar:
        pyr = haar_pyramid_2d(h)
        data = {r: haar_coefficient_2d(pyr, r, fx.lacunary, fy.lacunary)
                for r in rectangles}
        coeffs = CoefficientSequence(data, tuple(rectangles))
    else:
        coeffs = all_coefficients_2d(h, rectangles, fx, fy)
    gx, gy = h.grid_x, h.grid_y
    base = kind.value[:-2] if kind.value.endswith("_H") else kind.value

    if base == "SS":
        acc = np.zeros((gx.n_points, gy.n_points))
        for r, c in coeffs.items():
            a, b = gx.cell_range(r.x)
            cc, d = gy.cell_range(r.y)
            acc[a:b, cc:d] += abs(c) ** 2 / float(r.area)
        return GridFunction2D(gx, gy, np.sqrt(acc))

    xs = sorted({r.x for r in rectangles})
    if base == "MS":
        # sup_I |I|^{-1/2} (sum_J |<h, phi_I x psi_J>|^2 / |J| chi_J(y))^{1/2} chi_I(x)
        best = np.zeros((gx.n_points, gy.n_points))
        for I in xs:
            acc = np.zeros(gy.n_points)
            for r, c in coeffs.items():
                if r.x != I:
                    continue
                cc, d = gy.cell_range(r.y)
                acc[cc:d] += abs(c) ** 2 / float(r.y.length)
            vals = np.sqrt(acc) / float(I.length) ** 0.5
            a, b = gx.cell_range(I)
            np.maximum(best[a:b, :], vals[None, :], out=best[a:b, :])
        return GridFunction2D(gx, gy, best)

    # SM: (sum_I [sup_J |<h, psi_I x phi_J>| / |J| chi_J(y)] / |I| chi_I(x))^{1/2}
    # The inner supremum enters to the first power, exactly as displayed.
    acc = np.zeros((gx.n_points, gy.n_points))
    for I in xs:
        inner = np.zeros(gy.n_points)
        for r, c in coeffs.items():
            if r.x != I:
                continue
            cc, d = gy.cell_range(r.y)
            np.maximum(inner[cc:d], abs(c) / float(r.y.length), out=inner[cc:d])
        a, b = gx.cell_range(I)
        acc[a:b, :] += inner[None, :] / float(I.length)
    return GridFunction2D(gx, gy, np.sqrt(acc))


def _full_rectangle_pyramid(gx: Grid1D, gy: Grid1D, k_min_x: int, k_min_y: int
                            ) -> list[DyadicRectangle]:
    from .dyadic import enumerate_dyadic
    xs = enumerate_dyadic(gx, k_min_x, gx.box_exp)
    ys = enumerate_dyadic(gy, k_min_y, gy.box_exp)
    return [DyadicRectangle(i, j) for i in xs for j in ys]


def estimate_operator_norm(kind: HybridKind, p: float, trials: int, seed: int,
                           box_exp: int = 0, res_exp: int = 5,
                           rectangles: Sequence[DyadicRectangle] | None = None
                           ) -> float:
    """Empirical operator norm: max over random inputs of ||Op f||_p / ||f||_p.

    Deterministic for a given seed.  The supremum over inputs only grows with
    the trial count.  p = inf is admitted for M and MM only.
    """
    kind = HybridKind(kind)
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    if p == np.inf and kind not in (HybridKind.M, HybridKind.MM):
        raise ConfigError(f"p = inf is only admitted for M and MM, not {kind.value}")
    if not (1.0 < p) and p != np.inf:
        raise ConfigError("need 1 < p")
    rng = np.random.default_rng(np.random.PCG64(seed))
    gx = Grid1D(box_exp, res_exp)
    gy = Grid1D(box_exp, res_exp)
    one_dim = kind in (HybridKind.M, HybridKind.S)
    if not one_dim and rectangles is None:
        k_min = 1 - res_exp  # halves of every rectangle stay resolvable
        rectangles = _full_rectangle_pyramid(gx, gy, k_min, k_min)
    from .dyadic import enumerate_dyadic
    intervals = enumerate_dyadic(gx, 1 - res_exp, box_exp)
    best = 0.0
    for _ in range(trials):
        if one_dim:
            f = GridFunction1D(gx, rng.standard_normal(gx.n_points))
            nf = f.norm(p)
            if nf == 0.0:
                continue
            out = (maximal_function(f) if kind == HybridKind.M
                   else square_1d(f, intervals, SMOOTH_LACUNARY))
            best = max(best, out.norm(p) / nf)
        else:
            h = GridFunction2D(gx, gy,
                               rng.standard_normal((gx.n_points, gy.n_points)))
            nh = h.norm(p)
            if nh == 0.0:
                continue
            out = hybrid_2d(h, kind, rectangles)
            best = max(best, out.norm(p) / nh)
    return best
