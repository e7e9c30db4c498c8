"""Bilinear blocks and the five discrete model operators, with a naive oracle.

The bilinear block over a collection Q is

    B(v1, v2) = sum_Q |Q|^{-1/2} <v1, m1_Q> <v2, m2_Q> m3_Q

with the sum restricted per variant: all of Q (global), |Q| >= |P| (local),
|Q| = 2^sharp |P| (fixed_scale, reading the dyadic band [2^sharp |P|,
2^{sharp+1} |P|) which contains exactly one dyadic size), or Q meeting a level
set (localized variants; the non-lacunary one sums absolute values).

A model operator pairs an x-side block against each rectangle's x interval, a
y-side block or paraproduct coefficients against the y interval, and a 2D
coefficient of h; the output is a linear combination of tensor members.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .dyadic import (DyadicInterval, DyadicRectangle, GridFunction1D,
                     GridFunction2D, contains)
from .errors import ConfigError
from .size_energy import size
from .wavelets import (CutoffFamily, CoefficientSequence, all_coefficients,
                       coefficient_naive, haar_pyramid, haar_pyramid_2d,
                       haar_coefficient_2d, HAAR_LACUNARY, HAAR_NONLACUNARY,
                       SMOOTH_LACUNARY, SMOOTH_NONLACUNARY)

__all__ = [
    "BilinearBlockSpec",
    "ModelOperatorSpec",
    "MODEL_NAMES",
    "bilinear_block",
    "model_operator",
    "oracle_model_operator",
    "multilinear_form",
    "local_size_bound_check",
    "energy_localization_check",
]

MODEL_NAMES = (
    "flag0_paraproduct",
    "flag_sharp_paraproduct",
    "flag0_flag0",
    "flag0_flag_sharp",
    "flag_sharp_flag_sharp",
)

_HAAR_TRIPLE = (HAAR_NONLACUNARY, HAAR_LACUNARY, HAAR_LACUNARY)
_SMOOTH_TRIPLE = (SMOOTH_NONLACUNARY, SMOOTH_LACUNARY, SMOOTH_LACUNARY)


@dataclass(frozen=True)
class BilinearBlockSpec:
    """Collection, three cutoff families and a summation variant."""

    collection: tuple[DyadicInterval, ...]
    families: tuple[CutoffFamily, CutoffFamily, CutoffFamily]
    variant: str = "global"  # global | local | fixed_scale | localized_lac | localized_nonlac
    reference: DyadicInterval | None = None  # P, for local / fixed_scale
    sharp: int = 0  # scale offset, for fixed_scale
    level_set: object = None  # GridFunction1D indicator, for localized variants

    def __post_init__(self):
        f1, f2, f3 = self.families
        if sum(f.lacunary for f in self.families) < 2:
            raise ConfigError("at least two of the three families must be lacunary")
        if self.variant in ("local", "fixed_scale") and self.reference is None:
            raise ConfigError(f"variant {self.variant} needs a reference interval")
        if self.variant == "fixed_scale" and self.sharp < 0:
            raise ConfigError("scale offset must be nonnegative")
        if self.variant in ("localized_lac", "localized_nonlac"):
            if self.level_set is None:
                raise ConfigError(f"variant {self.variant} needs a level set")
            if self.variant == "localized_lac" and not f3.lacunary:
                raise ConfigError("localized_lac requires a lacunary third family")
            if self.variant == "localized_nonlac" and (
                    f3.lacunary or not (f1.lacunary and f2.lacunary)):
                raise ConfigError("localized_nonlac requires lacunary first two "
                                  "families and a non-lacunary third")
        elif self.variant not in ("global", "local", "fixed_scale"):
            raise ConfigError(f"unknown variant {self.variant!r}")

    def qualifying(self) -> list[DyadicInterval]:
        if self.variant == "global":
            return list(self.collection)
        if self.variant == "local":
            return [q for q in self.collection
                    if q.length >= self.reference.length]
        if self.variant == "fixed_scale":
            # |Q| ~ 2^sharp |P| as the dyadic band [2^sharp |P|, 2^{sharp+1} |P|)
            want = self.reference.k + self.sharp
            return [q for q in self.collection if q.k == want]
        return [q for q in self.collection if _meets(q, self.level_set)]


def _meets(interval: DyadicInterval, indicator) -> bool:
    """Does the interval meet the set given by a 0/1 grid indicator?"""
    return bool(np.any(indicator.restrict(interval) > 0))


def bilinear_block(spec: BilinearBlockSpec, v1: GridFunction1D,
                   v2: GridFunction1D) -> GridFunction1D:
    """Evaluate the block on the grid of v1 (v2 must share it)."""
    if v1.grid != v2.grid:
        raise ConfigError("v1 and v2 must share a grid")
    grid = v1.grid
    f1, f2, f3 = spec.families
    qs = spec.qualifying()
    out = np.zeros(grid.n_points)
    if not qs:
        return GridFunction1D(grid, out)
    c1 = all_coefficients(v1, qs, f1)
    c2 = all_coefficients(v2, qs, f2)
    absolute = spec.variant == "localized_nonlac"
    for q in qs:
        w = c1[q] * c2[q] / float(q.length) ** 0.5
        if w == 0.0:
            continue
        member = f3.member(q, grid)
        if absolute:
            out += abs(c1[q]) * abs(c2[q]) / float(q.length) ** 0.5 * np.abs(member)
        else:
            out += w * member
    return GridFunction1D(grid, out)


@dataclass(frozen=True)
class ModelOperatorSpec:
    """Which of the five models, its collections, offsets and family flavors.

    x_outer = (m1_I, m2_I, m3_I): the averaging family paired with the block,
    the h-coefficient family and the output family on x intervals; m1 must be
    non-lacunary and m2, m3 lacunary.  y_outer plays the same role on y for the
    flag-type models.  For the paraproduct models the y side instead uses
    y_para = (p1_J, p2_J, p3_J): g1 and g2 coefficients (p2 doubles as the
    h-coefficient family, as displayed) and the output family; at least two of
    the three must be lacunary.
    """

    which: str
    rectangles: tuple[DyadicRectangle, ...]
    inner_x: tuple[DyadicInterval, ...]
    inner_y: tuple[DyadicInterval, ...] = ()
    sharp1: int = 0
    sharp2: int = 0
    inner_x_families: tuple = _HAAR_TRIPLE
    inner_y_families: tuple = _HAAR_TRIPLE
    x_outer: tuple = (HAAR_NONLACUNARY, HAAR_LACUNARY, HAAR_LACUNARY)
    y_outer: tuple = (HAAR_NONLACUNARY, HAAR_LACUNARY, HAAR_LACUNARY)
    y_para: tuple = (HAAR_NONLACUNARY, HAAR_LACUNARY, HAAR_LACUNARY)

    def __post_init__(self):
        if self.which not in MODEL_NAMES:
            raise ConfigError(f"unknown model {self.which!r}")
        if not self.rectangles:
            raise ConfigError("empty rectangle collection")
        if sum(f.lacunary for f in self.inner_x_families) < 2:
            raise ConfigError("inner x families: need at least two lacunary")
        if self.paraproduct_y:
            if sum(f.lacunary for f in self.y_para) < 2:
                raise ConfigError("paraproduct y families: need at least two lacunary")
        else:
            if sum(f.lacunary for f in self.inner_y_families) < 2:
                raise ConfigError("inner y families: need at least two lacunary")
            if not self.inner_y:
                raise ConfigError("flag-type y side needs an inner collection")
        if self.x_outer[0].lacunary or not (self.x_outer[1].lacunary
                                            and self.x_outer[2].lacunary):
            raise ConfigError("x outer families must be (nonlacunary, lacunary, lacunary)")
        if not self.paraproduct_y and (
                self.y_outer[0].lacunary or not (self.y_outer[1].lacunary
                                                 and self.y_outer[2].lacunary)):
            raise ConfigError("y outer families must be (nonlacunary, lacunary, lacunary)")

    @property
    def paraproduct_y(self) -> bool:
        return self.which in ("flag0_paraproduct", "flag_sharp_paraproduct")

    @property
    def x_fixed_scale(self) -> bool:
        return self.which in ("flag_sharp_paraproduct", "flag_sharp_flag_sharp")

    @property
    def y_fixed_scale(self) -> bool:
        return self.which in ("flag0_flag_sharp", "flag_sharp_flag_sharp")

    def x_block_spec(self, interval: DyadicInterval) -> BilinearBlockSpec:
        if self.x_fixed_scale:
            return BilinearBlockSpec(self.inner_x, self.inner_x_families,
                                     "fixed_scale", interval, self.sharp1)
        return BilinearBlockSpec(self.inner_x, self.inner_x_families,
                                 "local", interval)

    def y_block_spec(self, interval: DyadicInterval) -> BilinearBlockSpec:
        if self.y_fixed_scale:
            return BilinearBlockSpec(self.inner_y, self.inner_y_families,
                                     "fixed_scale", interval, self.sharp2)
        return BilinearBlockSpec(self.inner_y, self.inner_y_families,
                                 "local", interval)

    @classmethod
    def haar(cls, which: str, rectangles, inner_x, inner_y=(), sharp1=0, sharp2=0):
        return cls(which, tuple(rectangles), tuple(inner_x), tuple(inner_y),
                   sharp1, sharp2)

    @classmethod
    def smooth(cls, which: str, rectangles, inner_x, inner_y=(), sharp1=0, sharp2=0):
        smooth_outer = (SMOOTH_NONLACUNARY, SMOOTH_LACUNARY, SMOOTH_LACUNARY)
        return cls(which, tuple(rectangles), tuple(inner_x), tuple(inner_y),
                   sharp1, sharp2,
                   inner_x_families=_SMOOTH_TRIPLE, inner_y_families=_SMOOTH_TRIPLE,
                   x_outer=smooth_outer, y_outer=smooth_outer,
                   y_para=smooth_outer)


def _block_coefficient(spec: ModelOperatorSpec, axis: str,
                       interval: DyadicInterval, v1: GridFunction1D,
                       v2: GridFunction1D, cache: dict) -> float:
    """<B_{.,I}(v1, v2), m1_I> with the block shared across equal scales."""
    bspec = spec.x_block_spec(interval) if axis == "x" else spec.y_block_spec(interval)
    key = (axis, interval.k)
    if key not in cache:
        cache[key] = bilinear_block(bspec, v1, v2)
    outer = spec.x_outer[0] if axis == "x" else spec.y_outer[0]
    return coefficient_naive(cache[key], interval, outer)


def _axis_all_haar(spec: ModelOperatorSpec, axis: str) -> bool:
    if axis == "x":
        fams = spec.inner_x_families + spec.x_outer
    elif spec.paraproduct_y:
        fams = spec.y_para
    else:
        fams = spec.inner_y_families + spec.y_outer
    return all(f.haar for f in fams)


def _haar_block_outer_coeffs(inner: Sequence[DyadicInterval], families,
                             outer_intervals: Sequence[DyadicInterval],
                             v1: GridFunction1D, v2: GridFunction1D,
                             mode: str, sharp: int = 0
                             ) -> dict[DyadicInterval, float]:
    """All <B_{.,I}(v1, v2), ind_I> for Haar families, via per-scale assembly.

    Same-scale members have disjoint supports, so each scale's contribution to
    the block is assembled in one pass; the 'local' cutoff |Q| >= |I| is a
    cumulative sum over scales.
    """
    grid = v1.grid
    inner = tuple(inner)
    c1 = all_coefficients(v1, inner, families[0])
    c2 = all_coefficients(v2, inner, families[1])
    contrib: dict[int, np.ndarray] = {}
    for q in inner:
        w = c1[q] * c2[q] / float(q.length) ** 0.5
        if w == 0.0:
            continue
        arr = contrib.setdefault(q.k, np.zeros(grid.n_points))
        a, b = grid.cell_range(q)
        amp = 2.0 ** (-q.k / 2.0)
        if families[2].lacunary:
            mid = (a + b) // 2
            arr[a:mid] += w * amp
            arr[mid:b] -= w * amp
        else:
            arr[a:b] += w * amp

    outer_scales = sorted({i.k for i in outer_intervals})
    needed: dict[int, np.ndarray] = {}
    if mode == "fixed_scale":
        for s in outer_scales:
            needed[s] = contrib.get(s + sharp, np.zeros(grid.n_points))
    else:
        running = np.zeros(grid.n_points)
        top = max(contrib) if contrib else (outer_scales[0] if outer_scales else 0)
        k = max([top] + outer_scales)
        idx = len(outer_scales) - 1
        while idx >= 0:
            while k >= outer_scales[idx]:
                if k in contrib:
                    running = running + contrib[k]
                k -= 1
            needed[outer_scales[idx]] = running.copy()
            idx -= 1

    out: dict[DyadicInterval, float] = {}
    for s in outer_scales:
        pyr = haar_pyramid(GridFunction1D(grid, needed[s]))
        amp = 2.0 ** (-s / 2.0)
        for iv in outer_intervals:
            if iv.k == s:
                out[iv] = amp * float(pyr[s][iv.n])
    return out


def _x_coefficients(spec: ModelOperatorSpec, xs: Sequence[DyadicInterval],
                    f1: GridFunction1D, f2: GridFunction1D
                    ) -> dict[DyadicInterval, float]:
    if _axis_all_haar(spec, "x"):
        mode = "fixed_scale" if spec.x_fixed_scale else "local"
        return _haar_block_outer_coeffs(spec.inner_x, spec.inner_x_families,
                                        xs, f1, f2, mode, spec.sharp1)
    cache: dict = {}
    return {I: _block_coefficient(spec, "x", I, f1, f2, cache) for I in xs}


def _y_coefficients(spec: ModelOperatorSpec, ys: Sequence[DyadicInterval],
                    g1: GridFunction1D, g2: GridFunction1D):
    if spec.paraproduct_y:
        g1c = all_coefficients(g1, ys, spec.y_para[0])
        g2c = all_coefficients(g2, ys, spec.y_para[1])
        y_factor = {J: g1c[J] * g2c[J] for J in ys}
        norm_y = {J: 1.0 / float(J.length) for J in ys}
        return y_factor, norm_y, spec.y_para[1], spec.y_para[2]
    if _axis_all_haar(spec, "y"):
        mode = "fixed_scale" if spec.y_fixed_scale else "local"
        by = _haar_block_outer_coeffs(spec.inner_y, spec.inner_y_families,
                                      ys, g1, g2, mode, spec.sharp2)
    else:
        cache: dict = {}
        by = {J: _block_coefficient(spec, "y", J, g1, g2, cache) for J in ys}
    norm_y = {J: 1.0 / float(J.length) ** 0.5 for J in ys}
    return by, norm_y, spec.y_outer[1], spec.y_outer[2]


def model_operator(spec: ModelOperatorSpec, f1: GridFunction1D, f2: GridFunction1D,
                   g1: GridFunction1D, g2: GridFunction1D,
                   h: GridFunction2D) -> GridFunction2D:
    """Evaluate the selected model operator on the grid of h."""
    gx, gy = h.grid_x, h.grid_y
    xs = sorted({r.x for r in spec.rectangles})
    ys = sorted({r.y for r in spec.rectangles})

    bx = _x_coefficients(spec, xs, f1, f2)
    y_factor, norm_y, h_y_family, out_y_family = _y_coefficients(spec, ys, g1, g2)

    # <h, m2_I tensor m2'_J>: contract y first, then x
    wy = float(gy.cell_width)
    partial = {J: h.samples @ (h_y_family.member(J, gy) * wy) for J in ys}
    wx = float(gx.cell_width)
    h_x_members = {I: spec.x_outer[1].member(I, gx) * wx for I in xs}

    out_x_members = {I: spec.x_outer[2].member(I, gx) for I in xs}
    out_y_members = {J: out_y_family.member(J, gy) for J in ys}

    acc = np.zeros((gx.n_points, gy.n_points))
    for r in spec.rectangles:
        hc = float(np.dot(h_x_members[r.x], partial[r.y]))
        coef = (bx[r.x] / float(r.x.length) ** 0.5) * y_factor[r.y] * norm_y[r.y] * hc
        if coef == 0.0:
            continue
        acc += coef * np.outer(out_x_members[r.x], out_y_members[r.y])
    return GridFunction2D(gx, gy, acc)


def oracle_model_operator(spec: ModelOperatorSpec, f1, f2, g1, g2, h,
                          cap: int = 64) -> GridFunction2D:
    """Naive nested-loop evaluation with no shared subexpressions.

    Every inner product is recomputed by direct quadrature against a freshly
    sampled member; the only purpose is to cross-check model_operator.
    """
    if len(spec.rectangles) > cap:
        raise ConfigError(f"oracle capped at {cap} rectangles")
    gx, gy = h.grid_x, h.grid_y
    wx, wy = float(gx.cell_width), float(gy.cell_width)
    acc = np.zeros((gx.n_points, gy.n_points))
    for r in spec.rectangles:
        I, J = r.x, r.y

        bspec = spec.x_block_spec(I)
        block_vals = np.zeros(gx.n_points)
        for q in bspec.qualifying():
            a1 = float(np.sum(f1.samples * bspec.families[0].member(q, gx)) * wx)
            a2 = float(np.sum(f2.samples * bspec.families[1].member(q, gx)) * wx)
            block_vals = block_vals + (a1 * a2 / float(q.length) ** 0.5) \
                * bspec.families[2].member(q, gx)
        x_coef = float(np.sum(block_vals * spec.x_outer[0].member(I, gx)) * wx)
        x_coef /= float(I.length) ** 0.5

        if spec.paraproduct_y:
            b1 = float(np.sum(g1.samples * spec.y_para[0].member(J, gy)) * wy)
            b2 = float(np.sum(g2.samples * spec.y_para[1].member(J, gy)) * wy)
            y_coef = b1 * b2 / float(J.length)
            h_y = spec.y_para[1].member(J, gy)
            out_y = spec.y_para[2].member(J, gy)
        else:
            yspec = spec.y_block_spec(J)
            blk = np.zeros(gy.n_points)
            for q in yspec.qualifying():
                a1 = float(np.sum(g1.samples * yspec.families[0].member(q, gy)) * wy)
                a2 = float(np.sum(g2.samples * yspec.families[1].member(q, gy)) * wy)
                blk = blk + (a1 * a2 / float(q.length) ** 0.5) \
                    * yspec.families[2].member(q, gy)
            y_coef = float(np.sum(blk * spec.y_outer[0].member(J, gy)) * wy)
            y_coef /= float(J.length) ** 0.5
            h_y = spec.y_outer[1].member(J, gy)
            out_y = spec.y_outer[2].member(J, gy)

        h_x = spec.x_outer[1].member(I, gx)
        hc = float(h_x @ h.samples @ h_y) * wx * wy
        coef = x_coef * y_coef * hc
        acc = acc + coef * np.outer(spec.x_outer[2].member(I, gx), out_y)
    return GridFunction2D(gx, gy, acc)


def multilinear_form(spec: ModelOperatorSpec, f1, f2, g1, g2, h,
                     dual: GridFunction2D) -> float:
    """<model(f1, f2, g1, g2, h), dual> as a grid inner product.

    For all-Haar specs the pairing is computed coefficient-by-coefficient
    from 2D block sums (no full-grid output is materialized), which keeps the
    large weak-type sweeps affordable.
    """
    if dual.samples.shape != h.samples.shape:
        raise ConfigError("dual lives on a different grid")
    if not (_axis_all_haar(spec, "x") and _axis_all_haar(spec, "y")):
        out = model_operator(spec, f1, f2, g1, g2, h)
        return float(np.sum(out.samples * dual.samples) * out.cell_area)

    xs = sorted({r.x for r in spec.rectangles})
    ys = sorted({r.y for r in spec.rectangles})
    bx = _x_coefficients(spec, xs, f1, f2)
    y_factor, norm_y, h_y_family, out_y_family = _y_coefficients(spec, ys, g1, g2)
    h_x_lac = spec.x_outer[1].lacunary
    out_x_lac = spec.x_outer[2].lacunary
    h_y_lac = h_y_family.lacunary
    out_y_lac = out_y_family.lacunary
    hp = haar_pyramid_2d(h)
    dp = haar_pyramid_2d(dual)
    total = 0.0
    for r in spec.rectangles:
        coef = bx[r.x] / float(r.x.length) ** 0.5 * y_factor[r.y] * norm_y[r.y]
        if coef == 0.0:
            continue
        hc = haar_coefficient_2d(hp, r, h_x_lac, h_y_lac)
        dc = haar_coefficient_2d(dp, r, out_x_lac, out_y_lac)
        total += coef * hc * dc
    return total


def local_size_bound_check(block_spec: BilinearBlockSpec, v1: GridFunction1D,
                           v2: GridFunction1D, level_set: GridFunction1D,
                           outer_collection: Sequence[DyadicInterval]
                           ) -> tuple[float, float]:
    """Size of the fixed-scale block coefficients against the coefficient sups.

    lhs = size over P of <B^{sharp}_{Q,P}(v1,v2), ind_P> (averaging flavor);
    rhs = sup_{Q meets the level set} |<v1, m1_Q>|/|Q|^{1/2} times the same
    for v2.  Both sides are returned; the bound is lhs <= C rhs with C
    reported by the caller.
    """
    if block_spec.variant != "fixed_scale":
        raise ConfigError("the size localization check needs a fixed_scale block")
    outer = tuple(outer_collection)
    for p in outer:
        if not _meets(p, level_set):
            raise ConfigError(f"{p} does not meet the level set")
    grid = v1.grid
    outer_family = HAAR_NONLACUNARY if block_spec.families[2].haar else SMOOTH_NONLACUNARY
    from .wavelets import CoefficientSequence
    data = {}
    for p in outer:
        bspec = replace(block_spec, reference=p)
        blk = bilinear_block(bspec, v1, v2)
        data[p] = coefficient_naive(blk, p, outer_family)
    lhs = size(CoefficientSequence(data, outer), outer, lacunary=False).value

    meeting = [q for q in block_spec.collection if _meets(q, level_set)]
    if not meeting:
        return lhs, 0.0
    s1 = max(abs(coefficient_naive(v1, q, block_spec.families[0]))
             / float(q.length) ** 0.5 for q in meeting)
    s2 = max(abs(coefficient_naive(v2, q, block_spec.families[1]))
             / float(q.length) ** 0.5 for q in meeting)
    return lhs, s1 * s2


def energy_localization_check(block_spec: BilinearBlockSpec, v1: GridFunction1D,
                              v2: GridFunction1D, level_set: GridFunction1D,
                              outer_collection: Sequence[DyadicInterval],
                              tol: float = 1e-12) -> list[str]:
    """Per-interval comparison of local block coefficients with localized ones.

    With a lacunary third family the two coefficients agree exactly (the
    support of the averaging member forces the containing intervals, so the
    scale restriction is vacuous); with a non-lacunary third family the
    localized absolute-value block dominates.  Returns violations beyond tol.
    """
    if not block_spec.families[2].haar:
        raise ConfigError("the energy localization check lives in the Haar model")
    third_lac = block_spec.families[2].lacunary
    variant = "localized_lac" if third_lac else "localized_nonlac"
    localized = BilinearBlockSpec(block_spec.collection, block_spec.families,
                                  variant, level_set=level_set)
    loc_block = bilinear_block(localized, v1, v2)
    out: list[str] = []
    for p in outer_collection:
        if not _meets(p, level_set):
            raise ConfigError(f"{p} does not meet the level set")
        local = BilinearBlockSpec(block_spec.collection, block_spec.families,
                                  "local", reference=p)
        lhs = coefficient_naive(bilinear_block(local, v1, v2), p, HAAR_NONLACUNARY)
        rhs = coefficient_naive(loc_block, p, HAAR_NONLACUNARY)
        if third_lac:
            if abs(lhs - rhs) > tol:
                out.append(f"{p}: |{lhs} - {rhs}| > {tol}")
        else:
            if abs(lhs) > abs(rhs) + tol:
                out.append(f"{p}: |{lhs}| > |{rhs}| + {tol}")
    return out
