import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dyadlab.dyadic import (DyadicInterval, DyadicRectangle, Grid1D,
                            GridFunction1D, GridFunction2D, contains,
                            enumerate_dyadic)
from dyadlab.errors import ConfigError, ResolutionError
from dyadlab.wavelets import (HAAR_LACUNARY, HAAR_NONLACUNARY, SMOOTH_LACUNARY,
                              SMOOTH_NONLACUNARY, CoefficientSequence,
                              CutoffFamily, all_coefficients,
                              all_coefficients_2d, band_energy_fraction,
                              coefficient, coefficient_naive, haar_eval,
                              haar_pyramid, haar_pyramid_2d,
                              haar_coefficient_2d, smooth_bump)

G = Grid1D(0, 6)
UNIT = DyadicInterval(0, 0)


def test_haar_eval_values():
    assert haar_eval(UNIT, True, 0.25) == 1.0
    assert haar_eval(UNIT, True, 0.75) == -1.0
    assert haar_eval(DyadicInterval(1, 0), True, 0.5) == pytest.approx(2 ** -0.5, abs=0)
    assert haar_eval(UNIT, True, 1.5) == 0.0
    assert haar_eval(UNIT, False, 0.9) == 1.0


def test_coefficient_examples():
    f = GridFunction1D.indicator(G, [UNIT])
    assert coefficient(f, UNIT, HAAR_LACUNARY) == 0.0
    assert coefficient(f, UNIT, HAAR_NONLACUNARY) == 1.0
    half = GridFunction1D.indicator(G, [DyadicInterval(-1, 0)])
    assert coefficient(half, UNIT, HAAR_LACUNARY) == 0.5


def test_coefficient_resolution_error():
    g = Grid1D(0, 2)
    f = GridFunction1D.zeros(g)
    with pytest.raises(ResolutionError):
        coefficient(f, DyadicInterval(-2, 0), HAAR_LACUNARY)


def test_all_coefficients_example():
    half = GridFunction1D.indicator(G, [DyadicInterval(-1, 0)])
    seq = all_coefficients(half, [UNIT, DyadicInterval(-1, 0)], HAAR_LACUNARY)
    assert seq[UNIT] == 0.5
    assert seq[DyadicInterval(-1, 0)] == 0.0
    zero = all_coefficients(GridFunction1D.zeros(G), [UNIT], HAAR_NONLACUNARY)
    assert all(v == 0.0 for _, v in zero.items())


def test_fast_pyramid_matches_naive():
    rng = np.random.default_rng(3)
    f = GridFunction1D(G, rng.standard_normal(G.n_points))
    pyramid = haar_pyramid(f)
    for family in (HAAR_LACUNARY, HAAR_NONLACUNARY):
        for iv in enumerate_dyadic(G, 1 - G.res_exp, 0):
            fast = coefficient(f, iv, family, pyramid)
            assert fast == pytest.approx(coefficient_naive(f, iv, family), abs=1e-12)


def test_parseval_reconstruction():
    rng = np.random.default_rng(4)
    f = GridFunction1D(G, rng.standard_normal(G.n_points))
    wavelets = enumerate_dyadic(G, 1 - G.res_exp, 0)
    seq = all_coefficients(f, wavelets, HAAR_LACUNARY)
    total = sum(v * v for _, v in seq.items())
    total += coefficient(f, UNIT, HAAR_NONLACUNARY) ** 2
    assert total == pytest.approx(f.norm(2) ** 2, abs=1e-10)


def test_orthonormality_fixed_scale():
    ivs = [DyadicInterval(-2, n) for n in range(4)]
    for a in ivs:
        fa = GridFunction1D(G, HAAR_LACUNARY.member(a, G))
        for b in ivs:
            ip = coefficient_naive(fa, b, HAAR_LACUNARY)
            assert ip == pytest.approx(1.0 if a == b else 0.0, abs=1e-12)


def test_nested_scales_orthogonal():
    outer = GridFunction1D(G, HAAR_LACUNARY.member(UNIT, G))
    for iv in enumerate_dyadic(G, -3, -1):
        ip = coefficient_naive(outer, iv, HAAR_LACUNARY)
        # inner wavelet sees a constant; lacunary mean-zero kills it
        assert ip == pytest.approx(0.0, abs=1e-12)


def test_biest_support_fact():
    """Nonvanishing of <ind_P, psi_Q> forces Q strictly above P, and every
    strict dyadic ancestor produces a nonzero pairing."""
    ivs = enumerate_dyadic(G, -4, 0)
    for p in ivs:
        chi = GridFunction1D(G, HAAR_NONLACUNARY.member(p, G))
        for q in ivs:
            if q.length < p.length:
                continue
            ip = coefficient_naive(chi, q, HAAR_LACUNARY)
            if abs(ip) > 1e-12:
                assert contains(q, p)
            if contains(q, p) and q != p:
                assert abs(ip) == pytest.approx(
                    float(p.length) ** 0.5 / float(q.length) ** 0.5, abs=1e-12)


@given(st.integers(0, 2 ** 31 - 1))
@settings(max_examples=25, deadline=None)
def test_coefficient_linearity(seed):
    rng = np.random.default_rng(seed)
    f = GridFunction1D(G, rng.standard_normal(G.n_points))
    g = GridFunction1D(G, rng.standard_normal(G.n_points))
    a, b = rng.standard_normal(2)
    combo = GridFunction1D(G, a * f.samples + b * g.samples)
    for family in (HAAR_LACUNARY, SMOOTH_NONLACUNARY):
        iv = DyadicInterval(-1, rng.integers(0, 2))
        lhs = coefficient_naive(combo, iv, family)
        rhs = a * coefficient_naive(f, iv, family) + b * coefficient_naive(g, iv, family)
        assert lhs == pytest.approx(rhs, abs=1e-12)


class TestSmoothBumps:
    grid = Grid1D(3, 7)  # box [0,8)
    interval = DyadicInterval(-1, 4)  # [2, 5/2), well inside

    def test_normalization(self):
        for lac in (False, True):
            member = smooth_bump(self.interval, lac, self.grid)
            norm = math.sqrt(float(np.sum(member ** 2)) * float(self.grid.cell_width))
            assert norm == pytest.approx(1.0, abs=1e-6)

    def test_lacunary_mean_zero(self):
        member = smooth_bump(self.interval, True, self.grid)
        mean = abs(float(np.sum(member)) * float(self.grid.cell_width))
        assert mean <= 1e-8

    def test_decay(self):
        # |phi(x)| <= C (1 + dist(x, I)/|I|)^{-M} checked at a far point
        member = smooth_bump(DyadicInterval(-1, 0), False, self.grid, decay=10)
        peak = float(np.max(np.abs(member)))
        x_cell = self.grid.cell_of(4)
        dist_ratio = (4 - 0.5) / 0.5
        assert abs(member[x_cell]) <= peak * (1 + dist_ratio) ** -10 * 1e3

    def test_band_localization(self):
        lac = smooth_bump(self.interval, True, self.grid)
        nonlac = smooth_bump(self.interval, False, self.grid)
        assert band_energy_fraction(lac, self.grid, self.interval, True) >= 0.99
        assert band_energy_fraction(nonlac, self.grid, self.interval, False) >= 0.99

    def test_decay_order_validated(self):
        with pytest.raises(ConfigError):
            smooth_bump(self.interval, False, self.grid, decay=1)


def test_family_kind_validation():
    with pytest.raises(ConfigError):
        CutoffFamily("sawtooth")


def test_coefficient_sequence_missing_is_zero():
    seq = CoefficientSequence({UNIT: 2.0}, (UNIT, DyadicInterval(-1, 0)))
    assert seq[DyadicInterval(-1, 0)] == 0.0
    assert seq[UNIT] == 2.0
    scaled = seq.scaled(3.0)
    assert scaled[UNIT] == 6.0


def test_coefficient_sequence_rejects_strays():
    with pytest.raises(ConfigError):
        CoefficientSequence({UNIT: 1.0}, (DyadicInterval(-1, 0),))


def test_haar_pyramid_2d_matches_direct():
    g = Grid1D(0, 4)
    rng = np.random.default_rng(9)
    h = GridFunction2D(g, g, rng.standard_normal((g.n_points, g.n_points)))
    pyr = haar_pyramid_2d(h)
    rects = [DyadicRectangle(i, j)
             for i in enumerate_dyadic(g, -2, 0) for j in enumerate_dyadic(g, -2, 0)]
    direct = all_coefficients_2d(h, rects, HAAR_LACUNARY, HAAR_LACUNARY)
    for r in rects:
        fast = haar_coefficient_2d(pyr, r, True, True)
        assert fast == pytest.approx(direct[r], abs=1e-12)
