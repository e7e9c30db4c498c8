import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dyadlab.dyadic import (DyadicInterval, Grid1D, GridFunction1D, contains,
                            disjoint, enumerate_dyadic)
from dyadlab.errors import ConfigError
from dyadlab.size_energy import (SizeEnergyReport, bmo_norm,
                                 check_stopping_time_properties, energy, size,
                                 size_energy_bound_check,
                                 stopping_time_maximal, weak_l1_norm)
from dyadlab.wavelets import CoefficientSequence

G = Grid1D(0, 6)
UNIT = DyadicInterval(0, 0)


def test_weak_l1_examples():
    assert weak_l1_norm(GridFunction1D.zeros(G)) == 0.0
    assert weak_l1_norm(GridFunction1D.indicator(G, [UNIT])) == 1.0
    half = GridFunction1D.indicator(G, [DyadicInterval(-1, 0)])
    doubled = GridFunction1D(G, 2.0 * half.samples)
    assert weak_l1_norm(doubled) == 1.0


def test_weak_l1_dominated_by_l1():
    rng = np.random.default_rng(0)
    f = GridFunction1D(G, rng.standard_normal(G.n_points))
    assert weak_l1_norm(f) <= f.norm(1) + 1e-12


@given(st.integers(0, 2 ** 31 - 1), st.floats(min_value=0.1, max_value=16.0))
@settings(max_examples=25, deadline=None)
def test_weak_l1_homogeneous_and_monotone(seed, lam):
    rng = np.random.default_rng(seed)
    f = GridFunction1D(G, rng.standard_normal(G.n_points))
    base = weak_l1_norm(f)
    scaled = weak_l1_norm(GridFunction1D(G, lam * f.samples))
    assert scaled == pytest.approx(lam * base, rel=1e-12)
    bigger = GridFunction1D(G, np.abs(f.samples) + 1.0)
    assert weak_l1_norm(bigger) >= base


def test_size_examples():
    seq = CoefficientSequence({UNIT: 1.0})
    assert size(seq, [UNIT], lacunary=False).value == 1.0
    rep = size(seq, [UNIT], lacunary=True, grid=G)
    assert rep.value == pytest.approx(1.0, abs=1e-12)
    two = CoefficientSequence({UNIT: 1.0, DyadicInterval(-1, 0): 0.0},
                              (UNIT, DyadicInterval(-1, 0)))
    rep2 = size(two, two.collection, lacunary=False)
    assert rep2.value == 1.0 and rep2.witness_interval == UNIT
    with pytest.raises(ConfigError):
        size(seq, [], lacunary=False)


def test_energy_examples():
    zero = CoefficientSequence({}, (UNIT,))
    assert energy(zero, [UNIT]).value == 0.0
    one = CoefficientSequence({UNIT: 1.0})
    rep = energy(one, [UNIT])
    assert rep.value == 0.5 and rep.witness_level == -1
    pair = (DyadicInterval(0, 0), DyadicInterval(0, 1))
    two = CoefficientSequence({pair[0]: 1.0, pair[1]: 1.0}, pair)
    assert energy(two, pair).value == 1.0


def _brute_force_energy(seq, collection):
    """Exhaustive weak-(1,inf) energy over all disjoint subfamilies."""
    ratios = {iv: abs(seq[iv]) / float(iv.length) ** 0.5 for iv in collection}
    levels = set()
    for r in ratios.values():
        if r > 0:
            levels.add(math.ceil(math.log2(r)) - 1)
    best = 0.0
    for n in levels:
        qualifying = [iv for iv in collection if ratios[iv] > 2.0 ** n]
        for size_ in range(1, len(qualifying) + 1):
            for combo in itertools.combinations(qualifying, size_):
                if all(disjoint(a, b) for a, b in itertools.combinations(combo, 2)):
                    best = max(best, 2.0 ** n * float(sum(iv.length for iv in combo)))
    return best


@given(st.integers(0, 2 ** 31 - 1))
@settings(max_examples=15, deadline=None)
def test_energy_witness_optimality(seed):
    rng = np.random.default_rng(seed)
    ivs = enumerate_dyadic(Grid1D(1, 4), -2, 1)
    picked = [ivs[int(i)] for i in
              rng.choice(len(ivs), size=min(10, len(ivs)), replace=False)]
    seq = CoefficientSequence({iv: float(rng.standard_normal()) for iv in picked},
                              tuple(picked))
    fast = energy(seq, picked).value
    assert fast == pytest.approx(_brute_force_energy(seq, picked), rel=1e-12)


def test_energy_strong_t():
    one = CoefficientSequence({UNIT: 1.0})
    rep = energy(one, [UNIT], "strong_t", t=2.0)
    # single critical level n = -1: (2^{2(-1)} * 1)^{1/2} = 1/2
    assert rep.value == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ConfigError):
        energy(one, [UNIT], "strong_t", t=1.0)


@given(st.sampled_from([0.25, 0.5, 2.0, 4.0, 8.0]), st.integers(0, 2 ** 31 - 1))
@settings(max_examples=20, deadline=None)
def test_scale_invariance_dyadic(lam, seed):
    # the level ladder is integer, so exact homogeneity holds for dyadic factors
    rng = np.random.default_rng(seed)
    ivs = enumerate_dyadic(G, -2, 0)
    seq = CoefficientSequence({iv: float(rng.standard_normal()) for iv in ivs},
                              tuple(ivs))
    scaled = seq.scaled(lam)
    assert size(scaled, ivs, False).value == pytest.approx(
        lam * size(seq, ivs, False).value, rel=1e-12)
    assert energy(scaled, ivs).value == pytest.approx(
        lam * energy(seq, ivs).value, rel=1e-12)


@given(st.floats(min_value=0.1, max_value=8.0), st.integers(0, 2 ** 31 - 1))
@settings(max_examples=20, deadline=None)
def test_scale_comparability_general(lam, seed):
    # generic factors move thresholds off the integer ladder: two-sided
    # comparability within a factor of two is the exact statement
    rng = np.random.default_rng(seed)
    ivs = enumerate_dyadic(G, -2, 0)
    seq = CoefficientSequence({iv: float(rng.standard_normal()) for iv in ivs},
                              tuple(ivs))
    base = energy(seq, ivs).value
    scaled = energy(seq.scaled(lam), ivs).value
    assert size(seq.scaled(lam), ivs, False).value == pytest.approx(
        lam * size(seq, ivs, False).value, rel=1e-12)
    if base > 0:
        assert lam * base / 2 - 1e-12 <= scaled <= 2 * lam * base + 1e-12


def test_bmo_examples():
    zero = CoefficientSequence({}, (UNIT,))
    assert bmo_norm(zero, [UNIT], 2.0, G) == 0.0
    one = CoefficientSequence({UNIT: 1.0})
    assert bmo_norm(one, [UNIT], 2.0, G) == pytest.approx(1.0, abs=1e-12)


def test_bmo_john_nirenberg_comparability():
    """Empirical two-sided comparability of BMO(1) and BMO(2) over seeds."""
    rng = np.random.default_rng(11)
    ivs = enumerate_dyadic(G, -3, 0)
    ratios = []
    for _ in range(100):
        seq = CoefficientSequence({iv: float(rng.standard_normal()) for iv in ivs},
                                  tuple(ivs))
        b1 = bmo_norm(seq, ivs, 1.0, G)
        b2 = bmo_norm(seq, ivs, 2.0, G)
        ratios.append(b1 / b2)
    print(f"\nBMO(1)/BMO(2) over 100 seeds: c={min(ratios):.4f}, "
          f"C={max(ratios):.4f}")
    assert 0.1 <= min(ratios) and max(ratios) <= 10.0


def test_stopping_time_single_interval_level():
    for r, c1 in ((1.0, 1.0), (0.7, 2.0), (5.0, 1.0)):
        seq = CoefficientSequence({UNIT: r})
        decomp = stopping_time_maximal(seq, [UNIT], c1)
        e = decomp.base_value
        (k, trees), = ((k, t) for k, t in decomp.levels.items())
        assert len(trees) == 1 and trees[0].top == UNIT
        assert c1 * 2.0 ** (k - 1) * e < r <= c1 * 2.0 ** k * e


def test_stopping_time_prefers_largest_top():
    big, small = UNIT, DyadicInterval(-1, 0)
    # equal ratios: |a|/|I|^(1/2) matches when a scales with sqrt(length)
    seq = CoefficientSequence({big: 1.0, small: 2.0 ** -0.5})
    decomp = stopping_time_maximal(seq, [big, small], 1.0)
    trees = [t for _, t in decomp.all_trees()]
    assert len(trees) == 1 and trees[0].top == big
    assert set(trees[0].members) == {big, small}


def test_stopping_time_partition_and_residual():
    rng = np.random.default_rng(5)
    ivs = enumerate_dyadic(G, -3, 0)
    seq = CoefficientSequence({iv: float(rng.standard_normal()) for iv in ivs},
                              tuple(ivs))
    decomp = stopping_time_maximal(seq, ivs, 2.0 ** 10)
    assert sorted(decomp.assigned()) == sorted(ivs)
    assert decomp.residual == ()
    for _, tree in decomp.all_trees():
        assert all(contains(tree.top, iv) for iv in tree.members)


def test_stopping_time_zero_sequence_goes_to_bottom():
    seq = CoefficientSequence({}, (UNIT, DyadicInterval(-1, 0)))
    decomp = stopping_time_maximal(seq, seq.collection, 1.0)
    assert not decomp.levels
    assert sorted(decomp.assigned()) == sorted(seq.collection)


@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([1.0, 2.0 ** 10]))
@settings(max_examples=25, deadline=None)
def test_stopping_time_sandwich_and_mass(seed, c1):
    rng = np.random.default_rng(seed)
    ivs = enumerate_dyadic(G, -3, 0)
    raw = {iv: float(rng.standard_normal()) for iv in ivs}
    seq = CoefficientSequence(raw, tuple(ivs))
    e = energy(seq, ivs).value
    if e > 0:  # normalize so the mass bound is the exact power-of-two form
        seq = seq.scaled(1.0 / e)
    decomp = stopping_time_maximal(seq, ivs, c1)
    assert check_stopping_time_properties(decomp, seq, ivs) == []


def test_stopping_time_serialization():
    seq = CoefficientSequence({UNIT: 1.0})
    decomp = stopping_time_maximal(seq, [UNIT], 1.0)
    text = decomp.to_text()
    assert "level" in text and "I(k=0,n=0)" in text


def test_size_energy_bound_examples():
    zero = CoefficientSequence({}, (UNIT,))
    assert size_energy_bound_check(zero, zero, zero, [UNIT], (0.5, 0.25, 0.25),
                                   grid=G) == (0.0, 0.0, 0.0)
    one = CoefficientSequence({UNIT: 1.0})
    lhs, rhs, ratio = size_energy_bound_check(
        one, one, one, [UNIT], (0.9, 0.05, 0.05),
        lacunary_flags=(False, True, True), grid=G)
    assert lhs == 1.0 and rhs > 0 and ratio == lhs / rhs
    with pytest.raises(ConfigError):
        size_energy_bound_check(one, one, one, [UNIT], (0.5, 0.5, 0.5), grid=G)
    with pytest.raises(ConfigError):
        size_energy_bound_check(one, one, one, [UNIT], (1.0, 0.0, 0.0),
                                lacunary_flags=(False, False, True), grid=G)


def test_size_energy_bound_stability_under_doubling():
    """The empirical constant stays put when the collection doubles."""
    rng = np.random.default_rng(123)
    worst = {}
    for depth in (2, 3):
        ivs = enumerate_dyadic(G, -depth, 0)
        best = 0.0
        for _ in range(100):
            seqs = [CoefficientSequence(
                {iv: float(rng.standard_normal()) for iv in ivs}, tuple(ivs))
                for _ in range(3)]
            lhs, rhs, ratio = size_energy_bound_check(
                seqs[0], seqs[1], seqs[2], ivs, (0.0, 0.5, 0.5), grid=G)
            best = max(best, ratio)
        worst[depth] = best
    assert worst[3] <= worst[2] * 1.10


def test_report_serialization():
    rep = size(CoefficientSequence({UNIT: 1.0}), [UNIT], False)
    text = rep.to_text()
    assert "kind: size" in text and "witness_interval" in text
