import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tests.helpers import ref_channel
from tfqkd.bounds_four import (
    FourDecoyInput,
    a04_at_four,
    aux_a04,
    aux_a04_factored,
    aux_b04,
    aux_b04_factored,
    b_sum_exact,
    b_sum_printed,
    c_n_recursion,
    coefficients_y13,
    complete_homogeneous_sum,
    four_decoy_bounds,
    raw_y04,
    raw_y13,
    raw_y31,
    raw_y40,
    tail_bracket,
    _tail_prefactor,
)
from tfqkd.bounds_three import ThreeDecoyInput, three_decoy_bounds
from tfqkd.channel_model import model_yield_table, simulate_gain_table
from tfqkd.core import GainTable, IntensitySet, NonpositiveIntensity, UsageError, loss_to_eta
from tfqkd.validation import draw_intensities, gains_from_table, soundness_margin

PRESET = (0.1, 1e-2, 1e-3, 1.0)
ZERO4 = ((0.0,) * 4,) * 4
D_KEYS = ((1, 3), (3, 1), (0, 4), (4, 0))


def _inp(mu, q):
    return FourDecoyInput(IntensitySet(mu, ordered=False), GainTable((1, 0), q))


def _quadruple(rng):
    top = draw_intensities(rng, 3)
    return top + (10 ** rng.uniform(math.log10(0.3), math.log10(3)),)


class TestSymmetricSums:
    def test_examples(self):
        assert complete_homogeneous_sum(PRESET, 0) == 1
        assert complete_homogeneous_sum(PRESET, 1) == pytest.approx(sum(PRESET))
        assert complete_homogeneous_sum((1, 1, 1, 1), 2) == 10

    def test_recursion_examples(self):
        assert c_n_recursion((1, 1, 1, 1), 4) == 4
        mu = (0.7, 0.3, 0.2, 1.1)
        c4 = c_n_recursion(mu, 4)
        assert c5_unrolled(mu, c4) == pytest.approx(c_n_recursion(mu, 5), rel=1e-14)
        with pytest.raises(UsageError):
            c_n_recursion(mu, 3)

    def test_recursion_positive(self, rng):
        for _ in range(100):
            mu = tuple(rng.uniform(1e-3, 2, 4))
            for n in range(4, 12):
                assert c_n_recursion(mu, n) > 0


def c5_unrolled(mu, c4):
    return sum(mu) * c4 - mu[0] * mu[1] * mu[2] * mu[3]


class TestAlgebra:
    def test_factored_forms_exact(self):
        mu = (F(1, 2), F(1, 5), F(1, 10), F(3, 2))
        for m in range(3, 9):
            assert aux_a04(mu, m) == aux_a04_factored(mu, m)
            for n in range(4, 8):
                assert aux_b04(mu, n, m) == aux_b04_factored(mu, n, m)
        assert aux_a04(mu, 4) == a04_at_four(mu)

    def test_printed_tail_follows_prefactor_sign(self, rng):
        for _ in range(1000):
            mu = _quadruple(rng)
            # the printed tail inherits the sign of its prefactor
            assert b_sum_printed(mu) * _tail_prefactor(mu) >= 0

    def test_tail_bracket_stable_matches_literal(self, rng):
        for _ in range(200):
            mu = tuple(rng.uniform(0.2, 1.5, 4))
            assert tail_bracket(mu) == pytest.approx(tail_bracket(mu, literal=True), rel=1e-7, abs=1e-14)

    def test_exact_tail_sum_matches_brute_force(self):
        brute = math.fsum(aux_b04(PRESET, n, m) / (math.factorial(n) * math.factorial(m))
                          for n in range(4, 40) for m in range(3, 40))
        assert b_sum_exact(PRESET) == pytest.approx(brute, rel=1e-12)

    def test_printed_tail_is_the_conservative_one(self, rng):
        # a larger subtracted tail only raises the bound while A04 < 0
        for _ in range(2000):
            top = sorted(rng.uniform(0.01, 1, 3), reverse=True)
            mu = tuple(top) + (float(rng.uniform(0.001, 3)),)
            if a04_at_four(mu) < 0:
                assert b_sum_exact(mu) <= b_sum_printed(mu) * (1 + 1e-12)

    def test_y13_coefficients_normalised(self):
        assert coefficients_y13(*PRESET)[0][0] == 1.0


def test_zero_gain_corner():
    b = four_decoy_bounds(_inp(PRESET, ZERO4))
    assert b.upper[(1, 3)] == 0.0
    assert b.upper[(3, 1)] == 0.0
    remainder = -24 / a04_at_four(PRESET) * b_sum_printed(PRESET)
    assert b.upper[(0, 4)] == pytest.approx(min(max(remainder, 0.0), 1.0), rel=1e-12)
    assert b.upper[(4, 0)] == b.upper[(0, 4)]


def test_channel_model_soundness_example():
    ch = ref_channel(1e-4, 1e-7)
    mu = IntensitySet(PRESET, ordered=False)
    b = four_decoy_bounds(FourDecoyInput(mu, simulate_gain_table(ch, mu)))
    y = model_yield_table(ch, 6)
    for nm in D_KEYS:
        assert b.upper[nm] >= y[nm] - 1e-10
    assert soundness_margin(b, y) >= -1e-10


def test_planted_tables(rng):
    worst = np.inf
    for i in range(500):
        y = rng.uniform(0, 1, (31, 31)) if i % 2 else (rng.uniform(size=(31, 31)) < 0.5).astype(float)
        mu = draw_intensities(rng, 4)
        b = four_decoy_bounds(FourDecoyInput(IntensitySet(mu, ordered=False),
                                             gains_from_table(y, mu, float(rng.uniform()))))
        worst = min(worst, soundness_margin(b, y))
    assert worst >= -1e-10


@given(st.lists(st.floats(0, 1), min_size=16, max_size=16))
def test_transpose_duality(qs):
    q = tuple(tuple(qs[4 * i:4 * i + 4]) for i in range(4))
    inp = _inp((0.4, 0.1, 0.02, 1.3), q)
    tr = inp.transposed()
    assert raw_y40(inp) == pytest.approx(raw_y04(tr), rel=1e-12, abs=1e-12)
    assert raw_y31(inp) == pytest.approx(raw_y13(tr), rel=1e-12, abs=1e-12)
    a, b = four_decoy_bounds(inp), four_decoy_bounds(tr)
    assert a.upper[(4, 0)] == pytest.approx(b.upper[(0, 4)], rel=1e-12, abs=1e-15)
    assert a.upper[(3, 1)] == pytest.approx(b.upper[(1, 3)], rel=1e-12, abs=1e-15)


@given(st.lists(st.floats(0, 1), min_size=16, max_size=16))
def test_outputs_in_unit_interval(qs):
    q = tuple(tuple(qs[4 * i:4 * i + 4]) for i in range(4))
    b = four_decoy_bounds(_inp(PRESET, q))
    assert all(0.0 <= v <= 1.0 for v in b.upper.values())


def test_tighter_than_three_decoys_on_reference_grid():
    mu = IntensitySet(PRESET, ordered=False)
    for loss in [8.0 * i for i in range(10)]:
        t = simulate_gain_table(ref_channel(loss_to_eta(loss), 1e-7), mu)
        four = four_decoy_bounds(FourDecoyInput(mu, t))
        three = three_decoy_bounds(ThreeDecoyInput(mu.subset((0, 1, 2)), t.sub_table((0, 1, 2))))
        for nm in D_KEYS:
            assert four.upper[nm] <= three.upper[nm] * (1 + 1e-9), (loss, nm)


def test_remaining_yields_come_from_the_chosen_triple():
    mu = IntensitySet(PRESET, ordered=False)
    t = simulate_gain_table(ref_channel(1e-3, 1e-7), mu)
    for idx in [(0, 1, 2), (3, 0, 1)]:
        four = four_decoy_bounds(FourDecoyInput(mu, t), three_decoy_subset=idx)
        order = tuple(sorted(idx, key=lambda i: -mu[i]))
        three = three_decoy_bounds(ThreeDecoyInput(mu.subset(order), t.sub_table(order)))
        for nm in ((0, 0), (1, 1), (0, 2), (2, 0), (2, 2)):
            assert four.upper[nm] == three.upper[nm]


def test_sign_guard_when_fourth_setting_sits_between_the_top_two():
    mu = (0.1, 0.01, 0.001, 0.05)
    assert a04_at_four(mu) > 0
    b = four_decoy_bounds(_inp(mu, ZERO4))
    assert b.upper[(0, 4)] == 1.0 and b.flags[(0, 4)] == "sign"


def test_errors():
    with pytest.raises(NonpositiveIntensity):
        _inp((0.1, 0.01, 0.0, 1.0), ZERO4)
    with pytest.raises(UsageError):
        four_decoy_bounds(_inp(PRESET, ZERO4), three_decoy_subset=(0, 0, 1))
    with pytest.raises(UsageError):
        FourDecoyInput(IntensitySet((0.5, 0.1, 0.01)), GainTable((1, 0), ((0,) * 3,) * 3))
