import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tests.helpers import ints, ref_channel
from tfqkd.bounds_two import (
    TwoDecoyInput,
    bound_y0m,
    bound_y00,
    bound_y02,
    bound_y11,
    bound_y20,
    bound_yn0,
    lower_y22,
    rescaled_gains,
    two_decoy_bounds,
)
from tfqkd.channel_model import model_yield_table, simulate_gain_table
from tfqkd.core import DegenerateIntensities, DomainError, GainTable, IntensitySet, UsageError
from tfqkd.validation import draw_intensities, gains_from_table, soundness_margin


def _inp(mu, q):
    return TwoDecoyInput(IntensitySet(mu), GainTable((1, 0), q))


def _literal(mu0, mu1, q):
    """The two-decoy bounds transcribed with plain exponentials."""
    e = math.exp
    qt = [[e(a + b) * q[i][j] for j, b in enumerate((mu0, mu1))] for i, a in enumerate((mu0, mu1))]
    d = mu0 - mu1
    g11 = qt[0][0] + qt[1][1] - qt[0][1] - qt[1][0]
    g02 = mu1 * qt[0][0] + mu0 * qt[1][1] - mu1 * qt[0][1] - mu0 * qt[1][0]
    g20 = mu1 * qt[0][0] + mu0 * qt[1][1] - mu0 * qt[0][1] - mu1 * qt[1][0]
    g00 = mu1**2 * qt[0][0] + mu0**2 * qt[1][1] - mu0 * mu1 * (qt[0][1] + qt[1][0])
    t = (e(mu0) - e(mu1)) * (mu0 - mu1 + mu1 * e(mu0) - mu0 * e(mu1))
    cl = lambda x: min(max(x, 0.0), 1.0)
    y11 = g11 / d**2
    y02 = (2 * t - 2 * g02) / ((mu0 + mu1) * d**2)
    y20 = (2 * t - 2 * g20) / ((mu0 + mu1) * d**2)
    y0m = lambda m, g: min(math.factorial(m) / (d * (mu0**m - mu1**m)) * (t - g), 1.0)
    y22l = max(4 * (g11 - (e(mu0) - e(mu1)) ** 2) / (d**2 * (mu0 + mu1) ** 2) + 1, 0.0)
    tail = lambda x: e(x) - 1 - x**2 / 2 - x**3 / 6 - x**4 / 24
    y00 = (g00 / d**2
           + mu0 * mu1 / d * (d / 2 * (cl(y02) + cl(y20))
                              + (mu0**2 - mu1**2) / 6 * (cl(y0m(3, g02)) + cl(y0m(3, g20)))
                              + (mu0**3 - mu1**3) / 24 * (cl(y0m(4, g02)) + cl(y0m(4, g20))))
           + 2 / d * (mu1 * tail(mu0) - mu0 * tail(mu1))
           - mu0**2 * mu1**2 / 4 * min(y22l, 1.0))
    return {"y11": y11, "y02": y02, "y20": y20, "y00": y00, "y22l": y22l,
            "y03": y0m(3, g02), "y30": y0m(3, g20), "y04": y0m(4, g02)}


def test_rescaled_gains_examples():
    assert all(v == 0 for v in rescaled_gains(_inp((0.1, 0.01), ((0, 0), (0, 0)))).values())
    assert rescaled_gains(_inp((0.1, 0.01), ((0.1, 0.2), (0.3, 0.4))))[(0, 1)] == pytest.approx(0.2 * math.exp(0.11))


def test_equal_rescaled_gains_give_zero_y11():
    mu = (0.5, 0.1)
    q = tuple(tuple(0.01 * math.exp(-(a + b)) for b in mu) for a in mu)
    assert bound_y11(_inp(mu, q)) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("mu", [(0.5, 0.1), (0.9, 0.2), (0.3, 0.05)])
def test_matches_literal_transcription(mu, rng):
    for _ in range(20):
        q = rng.uniform(0, 0.3, (2, 2))
        q = tuple(map(tuple, q))
        inp = _inp(mu, q)
        lit = _literal(*mu, q)
        cl = lambda x: min(max(x, 0.0), 1.0)
        assert bound_y11(inp) == pytest.approx(cl(lit["y11"]), rel=1e-9, abs=1e-12)
        assert bound_y02(inp) == pytest.approx(cl(lit["y02"]), rel=1e-9, abs=1e-12)
        assert bound_y20(inp) == pytest.approx(cl(lit["y20"]), rel=1e-9, abs=1e-12)
        assert bound_y0m(inp, 3) == pytest.approx(cl(lit["y03"]), rel=1e-9, abs=1e-12)
        assert bound_yn0(inp, 3) == pytest.approx(cl(lit["y30"]), rel=1e-9, abs=1e-12)
        assert bound_y0m(inp, 4) == pytest.approx(cl(lit["y04"]), rel=1e-9, abs=1e-12)
        assert lower_y22(inp) == pytest.approx(min(lit["y22l"], 1.0), rel=1e-9, abs=1e-12)
        assert bound_y00(inp) == pytest.approx(cl(lit["y00"]), rel=1e-8, abs=1e-11)


def test_zero_gain_corner():
    mu = (0.5, 0.1)
    inp = _inp(mu, ((0.0, 0.0), (0.0, 0.0)))
    lit = _literal(*mu, ((0.0, 0.0), (0.0, 0.0)))
    b = two_decoy_bounds(inp)
    assert b.upper[(1, 1)] == 0.0
    assert b.upper[(0, 2)] == pytest.approx(min(max(lit["y02"], 0), 1), rel=1e-12)
    assert b.lower_y22 == 0.0
    assert b.upper[(0, 0)] == pytest.approx(min(max(lit["y00"], 0), 1), rel=1e-10, abs=1e-15)


def test_clamp_branch_of_generic_bound():
    # gains far below what the channel could produce make the bracket large
    inp = _inp((0.5, 0.1), ((0.0, 0.2), (0.0, 0.0)))
    assert bound_y0m(inp, 5) == 1.0


def test_channel_model_soundness_example():
    ch = ref_channel(1e-3, 1e-7)
    mu = (0.5, 1e-5)
    b = two_decoy_bounds(TwoDecoyInput(IntensitySet(mu), simulate_gain_table(ch, IntensitySet(mu))))
    y = model_yield_table(ch, 6)
    for nm, v in b.upper.items():
        assert v >= y[nm] - 1e-10
    assert b.lower_y22 <= y[2, 2] + 1e-10
    inp = TwoDecoyInput(IntensitySet(mu), simulate_gain_table(ch, IntensitySet(mu)))
    assert bound_y0m(inp, 3) >= y[0, 3] - 1e-10
    assert bound_yn0(inp, 4) >= y[4, 0] - 1e-10


def test_planted_tables(rng):
    worst = np.inf
    for i in range(500):
        y = rng.uniform(0, 1, (31, 31)) if i % 2 else (rng.uniform(size=(31, 31)) < 0.5).astype(float)
        c_tail = float(rng.uniform())
        mu = draw_intensities(rng, 2)
        g = gains_from_table(y, mu, c_tail)
        inp = TwoDecoyInput(IntensitySet(mu), g)
        b = two_decoy_bounds(inp)
        worst = min(worst, soundness_margin(b, y))
        for m in (3, 4):
            worst = min(worst, bound_y0m(inp, m) - y[0, m], bound_yn0(inp, m) - y[m, 0])
    assert worst >= -1e-10


@given(st.lists(st.floats(0, 1), min_size=4, max_size=4), st.floats(0.2, 1.0), st.floats(0.01, 0.15))
def test_transpose_duality(qs, mu0, mu1):
    q = ((qs[0], qs[1]), (qs[2], qs[3]))
    inp = _inp((mu0, mu1), q)
    tr = inp.transposed()
    assert bound_y20(inp) == bound_y02(tr)
    assert bound_y02(inp) == bound_y20(tr)
    for m in (2, 3, 4, 6):
        assert bound_y0m(inp, m) == bound_yn0(tr, m)


@given(st.lists(st.floats(0, 1), min_size=4, max_size=4), st.floats(0.2, 1.0), st.floats(1e-5, 0.15))
def test_outputs_in_unit_interval(qs, mu0, mu1):
    b = two_decoy_bounds(_inp((mu0, mu1), ((qs[0], qs[1]), (qs[2], qs[3]))))
    assert all(0.0 <= v <= 1.0 for v in b.upper.values())
    assert 0.0 <= b.lower_y22 <= 1.0


def test_non_increasing_as_dark_counts_drop():
    mu = IntensitySet((0.5, 1e-5))
    prev = None
    for pd in (1e-5, 1e-6, 1e-7, 1e-8, 0.0):
        b = two_decoy_bounds(TwoDecoyInput(mu, simulate_gain_table(ref_channel(1e-4, pd), mu)))
        if prev is not None:
            for nm in b.upper:
                assert b.upper[nm] <= prev.upper[nm] * (1 + 1e-12)
        prev = b


def test_inconsistent_gains_are_clamped_and_flagged():
    b = two_decoy_bounds(_inp((0.5, 0.1), ((0.0, 0.9), (0.9, 0.0))))
    assert b.upper[(1, 1)] == 0.0
    assert b.flags[(1, 1)] == "clamped_low"


def test_errors():
    with pytest.raises(DegenerateIntensities):
        _inp((0.5, 0.5 - 1e-10), ((0, 0), (0, 0)))
    with pytest.raises(UsageError):
        TwoDecoyInput(IntensitySet((0.5, 0.1)), GainTable((1, 0), ((0,) * 3,) * 3))
    with pytest.raises(UsageError):
        bound_y0m(_inp((0.5, 0.1), ((0, 0), (0, 0))), 1)
    with pytest.raises(DomainError):
        TwoDecoyInput(IntensitySet((0.1, 0.5), ordered=False), GainTable((1, 0), ((0, 0), (0, 0))))


def test_bounds_dominate_the_model_when_pd_is_zero():
    ch = ref_channel(1e-2, 0.0)
    for mu in [(0.5, 1e-5), (0.2, 1e-3)]:
        s = ints(*mu)
        b = two_decoy_bounds(TwoDecoyInput(s, simulate_gain_table(ch, s)))
        y = model_yield_table(ch, 4)
        assert soundness_margin(b, y) >= -1e-10
