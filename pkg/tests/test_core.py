import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tfqkd.core import (
    SEP_TOL,
    ChannelParams,
    DegenerateIntensities,
    DomainError,
    GainTable,
    IntensitySet,
    NonpositiveIntensity,
    ProtocolParams,
    UsageError,
    YieldBoundSet,
    binary_entropy,
    coefficient_cutoff,
    coherent_coefficient,
    coherent_coefficients,
    complete_homogeneous,
    elementary_symmetric,
    eta_to_loss,
    exp_tail,
    loss_to_eta,
    plob_bound,
    poisson_cutoff,
    poisson_weight,
    poisson_weights,
)


class TestPoisson:
    def test_trivial_values(self):
        assert poisson_weight(0, 0) == 1.0
        assert poisson_weight(0, 3) == 0.0
        assert poisson_weight(1, 0) == pytest.approx(0.36787944117144233, rel=1e-15)

    def test_large_counts_match_high_precision(self):
        for mu, n in [(3.0, 40), (50.0, 60), (0.2, 120), (400.0, 380)]:
            with mpmath.workdps(40):
                ref = mpmath.e ** (-mpmath.mpf(mu)) * mpmath.mpf(mu) ** n / mpmath.factorial(n)
            assert poisson_weight(mu, n) == pytest.approx(float(ref), rel=1e-12)

    def test_negative_mean_rejected(self):
        with pytest.raises(DomainError):
            poisson_weight(-0.1, 2)
        with pytest.raises(DomainError):
            poisson_weight(0.1, -1)

    @given(st.floats(0.0, 30.0))
    def test_truncated_sum_is_one(self, mu):
        n = poisson_cutoff(mu)
        assert math.fsum(poisson_weights(mu, n)) == pytest.approx(1.0, abs=1e-12)


class TestCoherent:
    def test_values(self):
        assert coherent_coefficient(0, 0) == 1.0
        assert coherent_coefficient(0, 2) == 0.0
        assert coherent_coefficient(1.0, 1) == pytest.approx(math.exp(-0.5), rel=1e-15)

    @given(st.floats(0.0, 3.0), st.integers(0, 60))
    def test_square_is_poisson(self, a2, n):
        assert coherent_coefficient(a2, n) ** 2 == pytest.approx(poisson_weight(a2, n), rel=1e-14, abs=1e-300)

    def test_cutoff_floor_and_tail(self):
        assert coefficient_cutoff(1e-3) == 25
        n = coefficient_cutoff(5.0)
        assert n >= 25
        assert coherent_coefficient(5.0, n) < 1e-16

    def test_vector_matches_scalar(self):
        c = coherent_coefficients(0.3, 30)
        assert len(c) == 31
        for n, v in enumerate(c):
            assert v == pytest.approx(coherent_coefficient(0.3, n), rel=1e-14, abs=1e-300)


class TestEntropy:
    def test_values(self):
        assert binary_entropy(0.5) == 1.0
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert binary_entropy(0.25) == pytest.approx(0.8112781244591328, rel=1e-14)

    def test_domain(self):
        for x in (-1e-9, 1.0000001, math.nan):
            with pytest.raises(DomainError):
                binary_entropy(x)

    def test_symmetry(self, rng):
        for x in rng.uniform(0, 1, 1000):
            assert binary_entropy(x) == pytest.approx(binary_entropy(1 - x), abs=1e-14)


class TestPlob:
    def test_values(self):
        assert plob_bound(0.0) == 0.0
        assert plob_bound(0.5) == pytest.approx(1.0, rel=1e-15)
        assert plob_bound(0.75) == pytest.approx(2.0, rel=1e-15)

    def test_saturated(self):
        assert plob_bound(1.0) == math.inf

    def test_outside_domain(self):
        with pytest.raises(DomainError):
            plob_bound(-0.1)

    @given(st.floats(0.0, 0.999), st.floats(0.0, 0.999))
    def test_monotone(self, a, b):
        if a < b:
            assert plob_bound(a) < plob_bound(b)

    def test_tiny_eta_keeps_precision(self):
        assert plob_bound(1e-12) == pytest.approx(1e-12 / math.log(2), rel=1e-9)


def test_loss_conversion_round_trip():
    for db in (0.0, 3.0, 37.5, 120.0):
        assert eta_to_loss(loss_to_eta(db)) == pytest.approx(db, abs=1e-12)
    assert loss_to_eta(30.0) == pytest.approx(1e-3, rel=1e-15)


class TestSymmetricPolynomials:
    def test_complete_homogeneous_counts_multisets(self):
        assert complete_homogeneous([1, 1, 1, 1], 0) == 1
        assert complete_homogeneous([1, 1, 1, 1], 2) == 10
        assert complete_homogeneous([1, 1, 1, 1], 3) == 20
        assert complete_homogeneous([0.1, 0.2, 0.3, 0.4], 1) == pytest.approx(1.0)

    def test_complete_homogeneous_brute_force(self, rng):
        import itertools
        mu = rng.uniform(0.01, 2, 4)
        for d in range(5):
            brute = sum(math.prod(mu[i] for i in c) for c in itertools.combinations_with_replacement(range(4), d))
            assert complete_homogeneous(mu, d) == pytest.approx(brute, rel=1e-13)

    def test_elementary(self):
        assert elementary_symmetric([1, 2, 3, 4], 3) == 2 * 3 * 4 + 1 * 3 * 4 + 1 * 2 * 4 + 1 * 2 * 3


@pytest.mark.parametrize("x", [1e-9, 1e-5, 1e-3, 0.1, 1.0, 5.0, 25.0])
@pytest.mark.parametrize("k", [0, 1, 2, 3, 4])
def test_exp_tail_against_high_precision(x, k):
    with mpmath.workdps(60):
        ref = mpmath.e ** mpmath.mpf(x) - sum(mpmath.mpf(x) ** j / mpmath.factorial(j) for j in range(k))
    assert exp_tail(x, k) == pytest.approx(float(ref), rel=1e-14)


class TestRecords:
    def test_intensity_set_invariants(self):
        s = IntensitySet((0.5, 0.1))
        assert s.count == 2 and s[0] == 0.5
        with pytest.raises(DomainError):
            IntensitySet((0.1, 0.5))
        with pytest.raises(DegenerateIntensities):
            IntensitySet((0.3, 0.3 + SEP_TOL / 2), ordered=False)
        with pytest.raises(UsageError):
            IntensitySet((0.5,))
        with pytest.raises(DomainError):
            IntensitySet((math.inf, 0.1))
        with pytest.raises(NonpositiveIntensity):
            IntensitySet((0.5, 0.0)).require_positive()

    def test_channel_params(self):
        ch = ChannelParams.with_default_misalignment(1e-3, 1e-7)
        assert ch.theta == pytest.approx(2 * math.asin(math.sqrt(0.02)))
        assert ch.phi == pytest.approx(0.02 * math.pi)
        assert ch.loss_db == pytest.approx(30.0)
        for bad in (dict(eta=0.0, pd=0.0), dict(eta=1.1, pd=0.0), dict(eta=0.5, pd=1.0)):
            with pytest.raises(DomainError):
                ChannelParams(**bad)

    def test_protocol_params(self):
        with pytest.raises(DomainError):
            ProtocolParams(0.0)
        with pytest.raises(DomainError):
            ProtocolParams(0.1, f_ec=0.9)
        with pytest.raises(DomainError):
            ProtocolParams(0.1, p_x=0.0)

    def test_gain_table(self):
        t = GainTable((1, 0), ((0.1, 0.2), (0.3, 0.4)))
        assert t.transposed().q == ((0.1, 0.3), (0.2, 0.4))
        assert t.rescaled(IntensitySet((0.1, 0.01)))[0][1] == pytest.approx(0.2 * math.exp(0.11))
        with pytest.raises(DomainError):
            GainTable((1, 0), ((0.1, 1.2), (0.3, 0.4)))
        with pytest.raises(UsageError):
            GainTable((1, 1), ((0.1,),))
        with pytest.raises(UsageError):
            GainTable((1, 0), ((0.1, 0.2),))

    def test_bound_set_defaults_to_one(self):
        b = YieldBoundSet((1, 0), {(0, 0): 0.1}, ((0, 0),))
        assert b.get(0, 0) == 0.1 and b.get(5, 3) == 1.0
        with pytest.raises(DomainError):
            YieldBoundSet((1, 0), {(0, 0): 1.5}, ((0, 0),))
        with pytest.raises(DomainError):
            YieldBoundSet((1, 0), {(2, 2): 0.1}, ((2, 2),), lower_y22=0.2)


def test_poisson_weights_vector(rng):
    w = poisson_weights(2.5, 20)
    assert np.allclose(w, [poisson_weight(2.5, n) for n in range(21)], rtol=1e-14)
