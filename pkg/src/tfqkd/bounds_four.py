"""Four-decoy bounds on Y13, Y31, Y04 and Y40.

The other five yields of the phase-error estimate reuse the three-decoy
bounds on a chosen triple of the intensities.  The formulas only divide by
intensity differences, so the fourth intensity may sit anywhere on the
axis; the bounds only need pairwise separation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

from .bounds_three import ThreeDecoyInput, three_decoy_bounds
from .bounds_two import _clamp
from .core import (
    INDEX_SET_FOUR,
    GainTable,
    IntensitySet,
    UsageError,
    YieldBoundSet,
    complete_homogeneous,
    elementary_symmetric,
    exp_tail,
)


@dataclass(frozen=True)
class FourDecoyInput:
    intensities: IntensitySet
    gains: GainTable

    def __post_init__(self):
        if self.intensities.count != 4:
            raise UsageError("four-decoy bounds need exactly four intensities")
        if self.gains.size != 4:
            raise UsageError(f"four-decoy bounds need a 4x4 gain table, got {self.gains.size}x{self.gains.size}")
        self.intensities.require_positive()

    @cached_property
    def qt(self):
        return self.gains.rescaled(self.intensities)

    @property
    def mu(self):
        return self.intensities.values

    def transposed(self) -> "FourDecoyInput":
        return FourDecoyInput(self.intensities, self.gains.transposed())


def complete_homogeneous_sum(mu, degree: int) -> float:
    """Sum over i1 <= i2 <= ... of mu_{i1} mu_{i2} ...; equals 1 at degree 0."""
    return complete_homogeneous(mu, degree)


def c_n_recursion(mu, n: int) -> float:
    if n < 4:
        raise UsageError("C_n is defined for n >= 4")
    c = {4: elementary_symmetric(mu, 3)}
    prod = mu[0] * mu[1] * mu[2] * mu[3]
    for k in range(5, n + 1):
        s = sum(sum(x**j for x in mu) * c[k - j] for j in range(1, k - 3))
        c[k] = (s - prod * complete_homogeneous(mu, k - 5)) / (k - 4)
    return c[n]


# ---------------------------------------------------------------------------
# Y04 / Y40

def coefficients_y04(mu0, mu1, mu2, mu3) -> dict:
    """c[(i,j)], i < j, normalised to c[(0,1)] = 1."""
    return {
        (0, 1): 1.0,
        (0, 2): -(mu0 - mu1) * mu1 * (mu1 - mu3) / ((mu0 - mu2) * mu2 * (mu2 - mu3)),
        (0, 3): (mu0 - mu1) * mu1 * (mu1 - mu2) / ((mu0 - mu3) * mu3 * (mu2 - mu3)),
        (1, 2): (mu0 - mu1) * mu0 * (mu0 - mu3) / ((mu1 - mu2) * mu2 * (mu2 - mu3)),
        (1, 3): -(mu0 - mu1) * mu0 * (mu0 - mu2) / ((mu1 - mu3) * mu3 * (mu2 - mu3)),
        (2, 3): mu0 * mu1 * (mu0 - mu1) ** 2 / (mu2 * mu3 * (mu2 - mu3) ** 2),
    }


def _weights(mu0, mu1, mu2, mu3):
    return (
        (mu1 - mu2) * (mu1 - mu3) * (mu2 - mu3),
        -(mu0 - mu2) * (mu0 - mu3) * (mu2 - mu3),
        (mu0 - mu1) * (mu0 - mu3) * (mu1 - mu3),
        -(mu0 - mu1) * (mu0 - mu2) * (mu1 - mu2),
    )


def aux_a04(mu, m: int) -> float:
    mu0, mu1, mu2, mu3 = mu
    w = _weights(*mu)
    return -(mu0 - mu1) / (mu2 * mu3 * (mu2 - mu3)) * sum(wi * x**m for wi, x in zip(w, mu))


def aux_a04_factored(mu, m: int) -> float:
    mu0, mu1, mu2, mu3 = mu
    pref = -((mu0 - mu1) ** 2 * (mu0 - mu2) * (mu1 - mu2) * (mu0 - mu3) * (mu1 - mu3)) / (mu2 * mu3)
    return pref * complete_homogeneous(mu, m - 3)


def a04_at_four(mu) -> float:
    mu0, mu1, mu2, mu3 = mu
    return -((mu0 - mu1) ** 2 * (mu0 - mu2) * (mu1 - mu2) * (mu0 - mu3) * (mu1 - mu3)
             * (mu0 + mu1 + mu2 + mu3)) / (mu2 * mu3)


def aux_b04(mu, n: int, m: int) -> float:
    mu0, mu1, mu2, mu3 = mu
    w = _weights(*mu)
    den = (mu0 - mu2) * (mu1 - mu2) * (mu1 - mu3) * (mu0 - mu3) * (mu2 - mu3) ** 2
    first = sum(wi * x**m for wi, x in zip(w, mu))
    second = -sum(wi * x ** (n - 1) for wi, x in zip(w, mu))
    return -mu0 * mu1 / den * first * second


def aux_b04_factored(mu, n: int, m: int) -> float:
    return -mu[0] * mu[1] * mu[2] * mu[3] * aux_a04(mu, m) * complete_homogeneous(mu, n - 4)


def _tail_prefactor(mu):
    mu0, mu1, mu2, mu3 = mu
    return mu0 * mu1 / ((mu0 - mu2) * (mu1 - mu2) * (mu1 - mu3) * (mu0 - mu3) * (mu2 - mu3) ** 2)


def tail_bracket(mu, literal: bool = False) -> float:
    """sum_i w_i (e^{mu_i} - 1 - mu_i - mu_i^2/2) with the four-point weights w_i."""
    w = _weights(*mu)
    if literal:
        return sum(wi * (math.exp(x) - 1 - x - x * x / 2) for wi, x in zip(w, mu))
    return sum(wi * exp_tail(x, 3) for wi, x in zip(w, mu))


def b_sum_printed(mu, literal: bool = False) -> float:
    """Closed form used in the Y04 bound: prefactor times the squared bracket."""
    return _tail_prefactor(mu) * tail_bracket(mu, literal) ** 2


def b_sum_exact(mu) -> float:
    """sum_{n>=4, m>=3} B04(n,m)/(n! m!) factorised into its two single sums."""
    w = _weights(*mu)
    s_m = sum(wi * exp_tail(x, 3) for wi, x in zip(w, mu))
    s_n = sum(wi * exp_tail(x, 4) / x for wi, x in zip(w, mu))
    return _tail_prefactor(mu) * s_m * s_n


def g04_pair(inp, i, j):
    mu, q = inp.mu, inp.qt
    return mu[j] * q[i][i] + mu[i] * q[j][j] - mu[j] * q[i][j] - mu[i] * q[j][i]


def g40_pair(inp, i, j):
    mu, q = inp.mu, inp.qt
    return mu[j] * q[i][i] + mu[i] * q[j][j] - mu[i] * q[i][j] - mu[j] * q[j][i]


def _raw_y04_from(inp, pair, exact_tail: bool) -> float:
    mu = inp.mu
    a = a04_at_four(mu)
    c = coefficients_y04(*mu)
    combo = sum(cij * pair(inp, i, j) for (i, j), cij in c.items())
    tail = b_sum_exact(mu) if exact_tail else b_sum_printed(mu)
    return 24 / a * (combo - tail)


def raw_y04(inp, exact_tail: bool = False) -> float:
    return _raw_y04_from(inp, g04_pair, exact_tail)


def raw_y40(inp, exact_tail: bool = False) -> float:
    return _raw_y04_from(inp, g40_pair, exact_tail)


# ---------------------------------------------------------------------------
# Y13 / Y31

def coefficients_y13(mu0, mu1, mu2, mu3):
    """4x4 table c[i][j], normalised to c[0][0] = 1."""
    d = mu1 * (mu2 + mu3) + mu2 * mu3
    p1 = mu0 * (mu2 + mu3) + mu2 * mu3
    p2 = mu0 * (mu1 + mu3) + mu1 * mu3
    p3 = mu0 * (mu1 + mu2) + mu1 * mu2
    d01, d02, d03 = mu0 - mu1, mu0 - mu2, mu0 - mu3
    d12, d13, d23 = mu1 - mu2, mu1 - mu3, mu2 - mu3
    c = [[0.0] * 4 for _ in range(4)]
    c[0][0] = 1.0
    c[0][1] = d02 * d03 / (-d12 * d13)
    c[0][2] = d01 * d03 / (d12 * d23)
    c[0][3] = d01 * d02 / (d13 * -d23)
    c[1][0] = -d02 * d03 * p1 / (d12 * d13 * d)
    c[1][1] = d02**2 * d03**2 * p1 / (d12**2 * d13**2 * d)
    c[1][2] = -d01 * d02 * d03**2 * p1 / (d12**2 * d13 * d23 * d)
    c[1][3] = d01 * d02**2 * d03 * p1 / (d12 * d13**2 * d23 * d)
    c[2][0] = d01 * d03 * p2 / (d12 * d23 * d)
    c[2][1] = -d01 * d02 * d03**2 * p2 / (d12**2 * d13 * d23 * d)
    c[2][2] = d01**2 * d03**2 * p2 / (d12**2 * d23**2 * d)
    c[2][3] = -d01**2 * d02 * d03 * p2 / (d12 * d13 * d23**2 * d)
    c[3][0] = d01 * d02 * p3 / (d13 * -d23 * d)
    c[3][1] = d01 * d02**2 * d03 * p3 / (d12 * d13**2 * d23 * d)
    c[3][2] = -d01**2 * d02 * d03 * p3 / (d12 * d13 * d23**2 * d)
    c[3][3] = d01**2 * d02**2 * p3 / (d13**2 * d23**2 * d)
    return c


def aux_a13(mu, m: int) -> float:
    mu0, mu1, mu2, mu3 = mu
    return ((mu0 - mu1) ** 2 * (mu0 - mu2) ** 2 * (mu0 - mu3) ** 2
            / (mu2 * mu3 + mu1 * mu2 + mu1 * mu3) * complete_homogeneous(mu, m - 3))


def raw_y13(inp) -> float:
    c = coefficients_y13(*inp.mu)
    q = inp.qt
    s = sum(c[i][j] * q[i][j] for i in range(4) for j in range(4))
    return 6 / aux_a13(inp.mu, 3) * s


def raw_y31(inp) -> float:
    c = coefficients_y13(*inp.mu)
    q = inp.qt
    s = sum(c[j][i] * q[i][j] for i in range(4) for j in range(4))
    return 6 / aux_a13(inp.mu, 3) * s


# ---------------------------------------------------------------------------

def four_decoy_bounds(inp: FourDecoyInput, three_decoy_subset=(0, 1, 2)) -> YieldBoundSet:
    idx = tuple(three_decoy_subset)
    if len(idx) != 3 or len(set(idx)) != 3 or not all(0 <= i < 4 for i in idx):
        raise UsageError("three_decoy_subset must name three distinct settings out of 0..3")
    # the three-decoy formulas want the triple in descending order
    idx = tuple(sorted(idx, key=lambda i: -inp.mu[i]))
    sub = ThreeDecoyInput(inp.intensities.subset(idx), inp.gains.sub_table(idx))
    base = three_decoy_bounds(sub)
    flags = dict(base.flags)
    raw = dict(base.raw)
    up = dict(base.upper)
    up[(1, 3)] = _clamp(raw_y13(inp), flags, (1, 3), raw)
    up[(3, 1)] = _clamp(raw_y31(inp), flags, (3, 1), raw)
    if a04_at_four(inp.mu) < 0:
        up[(0, 4)] = _clamp(raw_y04(inp), flags, (0, 4), raw)
        up[(4, 0)] = _clamp(raw_y40(inp), flags, (4, 0), raw)
    else:
        # with mu2 between mu0 and mu1 the sign argument behind the Y04 bound fails
        flags[(0, 4)] = flags[(4, 0)] = "sign"
        up[(0, 4)] = up[(4, 0)] = 1.0
        raw[(0, 4)] = raw[(4, 0)] = 1.0
    return YieldBoundSet(outcome=inp.gains.outcome, upper=up, index_set=INDEX_SET_FOUR, flags=flags, raw=raw)

