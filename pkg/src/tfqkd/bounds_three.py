"""Yield bounds from three decoy intensities mu0 > mu1 > mu2 > 0.

With nine rescaled gains there is room to cancel more of the yield series
than with two, which gives bounds on Y22, Y13, Y31, Y04 and Y40 as well as
tighter ones on Y00, Y11, Y02 and Y20.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

from .bounds_two import _clamp
from .core import (
    INDEX_SET_THREE,
    DegenerateIntensities,
    DomainError,
    GainTable,
    IntensitySet,
    SEP_TOL,
    UsageError,
    YieldBoundSet,
    exp_tail,
)


@dataclass(frozen=True)
class ThreeDecoyInput:
    intensities: IntensitySet
    gains: GainTable

    def __post_init__(self):
        if self.intensities.count != 3:
            raise UsageError("three-decoy bounds need exactly three intensities")
        if self.gains.size != 3:
            raise UsageError(f"three-decoy bounds need a 3x3 gain table, got {self.gains.size}x{self.gains.size}")
        self.intensities.require_positive()
        mu0, mu1, mu2 = self.intensities.values
        if not mu0 > mu1 > mu2:
            raise DomainError("three-decoy bounds need mu0 > mu1 > mu2")
        if min(mu0 - mu1, mu1 - mu2) < SEP_TOL:
            raise DegenerateIntensities(f"intensities closer than {SEP_TOL}")

    @cached_property
    def qt(self):
        return self.gains.rescaled(self.intensities)

    @property
    def mu(self):
        return self.intensities.values

    def transposed(self) -> "ThreeDecoyInput":
        return ThreeDecoyInput(self.intensities, self.gains.transposed())


# ---------------------------------------------------------------------------
# auxiliary polynomial factors, each in a direct and a factored form

def aux_a22(mu0, mu1, mu2, m):
    return mu1**m * (mu0 - mu2) + mu2**m * (mu1 - mu0) + mu0**m * (mu2 - mu1)


def aux_a22_factored(mu0, mu1, mu2, m):
    s = sum(mu2**k * (mu0 ** (m - 1 - k) - mu1 ** (m - 1 - k)) for k in range(m))
    return (mu0 - mu2) * (mu2 - mu1) * s


def aux_a11(mu0, mu1, mu2, m):
    return (mu1**m * (mu0**2 - mu2**2) + mu2**m * (mu1**2 - mu0**2)
            + mu0**m * (mu2**2 - mu1**2))


def aux_f(mu0, mu1, mu2, m):
    """Non-negative factor F(m) with A11(m) = (mu0-mu2)(mu1-mu2)(mu1-mu0) F(m)."""
    total = 0
    for k in range(m - 2):
        inner = sum(mu1 ** (m - 2 - k - j) * mu0**j for j in range(m - 2 - k))
        total += mu2**k * ((mu2 + mu0) * inner + mu2 * mu0 ** (m - 2 - k))
    return total


def aux_a11_factored(mu0, mu1, mu2, m):
    return (mu0 - mu2) * (mu1 - mu2) * (mu1 - mu0) * aux_f(mu0, mu1, mu2, m)


def aux_b02(mu0, mu1, mu2, n):
    return (mu1 * mu2 * mu0**n * (mu1 - mu2)
            + mu0**2 * (mu1 * mu2**n - mu2 * mu1**n)
            + mu0 * (mu2**2 * mu1**n - mu1**2 * mu2**n))


def aux_b02_factored(mu0, mu1, mu2, n):
    s = sum(mu2**k * (mu0 ** (n - 2 - k) - mu1 ** (n - 2 - k)) for k in range(n - 1))
    return mu0 * mu1 * mu2 * (mu1 - mu2) * (mu0 - mu2) * s


def aux_a00(mu0, mu1, mu2, m):
    return (mu1**m * (mu2**2 * mu0 - mu2 * mu0**2)
            + mu2**m * (mu0**2 * mu1 - mu0 * mu1**2)
            + mu0**m * (mu1**2 * mu2 - mu1 * mu2**2))


def aux_a00_factored(mu0, mu1, mu2, m):
    s = sum(mu2**k * (mu0 ** (m - 2 - k) - mu1 ** (m - 2 - k)) for k in range(m - 1))
    return mu0 * mu1 * mu2 * (mu0 - mu2) * (mu1 - mu2) * s


# ---------------------------------------------------------------------------
# gain combinations over an ordered pair (i, j) of intensity settings

def g22_pair(inp, i, j):
    mu, q = inp.mu, inp.qt
    return mu[j] ** 2 * q[i][i] + mu[i] ** 2 * q[j][j] - mu[i] * mu[j] * (q[i][j] + q[j][i])


def g11_pair(inp, i, j):
    q = inp.qt
    return q[i][i] + q[j][j] - q[i][j] - q[j][i]


def g02_pair(inp, i, j):
    mu, q = inp.mu, inp.qt
    return mu[j] * q[i][i] + mu[i] * q[j][j] - mu[j] * q[i][j] - mu[i] * q[j][i]


def g20_pair(inp, i, j):
    mu, q = inp.mu, inp.qt
    return mu[j] * q[i][i] + mu[i] * q[j][j] - mu[i] * q[i][j] - mu[j] * q[j][i]


# ---------------------------------------------------------------------------
# raw bounds

def _vandermonde(mu):
    mu0, mu1, mu2 = mu
    return (mu0 - mu1) * (mu0 - mu2) * (mu1 - mu2)


def raw_y22(inp: ThreeDecoyInput) -> float:
    mu0, mu1, mu2 = inp.mu
    s = (g22_pair(inp, 0, 1) / (mu0 * mu1 * (mu0 - mu1))
         - g22_pair(inp, 0, 2) / (mu0 * mu2 * (mu0 - mu2))
         + g22_pair(inp, 1, 2) / (mu1 * mu2 * (mu1 - mu2)))
    return 4 * s / _vandermonde(inp.mu)


def _combo_02(inp, pair):
    mu0, mu1, mu2 = inp.mu
    return (mu2 * pair(inp, 0, 1) / (mu0 - mu1)
            - mu1 * pair(inp, 0, 2) / (mu0 - mu2)
            + mu0 * pair(inp, 1, 2) / (mu1 - mu2))


def _quartic_norm(mu):
    mu0, mu1, mu2 = mu
    return mu1 * (mu0**4 - mu2**4) - mu0 * (mu1**4 - mu2**4) - mu2 * (mu0**4 - mu1**4)


def raw_y02(inp):
    return 2 * _combo_02(inp, g02_pair) / _vandermonde(inp.mu)


def raw_y04(inp):
    return 24 * _combo_02(inp, g02_pair) / _quartic_norm(inp.mu)


def raw_y20(inp):
    return 2 * _combo_02(inp, g20_pair) / _vandermonde(inp.mu)


def raw_y40(inp):
    return 24 * _combo_02(inp, g20_pair) / _quartic_norm(inp.mu)


def coefficients_y13(mu0, mu1, mu2):
    """c[i][j] for the Y13 combination, normalised to c[0][0] = 1 (rank one: r_i s_j)."""
    c01 = -(mu0 - mu2) / (mu1 - mu2)
    c02 = (mu0 - mu1) / (mu1 - mu2)
    c10 = -(mu0**2 - mu2**2) / (mu1**2 - mu2**2)
    c20 = (mu0**2 - mu1**2) / (mu1**2 - mu2**2)
    return [
        [1.0, c01, c02],
        [c10, c10 * c01, c10 * c02],
        [c20, c01 * c20, (1 + c10) * (1 + c01)],
    ]


def _tail_brackets(mu0, mu1, mu2):
    """The two exponential brackets of the Y13 bound, with cancelling Taylor terms removed."""
    first = (exp_tail(mu2, 2) * (mu1 - mu0) + exp_tail(mu1, 2) * (mu0 - mu2)
             + exp_tail(mu0, 2) * (mu2 - mu1))
    second = (exp_tail(mu2, 3) * (mu1**2 - mu0**2) + exp_tail(mu1, 3) * (mu0**2 - mu2**2)
              + exp_tail(mu0, 3) * (mu2**2 - mu1**2))
    return first, second


def _tail_brackets_literal(mu0, mu1, mu2):
    e0, e1, e2 = math.exp(mu0), math.exp(mu1), math.exp(mu2)
    first = e2 * (mu1 - mu0) + e1 * (mu0 - mu2) + e0 * (mu2 - mu1)
    second = (e2 * (mu1**2 - mu0**2) + e1 * (mu0**2 - mu2**2) + e0 * (mu2**2 - mu1**2)
              - (mu0 - mu1) * (mu1 - mu2) * (mu0 - mu2))
    return first, second


def _raw_y13_from(q, mu, literal=False):
    mu0, mu1, mu2 = mu
    c = coefficients_y13(mu0, mu1, mu2)
    g13 = sum(c[i][j] * q[i][j] for i in range(3) for j in range(3))
    total = mu0 + mu1 + mu2
    b1, b2 = (_tail_brackets_literal if literal else _tail_brackets)(mu0, mu1, mu2)
    head = -6 * (mu1 + mu2) * g13 / ((mu0 - mu2) ** 2 * (mu0 - mu1) ** 2 * total)
    tail = 6 * b1 * b2 / ((mu0 - mu2) ** 2 * (mu1 - mu2) ** 2 * (mu0 - mu1) ** 2 * total)
    return head + tail


def raw_y13(inp, literal=False):
    return _raw_y13_from(inp.qt, inp.mu, literal)


def raw_y31(inp, literal=False):
    q = inp.qt
    qt = [[q[j][i] for j in range(3)] for i in range(3)]
    return _raw_y13_from(qt, inp.mu, literal)


def _fourth_tail_gap(a, b):
    """sum_{n>=4} (a^n - b^n)/n!"""
    return exp_tail(a, 4) - exp_tail(b, 4)


def _fourth_tail_gap_literal(a, b):
    return math.exp(a) - math.exp(b) - (a - b) * (1 + a / 2 + b / 2 + a * a / 6 + b * b / 6 + a * b / 6)


def e11_term(mu0, mu1, mu2, literal=False):
    t = _fourth_tail_gap_literal if literal else _fourth_tail_gap
    return (t(mu0, mu1)
            + (mu0 + mu1) / (mu1 + mu2) * t(mu1, mu2)
            - (mu0 + mu1) / (mu0 + mu2) * t(mu0, mu2))


def raw_y11(inp, y13_upper: float, y31_upper: float, literal=False) -> float:
    mu0, mu1, mu2 = inp.mu
    combo = (g11_pair(inp, 0, 1)
             - (mu0**2 - mu1**2) / (mu0**2 - mu2**2) * g11_pair(inp, 0, 2)
             + (mu0**2 - mu1**2) / (mu1**2 - mu2**2) * g11_pair(inp, 1, 2)
             - 2 * (mu0 - mu1) * e11_term(mu0, mu1, mu2, literal))
    pref = (mu0 + mu2) * (mu1 + mu2) / ((mu0 - mu1) ** 2 * (mu1 - mu2) * (mu0 - mu2))
    e2 = mu1 * mu2 + mu0 * mu1 + mu0 * mu2
    return pref * combo + e2 / 6 * (y13_upper + y31_upper)


def raw_y00(inp) -> float:
    mu0, mu1, mu2 = inp.mu
    s = (mu2**2 * g22_pair(inp, 0, 1) / (mu0 - mu1)
         - mu1**2 * g22_pair(inp, 0, 2) / (mu0 - mu2)
         + mu0**2 * g22_pair(inp, 1, 2) / (mu1 - mu2))
    return s / _vandermonde(inp.mu)


# ---------------------------------------------------------------------------

def three_decoy_bounds(inp: ThreeDecoyInput) -> YieldBoundSet:
    flags: dict = {}
    raw: dict = {}
    up = {}
    # order matters: Y11 consumes the already clamped Y13 and Y31
    up[(2, 2)] = _clamp(raw_y22(inp), flags, (2, 2), raw)
    up[(0, 2)] = _clamp(raw_y02(inp), flags, (0, 2), raw)
    up[(0, 4)] = _clamp(raw_y04(inp), flags, (0, 4), raw)
    up[(2, 0)] = _clamp(raw_y20(inp), flags, (2, 0), raw)
    up[(4, 0)] = _clamp(raw_y40(inp), flags, (4, 0), raw)
    up[(1, 3)] = _clamp(raw_y13(inp), flags, (1, 3), raw)
    up[(3, 1)] = _clamp(raw_y31(inp), flags, (3, 1), raw)
    up[(1, 1)] = _clamp(raw_y11(inp, up[(1, 3)], up[(3, 1)]), flags, (1, 1), raw)
    up[(0, 0)] = _clamp(raw_y00(inp), flags, (0, 0), raw)
    return YieldBoundSet(outcome=inp.gains.outcome, upper=up, index_set=INDEX_SET_THREE, flags=flags, raw=raw)
