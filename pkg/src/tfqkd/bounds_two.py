"""Yield bounds from two decoy intensities mu0 > mu1 >= 0.

Every gain is a Poisson mixture of yields, so after rescaling
Q~^{k,l} = e^{mu_k+mu_l} Q^{k,l} each combination of the four gains is a
power series in the intensities with yield coefficients.  The combinations
below cancel most of the series; the rest is bounded by pushing each
remaining yield to 0 or 1 according to the sign of its coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

from .core import (
    INDEX_SET_TWO,
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
class TwoDecoyInput:
    intensities: IntensitySet
    gains: GainTable

    def __post_init__(self):
        if self.intensities.count != 2:
            raise UsageError("two-decoy bounds need exactly two intensities")
        if self.gains.size != 2:
            raise UsageError(f"two-decoy bounds need a 2x2 gain table, got {self.gains.size}x{self.gains.size}")
        mu0, mu1 = self.intensities.values
        if not mu0 > mu1:
            raise DomainError("two-decoy bounds need mu0 > mu1")
        if mu0 - mu1 < SEP_TOL:
            raise DegenerateIntensities(f"|mu0 - mu1| < {SEP_TOL}")

    @cached_property
    def qt(self):
        return self.gains.rescaled(self.intensities)

    def transposed(self) -> "TwoDecoyInput":
        return TwoDecoyInput(self.intensities, self.gains.transposed())


def rescaled_gains(inp: TwoDecoyInput) -> dict:
    return {(k, l): inp.qt[k][l] for k in range(2) for l in range(2)}


def _clamp(x: float, flags: dict | None, key, raw: dict | None = None) -> float:
    if raw is not None:
        raw[key] = x
    if x != x:
        if flags is not None:
            flags[key] = "nan"
        return 1.0
    if x < 0.0:
        if flags is not None:
            flags[key] = "clamped_low"
        return 0.0
    if x > 1.0:
        if flags is not None:
            flags[key] = "clamped_high"
        return 1.0
    return x


# combinations of rescaled gains

def g11(inp: TwoDecoyInput) -> float:
    q = inp.qt
    return q[0][0] + q[1][1] - q[0][1] - q[1][0]


def g02(inp: TwoDecoyInput) -> float:
    mu0, mu1 = inp.intensities.values
    q = inp.qt
    return mu1 * (q[0][0] - q[0][1]) + mu0 * (q[1][1] - q[1][0])


def g20(inp: TwoDecoyInput) -> float:
    mu0, mu1 = inp.intensities.values
    q = inp.qt
    return mu1 * (q[0][0] - q[1][0]) + mu0 * (q[1][1] - q[0][1])


def g00(inp: TwoDecoyInput) -> float:
    mu0, mu1 = inp.intensities.values
    q = inp.qt
    return mu1 * mu1 * q[0][0] + mu0 * mu0 * q[1][1] - mu0 * mu1 * (q[0][1] + q[1][0])


# gain-independent pieces

def _exp_gap(mu0: float, mu1: float) -> float:
    """e^{mu0} - e^{mu1}"""
    return math.expm1(mu0) - math.expm1(mu1)


def _second_order_gap(mu0: float, mu1: float) -> float:
    """mu0 - mu1 + mu1 e^{mu0} - mu0 e^{mu1}; the degree <= 1 parts cancel exactly."""
    return mu1 * exp_tail(mu0, 2) - mu0 * exp_tail(mu1, 2)


def _fifth_order_gap(mu0: float, mu1: float) -> float:
    """mu1 (e^{mu0} - 1 - mu0^2/2 - mu0^3/6 - mu0^4/24) minus the same with mu0 <-> mu1."""
    return mu1 * exp_tail(mu0, 5) - mu0 * exp_tail(mu1, 5)


# raw (unclamped) bounds

def raw_y11(inp: TwoDecoyInput) -> float:
    mu0, mu1 = inp.intensities.values
    return g11(inp) / (mu0 - mu1) ** 2


def _raw_y0m_from(g: float, mu0: float, mu1: float, m: int) -> float:
    tail = _exp_gap(mu0, mu1) * _second_order_gap(mu0, mu1)
    return math.factorial(m) / ((mu0 - mu1) * (mu0**m - mu1**m)) * (tail - g)


def raw_y02(inp: TwoDecoyInput) -> float:
    mu0, mu1 = inp.intensities.values
    tail = _exp_gap(mu0, mu1) * _second_order_gap(mu0, mu1)
    return (2 * tail - 2 * g02(inp)) / ((mu0 + mu1) * (mu0 - mu1) ** 2)


def raw_y20(inp: TwoDecoyInput) -> float:
    mu0, mu1 = inp.intensities.values
    tail = _exp_gap(mu0, mu1) * _second_order_gap(mu0, mu1)
    return (2 * tail - 2 * g20(inp)) / ((mu0 + mu1) * (mu0 - mu1) ** 2)


def raw_lower_y22(inp: TwoDecoyInput) -> float:
    mu0, mu1 = inp.intensities.values
    if not mu0 + mu1 > 0:
        raise DomainError("lower Y22 bound needs mu0 + mu1 > 0")
    return 4 * (g11(inp) - _exp_gap(mu0, mu1) ** 2) / ((mu0 - mu1) ** 2 * (mu0 + mu1) ** 2) + 1


# public bounds, clamped into [0,1]

def bound_y11(inp: TwoDecoyInput, flags: dict | None = None, raw: dict | None = None) -> float:
    return _clamp(raw_y11(inp), flags, (1, 1), raw)


def bound_y02(inp: TwoDecoyInput, flags: dict | None = None, raw: dict | None = None) -> float:
    return _clamp(raw_y02(inp), flags, (0, 2), raw)


def bound_y20(inp: TwoDecoyInput, flags: dict | None = None, raw: dict | None = None) -> float:
    return _clamp(raw_y20(inp), flags, (2, 0), raw)


def bound_y0m(inp: TwoDecoyInput, m: int, flags: dict | None = None) -> float:
    if m < 2:
        raise UsageError("bound_y0m needs m >= 2")
    mu0, mu1 = inp.intensities.values
    return _clamp(min(_raw_y0m_from(g02(inp), mu0, mu1, m), 1.0), flags, (0, m))


def bound_yn0(inp: TwoDecoyInput, n: int, flags: dict | None = None) -> float:
    if n < 2:
        raise UsageError("bound_yn0 needs n >= 2")
    mu0, mu1 = inp.intensities.values
    return _clamp(min(_raw_y0m_from(g20(inp), mu0, mu1, n), 1.0), flags, (n, 0))


def lower_y22(inp: TwoDecoyInput, flags: dict | None = None, raw_out: dict | None = None) -> float:
    raw = raw_lower_y22(inp)
    if raw_out is not None:
        raw_out["lower_y22"] = raw
    if raw != raw:
        if flags is not None:
            flags["lower_y22"] = "nan"
        return 0.0
    if raw < 0:
        return 0.0
    if raw > 1:
        if flags is not None:
            flags["lower_y22"] = "clamped_high"
        return 1.0
    return raw


def raw_y00(inp: TwoDecoyInput, sub: dict | None = None) -> float:
    """Vacuum-yield bound before clamping; `sub` supplies already computed sub-bounds."""
    mu0, mu1 = inp.intensities.values
    if sub is None:
        sub = _sub_bounds(inp, None)
    d = mu0 - mu1
    inner = (d / 2 * (sub[(0, 2)] + sub[(2, 0)])
             + (mu0**2 - mu1**2) / 6 * (sub[(0, 3)] + sub[(3, 0)])
             + (mu0**3 - mu1**3) / 24 * (sub[(0, 4)] + sub[(4, 0)]))
    return (g00(inp) / d**2
            + mu0 * mu1 / d * inner
            + 2 / d * _fifth_order_gap(mu0, mu1)
            - mu0**2 * mu1**2 / 4 * sub["lower_y22"])


def _sub_bounds(inp: TwoDecoyInput, flags: dict | None, raw: dict | None = None) -> dict:
    return {
        (0, 2): bound_y02(inp, flags, raw),
        (2, 0): bound_y20(inp, flags, raw),
        (0, 3): bound_y0m(inp, 3),
        (3, 0): bound_yn0(inp, 3),
        (0, 4): bound_y0m(inp, 4),
        (4, 0): bound_yn0(inp, 4),
        "lower_y22": lower_y22(inp, flags, raw),
    }


def bound_y00(inp: TwoDecoyInput, flags: dict | None = None) -> float:
    return _clamp(raw_y00(inp), flags, (0, 0))


def two_decoy_bounds(inp: TwoDecoyInput) -> YieldBoundSet:
    flags: dict = {}
    raw: dict = {}
    sub = _sub_bounds(inp, flags, raw)
    upper = {
        (1, 1): bound_y11(inp, flags, raw),
        (0, 2): sub[(0, 2)],
        (2, 0): sub[(2, 0)],
        (0, 0): _clamp(raw_y00(inp, sub), flags, (0, 0), raw),
    }
    return YieldBoundSet(
        outcome=inp.gains.outcome,
        upper=upper,
        index_set=INDEX_SET_TWO,
        lower_y22=sub["lower_y22"],
        flags=flags,
        raw=raw,
    )
