"""Oracle suites shared by the test-suite and the `validate` command.

Each suite returns a SuiteReport; none of them raises on a failed check.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import mpmath
import numpy as np

from . import bounds_four as b4
from . import bounds_three as b3
from .bounds_two import TwoDecoyInput, two_decoy_bounds
from .channel_model import gain_from_yields, model_yield_table, simulate_gain_table, z_gain
from .core import ChannelParams, GainTable, IntensitySet

GAIN_TOL = 1e-8
SOUNDNESS_SLACK = 1e-10
FACTORED_RTOL = 1e-10


@dataclass
class SuiteReport:
    name: str
    passed: bool
    checks: int
    worst: float
    seconds: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.checks} checks, worst {self.worst:.3e}, {self.seconds:.2f}s {self.detail}".rstrip()


def draw_intensities(rng, count: int) -> tuple:
    """Well-separated decoy settings for planted-table tests.

    The top intensity is log-uniform in [0.1, 1] and each next one is smaller
    by a log-uniform factor in [3, 30]; a fourth setting is log-uniform in
    [0.3, 3] at least 30% away from the others.  Closer or much smaller
    settings make the bound formulas lose all digits to cancellation.
    """
    top = 10 ** rng.uniform(-1, 0)
    vals = [top]
    for _ in range(min(count, 3) - 1):
        vals.append(vals[-1] / 10 ** rng.uniform(math.log10(3), math.log10(30)))
    if count == 4:
        while True:
            x = 10 ** rng.uniform(math.log10(0.3), math.log10(3))
            if min(abs(x - v) / max(x, v) for v in vals) >= 0.3:
                vals.append(x)
                break
    return tuple(vals)


def gains_from_table(y, mu, c_tail: float, outcome=(1, 0)) -> GainTable:
    k = len(mu)
    return GainTable(outcome, tuple(tuple(gain_from_yields(y, mu[a], mu[b], c_tail) for b in range(k))
                                    for a in range(k)))


def bounds_for(mu, gains: GainTable):
    """Bounds straight from the bound formulas, no rounding guard."""
    if len(mu) == 2:
        return two_decoy_bounds(TwoDecoyInput(IntensitySet(mu), gains))
    if len(mu) == 3:
        return b3.three_decoy_bounds(b3.ThreeDecoyInput(IntensitySet(mu), gains))
    return b4.four_decoy_bounds(b4.FourDecoyInput(IntensitySet(mu, ordered=False), gains))


def soundness_margin(bounds, y) -> float:
    """Smallest (bound - truth); negative means a violated bound."""
    worst = min(v - y[nm] for nm, v in bounds.upper.items())
    if bounds.lower_y22 is not None:
        worst = min(worst, y[2, 2] - bounds.lower_y22)
    return worst


# ---------------------------------------------------------------------------

def gain_series_suite(draws: int = 200, seed: int = 11, n_max: int = 60) -> SuiteReport:
    """Poisson mixture of model yields versus the closed-form gain."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(draws):
        eta = 10 ** rng.uniform(-6, 0)
        pd = rng.uniform(0, 1e-5)
        ch = ChannelParams(eta, pd, rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0, 0.1))
        mk, ml = rng.uniform(0, 0.5, 2)
        y = model_yield_table(ch, n_max)
        worst = max(worst, abs(gain_from_yields(y, mk, ml) - z_gain(ch, mk, ml)))
    return SuiteReport("gain series consistency", worst <= GAIN_TOL, draws, worst, time.perf_counter() - t0)


def planted_soundness_suite(tables: int = 600, seed: int = 7, size: int = 30) -> SuiteReport:
    """Random and 0/1 yield tables, all three decoy counts in turn."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = math.inf
    where = ""
    for trial in range(tables):
        if trial % 2:
            y = rng.uniform(0, 1, (size + 1, size + 1))
            c_tail = float(rng.uniform())
        else:
            y = (rng.uniform(size=(size + 1, size + 1)) < 0.5).astype(float)
            c_tail = float(rng.integers(2))
        mu = draw_intensities(rng, 2 + trial % 3)
        m = soundness_margin(bounds_for(mu, gains_from_table(y, mu, c_tail)), y)
        if m < worst:
            worst, where = m, f"at mu={mu}"
    ok = worst >= -SOUNDNESS_SLACK
    return SuiteReport("planted-table soundness", ok, tables, -worst if worst < 0 else 0.0,
                       time.perf_counter() - t0, "" if ok else where)


CHANNEL_ETAS = (1e-1, 1e-3, 1e-5)
CHANNEL_PDS = (0.0, 1e-7, 1e-5)
CHANNEL_MISALIGNMENTS = (0.0, 0.02, 0.1)
CHANNEL_INTENSITIES = ((0.5, 1e-5), (0.2, 1e-2, 1e-3), (0.1, 1e-2, 1e-3, 1.2))


def channel_soundness_suite() -> SuiteReport:
    """Bounds from simulated gains versus the model's own yields on a 3x3x3 grid."""
    t0 = time.perf_counter()
    worst = math.inf
    where = ""
    checks = 0
    for eta, pd, mis in itertools.product(CHANNEL_ETAS, CHANNEL_PDS, CHANNEL_MISALIGNMENTS):
        ch = ChannelParams.with_default_misalignment(eta, pd, mis)
        y = model_yield_table(ch, 8)
        for mu in CHANNEL_INTENSITIES:
            ints = IntensitySet(mu, ordered=len(mu) != 4)
            m = soundness_margin(bounds_for(mu, simulate_gain_table(ch, ints)), y)
            checks += 1
            if m < worst:
                worst, where = m, f"at eta={eta}, pd={pd}, misalignment={mis}, mu={mu}"
    ok = worst >= -SOUNDNESS_SLACK
    return SuiteReport("channel-model soundness", ok, checks, -worst if worst < 0 else 0.0,
                       time.perf_counter() - t0, "" if ok else where)


def _rel(a, b) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


_FACTORED_PAIRS = (
    # orders below these vanish identically; comparing roundoff there is meaningless
    (b3.aux_a22, b3.aux_a22_factored, range(2, 9)),
    (b3.aux_a11, b3.aux_a11_factored, range(3, 9)),
    (b3.aux_b02, b3.aux_b02_factored, range(3, 9)),
    (b3.aux_a00, b3.aux_a00_factored, range(3, 9)),
)


def factored_forms_suite(triples: int = 1000, quadruples: int = 1000, seed: int = 3) -> SuiteReport:
    """Direct versus factored auxiliary coefficients, and the sign of the four-decoy tail sum.

    The algebra is checked twice: at 50 digits on triples drawn uniformly
    from (0,1), where near-coincident pairs would swamp double precision,
    and in double precision on well-separated triples.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    checks = 0
    with mpmath.workdps(50):
        for _ in range(triples):
            mu = [mpmath.mpf(float(x)) for x in sorted(rng.uniform(0, 1, 3), reverse=True)]
            for direct, factored, orders in _FACTORED_PAIRS:
                for k in orders:
                    worst = max(worst, float(_rel(direct(*mu, k), factored(*mu, k))))
                    checks += 1
    for _ in range(triples):
        mu = draw_intensities(rng, 3)
        for direct, factored, orders in _FACTORED_PAIRS:
            for k in orders:
                worst = max(worst, _rel(direct(*mu, k), factored(*mu, k)))
                checks += 1
    negative = 0
    for _ in range(quadruples):
        top3 = draw_intensities(rng, 3)
        mu = top3 + (top3[-1] / 10 ** rng.uniform(math.log10(3), math.log10(30)),)
        if b4.tail_bracket(mu) ** 2 < 0 or b4.b_sum_printed(mu) < 0:
            negative += 1
        checks += 1
    ok = worst <= FACTORED_RTOL and negative == 0
    return SuiteReport("factored-form equivalence", ok, checks, worst, time.perf_counter() - t0,
                       f"negative tail sums: {negative}" if negative else "")


SUITES = {
    "gains": gain_series_suite,
    "planted": planted_soundness_suite,
    "channel": channel_soundness_suite,
    "factored": factored_forms_suite,
}


def run_suites(names=None) -> list[SuiteReport]:
    names = list(SUITES) if names is None else names
    return [SUITES[n]() for n in names]
