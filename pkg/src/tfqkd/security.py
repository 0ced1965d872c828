"""Error rates, the phase-error estimate and the asymptotic key rate."""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds_four import FourDecoyInput, four_decoy_bounds
from .bounds_three import ThreeDecoyInput, three_decoy_bounds
from .bounds_two import TwoDecoyInput, two_decoy_bounds
from .channel_model import model_yield_table, simulate_gain_tables, x_basis_stats
from .core import (
    OUTCOMES,
    ChannelParams,
    DegenerateClicks,
    DomainError,
    GainTable,
    IntensitySet,
    ProtocolParams,
    UsageError,
    YieldBoundSet,
    binary_entropy,
    check_outcome,
    coefficient_cutoff,
    coherent_coefficients,
)

DECOY_MODES = ("two", "three", "four", "infinite")
DECOY_COUNTS = {"two": 2, "three": 3, "four": 4}
_MODE_ALIASES = {"2": "two", "3": "three", "4": "four", "inf": "infinite", "infinity": "infinite"}

# relative size of the probe perturbation and the safety factor applied to
# machine epsilon times the measured sensitivity
PROBE_STEP = 1e-8
ROUNDOFF_SAFETY = 256.0
_MACHINE_EPS = 2.220446049250313e-16


def normalize_mode(mode) -> str:
    key = str(mode).strip().lower()
    key = _MODE_ALIASES.get(key, key)
    if key not in DECOY_MODES:
        raise UsageError(f"unknown decoy mode {mode!r}; use one of 2, 3, 4, inf")
    return key


@dataclass(frozen=True)
class SecurityResult:
    rate: float
    r_10: float
    r_01: float
    e_bit: dict
    e_ph: dict
    p_click: dict
    bounds: dict = field(default_factory=dict, compare=False)

    def outcome_rate(self, outcome) -> float:
        return self.r_10 if check_outcome(outcome) == (1, 0) else self.r_01


# ---------------------------------------------------------------------------
# phase error

def _phase_error_from_root_yields(root_y: np.ndarray, c: np.ndarray, p_click: float) -> float:
    """((sum_even c c sqrt Y)^2 + (sum_odd c c sqrt Y)^2) / p, capped at 1."""
    ce, co = c[0::2], c[1::2]
    even = float(ce @ root_y[0::2, 0::2] @ ce)
    odd = float(co @ root_y[1::2, 1::2] @ co)
    return min((even * even + odd * odd) / p_click, 1.0)


def _check_click(p_click: float):
    if not p_click > 0:
        raise DegenerateClicks("click probability is zero; no key can be extracted")


def phase_error_bound(bounds: YieldBoundSet, alpha2: float, p_click: float, n_cut: int | None = None) -> float:
    """Upper bound on the phase-error rate from yield upper bounds.

    Yields outside the bound set's index set count as 1.
    """
    _check_click(p_click)
    if n_cut is None:
        n_cut = coefficient_cutoff(alpha2)
    c = np.array(coherent_coefficients(alpha2, n_cut))
    root_y = np.ones((n_cut + 1, n_cut + 1))
    for (n, m) in bounds.index_set:
        if n <= n_cut and m <= n_cut:
            root_y[n, m] = math.sqrt(bounds.get(n, m))
    return _phase_error_from_root_yields(root_y, c, p_click)


def phase_error_exact(ch: ChannelParams, alpha2: float, p_click: float, n_trunc: int = 12,
                      n_cut: int | None = None) -> float:
    """Phase error with model yields for n, m <= n_trunc and 1 beyond."""
    _check_click(p_click)
    if n_trunc < 0:
        raise UsageError("n_trunc must be >= 0")
    if n_cut is None:
        n_cut = coefficient_cutoff(alpha2)
    c = np.array(coherent_coefficients(alpha2, n_cut))
    root_y = np.ones((n_cut + 1, n_cut + 1))
    k = min(n_trunc, n_cut) + 1
    root_y[:k, :k] = np.sqrt(model_yield_table(ch, n_trunc)[:k, :k])
    return _phase_error_from_root_yields(root_y, c, p_click)


def bit_error_rates(ch: ChannelParams, alpha2: float) -> dict:
    stats = x_basis_stats(ch, alpha2)
    for o, p in stats.p_click.items():
        _check_click(p)
    return dict(stats.e_bit)


# ---------------------------------------------------------------------------
# yield bounds per mode

def _raw_bound_set(mode, intensities, gains, **kw) -> YieldBoundSet:
    mode = normalize_mode(mode)
    if mode == "infinite":
        raise UsageError("the infinite-decoy reference uses model yields, not bounds")
    if intensities.count != DECOY_COUNTS[mode]:
        raise UsageError(f"{mode}-decoy mode needs {DECOY_COUNTS[mode]} intensities, got {intensities.count}")
    if mode == "two":
        return two_decoy_bounds(TwoDecoyInput(intensities, gains))
    if mode == "three":
        return three_decoy_bounds(ThreeDecoyInput(intensities, gains))
    return four_decoy_bounds(FourDecoyInput(intensities, gains), **kw)


def _probe_patterns(k: int):
    yield [[(-1) ** (i + j) for j in range(k)] for i in range(k)]
    yield [[(-1) ** i for j in range(k)] for i in range(k)]
    yield [[(-1) ** j for j in range(k)] for i in range(k)]


def roundoff_margins(mode, intensities: IntensitySet, gains: GainTable, base: YieldBoundSet | None = None,
                     **kw) -> dict:
    """Estimated floating-point error of every unclamped bound.

    The bounds are affine in the gains, so nudging the gains by a relative
    PROBE_STEP with alternating signs measures how strongly relative input
    errors are amplified; machine epsilon times that (with a safety factor)
    estimates the rounding error.  Nearly coincident or very small
    intensities amplify enormously.
    """
    if base is None:
        base = _raw_bound_set(mode, intensities, gains, **kw)
    k = gains.size
    sens = {key: 0.0 for key in base.raw}
    for pat in _probe_patterns(k):
        q = tuple(tuple(min(1.0, gains.q[i][j] * (1 + PROBE_STEP * pat[i][j])) for j in range(k))
                  for i in range(k))
        probe = _raw_bound_set(mode, intensities, GainTable(gains.outcome, q), **kw)
        for key, v in base.raw.items():
            w = probe.raw.get(key, v)
            d = abs(w - v) if (w == w and v == v) else math.inf
            sens[key] = max(sens[key], d / PROBE_STEP)
    return {key: ROUNDOFF_SAFETY * _MACHINE_EPS * (s + abs(base.raw[key])) for key, s in sens.items()}


def yield_bounds(mode, intensities: IntensitySet, gains: GainTable, guard: bool = True,
                 all_triples: bool = True, **kw) -> YieldBoundSet:
    """Yield upper bounds for one outcome.

    With `guard` each bound is widened by its estimated rounding error, so
    that ill-conditioned intensity choices lose key instead of gaining it.
    In four-decoy mode with `all_triples` every yield also takes the
    smallest three-decoy bound over the four triples of settings; each of
    those is a valid bound, so their minimum is too.
    """
    mode = normalize_mode(mode)
    if mode == "four" and all_triples:
        return _four_with_all_triples(intensities, gains, guard, **kw)
    base = _raw_bound_set(mode, intensities, gains, **kw)
    if not guard:
        return base
    margin = roundoff_margins(mode, intensities, gains, base, **kw)
    upper = dict(base.upper)
    flags = dict(base.flags)
    for key in upper:
        m = margin.get(key, 0.0)
        widened = min(1.0, max(upper[key], base.raw.get(key, upper[key]) + m))
        if not widened == widened:
            widened = 1.0
        if widened > upper[key] and m > 1e-6 * max(upper[key], 1e-300):
            flags.setdefault(key, "roundoff")
        upper[key] = widened
    lower = base.lower_y22
    if lower is not None:
        lower = max(0.0, lower - margin.get("lower_y22", 0.0))
    return dataclasses.replace(base, upper=upper, lower_y22=lower, flags=flags)


def _four_with_all_triples(intensities, gains, guard, three_decoy_subset=(0, 1, 2)) -> YieldBoundSet:
    four = yield_bounds("four", intensities, gains, guard=guard, all_triples=False,
                        three_decoy_subset=three_decoy_subset)
    upper = dict(four.upper)
    flags = dict(four.flags)
    used = tuple(sorted(three_decoy_subset))
    for triple in itertools.combinations(range(4), 3):
        if triple == used:
            continue
        idx = tuple(sorted(triple, key=lambda i: -intensities[i]))
        try:
            sub = yield_bounds("three", intensities.subset(idx), gains.sub_table(idx), guard=guard)
        except DomainError:
            continue
        for key, v in sub.upper.items():
            if v < upper[key]:
                upper[key] = v
                flags[key] = f"triple{idx}"
    return dataclasses.replace(four, upper=upper, flags=flags)


def _entropy_cost(f_ec: float, e_bit: float, e_ph: float) -> float:
    # h is increasing only up to 1/2; an estimate above 1/2 certifies nothing
    return f_ec * binary_entropy(min(e_bit, 0.5)) + binary_entropy(min(e_ph, 0.5))


def key_rate(params: ProtocolParams, ch: ChannelParams, mode, gains: dict | None = None,
             x_stats=None) -> SecurityResult:
    """Asymptotic key rate summed over the two detector outcomes.

    `gains` maps each outcome to its Z-basis GainTable; missing tables are
    simulated from the channel model.  `x_stats` overrides the simulated
    X-basis click probabilities and error rates.
    """
    mode = normalize_mode(mode)
    stats = x_stats if x_stats is not None else x_basis_stats(ch, params.alpha2)
    n_cut = coefficient_cutoff(params.alpha2)

    bounds: dict = {}
    if mode != "infinite":
        if params.intensities is None:
            raise UsageError(f"{mode}-decoy mode needs decoy intensities")
        tables = dict(gains) if gains else {}
        if any(o not in tables for o in OUTCOMES):
            sim = simulate_gain_tables(ch, params.intensities)
            for o in OUTCOMES:
                tables.setdefault(o, sim[o])
        first = None
        for o in OUTCOMES:
            if first is not None and tables[o].q == tables[first].q:
                bounds[o] = dataclasses.replace(bounds[first], outcome=o)
                continue
            bounds[o] = yield_bounds(mode, params.intensities, tables[o])
            first = o if first is None else first

    rates, e_ph, e_bit, p_click = {}, {}, {}, {}
    for o in OUTCOMES:
        p = stats.p_click[o]
        e = stats.e_bit[o]
        p_click[o] = p
        if not p > 0:
            e_bit[o], e_ph[o], rates[o] = math.nan, math.nan, 0.0
            continue
        if not 0.0 <= e <= 1.0:
            raise DomainError(f"bit-error rate {e} outside [0,1]")
        if mode == "infinite":
            ph = phase_error_exact(ch, params.alpha2, p, n_cut=n_cut)
        else:
            ph = phase_error_bound(bounds[o], params.alpha2, p, n_cut)
        e_bit[o], e_ph[o] = e, ph
        rates[o] = params.p_x**2 * p * (1.0 - _entropy_cost(params.f_ec, e, ph))

    r10, r01 = rates[(1, 0)], rates[(0, 1)]
    return SecurityResult(
        rate=max(r10, 0.0) + max(r01, 0.0),
        r_10=r10, r_01=r01,
        e_bit=e_bit, e_ph=e_ph, p_click=p_click,
        bounds=bounds,
    )
