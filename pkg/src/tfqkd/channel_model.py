"""Analytical channel model: X-basis statistics, Z-basis gains and Fock-state yields.

Alice and Bob each send through a beam splitter of transmittance sqrt(eta);
the relay interferes the two pulses on a balanced beam splitter with a
polarization rotation theta = theta_a - theta_b and phase mismatch phi.
Only the outcomes with exactly one detector firing are modelled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .core import (
    OUTCOMES,
    TAIL_TERM_TOL,
    ChannelParams,
    DegenerateClicks,
    DomainError,
    GainTable,
    IntensitySet,
    UsageError,
    check_outcome,
)

EXACT_INNER_MAX = 24  # k + l up to which the inner sum uses exact integer combinatorics


@dataclass(frozen=True)
class XBasisStats:
    p_click: dict
    e_bit: dict


# ---------------------------------------------------------------------------
# X basis

def _cc(ch: ChannelParams) -> float:
    return math.cos(ch.phi) * math.cos(ch.theta)


def x_gain_conditional(ch: ChannelParams, alpha2: float, outcome, b_a: int, b_b: int) -> float:
    """p(k_c, k_d | b_A, b_B) for the X-basis coherent states |+-alpha>."""
    kc, _ = check_outcome(outcome)
    if b_a not in (0, 1) or b_b not in (0, 1):
        raise UsageError("bit values must be 0 or 1")
    if alpha2 < 0:
        raise DomainError("alpha2 must be >= 0")
    g = ch.arm_transmittance * alpha2
    cc = _cc(ch)
    # e^{-g(1-+cc)} - e^{-2g} written without the subtraction
    if kc ^ b_a ^ b_b:
        q = math.exp(-2 * g) * math.expm1(g * (1 + cc))
    else:
        q = math.exp(-2 * g) * math.expm1(g * (1 - cc))
    return (1 - ch.pd) * (ch.pd * math.exp(-2 * g) + q)


def x_basis_stats(ch: ChannelParams, alpha2: float) -> XBasisStats:
    """Click probability and bit-error rate per outcome, closed form."""
    if alpha2 < 0:
        raise DomainError("alpha2 must be >= 0")
    g = ch.arm_transmittance * alpha2
    cc = _cc(ch)
    lo = math.expm1(g * (1 - cc))
    hi = math.expm1(g * (1 + cc))
    pd = ch.pd
    p = 0.5 * (1 - pd) * math.exp(-2 * g) * (lo + hi + 2 * pd)
    if p <= 0:
        e = math.nan
    else:
        e = (lo + pd) / (lo + hi + 2 * pd)
    return XBasisStats(p_click={o: p for o in OUTCOMES}, e_bit={o: e for o in OUTCOMES})


def x_basis_stats_summed(ch: ChannelParams, alpha2: float) -> XBasisStats:
    """Same quantities from the uniform average over the four bit pairs."""
    p_click, e_bit = {}, {}
    for o in OUTCOMES:
        kc = o[0]
        table = {(a, b): x_gain_conditional(ch, alpha2, o, a, b) for a in (0, 1) for b in (0, 1)}
        p = 0.25 * sum(table.values())
        # outcome (1,0) errs when the bits differ, (0,1) when they agree
        wrong = sum(v for (a, b), v in table.items() if (a ^ b) == kc)
        p_click[o] = p
        e_bit[o] = 0.25 * wrong / p if p > 0 else math.nan
    return XBasisStats(p_click=p_click, e_bit=e_bit)


def bit_error_rates(ch: ChannelParams, alpha2: float) -> dict:
    stats = x_basis_stats_summed(ch, alpha2)
    for o, p in stats.p_click.items():
        if not p > 0:
            raise DegenerateClicks(f"no clicks for outcome {o}")
    return dict(stats.e_bit)


# ---------------------------------------------------------------------------
# modified Bessel function of the first kind, order zero

def bessel_i0_minus_one(x: float) -> float:
    """I0(x) - 1 = sum_{k>=1} (x^2/4)^k / (k!)^2."""
    if not math.isfinite(x):
        raise DomainError("bessel_i0 needs a finite argument")
    z = 0.25 * x * x
    if z == 0.0:
        return 0.0
    term = z
    total = z
    k = 1
    while True:
        k += 1
        term *= z / (k * k)
        total += term
        if term <= total * TAIL_TERM_TOL and k >= 4:
            return total
        if math.isinf(total):
            return total


def bessel_i0(x: float) -> float:
    return 1.0 + bessel_i0_minus_one(x)


# ---------------------------------------------------------------------------
# Z basis

def z_gain(ch: ChannelParams, mu_k: float, mu_l: float) -> float:
    """Q^{k,l} for phase-randomized pulses of intensities mu_k (Alice) and mu_l (Bob)."""
    if mu_k < 0 or mu_l < 0:
        raise DomainError("intensities must be >= 0")
    t = ch.arm_transmittance
    x = t * (mu_k + mu_l)
    y = math.sqrt(ch.eta * mu_k * mu_l) * math.cos(ch.theta)
    pd = ch.pd
    # (pd-1)e^{-x} + e^{-x/2} I0(y), regrouped so nothing cancels at small x
    inner = (math.exp(-x / 2) * bessel_i0_minus_one(y)
             + math.exp(-x) * math.expm1(x / 2)
             + pd * math.exp(-x))
    return (1 - pd) * inner


def z_gain_literal(ch: ChannelParams, mu_k: float, mu_l: float) -> float:
    t = ch.arm_transmittance
    x = t * (mu_k + mu_l)
    y = math.sqrt(ch.eta * mu_k * mu_l) * math.cos(ch.theta)
    return (1 - ch.pd) * ((ch.pd - 1) * math.exp(-x) + math.exp(-x / 2) * bessel_i0(y))


def simulate_gain_table(ch: ChannelParams, intensities: IntensitySet, outcome=(1, 0)) -> GainTable:
    mu = intensities.values
    q = tuple(tuple(z_gain(ch, a, b) for b in mu) for a in mu)
    return GainTable(check_outcome(outcome), q)


def simulate_gain_tables(ch: ChannelParams, intensities: IntensitySet) -> dict:
    """Both outcomes; the model is symmetric under swapping the detectors."""
    t = simulate_gain_table(ch, intensities, OUTCOMES[0])
    return {o: GainTable(o, t.q) for o in OUTCOMES}


# ---------------------------------------------------------------------------
# Fock-state yields

@lru_cache(maxsize=None)
def _inner_terms(k: int, l: int):
    """Angle-independent part of the (k,l) inner sum.

    Returns coefficient and exponent arrays for the terms
    coef * cos(tA)^a cos(tB)^b sin(tA)^c sin(tB)^d.
    """
    norm = 2 ** (k + l) * math.factorial(k) * math.factorial(l)
    coef, ea, eb, ec, ed = [], [], [], [], []
    for r in range(k + 1):
        for p in range(l + 1):
            for q in range(max(0, r + p - l), min(k, r + p) + 1):
                num = (math.comb(k, r) * math.comb(l, p) * math.comb(k, q)
                       * math.comb(l, r + p - q) * math.factorial(r + p)
                       * math.factorial(k + l - r - p))
                coef.append(num / norm)
                ea.append(r + q)
                eb.append(r + 2 * p - q)
                ec.append(2 * k - r - q)
                ed.append(2 * l - r - 2 * p + q)
    return (np.array(coef), np.array(ea), np.array(eb), np.array(ec), np.array(ed))


def inner_sum_exact(k: int, l: int, theta_a: float, theta_b: float) -> float:
    """Quintuple-sum inner term for k photons from Alice and l from Bob reaching the relay."""
    coef, a, b, c, d = _inner_terms(k, l)
    top = 2 * (k + l) + 1
    pw = np.arange(top)
    ca = np.cos(theta_a) ** pw
    cb = np.cos(theta_b) ** pw
    sa = np.sin(theta_a) ** pw
    sb = np.sin(theta_b) ** pw
    return float(np.sum(coef * ca[a] * cb[b] * sa[c] * sb[d]))


def inner_sum_reduced(k: int, l: int, theta: float) -> float:
    """Single-sum equivalent of the inner term; depends only on theta_a - theta_b.

    2^{-(k+l)} sum_j C(l,j) C(k+j,j) cos^{2j}(theta) sin^{2(l-j)}(theta)
    """
    c2 = math.cos(theta) ** 2
    s2 = math.sin(theta) ** 2
    j = np.arange(l + 1)
    logc = (gammaln(l + 1) - gammaln(j + 1) - gammaln(l - j + 1)
            + gammaln(k + j + 1) - gammaln(j + 1) - gammaln(k + 1)
            - (k + l) * math.log(2.0))
    return float(np.sum(np.exp(logc) * c2**j * s2 ** (l - j)))


@lru_cache(maxsize=None)
def _exact_block(size: int):
    """All angle-independent terms for k, l < size with k + l <= EXACT_INNER_MAX, flattened."""
    pairs = [(k, l) for k in range(size) for l in range(size) if k + l <= EXACT_INNER_MAX]
    parts = [_inner_terms(k, l) for k, l in pairs]
    seg = np.concatenate([np.full(len(p[0]), i) for i, p in enumerate(parts)])
    cols = [np.concatenate([p[j] for p in parts]) for j in range(5)]
    return pairs, seg, cols


def _reduced_matrix(theta: float, size: int) -> np.ndarray:
    k = np.arange(size)[:, None, None]
    l = np.arange(size)[None, :, None]
    j = np.arange(size)[None, None, :]
    valid = j <= l
    jj = np.where(valid, j, 0)
    logc = (gammaln(l + 1) - gammaln(jj + 1) - gammaln(np.maximum(l - jj, 0) + 1)
            + gammaln(k + jj + 1) - gammaln(jj + 1) - gammaln(k + 1)
            - (k + l) * math.log(2.0))
    c2 = math.cos(theta) ** 2
    s2 = math.sin(theta) ** 2
    terms = np.exp(logc) * c2**jj * s2 ** np.maximum(l - jj, 0)
    return np.sum(np.where(valid, terms, 0.0), axis=2)


@lru_cache(maxsize=64)
def _inner_matrix(theta_a: float, theta_b: float, size: int) -> np.ndarray:
    if size - 1 + size - 1 > EXACT_INNER_MAX:
        m = _reduced_matrix(theta_a - theta_b, size)
    else:
        m = np.empty((size, size))
    pairs, seg, (coef, a, b, c, d) = _exact_block(size)
    pw = np.arange(2 * EXACT_INNER_MAX + 1)
    ca = np.cos(theta_a) ** pw
    cb = np.cos(theta_b) ** pw
    sa = np.sin(theta_a) ** pw
    sb = np.sin(theta_b) ** pw
    sums = np.bincount(seg, weights=coef * ca[a] * cb[b] * sa[c] * sb[d], minlength=len(pairs))
    for (k, l), v in zip(pairs, sums):
        m[k, l] = v
    m.setflags(write=False)
    return m


def _binomial_matrix(t: float, size: int) -> np.ndarray:
    """B[n,k] = C(n,k) t^k (1-t)^{n-k}."""
    b = np.zeros((size, size))
    for n in range(size):
        for k in range(n + 1):
            b[n, k] = math.comb(n, k) * t**k * (1 - t) ** (n - k)
    return b


@lru_cache(maxsize=256)
def model_yield_table(ch: ChannelParams, n_max: int) -> np.ndarray:
    """Y[n,m] for n,m <= n_max under the channel model (read-only array)."""
    if n_max < 0:
        raise UsageError("n_max must be >= 0")
    size = n_max + 1
    t = ch.arm_transmittance
    inner = _inner_matrix(ch.theta_a, ch.theta_b, size).copy()
    # the (0,0) inner term is 1 and cancels against the -(1-t)^{n+m} part
    inner[0, 0] = 0.0
    b = _binomial_matrix(t, size)
    y = b @ inner @ b.T
    nm = np.add.outer(np.arange(size), np.arange(size))
    out = (1 - ch.pd) * (ch.pd * (1 - t) ** nm + y)
    np.clip(out, 0.0, 1.0, out=out)
    out.setflags(write=False)
    return out


def model_yield(ch: ChannelParams, n: int, m: int) -> float:
    if n < 0 or m < 0:
        raise DomainError("photon numbers must be >= 0")
    return float(model_yield_table(ch, max(n, m))[n, m])


def gain_from_yields(yields, mu_k: float, mu_l: float, c_tail: float = 1.0) -> float:
    """Poisson mixture of a truncated yield table plus a constant for the rest.

    `yields` is an (N+1)x(N+1) array; every yield outside it is taken to be c_tail.
    """
    y = np.asarray(yields, dtype=float)
    if y.ndim != 2 or y.shape[0] != y.shape[1] or y.shape[0] == 0:
        raise UsageError("yield table must be a non-empty square array")
    if not 0.0 <= c_tail <= 1.0:
        raise DomainError("c_tail must lie in [0,1]")
    if mu_k < 0 or mu_l < 0:
        raise DomainError("intensities must be >= 0")
    n = y.shape[0] - 1
    ks = np.arange(n + 1)
    pk = poisson.pmf(ks, mu_k)
    pl = poisson.pmf(ks, mu_l)
    body = float(pk @ y @ pl)
    # 1 - F_k F_l = s_k + s_l - s_k s_l with survival functions s
    sk = float(poisson.sf(n, mu_k))
    sl = float(poisson.sf(n, mu_l))
    return body + c_tail * (sk + sl - sk * sl)
