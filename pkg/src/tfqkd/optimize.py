"""Scenario presets, rate maximization, loss sweeps and fluctuation worst cases."""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .core import (
    ChannelParams,
    DomainError,
    IntensitySet,
    KeyRatePoint,
    ProtocolParams,
    UsageError,
    loss_to_eta,
    plob_bound,
)
from .security import DECOY_COUNTS, SecurityResult, key_rate, normalize_mode

RATE_FLOOR = 1e-12
LOSS_RESOLUTION_DB = 0.1
GRID_POINTS = 9
RESTARTS = 5
_INFEASIBLE = 1e4
_NO_KEY = 1e3

# fixed intensities per preset; the free one is marked None
_PRESETS = {
    ("two", "standard"): (None, 1e-5),
    ("two", "weak"): (None, 1e-5),
    ("three", "standard"): (None, 1e-2, 1e-3),
    ("three", "weak"): (None, 1e-4, 1e-5),
    ("four", "standard"): (0.1, 1e-2, 1e-3, None),
    ("four", "weak"): (1e-3, 1e-4, 1e-5, None),
    ("infinite", "standard"): (),
    ("infinite", "weak"): (),
}
PRESET_VARIANTS = ("standard", "weak")
# spellings fixed by the command-line contract
PRESET_ALIASES = {"paper": "standard", "appendixB": "weak"}


def thread_cap() -> int:
    raw = os.environ.get("TFQKD_THREADS", "").strip()
    n = os.cpu_count() or 1
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise UsageError(f"TFQKD_THREADS must be a positive integer, got {raw!r}") from None
        if cap < 1:
            raise UsageError(f"TFQKD_THREADS must be a positive integer, got {raw!r}")
        n = min(n, cap)
    return n


@dataclass(frozen=True)
class FluctuationSpec:
    magnitude: float

    def __post_init__(self):
        if not 0.0 <= self.magnitude < 1.0:
            raise DomainError(f"fluctuation magnitude must be in [0,1), got {self.magnitude}")

    def interval(self, x: float) -> tuple[float, float]:
        return (1 - self.magnitude) * x, (1 + self.magnitude) * x


@dataclass(frozen=True)
class Scenario:
    """One decoy configuration: which intensities are fixed and which one is optimized.

    `decoys` holds every decoy intensity in setting order with None marking the
    free one; infinite mode has no decoys and only alpha2 is free.
    """

    mode: str
    pd: float
    decoys: tuple = ()
    misalignment: float = 0.02
    f_ec: float = 1.16
    p_x: float = 1.0
    alpha2_range: tuple = (1e-4, 2.0)
    decoy_range: tuple = (1e-4, 5.0)

    def __post_init__(self):
        object.__setattr__(self, "mode", normalize_mode(self.mode))
        object.__setattr__(self, "decoys", tuple(None if d is None else float(d) for d in self.decoys))
        if self.mode == "infinite":
            if self.decoys:
                raise UsageError("infinite mode takes no decoy intensities")
        else:
            if len(self.decoys) != DECOY_COUNTS[self.mode]:
                raise UsageError(f"{self.mode}-decoy scenario needs {DECOY_COUNTS[self.mode]} decoy entries")
            if sum(d is None for d in self.decoys) > 1:
                raise UsageError("at most one decoy intensity can be free")
        if not 0.0 <= self.pd < 1.0:
            raise DomainError(f"pd must be in [0,1), got {self.pd}")
        if not 0.0 <= self.misalignment <= 1.0:
            raise DomainError("misalignment fraction must be in [0,1]")
        for lo, hi in (self.alpha2_range, self.decoy_range):
            if not 0 < lo < hi:
                raise DomainError(f"bad search range ({lo}, {hi})")

    @classmethod
    def preset(cls, mode, pd: float, variant: str = "standard", **kw) -> "Scenario":
        mode = normalize_mode(mode)
        variant = PRESET_ALIASES.get(variant, variant)
        if variant not in PRESET_VARIANTS:
            raise UsageError(f"unknown preset {variant!r}; use one of {', '.join(PRESET_VARIANTS)}")
        return cls(mode=mode, pd=pd, decoys=_PRESETS[(mode, variant)], **kw)

    def with_fixed(self, values: dict) -> "Scenario":
        """Override decoys by name (mu0, mu1, ...); naming the free one fixes it."""
        decoys = list(self.decoys)
        for name, v in values.items():
            if not (name.startswith("mu") and name[2:].isdigit()):
                raise UsageError(f"unknown intensity name {name!r}")
            i = int(name[2:])
            if i >= len(decoys):
                raise UsageError(f"{name} does not exist in {self.mode}-decoy mode")
            decoys[i] = float(v)
        return replace(self, decoys=tuple(decoys))

    @property
    def free_index(self):
        for i, d in enumerate(self.decoys):
            if d is None:
                return i
        return None

    @property
    def dimension(self) -> int:
        return 1 if self.free_index is None else 2

    def intensities(self, free_value: float | None = None) -> IntensitySet | None:
        if self.mode == "infinite":
            return None
        vals = tuple(free_value if d is None else d for d in self.decoys)
        if any(v is None for v in vals):
            raise UsageError("free decoy intensity not given")
        return IntensitySet(vals, ordered=self.mode != "four")

    def channel(self, loss_db: float) -> ChannelParams:
        return ChannelParams.with_default_misalignment(loss_to_eta(loss_db), self.pd, self.misalignment)

    def evaluate(self, loss_db: float, alpha2: float, free_value: float | None = None) -> SecurityResult:
        params = ProtocolParams(alpha2, self.intensities(free_value), p_x=self.p_x, f_ec=self.f_ec)
        return key_rate(params, self.channel(loss_db), self.mode)

    def evaluate_at(self, loss_db: float, alpha2: float, decoys) -> SecurityResult:
        """Rate with every intensity given explicitly (used for fluctuated settings)."""
        ints = None
        if self.mode != "infinite":
            vals = tuple(decoys)
            if self.mode != "four":
                vals = tuple(sorted(vals, reverse=True))
            ints = IntensitySet(vals, ordered=self.mode != "four")
        params = ProtocolParams(alpha2, ints, p_x=self.p_x, f_ec=self.f_ec)
        return key_rate(params, self.channel(loss_db), self.mode)


# ---------------------------------------------------------------------------
# maximization

def _objective_value(res: SecurityResult, p_x: float) -> float:
    if res.rate > 0:
        return -math.log(res.rate)
    # no key: steer towards the least negative bracket 1 - f h(e) - h(e_ph)
    brackets = [r / (p_x**2 * p) for r, p in ((res.r_10, res.p_click[(1, 0)]), (res.r_01, res.p_click[(0, 1)]))
                if p > 0]
    if not brackets:
        return _NO_KEY + 10.0
    return _NO_KEY - max(brackets)


class _RateObjective:
    def __init__(self, scenario: Scenario, loss_db: float):
        self.scenario = scenario
        self.loss_db = loss_db
        self.cache: dict = {}
        self.lo = [math.log10(scenario.alpha2_range[0])]
        self.hi = [math.log10(scenario.alpha2_range[1])]
        if scenario.dimension == 2:
            self.lo.append(math.log10(scenario.decoy_range[0]))
            self.hi.append(math.log10(scenario.decoy_range[1]))

    def clip(self, x):
        return tuple(float(min(max(v, lo), hi)) for v, lo, hi in zip(x, self.lo, self.hi))

    def result(self, x):
        x = self.clip(x)
        if x not in self.cache:
            a = 10.0 ** x[0]
            mu = 10.0 ** x[1] if len(x) > 1 else None
            try:
                res = self.scenario.evaluate(self.loss_db, a, mu)
            except DomainError:
                res = None
            self.cache[x] = res
        return self.cache[x]

    def __call__(self, x):
        res = self.result(x)
        if res is None:
            return _INFEASIBLE
        return _objective_value(res, self.scenario.p_x)


def _start_grid(obj: _RateObjective):
    axes = [np.linspace(lo, hi, GRID_POINTS) for lo, hi in zip(obj.lo, obj.hi)]
    return [tuple(float(v) for v in p) for p in itertools.product(*axes)]


def _point_from(scenario: Scenario, loss_db: float, x, res, info) -> KeyRatePoint:
    a = 10.0 ** x[0]
    mu = 10.0 ** x[1] if len(x) > 1 else math.nan
    o = (1, 0)
    return KeyRatePoint(
        loss_db=float(loss_db),
        rate=res.rate if res is not None else 0.0,
        alpha2_opt=a,
        mu_opt=mu,
        e_bit=res.e_bit[o] if res is not None else math.nan,
        e_ph=res.e_ph[o] if res is not None else math.nan,
        plob=plob_bound(loss_to_eta(loss_db)),
        info=info,
    )


def maximize_rate(scenario: Scenario, loss_db: float, hint=None) -> KeyRatePoint:
    """Maximize the key rate over alpha2 and the free decoy.

    A log-spaced grid seeds bounded simplex searches (in log10 of every
    variable) from the best few grid points; `hint` is an extra start given
    as (alpha2, free_value).
    """
    if not loss_db >= 0:
        raise DomainError(f"loss must be >= 0 dB, got {loss_db}")
    obj = _RateObjective(scenario, loss_db)
    grid = _start_grid(obj)
    scored = sorted(((obj(x), i, x) for i, x in enumerate(grid)))
    grid_best = scored[0]

    starts = []
    if hint is not None:
        hx = [math.log10(hint[0])]
        if scenario.dimension == 2:
            hx.append(math.log10(hint[1]))
        starts.append(obj.clip(hx))
    for val, _, x in scored:
        if len(starts) >= RESTARTS + (hint is not None):
            break
        if val < _INFEASIBLE and x not in starts:
            starts.append(x)

    best_val, best_x = grid_best[0], grid_best[2]
    nfev = len(grid)
    step = 0.25
    for x0 in starts:
        simplex = [x0] + [tuple(v + (step if j == k else 0.0) * (1 if v + step <= obj.hi[j] else -1)
                                for j, v in enumerate(x0)) for k in range(len(x0))]
        r = minimize(obj, np.array(x0), method="Nelder-Mead", bounds=list(zip(obj.lo, obj.hi)),
                     options={"initial_simplex": np.array(simplex), "xatol": 1e-4, "fatol": 1e-7,
                              "maxfev": 400 * len(x0)})
        nfev += int(r.nfev)
        x = obj.clip(r.x)
        v = obj(x)
        if v < best_val:
            best_val, best_x = v, x
    # the returned optimum can never be worse than the seed grid
    assert best_val <= grid_best[0]

    res = obj.result(best_x)
    status = "ok" if res is not None and res.rate > 0 else "no_positive_rate"
    info = {"status": status, "nfev": nfev, "starts": len(starts),
            "r_10": res.r_10 if res else math.nan, "r_01": res.r_01 if res else math.nan}
    return _point_from(scenario, loss_db, best_x, res, info)


def _sweep_worker(args):
    scenario, loss = args
    return maximize_rate(scenario, loss)


def sweep(scenario: Scenario, loss_grid, threads: int | None = None) -> list[KeyRatePoint]:
    """One maximized point per loss, in grid order; zero-rate points are kept."""
    grid = [float(x) for x in loss_grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise UsageError("loss grid must be non-decreasing")
    n = thread_cap() if threads is None else max(1, min(threads, thread_cap()))
    jobs = [(scenario, loss) for loss in grid]
    if n <= 1 or len(grid) <= 1:
        return [_sweep_worker(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(n, len(grid))) as ex:
        return list(ex.map(_sweep_worker, jobs))


# ---------------------------------------------------------------------------
# intensity fluctuations

def _nominal_settings(scenario: Scenario, point: KeyRatePoint) -> list[float]:
    vals = [point.alpha2_opt]
    if scenario.mode != "infinite":
        vals.extend(point.mu_opt if d is None else d for d in scenario.decoys)
    return vals


def worst_case_rate(scenario: Scenario, loss_db: float, fluct, nominal: KeyRatePoint | None = None) -> KeyRatePoint:
    """Minimum rate when alpha2 and every decoy move within +-magnitude of the nominal optimum.

    Corners of the box and a 3-per-axis interior grid are scanned, then a
    bounded simplex search refines from the worst of them.
    """
    if not isinstance(fluct, FluctuationSpec):
        fluct = FluctuationSpec(float(fluct))
    if nominal is None:
        nominal = maximize_rate(scenario, loss_db)
    base = _nominal_settings(scenario, nominal)
    m = fluct.magnitude
    if m == 0.0 or nominal.rate <= 0:
        return replace(nominal, info={**nominal.info, "nominal_rate": nominal.rate, "magnitude": m})

    def rate_at(factors):
        vals = [b * f for b, f in zip(base, factors)]
        try:
            return scenario.evaluate_at(loss_db, vals[0], vals[1:]).rate
        except DomainError:
            # coinciding intensities give no usable estimate
            return 0.0

    d = len(base)
    cands = list(itertools.product((1 - m, 1 + m), repeat=d))
    cands += list(itertools.product((1 - m / 2, 1.0, 1 + m / 2), repeat=d))
    scored = sorted((rate_at(f), i, f) for i, f in enumerate(cands))
    worst_rate, _, worst_f = scored[0]
    nfev = len(cands)

    if worst_rate > 0:
        def obj(f):
            r = rate_at(f)
            return math.log(r) if r > 0 else -1e3

        step = m / 4
        x0 = np.array(worst_f)
        simplex = [x0] + [x0 + step * (1 if x0[k] < 1 else -1) * np.eye(d)[k] for k in range(d)]
        r = minimize(obj, x0, method="Nelder-Mead", bounds=[(1 - m, 1 + m)] * d,
                     options={"initial_simplex": np.array(simplex), "xatol": 1e-4, "fatol": 1e-7,
                              "maxfev": 200 * d})
        nfev += int(r.nfev)
        f = tuple(float(min(max(v, 1 - m), 1 + m)) for v in r.x)
        rr = rate_at(f)
        if rr < worst_rate:
            worst_rate, worst_f = rr, f

    vals = [b * f for b, f in zip(base, worst_f)]
    info = {**nominal.info, "nominal_rate": nominal.rate, "magnitude": m, "nfev_worst": nfev,
            "worst_settings": tuple(vals)}
    return replace(nominal, rate=min(worst_rate, nominal.rate), info=info)


def _fluctuation_worker(args):
    scenario, loss, fluct = args
    nominal = maximize_rate(scenario, loss)
    return nominal, worst_case_rate(scenario, loss, fluct, nominal=nominal)


def fluctuation_sweep(scenario: Scenario, loss_grid, fluct, threads: int | None = None) -> list[tuple]:
    """(nominal, worst-case) point pairs per loss, in grid order."""
    if not isinstance(fluct, FluctuationSpec):
        fluct = FluctuationSpec(float(fluct))
    grid = [float(x) for x in loss_grid]
    n = thread_cap() if threads is None else max(1, min(threads, thread_cap()))
    jobs = [(scenario, loss, fluct) for loss in grid]
    if n <= 1 or len(grid) <= 1:
        return [_fluctuation_worker(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(n, len(grid))) as ex:
        return list(ex.map(_fluctuation_worker, jobs))


# ---------------------------------------------------------------------------
# loss threshold

@dataclass(frozen=True)
class Threshold:
    loss_db: float
    found: bool
    evaluations: int = 0
    points: tuple = field(default=(), compare=False)


def max_tolerated_loss(scenario: Scenario, fluct=None, scan=(10.0, 120.0, 10.0),
                       resolution: float = LOSS_RESOLUTION_DB) -> Threshold:
    """Loss above which the rate stays below RATE_FLOOR, to `resolution` dB.

    The whole scan grid is evaluated so that a dip to zero at low loss is not
    mistaken for the threshold; bisection then runs between the last grid
    point with key and the next one.  With `fluct` the worst-case rate under
    that fluctuation is used.
    """
    if fluct is not None and not isinstance(fluct, FluctuationSpec):
        fluct = FluctuationSpec(float(fluct))
    start, stop, step = scan
    if not (0 <= start < stop and step > 0):
        raise UsageError("scan must be (start, stop, step) with 0 <= start < stop and step > 0")
    points = []

    def rate(loss, hint):
        p = maximize_rate(scenario, loss, hint=hint)
        if fluct is not None:
            p = worst_case_rate(scenario, loss, fluct, nominal=p)
        points.append(p)
        return p

    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    grid = [start + i * step for i in range(n)]
    scanned = []
    prev = None
    for loss in grid:
        hint = None if prev is None or prev.rate <= RATE_FLOOR else (prev.alpha2_opt, prev.mu_opt)
        prev = rate(loss, hint)
        scanned.append(prev)
    positive = [i for i, p in enumerate(scanned) if p.rate > RATE_FLOOR]
    if not positive:
        return Threshold(0.0, False, len(points), tuple(points))
    last = positive[-1]
    if last == len(grid) - 1:
        return Threshold(grid[-1], False, len(points), tuple(points))
    lo_pt, lo, hi = scanned[last], grid[last], grid[last + 1]
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        p = rate(mid, (lo_pt.alpha2_opt, lo_pt.mu_opt))
        if p.rate > RATE_FLOOR:
            lo, lo_pt = mid, p
        else:
            hi = mid
    return Threshold(lo, True, len(points), tuple(points))
