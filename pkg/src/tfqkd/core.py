"""Shared numerical primitives and immutable domain records."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

SEP_TOL = 1e-9
TAIL_TERM_TOL = 1e-16
MIN_SERIES_TERMS = 40

OUTCOMES = ((1, 0), (0, 1))

INDEX_SET_TWO = ((0, 0), (1, 1), (0, 2), (2, 0))
INDEX_SET_THREE = ((0, 0), (1, 1), (0, 2), (2, 0), (2, 2), (1, 3), (3, 1), (0, 4), (4, 0))
INDEX_SET_FOUR = INDEX_SET_THREE


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class UsageError(ValueError):
    """The caller passed something structurally invalid (wrong label, shape...)."""


class DegenerateIntensities(DomainError):
    """Two decoy intensities are closer than SEP_TOL."""


class NonpositiveIntensity(DomainError):
    """A bound path that divides by intensities received a zero intensity."""


class DegenerateClicks(DomainError):
    """A click probability is zero so an error rate is undefined."""


def check_outcome(outcome) -> tuple[int, int]:
    o = tuple(int(v) for v in outcome)
    if o not in OUTCOMES:
        raise UsageError(f"outcome must be one of {OUTCOMES}, got {outcome!r}")
    return o


# ---------------------------------------------------------------------------
# scalar primitives

def poisson_weight(mu: float, n: int) -> float:
    """P_mu(n) = e^-mu mu^n / n!, evaluated in log space once n! gets large."""
    if not mu >= 0 or not math.isfinite(mu):
        raise DomainError(f"mean photon number must be finite and >= 0, got {mu}")
    if n < 0 or int(n) != n:
        raise DomainError(f"photon count must be a non-negative integer, got {n}")
    n = int(n)
    if mu == 0.0:
        return 1.0 if n == 0 else 0.0
    if n <= 20:
        return math.exp(-mu) * mu**n / math.factorial(n)
    return math.exp(-mu + n * math.log(mu) - math.lgamma(n + 1))


def poisson_weights(mu: float, n_max: int) -> list[float]:
    """P_mu(0..n_max) by the stable forward recurrence."""
    if n_max < 0:
        raise UsageError("n_max must be >= 0")
    w = [poisson_weight(mu, 0)]
    for n in range(1, n_max + 1):
        w.append(w[-1] * mu / n)
    return w


def poisson_cutoff(mu: float) -> int:
    """Smallest N with P_mu(N) < 1e-16 past the mode, never below MIN_SERIES_TERMS."""
    n = max(MIN_SERIES_TERMS, int(math.ceil(mu)) + 1)
    while poisson_weight(mu, n) >= TAIL_TERM_TOL:
        n += 1
    return n


def coherent_coefficient(alpha2: float, n: int) -> float:
    """c_n = e^{-alpha^2/2} alpha^n / sqrt(n!) with alpha = +sqrt(alpha2)."""
    if not alpha2 >= 0:
        raise DomainError(f"alpha2 must be >= 0, got {alpha2}")
    return math.sqrt(poisson_weight(alpha2, n))


def coherent_coefficients(alpha2: float, n_max: int) -> list[float]:
    return [math.sqrt(p) for p in poisson_weights(alpha2, n_max)]


def coefficient_cutoff(alpha2: float, floor: int = 25) -> int:
    """Smallest n past which c_n < 1e-16 (decreasing tail), at least `floor`."""
    if not alpha2 >= 0:
        raise DomainError(f"alpha2 must be >= 0, got {alpha2}")
    n = max(floor, int(math.ceil(alpha2)) + 1)
    while coherent_coefficient(alpha2, n) >= TAIL_TERM_TOL:
        n += 1
    return n


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy needs x in [0,1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def plob_bound(eta: float) -> float:
    """Repeaterless capacity -log2(1-eta); eta = 1 gives +inf."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"transmittance must be in [0,1], got {eta}")
    if eta == 1.0:
        return math.inf
    return -math.log1p(-eta) / math.log(2.0)


def loss_to_eta(loss_db: float) -> float:
    if not loss_db >= 0 or not math.isfinite(loss_db):
        raise DomainError(f"loss must be finite and >= 0 dB, got {loss_db}")
    return 10.0 ** (-loss_db / 10.0)


def eta_to_loss(eta: float) -> float:
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"transmittance must be in (0,1], got {eta}")
    return -10.0 * math.log10(eta)


@lru_cache(maxsize=4096)
def exp_tail(x: float, k: int) -> float:
    """sum_{j>=k} x^j / j!, i.e. e^x minus its Taylor prefix of degree k-1.

    Summed as a positive series for moderate x, which keeps full relative
    precision when x is tiny and the subtraction would cancel to nothing.
    """
    if k <= 0:
        return math.exp(x)
    if x == 0.0:
        return 0.0
    if 0.0 < x <= 20.0:
        term = x**k / math.factorial(k)
        total = term
        j = k
        while True:
            j += 1
            term *= x / j
            total += term
            if term <= total * 1e-17:
                return total
    prefix = 0.0
    term = 1.0
    for j in range(k):
        if j:
            term *= x / j
        prefix += term
    return math.exp(x) - prefix


def complete_homogeneous(values: Sequence[float], degree: int) -> float:
    """h_d(values): sum over all multisets of size d of the product."""
    if degree < 0:
        return 0.0
    h = [1] + [0] * degree
    for v in values:
        for d in range(1, degree + 1):
            h[d] += v * h[d - 1]
    return h[degree]


def complete_homogeneous_all(values: Sequence[float], degree: int) -> list[float]:
    h = [1] + [0] * degree
    for v in values:
        for d in range(1, degree + 1):
            h[d] += v * h[d - 1]
    return h


def elementary_symmetric(values: Sequence[float], degree: int) -> float:
    e = [1] + [0] * degree
    for v in values:
        for d in range(degree, 0, -1):
            e[d] += v * e[d - 1]
    return e[degree]


def clamp01(x: float) -> tuple[float, bool]:
    """Clamp into [0,1]; second value says whether clamping happened."""
    if x < 0.0:
        return 0.0, True
    if x > 1.0:
        return 1.0, True
    if x != x:
        return 1.0, True
    return x, False


# ---------------------------------------------------------------------------
# records

@dataclass(frozen=True)
class IntensitySet:
    values: tuple[float, ...]
    ordered: bool = True

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) not in (2, 3, 4):
            raise UsageError(f"need 2, 3 or 4 intensities, got {len(vals)}")
        for v in vals:
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"intensities must be finite and >= 0, got {v}")
        if self.ordered:
            for a, b in zip(vals, vals[1:]):
                if not a > b:
                    raise DomainError(f"intensities must be strictly descending, got {vals}")
        for i in range(len(vals)):
            for j in range(i + 1, len(vals)):
                if abs(vals[i] - vals[j]) < SEP_TOL:
                    raise DegenerateIntensities(
                        f"intensities {vals[i]} and {vals[j]} violate the minimum separation {SEP_TOL}")

    @property
    def count(self) -> int:
        return len(self.values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def require_positive(self):
        if any(v <= 0 for v in self.values):
            raise NonpositiveIntensity(f"all intensities must be > 0, got {self.values}")

    def subset(self, idx: Iterable[int], ordered: bool = True) -> "IntensitySet":
        return IntensitySet(tuple(self.values[i] for i in idx), ordered=ordered)


@dataclass(frozen=True)
class ChannelParams:
    eta: float
    pd: float
    theta_a: float = 0.0
    theta_b: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise DomainError(f"eta must be in (0,1], got {self.eta}")
        if not 0.0 <= self.pd < 1.0:
            raise DomainError(f"pd must be in [0,1), got {self.pd}")
        for name in ("theta_a", "theta_b", "delta"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")

    @property
    def theta(self) -> float:
        return self.theta_a - self.theta_b

    @property
    def phi(self) -> float:
        return self.delta * math.pi

    @property
    def arm_transmittance(self) -> float:
        return math.sqrt(self.eta)

    @property
    def loss_db(self) -> float:
        return eta_to_loss(self.eta)

    @classmethod
    def with_default_misalignment(cls, eta: float, pd: float, fraction: float = 0.02):
        """Polarization angles +-arcsin(sqrt(f)) and phase mismatch f*pi."""
        t = math.asin(math.sqrt(fraction))
        return cls(eta=eta, pd=pd, theta_a=t, theta_b=-t, delta=fraction)

    @classmethod
    def from_loss(cls, loss_db: float, pd: float, **kw):
        return cls(eta=loss_to_eta(loss_db), pd=pd, **kw)


@dataclass(frozen=True)
class ProtocolParams:
    alpha2: float
    intensities: IntensitySet | None = None
    p_x: float = 1.0
    f_ec: float = 1.16

    def __post_init__(self):
        if not self.alpha2 > 0 or not math.isfinite(self.alpha2):
            raise DomainError(f"alpha2 must be > 0, got {self.alpha2}")
        if not 0.0 < self.p_x <= 1.0:
            raise DomainError(f"p_x must be in (0,1], got {self.p_x}")
        if not self.f_ec >= 1.0:
            raise DomainError(f"f_ec must be >= 1, got {self.f_ec}")


@dataclass(frozen=True)
class GainTable:
    """Z-basis gains Q^{k,l} for one detector outcome; q[k][l]."""

    outcome: tuple[int, int]
    q: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "outcome", check_outcome(self.outcome))
        rows = tuple(tuple(float(v) for v in row) for row in self.q)
        object.__setattr__(self, "q", rows)
        k = len(rows)
        if k == 0 or any(len(r) != k for r in rows):
            raise UsageError("gain table must be square and non-empty")
        for r in rows:
            for v in r:
                if not 0.0 <= v <= 1.0:
                    raise DomainError(f"gains must lie in [0,1], got {v}")

    @property
    def size(self) -> int:
        return len(self.q)

    def __getitem__(self, kl):
        k, l = kl
        return self.q[k][l]

    def transposed(self) -> "GainTable":
        k = self.size
        return GainTable(self.outcome, tuple(tuple(self.q[j][i] for j in range(k)) for i in range(k)))

    def rescaled(self, intensities: IntensitySet) -> list[list[float]]:
        """Q~^{k,l} = e^{mu_k + mu_l} Q^{k,l}."""
        if intensities.count != self.size:
            raise UsageError(
                f"gain table is {self.size}x{self.size} but {intensities.count} intensities given")
        mu = intensities.values
        return [[math.exp(mu[k] + mu[l]) * self.q[k][l] for l in range(self.size)]
                for k in range(self.size)]

    def sub_table(self, idx: Sequence[int]) -> "GainTable":
        return GainTable(self.outcome, tuple(tuple(self.q[i][j] for j in idx) for i in idx))


@dataclass(frozen=True)
class YieldBoundSet:
    outcome: tuple[int, int]
    upper: dict
    index_set: tuple[tuple[int, int], ...]
    lower_y22: float | None = None
    flags: dict = field(default_factory=dict)
    # unclamped values, keyed like `upper` plus "lower_y22"
    raw: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "outcome", check_outcome(self.outcome))
        for nm in self.index_set:
            if nm not in self.upper:
                raise UsageError(f"missing bound for {nm}")
            v = self.upper[nm]
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"stored bound {nm}={v} outside [0,1]")
        if self.lower_y22 is not None:
            if not 0.0 <= self.lower_y22 <= 1.0:
                raise DomainError("lower Y22 bound outside [0,1]")
            if (2, 2) in self.upper and self.lower_y22 > self.upper[(2, 2)]:
                raise DomainError("lower Y22 bound exceeds the upper one")

    def get(self, n: int, m: int) -> float:
        """Upper bound for (n,m); 1 outside the index set."""
        return self.upper.get((n, m), 1.0) if (n, m) in self.index_set else 1.0


@dataclass(frozen=True)
class KeyRatePoint:
    loss_db: float
    rate: float
    alpha2_opt: float
    mu_opt: float
    e_bit: float
    e_ph: float
    plob: float
    info: dict = field(default_factory=dict, compare=False)

    @property
    def eta(self) -> float:
        return loss_to_eta(self.loss_db)
