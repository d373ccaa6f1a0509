"""Connection profiles p(r), the sparsity schedule s(n) = c n^-beta, and the
integrability checks that the entropy limit and AEP rely on."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import AssumptionError, ConfigError, DomainError
from .geometry import small_r_sphere_area
from .quadrature import integrate_half_line

LOG2E = 1.0 / math.log(2.0)
FAMILIES = ("rayleigh", "exponential", "scaled-rayleigh", "constant")


def _log1mexp(a):
    """log(1 - exp(a)) for a <= 0 without cancellation."""
    a = np.asarray(a, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(a > -math.log(2), np.log(-np.expm1(a)), np.log1p(-np.exp(a)))


@dataclass(frozen=True)
class ConnectionProfile:
    """A closed-form connection function.

    ``rayleigh``        p(x) = exp(-x^2)
    ``exponential``     p(x) = exp(-x)
    ``scaled-rayleigh`` p(x) = q exp(-x^2), 0 < q <= 1
    ``constant``        p(x) = q, 0 <= q <= 1 (distance-blind test fixture; it
                        violates the integrability conditions unless q is 0 or 1)
    """

    family: str = "rayleigh"
    q: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown connection family {self.family!r}")
        if self.family == "scaled-rayleigh" and not 0.0 < self.q <= 1.0:
            raise ConfigError("scaled-rayleigh needs 0 < q <= 1")
        if self.family == "constant" and not 0.0 <= self.q <= 1.0:
            raise ConfigError("constant needs 0 <= q <= 1")

    @property
    def name(self) -> str:
        if self.family in ("rayleigh", "exponential"):
            return self.family
        return f"{self.family}:q={self.q!r}"

    @classmethod
    def from_name(cls, name: str) -> "ConnectionProfile":
        family, _, rest = name.partition(":")
        if not rest:
            return cls(family)
        key, _, val = rest.partition("=")
        if key != "q":
            raise ConfigError(f"bad profile parameter in {name!r}")
        return cls(family, float(val))

    @property
    def holder(self) -> tuple[float, float]:
        """(L, alpha) Hoelder metadata for p; stored, never used numerically."""
        lip = math.sqrt(2.0 / math.e)
        return {
            "rayleigh": (lip, 1.0),
            "exponential": (1.0, 1.0),
            "scaled-rayleigh": (self.q * lip, 1.0),
            "constant": (0.0, 1.0),
        }[self.family]

    def log_p(self, x):
        """Natural logs (log p(x), log(1 - p(x))), accurate at both ends."""
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            if self.family == "rayleigh":
                return -x * x, _log1mexp(-x * x)
            if self.family == "exponential":
                return -x, _log1mexp(-x)
            if self.family == "scaled-rayleigh":
                lp = math.log(self.q) - x * x
                return lp, _log1mexp(lp)
            lp = np.full_like(x, math.log(self.q) if self.q > 0 else -np.inf)
            lq = np.full_like(x, math.log1p(-self.q) if self.q < 1 else -np.inf)
            return lp, lq

    def __call__(self, x):
        lp, _ = self.log_p(x)
        return np.exp(lp)

    def entropy_bits(self, x):
        """h2(p(x)) in bits, with 0 log 0 = 0."""
        lp, lq = self.log_p(x)
        p, q = np.exp(lp), np.exp(lq)
        with np.errstate(invalid="ignore"):
            out = np.where(p > 0, -p * lp, 0.0) + np.where(q > 0, -q * lq, 0.0)
        return out * LOG2E

    def log_odds_variance(self, x):
        """p(1-p) log2^2(p/(1-p)): the conditional variance of one edge's
        information given its length."""
        lp, lq = self.log_p(x)
        p, q = np.exp(lp), np.exp(lq)
        with np.errstate(invalid="ignore"):
            out = p * q * ((lp - lq) * LOG2E) ** 2
        return np.where((p > 0) & (q > 0), out, 0.0)

    def tail_envelope(self, x):
        """Upper bounds (h2, log-odds variance) valid wherever p(x) <= 1/2.

        Uses -(1-p) ln(1-p) <= p and |log2(p/(1-p))| <= -log2 p for p <= 1/2.
        """
        lp, _ = self.log_p(x)
        p = float(np.exp(lp))
        ell = -float(lp)
        if p == 0.0:
            return 0.0, 0.0
        return p * (ell + 1.0) * LOG2E, p * (ell * LOG2E) ** 2


def eval_p(profile: ConnectionProfile, r, s: float = 1.0):
    """p(r / s): the connection probability at distance ``r`` and sparsity ``s``."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise DomainError("negative distance")
    if s <= 0:
        raise DomainError("sparsity must be positive")
    out = profile(r_arr / s)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SparsitySchedule:
    """s(n) = c n^-beta with 0 < beta d < 1 (connected, sparse regime)."""

    c: float
    beta: float
    d: int

    def __post_init__(self):
        if self.c <= 0:
            raise ConfigError("schedule prefactor c must be positive")
        if not 0.0 < self.beta * self.d < 1.0:
            raise ConfigError(f"need 0 < beta*d < 1, got beta*d = {self.beta * self.d}")

    def __call__(self, n) -> float:
        return sparsity(self, n)


def sparsity(schedule: SparsitySchedule, n) -> float:
    if n < 2:
        raise DomainError("sparsity is defined for n >= 2")
    return schedule.c * float(n) ** (-schedule.beta)


@dataclass
class AssumptionReport:
    profile: str
    d: int
    moment: float          # int r^{2d} h2(p(r)) dr
    log_odds: float        # int r^{d-1} p(1-p) log2^2(p/(1-p)) dr
    hstar: float           # omega_d int r^{d-1} h2(p(r)) dr
    errors: dict = field(default_factory=dict)
    tail_bounds: dict = field(default_factory=dict)
    cutoff: float | None = None

    @property
    def finite(self) -> dict:
        return {
            "moment": math.isfinite(self.moment),
            "log_odds": math.isfinite(self.log_odds),
            "hstar": math.isfinite(self.hstar),
        }

    @property
    def all_finite(self) -> bool:
        return all(self.finite.values())


def _tail_bound(profile, power, which, cutoff):
    if cutoff is None:
        return math.inf

    def env(x):
        return x**power * profile.tail_envelope(x)[which]

    if float(profile(cutoff)) > 0.5:
        return math.inf
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            val, _ = quad(env, cutoff, np.inf, limit=200)
        except IntegrationWarning:
            return math.inf  # envelope does not decay: no usable bound
    return val


def _half_line(profile, integrand, power, which, scale=1.0):
    value, err, cutoff = integrate_half_line(lambda x: x**power * float(integrand(x)), scale=scale)
    return value, err + _tail_bound(profile, power, which, cutoff), cutoff


def hstar_integral(profile: ConnectionProfile, d: int, scale: float = 1.0):
    """(h*, error bound) with h* = omega_d int r^{d-1} h2(p(r)) dr in bits.

    Raises :class:`AssumptionError` if the integrand does not decay.
    """
    omega = small_r_sphere_area(d)
    value, err, cutoff = _half_line(profile, profile.entropy_bits, d - 1, 0, scale)
    if cutoff is None:
        raise AssumptionError(
            f"h* diverges for profile {profile.name} in d={d}; see check_assumptions"
        )
    return omega * value, omega * err


def check_assumptions(profile: ConnectionProfile, d: int) -> AssumptionReport:
    """Evaluate the three integrability quantities with finiteness verdicts."""
    omega = small_r_sphere_area(d)
    moment, e1, c1 = _half_line(profile, profile.entropy_bits, 2 * d, 0)
    log_odds, e2, c2 = _half_line(profile, profile.log_odds_variance, d - 1, 1)
    h, e3, c3 = _half_line(profile, profile.entropy_bits, d - 1, 0)
    cutoffs = [c for c in (c1, c2, c3) if c is not None]
    return AssumptionReport(
        profile=profile.name,
        d=d,
        moment=moment,
        log_odds=log_odds,
        hstar=omega * h,
        errors={"moment": e1, "log_odds": e2, "hstar": omega * e3},
        tail_bounds={
            "moment": _tail_bound(profile, 2 * d, 0, c1),
            "log_odds": _tail_bound(profile, d - 1, 1, c2),
            "hstar": omega * _tail_bound(profile, d - 1, 0, c3),
        },
        cutoff=max(cutoffs) if cutoffs else None,
    )
