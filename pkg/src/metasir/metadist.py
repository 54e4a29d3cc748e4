"""Distribution of the conditional success probability from its moments.

Three routes from a moment oracle to curves of F(x) = P(Ps > x): exact
Gil-Pelaez inversion of the characteristic function of log Ps, a two-moment
beta approximation, and closed-form bounds (Markov, one-sided Chebyshev,
Paley-Zygmund).  All probabilities refer to the success probability of the
typical link conditioned on the network geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import special as sp

from .quadrature import SlowDecay, Tol, integrate_oscillatory

__all__ = [
    "Provenance",
    "MetaCurve",
    "BetaParams",
    "DegenerateVariance",
    "InvalidMoments",
    "InsufficientMoments",
    "gil_pelaez",
    "gil_pelaez_curve",
    "beta_fit",
    "beta_ccdf",
    "markov_bounds",
    "chebyshev_bounds",
    "paley_zygmund",
]

# t below which the Gil-Pelaez integrand is replaced by its finite-difference
# limit; the integrand is smooth there but the 1/t form loses digits
_T_FLOOR = 1e-4
# a flagged slow-decay result is still returned when its error bound stays
# below this; curves are read at the 1e-2 level at best
_USABLE_ERR = 1e-2


class Provenance(str, Enum):
    GIL_PELAEZ = "gil_pelaez"
    BETA = "beta"
    EMPIRICAL = "empirical"
    BOUND = "bound"


class DegenerateVariance(ValueError):
    """Second moment equals the squared mean: no spread to fit."""


class InvalidMoments(ValueError):
    """Moments outside the feasible region of a [0,1]-valued variable."""


class InsufficientMoments(ValueError):
    """The requested bound order exceeds the moments supplied."""


_MONO_SLACK = 1e-4


@dataclass(frozen=True)
class MetaCurve:
    """F(x) sampled on a reliability grid, tagged with how it was obtained."""

    x_grid: np.ndarray
    values: np.ndarray
    provenance: Provenance
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.x_grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "x_grid", x)
        object.__setattr__(self, "values", v)
        if x.ndim != 1 or v.shape != x.shape:
            raise ValueError("x_grid and values must be matching 1-D arrays")
        if x.size and not (x[0] > 0.0 and x[-1] < 1.0 and np.all(np.diff(x) > 0)):
            raise ValueError("x_grid must be strictly increasing inside (0,1)")
        if np.any(v < -1e-12) or np.any(v > 1.0 + 1e-12):
            raise ValueError("curve values must lie in [0,1]")
        if v.size > 1 and np.any(np.diff(v) > _MONO_SLACK):
            raise ValueError("a ccdf must be nonincreasing in x")

    def __call__(self, x):
        return np.interp(x, self.x_grid, self.values)


@dataclass(frozen=True)
class BetaParams:
    """Beta(mu*beta_shape/(1-mu), beta_shape) in mean/shape parametrization."""

    mu: float
    beta_shape: float

    def __post_init__(self):
        if not 0.0 < self.mu < 1.0:
            raise InvalidMoments(f"mean must be in (0,1), got {self.mu}")
        if not self.beta_shape > 0.0:
            raise InvalidMoments(f"second shape must be positive, got {self.beta_shape}")

    @property
    def first_shape(self) -> float:
        return self.mu * self.beta_shape / (1.0 - self.mu)

    @property
    def variance(self) -> float:
        return self.mu * (1.0 - self.mu) ** 2 / (self.beta_shape + 1.0 - self.mu)


# ---- exact inversion ---------------------------------------------------------

def _invert_at(moment_oracle, x: float, tol: Tol):
    """One Gil-Pelaez point: (clamped F(x), error of the t-integral)."""
    if not 0.0 < x < 1.0:
        raise ValueError(f"reliability x must be in (0,1), got {x}")
    m0 = complex(np.asarray(moment_oracle(_T_FLOOR)).reshape(()))
    if abs(m0) > 1.0 + 1e-6:
        raise InvalidMoments(f"|M_jt| must not exceed 1, got {abs(m0):.6f} near t=0")
    log_x = math.log(x)
    limit = np.imag(np.exp(-1j * _T_FLOOR * log_x) * m0) / _T_FLOOR

    def integrand(t):
        t = np.asarray(t, dtype=float)
        ts = np.where(t > _T_FLOOR, t, _T_FLOOR)
        vals = np.imag(np.exp(-1j * ts * log_x) * np.asarray(moment_oracle(ts))) / ts
        return np.where(t > _T_FLOOR, vals, limit)

    res = integrate_oscillatory(integrand, abs(log_x), tol=tol)
    err = float(np.max(res.abs_error))
    if "slow_decay" in res.flags and err > _USABLE_ERR:
        raise SlowDecay(
            f"characteristic function decays too slowly at x={x:.3f}: error {err:.2e}")
    return min(1.0, max(0.0, 0.5 + float(np.real(res.value)) / math.pi)), err


def gil_pelaez(moment_oracle, x: float, tol: Tol = Tol(abs=1e-6, rel=1e-10)) -> float:
    """F(x) = 1/2 + (1/pi) int_0^inf Im(e^{-jt log x} M_{jt}) / t dt.

    moment_oracle maps t >= 0 to the imaginary moment M_{jt}.  The integrand
    oscillates at rate |log x|; its removable t -> 0 singularity is handled
    by freezing the difference quotient below t = 1e-4.  A slow-decay flag
    from the quadrature is tolerated as long as the reported error stays
    usable, and raised as SlowDecay otherwise.
    """
    return _invert_at(moment_oracle, x, tol)[0]


def gil_pelaez_curve(moment_oracle, x_grid, tol: Tol = Tol(abs=1e-6, rel=1e-10),
                     extra_error: float = 0.0) -> MetaCurve:
    """Invert the oracle on a whole grid; the worst point error is recorded.

    extra_error lets callers account for oracle truncation (tables that
    return 0 beyond their last knot).
    """
    xs = np.asarray(x_grid, dtype=float)
    values = np.empty(xs.shape)
    worst = 0.0
    for i, x in enumerate(xs):
        values[i], err = _invert_at(moment_oracle, float(x), tol)
        worst = max(worst, err)
    # the inversion error can break monotonicity at the slack level; tidy the
    # violations it is responsible for, never more
    for i in range(1, len(values)):
        if 0.0 < values[i] - values[i - 1] <= _MONO_SLACK:
            values[i] = values[i - 1]
    return MetaCurve(
        xs, values, Provenance.GIL_PELAEZ,
        metadata={
            "t_floor": _T_FLOOR,
            "t0_rule": "one-sided difference quotient frozen below t_floor",
            "max_abs_error": worst / math.pi + extra_error,
        },
    )


# ---- beta approximation --------------------------------------------------------

def beta_fit(m1: float, m2: float) -> BetaParams:
    """Match a beta distribution to the first two moments of Ps."""
    if not 0.0 < m1 < 1.0:
        raise InvalidMoments(f"M1 must be in (0,1), got {m1}")
    if m2 >= m1 or m2 <= 0.0:
        raise InvalidMoments(f"M2 must be in (0, M1) for a [0,1] variable, got {m2}")
    if m2 <= m1 * m1 + 1e-12:
        raise DegenerateVariance(f"M2 - M1^2 = {m2 - m1 * m1:.3e} leaves nothing to fit")
    beta_shape = (m1 - m2) * (1.0 - m1) / (m2 - m1 * m1)
    return BetaParams(mu=m1, beta_shape=beta_shape)


def beta_ccdf(params: BetaParams, x_grid) -> MetaCurve:
    """Complementary cdf of the fitted beta on the grid."""
    xs = np.asarray(x_grid, dtype=float)
    vals = 1.0 - sp.betainc(params.first_shape, params.beta_shape, xs)
    return MetaCurve(xs, vals, Provenance.BETA,
                     metadata={"mu": params.mu, "beta_shape": params.beta_shape})


# ---- closed-form bounds ---------------------------------------------------------

def _clamp01(v: float) -> float:
    return min(1.0, max(0.0, v))


def markov_bounds(moments, b: int, x: float):
    """(lower, upper) Markov-type bounds on F(x) from integer moments.

    Upper: M_b / x^b.  Lower: 1 - E((1-Ps)^b) / (1-x)^b, with the central
    quantity expanded binomially in the supplied moments M_1..M_b.
    """
    if not isinstance(b, (int, np.integer)) or isinstance(b, bool):
        raise ValueError("bound order b must be a plain integer")
    if not 1 <= b <= 4:
        raise ValueError(f"bound order limited to 1..4, got {b}")
    if not 0.0 < x < 1.0:
        raise ValueError(f"x must be in (0,1), got {x}")
    ms = [float(np.real(m)) for m in moments]
    if len(ms) < b:
        raise InsufficientMoments(f"order-{b} bounds need M_1..M_{b}, got {len(ms)}")
    upper = _clamp01(ms[b - 1] / x**b)
    one_minus = sum((-1.0) ** i * math.comb(b, i) * (ms[i - 1] if i else 1.0)
                    for i in range(b + 1))
    lower = _clamp01(1.0 - one_minus / (1.0 - x) ** b)
    return lower, upper


def chebyshev_bounds(m1: float, m2: float, x: float):
    """One-sided Chebyshev bounds on F(x); the inactive side is vacuous."""
    var = m2 - m1 * m1
    if var < -1e-9:
        raise InvalidMoments(f"negative variance {var:.3e}")
    var = max(var, 0.0)
    if x == m1:
        return 0.0, 1.0
    gap2 = (x - m1) ** 2
    if x < m1:
        return _clamp01(1.0 - var / gap2), 1.0
    return 0.0, _clamp01(var / gap2)


def paley_zygmund(m1: float, m2: float, x: float) -> float:
    """Lower bound on F(x * M1) for a fraction x of the mean."""
    if not 0.0 <= x < 1.0:
        raise ValueError(f"mean fraction x must be in [0,1), got {x}")
    if m2 < m1 * m1 - 1e-12 or m1 <= 0.0:
        raise InvalidMoments("paley_zygmund needs a valid mean and second moment")
    denom = m2 + x * (x - 2.0) * m1 * m1
    if denom <= 0.0:
        return 1.0
    return _clamp01((1.0 - x) ** 2 * m1 * m1 / denom)
