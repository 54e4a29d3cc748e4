"""Adaptive quadrature engine for the analytic moment expressions.

All integrators share one vectorized Gauss-Kronrod 15(7) core. Integrands
receive an array of abscissae with shape (n,) and return either (n,) or
(stack..., n); stacked integrands are integrated jointly, with panel
subdivision driven by the worst error across the stack. This is what makes
the nested moment integrals affordable: one adaptive pass evaluates a whole
family of integrals that differ only in a parameter.

Error handling follows the flagged-result convention: exhausting the
evaluation budget or failing the oscillatory tail bound never raises inside
a sweep; the condition is recorded in QuadResult.flags and the best estimate
is returned.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Tol",
    "QuadResult",
    "BudgetExceeded",
    "SlowDecay",
    "INNER_TOL",
    "OUTER_TOL",
    "integrate",
    "integrate_semi_infinite",
    "integrate_oscillatory",
    "one_minus_pow_ratio",
    "exp_decay_ratio",
]


class BudgetExceeded(Exception):
    """Evaluation budget exhausted (also available as a result flag)."""


class SlowDecay(Exception):
    """Oscillatory tail failed to meet its bound (also a result flag)."""


@dataclass(frozen=True)
class Tol:
    abs: float = 1e-9
    rel: float = 1e-7


# Defaults: inner integrals of a nesting run tighter than the outermost one
# because errors compound outward.
INNER_TOL = Tol(abs=1e-9, rel=1e-7)
OUTER_TOL = Tol(abs=1e-7, rel=1e-6)


@dataclass
class QuadResult:
    value: complex | float | np.ndarray
    abs_error: float | np.ndarray
    evaluations: int
    flags: frozenset[str] = field(default_factory=frozenset)

    @property
    def ok(self) -> bool:
        return not self.flags


# ---- Gauss-Kronrod 15(7) rule ----------------------------------------------
# Abscissae/weights of the 15-point Kronrod extension of the 7-point Gauss
# rule on [-1, 1] (QUADPACK dqk15 constants). Nodes sorted ascending; the
# embedded Gauss nodes sit at the odd indices.

_XK_HALF = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WK_HALF = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG_HALF = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XK_HALF[:-1], _XK_HALF[::-1]])          # 15 ascending
_WK = np.concatenate([_WK_HALF[:-1], _WK_HALF[::-1]])              # Kronrod weights
_WG = np.zeros(15)
_WG[1:14:2] = np.concatenate([_WG_HALF[:-1], _WG_HALF[::-1]])      # Gauss weights
_EPS = np.finfo(float).eps


def _eval_panel(f, a: float, b: float):
    """Evaluate one GK15 panel. Returns (value, error, resabs) per stack element."""
    h = 0.5 * (b - a)
    xs = 0.5 * (a + b) + h * _NODES
    fx = np.asarray(f(xs))
    if fx.shape[-1] != 15:
        raise ValueError("integrand must return shape (..., n) for n abscissae")
    k15 = h * (fx @ _WK)
    g7 = h * (fx @ _WG)
    resabs = h * (np.abs(fx) @ _WK)
    # QUADPACK-style rescaled error: conservative for non-smooth panels.
    mean = np.expand_dims(k15 / (b - a), -1)
    resasc = h * (np.abs(fx - mean) @ _WK)
    raw = np.abs(k15 - g7)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(resasc > 0.0, np.minimum(1.0, (200.0 * raw / np.where(resasc > 0, resasc, 1.0)) ** 1.5), 1.0)
    err = np.where(resasc > 0.0, resasc * scale, raw)
    err = np.maximum(err, 50.0 * _EPS * resabs)
    return k15, err, resabs


def integrate(f, a: float, b: float, *, tol: Tol = INNER_TOL,
              budget: int = 1_000_000, edges=None) -> QuadResult:
    """Adaptive GK15 integration of a vectorized integrand on finite [a, b].

    f(x: (n,) array) -> (n,) or (stack..., n) array, real or complex.
    `edges` optionally seeds the initial subdivision (sorted, includes a, b).
    Endpoints are never evaluated (open rule), so integrable endpoint
    singularities are allowed.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("integrate() requires finite bounds; use integrate_semi_infinite")
    if edges is None:
        edges = np.array([a, b], dtype=float)
    else:
        edges = np.asarray(edges, dtype=float)
    if b <= a:
        probe = np.asarray(f(np.array([0.5 * (a + b)])))
        zero = np.zeros(probe.shape[:-1])
        return QuadResult(zero if zero.shape else 0.0, 0.0, 1)

    flags = set()
    evals = 0
    heap: list[tuple[float, int, float, float, np.ndarray, np.ndarray]] = []
    serial = 0
    total_v = None
    total_e = None

    def push(lo: float, hi: float):
        nonlocal evals, serial, total_v, total_e
        v, e, _ = _eval_panel(f, lo, hi)
        evals += 15
        total_v = v if total_v is None else total_v + v
        total_e = e if total_e is None else total_e + e
        heapq.heappush(heap, (-float(np.max(e)), serial, lo, hi, v, e))
        serial += 1

    for lo, hi in zip(edges[:-1], edges[1:]):
        push(float(lo), float(hi))

    while True:
        worst = float(np.max(total_e))
        target = max(tol.abs, tol.rel * float(np.max(np.abs(total_v))))
        if worst <= target:
            break
        if evals + 30 > budget:
            flags.add("budget_exceeded")
            break
        neg_e, _, lo, hi, v, e = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:      # cannot split further in float64
            heapq.heappush(heap, (0.0, serial, lo, hi, v, e))
            serial += 1
            if all(item[0] == 0.0 for item in heap):
                break
            continue
        total_v = total_v - v
        total_e = total_e - e
        push(lo, mid)
        push(mid, hi)

    value = total_v if total_v.shape else total_v.item()
    error = total_e if total_e.shape else float(total_e)
    return QuadResult(value, error, evals, frozenset(flags))


def integrate_semi_infinite(f, *, a: float = 0.0, tol: Tol = INNER_TOL,
                            budget: int = 1_000_000, edges=None) -> QuadResult:
    """Integrate f over [a, inf) via the rational map u = z/(1+z).

    Requires an absolutely integrable f with an eventually decaying envelope.
    Integrands must underflow gracefully at huge arguments (exp-dominated
    tails do).
    """
    def g(u):
        one_minus = 1.0 - u
        # Deep subdivision can land a node on u == 1 exactly; the integrand
        # must vanish there (integrability), so zero it instead of taking 0/0.
        safe = one_minus > 0.0
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            z = np.where(safe, a + u / np.where(safe, one_minus, 1.0), np.inf)
            vals = np.asarray(f(z)) / one_minus**2
        return np.where(safe, vals, 0.0)

    if edges is not None:
        edges = np.asarray(edges, dtype=float)
        edges = edges[edges >= a]
        uedges = np.concatenate([[0.0], (edges[edges > a] - a) / (1.0 + edges[edges > a] - a), [1.0]])
        uedges = np.unique(uedges)
    else:
        # Mild default split keeps the first panels from straddling the
        # character change of the map.
        uedges = np.array([0.0, 0.25, 0.5, 0.75, 0.9, 1.0])
    return integrate(g, 0.0, 1.0, tol=tol, budget=budget, edges=uedges)


def integrate_power_tail(f, *, a: float, beta: float, tol: Tol = INNER_TOL,
                         budget: int = 1_000_000, edges=None) -> QuadResult:
    """Integrate f over [a, inf) when f(x) ~ C * x**-(1+beta) for large x.

    The substitution x = a * t**(-1/beta) maps the tail to t -> 0 where the
    transformed integrand approaches the finite constant C * a**-beta / beta,
    so endpoint singularities that the rational map would create for slow
    power decay (beta < 1) never arise.  Faster-than-assumed decay is fine:
    the transformed integrand then just vanishes at t = 0.
    """
    if beta <= 0.0:
        raise ValueError("beta must be positive for an integrable tail")
    inv = 1.0 / beta

    def g(t):
        safe = t > 0.0
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ts = np.where(safe, t, 1.0)
            x = a * ts ** (-inv)
            vals = np.asarray(f(np.where(safe, x, np.inf)))
            out = vals * (a * inv) * ts ** (-inv - 1.0)
        return np.where(safe, out, 0.0)

    if edges is not None:
        edges = np.asarray(edges, dtype=float)
        edges = edges[edges > a]
        tedges = np.unique(np.concatenate([[0.0], (edges / a) ** -beta, [1.0]]))
    else:
        tedges = np.array([0.0, 0.1, 0.4, 1.0])
    return integrate(g, 0.0, 1.0, tol=tol, budget=budget, edges=tedges)


def _euler_accelerate(partials: np.ndarray):
    """Repeated-averaging (Euler) acceleration of a partial-sum sequence.

    Returns (limit_estimate, error_estimate)."""
    row = np.asarray(partials, dtype=complex)
    prev_head = row[-1]
    head = row[-1]
    while row.size > 1:
        row = 0.5 * (row[:-1] + row[1:])
        prev_head, head = head, row[-1]
    return head, 4.0 * abs(head - prev_head)


def integrate_oscillatory(g, omega: float, *, tol: Tol = OUTER_TOL,
                          budget: int = 2_000_000, max_panels: int = 512,
                          panel_cap: float = 30.0) -> QuadResult:
    """Integrate g over [0, inf) where g oscillates with angular rate omega.

    Integrates half-period panels of width pi/omega (capped) adaptively and
    accelerates the alternating tail by repeated averaging of the partial
    sums. g(t)/..., the integrand itself, must be finite on (0, inf); a
    removable singularity at t=0+ is fine because the rule is open.

    Stops when either three consecutive panels each contribute less than
    tol.abs/10, or the acceleration's tail estimate meets tol. Degenerates
    to integrate_semi_infinite when omega is nonpositive or tiny.
    """
    if omega <= 0.0 or math.pi / omega > 1e3:
        return integrate_semi_infinite(g, tol=tol, budget=budget)

    width = min(math.pi / omega, panel_cap)
    evals = 0
    flags: set[str] = set()
    panel_vals: list[complex] = []
    partials: list[complex] = []
    quad_err = 0.0
    small_run = 0
    accel_val = None
    accel_err = math.inf
    lo = 0.0

    for _ in range(max_panels):
        hi = lo + width
        res = integrate(g, lo, hi, tol=Tol(abs=tol.abs / 10.0, rel=tol.rel), budget=budget - evals)
        evals += res.evaluations
        flags |= res.flags
        val = res.value if np.ndim(res.value) == 0 else complex(res.value)
        panel_vals.append(val)
        partials.append((partials[-1] if partials else 0.0) + val)
        quad_err += float(np.max(res.abs_error))
        lo = hi

        if abs(val) < tol.abs / 10.0:
            small_run += 1
            if small_run >= 3:
                break
        else:
            small_run = 0

        if len(panel_vals) >= 12:
            tail = np.asarray(panel_vals[-10:])
            sign_flips = np.sum(np.real(tail[:-1]) * np.real(tail[1:]) < 0)
            if sign_flips >= 7:
                accel_val, accel_err = _euler_accelerate(np.asarray(partials[-24:]))
                if accel_err < max(tol.abs, tol.rel * abs(accel_val)):
                    break
        if evals >= budget:
            flags.add("budget_exceeded")
            break
    else:
        flags.add("slow_decay")

    plain = partials[-1]
    if accel_val is not None and accel_err < abs(panel_vals[-1]):
        value, tail_err = accel_val, accel_err
    else:
        value, tail_err = plain, abs(panel_vals[-1])
        if "slow_decay" in flags:
            pv = np.real(np.asarray(panel_vals))
            total_flips = int(np.sum(pv[:-1] * pv[1:] < 0.0))
            if total_flips == 0:
                # never completed a half-cycle: nothing observed bounds the
                # remaining tail, so the error must say so
                tail_err = math.inf
            else:
                # alternation at a coarser block size: one block of the
                # current amplitude bounds the truncated tail
                tail_err *= max(1.0, len(panel_vals) / total_flips)
    if abs(value.imag) < 1e-300 and all(abs(complex(v).imag) < 1e-300 for v in panel_vals[:1]):
        value = value.real
    return QuadResult(value, quad_err + tail_err, evals, frozenset(flags))


# ---- stable removable-singularity helpers ----------------------------------

def one_minus_pow_ratio(u, c: float):
    """(1 - u**c) / (1 - u) for u in [0, 1], stable at the u=1 corner.

    Within 1e-6 of u=1 the ratio is replaced by its series
    c * (1 + (c-1)/2 * (u-1) + (c-1)(c-2)/6 * (u-1)^2).
    """
    u = np.asarray(u, dtype=float)
    near = np.abs(1.0 - u) < 1e-6
    safe = np.where(near, 0.5, u)
    direct = (1.0 - safe**c) / (1.0 - safe)
    d = u - 1.0
    series = c * (1.0 + (c - 1.0) / 2.0 * d + (c - 1.0) * (c - 2.0) / 6.0 * d * d)
    out = np.where(near, series, direct)
    return out if out.shape else float(out)


def exp_decay_ratio(s, c: float):
    """(1 - exp(-c*s)) / (1 - exp(-s)) for s >= 0, stable at s=0 (limit c)."""
    s = np.asarray(s, dtype=float)
    zero = s == 0.0
    safe = np.where(zero, 1.0, s)
    out = np.where(zero, c, np.expm1(-c * safe) / np.expm1(-safe))
    return out if out.shape else float(out)
