"""Analytic moments of the conditional link success probability.

Both link directions reduce, after normalizing out the serving distance, to
a one-dimensional integral of exp(-z - E(z)) where the exponent E collects
the interference from all other cells and is itself a nested integral.  The
engines below evaluate E in a vectorized stack across all z nodes of the
outer quadrature and, for imaginary orders, across the entire order grid at
once, so a full characteristic-function table costs little more than a
single moment.

Order conventions: b = 1, 2 give mean and second moment of the success
probability, b = -1 the mean local delay (mean retransmission count), and
b = j*t the characteristic function of the log success probability used by
the Gil-Pelaez inversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sp

from .core import (
    Direction,
    MomentValue,
    PowerModel,
    SystemConfig,
    TruncationWithoutCap,
    validate_config,
)
from .quadrature import (
    QuadResult,
    Tol,
    exp_decay_ratio,
    integrate,
    integrate_power_tail,
    integrate_semi_infinite,
)

__all__ = [
    "B1",
    "B2",
    "QuadratureFailure",
    "MomentRequest",
    "uplink_moment",
    "uplink_moment_eps1",
    "uplink_mld_eps1",
    "uplink_tfpc_moment",
    "downlink_moment",
    "downlink_mld",
    "downlink_mld_log",
    "downlink_mld_closed",
    "epsilon_opt_uplink",
    "rho_opt_downlink",
    "moment",
    "mean_and_variance",
    "ImaginaryMomentTable",
    "imaginary_moment_table",
]

# Area scaling constants of the Poisson-Voronoi approximations: B1 rescales
# the mean interfering-cell area, B2 the exhaustion rate of the interferer
# intensity towards homogeneity.
B1 = 1.25
B2 = 2.4

_Z_MAX = 60.0          # exp(-z) below 1e-26, beyond any tolerance used here
_NU_CAP = 1e10         # exponent argument treated as "success impossible"


class QuadratureFailure(RuntimeError):
    """A nested quadrature exhausted its budget with an unusable estimate."""


@dataclass(frozen=True)
class MomentRequest:
    cfg: SystemConfig
    b: complex


def _misr(alpha: float) -> float:
    d = 2.0 / alpha
    return d / (1.0 - d)


def _one_minus_pow(A, b):
    """1 - (1+A)^(-b) for A >= 0 (inf allowed), b real or complex."""
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        L = np.log1p(A)
        if np.iscomplexobj(np.asarray(b)):
            out = -(np.exp(-np.asarray(b) * L) - 1.0)
            return np.where(np.isinf(L), 1.0 + 0.0j, out)
        return -np.expm1(-np.asarray(b) * L)


def _W(s):
    return exp_decay_ratio(s, B2 / B1)


def _check(res, what: str):
    if "budget_exceeded" in res.flags and float(np.max(res.abs_error)) > 1e-3:
        raise QuadratureFailure(f"{what}: budget exceeded, error {np.max(res.abs_error):.2e}")
    return res


def _layer_edges(scale: float):
    """Geometric grid resolving an exp(-scale*w) boundary layer on [0, 1].

    Without the seeding, GK15 panels spanning [0, 1] put no node inside a
    layer of width 1/scale once scale is large; the error estimate then
    underestimates what it cannot see and the adaptive loop can stop with a
    systematic low bias.
    """
    if not math.isfinite(scale) or scale <= 8.0:
        return None
    cuts = [0.0]
    c = 1.0 / scale
    while c < 1.0:
        cuts.append(c)
        c *= 4.0
    cuts.append(1.0)
    return np.array(cuts)


def _tail_split(f, a: float, hi: float, beta: float, tol: Tol, edges=None):
    """Integrate f on [a, inf) as finite [a, hi] plus an x^-(1+beta) tail.

    The interference kernels all decay like s^(-alpha/2); for alpha < 4 the
    rational map of integrate_semi_infinite would turn that into an endpoint
    singularity, so the tail gets the dedicated power-law substitution.
    """
    interior = []
    if edges is not None:
        interior = sorted({float(e) for e in edges if a < e < hi})
    r1 = integrate(f, a, hi, tol=tol, edges=np.array([a, *interior, hi]))
    r2 = integrate_power_tail(f, a=hi, beta=beta, tol=tol)
    return QuadResult(r1.value + r2.value, r1.abs_error + r2.abs_error,
                      r1.evaluations + r2.evaluations, r1.flags | r2.flags)


# ---- interference exponents -------------------------------------------------
#
# Uplink: E(z) = G(theta * z^p) with p = alpha*(1-eps)/2 and
#   G(nu) = (1/B1) int_0^inf ds s*W(s) int_0^1 dw e^{-s w}
#           (1 - (1 + nu w^q s^{-p})^{-b}),      q = alpha*eps/2.
# The w integral collapses for eps = 0 and the z dependence for eps = 1.
# Downlink: E(z) = z * Gd(theta * z^{-q}) with
#   Gd(nu) = (1/B1) int_1^inf dx int_0^inf dv e^{-v}
#            (1 - (1 + nu v^q x^{-alpha/2})^{-b}).


def _g_uplink(nu, b, alpha: float, eps: float, abs_tol: float):
    """Uplink interference exponent, stacked over broadcast(nu, b)."""
    nu = np.asarray(nu, dtype=float)
    b_arr = np.asarray(b)
    stack = np.broadcast_shapes(nu.shape, b_arr.shape)
    nu = np.broadcast_to(nu, stack)
    b_arr = np.broadcast_to(b_arr, stack)
    q = 0.5 * alpha * eps
    p = 0.5 * alpha * (1.0 - eps)
    nu_max = float(np.max(nu, initial=0.0))
    s_star = max(1.0, nu_max ** (2.0 / alpha)) if nu_max > 0 else 1.0
    s_hi = max(8.0, 4.0 * s_star)
    s_edges = [0.25 * s_star, s_star]
    beta = 0.5 * alpha - 1.0
    tol = Tol(abs=0.5 * abs_tol, rel=1e-13)

    if eps == 0.0:
        def f(s):
            with np.errstate(divide="ignore", over="ignore"):
                A = nu[..., None] * s ** (-0.5 * alpha)
            kern = _one_minus_pow(A, b_arr[..., None])
            return (_W(s) * (-np.expm1(-s)) / B1) * kern

        return _check(
            _tail_split(f, 0.0, s_hi, beta, tol, edges=s_edges),
            "uplink exponent (no compensation)",
        )

    inner_tol = Tol(abs=abs_tol / 200.0, rel=1e-13)

    def outer(s):
        def inner(w):
            with np.errstate(divide="ignore", over="ignore", under="ignore"):
                A = nu[..., None, None] * (w[None, :] ** q) * (s[:, None] ** (-p))
                damp = np.exp(-s[:, None] * w[None, :])
            return damp * _one_minus_pow(A, b_arr[..., None, None])

        s_fin = s[np.isfinite(s)]
        w_edges = _layer_edges(float(np.max(s_fin, initial=0.0)))
        r = integrate(inner, 0.0, 1.0, tol=inner_tol, edges=w_edges)
        return (s * _W(s) / B1) * r.value

    return _check(
        _tail_split(outer, 0.0, s_hi, beta, tol, edges=s_edges),
        "uplink exponent",
    )


def _g_downlink(nu, b, alpha: float, eps: float, abs_tol: float):
    """Downlink interference exponent, stacked over broadcast(nu, b)."""
    nu = np.asarray(nu, dtype=float)
    b_arr = np.asarray(b)
    stack = np.broadcast_shapes(nu.shape, b_arr.shape)
    nu = np.broadcast_to(nu, stack)
    b_arr = np.broadcast_to(b_arr, stack)
    q = 0.5 * alpha * eps
    nu_max = float(np.max(nu, initial=0.0))
    x_star = max(2.0, nu_max ** (2.0 / alpha)) if nu_max > 0 else 2.0
    x_hi = max(8.0, 4.0 * x_star)
    beta = 0.5 * alpha - 1.0
    tol = Tol(abs=0.5 * abs_tol, rel=1e-13)

    if eps == 0.0:
        def f(x):
            A = nu[..., None] * x ** (-0.5 * alpha)
            return _one_minus_pow(A, b_arr[..., None]) / B1

        return _check(
            _tail_split(f, 1.0, x_hi, beta, tol, edges=[x_star]),
            "downlink exponent (no compensation)",
        )

    inner_tol = Tol(abs=abs_tol / 200.0, rel=1e-13)

    def outer(x):
        def inner(v):
            A = nu[..., None, None] * (v[None, :] ** q) * (x[:, None] ** (-0.5 * alpha))
            return np.exp(-v)[None, :] * _one_minus_pow(A, b_arr[..., None, None])

        r = integrate_semi_infinite(inner, tol=inner_tol)
        return r.value / B1

    return _check(
        _tail_split(outer, 1.0, x_hi, beta, tol, edges=[x_star]),
        "downlink exponent",
    )


# ---- characteristic-function fast route --------------------------------------
#
# Tables of M_{jt} need the exponent at every (z node, t knot) pair.  Driving
# the (s, w) quadrature through the oscillations of (1+A)^{-jt} separately
# for each t costs minutes per exponent call, because the adaptive stack has
# to refine wherever the worst knot oscillates.  The pair-geometry measure
# depends on neither nu nor the order, so collapse it once onto the kernel
# argument a (the normalized interference level of one cell):
#
#   G(nu, b) = int_0^inf rho(a) (1 - (1 + nu a)^{-b}) da,
#
# with rho the pushforward density of the geometry measure under the map to
# a.  In xi = log(1 + nu a) an imaginary order turns the kernel into a plain
# complex exponential,
#
#   G(nu, jt) = int (1 - e^{-j t xi}) rho((e^xi - 1)/nu) e^xi / nu dxi,
#
# a Fourier-type integral of a smooth density.  A fixed composite Kronrod
# grid sized to the largest t then yields the whole knot column as one matrix
# product, with the embedded Gauss rule giving a per-(nu, t) error estimate.

from .quadrature import _NODES as _GK_NODES, _WG as _GK_WG, _WK as _GK_WK


def _rho_uplink_eps0(alpha: float):
    d = 2.0 / alpha

    def rho(a):
        with np.errstate(divide="ignore", over="ignore", under="ignore"):
            s = a ** (-d)
            w = _W(s) * (-np.expm1(-s))
            return (d / B1) * w * a ** (-1.0 - d)

    return rho


def _rho_downlink(alpha: float, eps: float):
    d = 2.0 / alpha
    if eps == 0.0:
        def rho(a):
            with np.errstate(divide="ignore", over="ignore", under="ignore"):
                return np.where(a <= 1.0, (d / B1) * a ** (-1.0 - d), 0.0)

        return rho, 1.0

    q = 0.5 * alpha * eps
    gnorm = math.gamma(1.0 + eps)

    def rho(a):
        with np.errstate(divide="ignore", over="ignore", under="ignore"):
            x = a ** (1.0 / q)
            tail = sp.gammaincc(1.0 + eps, np.where(np.isfinite(x), x, 1e300))
            return (d / B1) * gnorm * tail * a ** (-1.0 - d)

    return rho, None


def _rho_uplink_general(alpha: float, eps: float):
    """Log-log spline of the uplink pushforward density, 0 < eps < 1.

    Reducing the (s, w) measure over the level set a = w^q s^{-p} leaves
        rho(a) = (eps/(q B1)) a^{-1-d} int_0^{a^{-1/p}}
                 W(u^eps a^{-d}) u^eps e^{-u} du,   d = 2/alpha,
    whose ends are clean power laws (slope -1 at 0, -1-2/p at infinity), so
    cubic interpolation of log rho in log a is benign and the ends
    extrapolate with the measured slopes.
    """
    from scipy.interpolate import CubicSpline

    q = 0.5 * alpha * eps
    p = 0.5 * alpha * (1.0 - eps)
    d = 2.0 / alpha
    agrid = np.geomspace(1e-8, 1e8, 197)
    lna = np.log(agrid)
    cut = agrid ** (-1.0 / p)
    vals = np.empty_like(agrid)
    tol = Tol(abs=1e-280, rel=3e-11)

    big = cut >= 40.0
    if np.any(big):
        la = lna[big]

        def f(u):
            with np.errstate(over="ignore", under="ignore"):
                arg = np.exp(eps * np.log(u)[None, :] - d * la[:, None])
            return _W(arg) * u[None, :] ** eps * np.exp(-u)[None, :]

        r = _check(integrate(f, 0.0, 40.0, tol=tol,
                             edges=np.array([0.0, 1e-4, 1e-2, 0.3, 2.0, 8.0, 20.0, 40.0])),
                   "interference density")
        vals[big] = r.value
    if np.any(~big):
        la = lna[~big]
        um = cut[~big]

        def f2(t):
            u = um[:, None] * t[None, :]
            with np.errstate(over="ignore", under="ignore"):
                arg = np.exp(eps * np.log(u) - d * la[:, None])
            return _W(arg) * u**eps * np.exp(-u) * um[:, None]

        r2 = _check(integrate(f2, 0.0, 1.0, tol=tol,
                              edges=np.array([0.0, 1e-4, 0.01, 0.1, 0.5, 1.0])),
                    "interference density (short range)")
        vals[~big] = r2.value

    lrho = np.log((eps / (q * B1)) * vals) + (-1.0 - d) * lna
    spl = CubicSpline(lna, lrho)
    dspl = spl.derivative()
    lo, hi = lna[0], lna[-1]
    flo, fhi = float(spl(lo)), float(spl(hi))
    slo, shi = float(dspl(lo)), float(dspl(hi))

    def rho(a):
        with np.errstate(divide="ignore", over="ignore", under="ignore"):
            x = np.log(a)
            core = spl(np.clip(x, lo, hi))
            out = np.where(x < lo, flo + slo * (x - lo),
                           np.where(x > hi, fhi + shi * (x - hi), core))
            return np.exp(out)

    return rho


def _rho_for(direction: Direction, alpha: float, eps: float):
    """Pushforward density rho(a) and its support cap (None if unbounded)."""
    if direction is Direction.DOWNLINK:
        return _rho_downlink(alpha, eps)
    if eps == 0.0:
        return _rho_uplink_eps0(alpha), None
    return _rho_uplink_general(alpha, eps), None


_RHO_CACHE: dict = {}


def _rho_cached(direction: Direction, alpha: float, eps: float):
    key = (direction, float(alpha), float(eps))
    if key not in _RHO_CACHE:
        if len(_RHO_CACHE) > 16:
            _RHO_CACHE.clear()
        _RHO_CACHE[key] = _rho_for(direction, alpha, eps)
    return _RHO_CACHE[key]


class _FourierExponent:
    """Evaluates G(nu, jt) for one fixed knot grid t, batched over nu.

    The density behaves like a^{-1-delta} at the origin, so the kerneled
    integrand carries an integrable xi^{-delta} endpoint singularity.  The
    head region is therefore integrated in eta = xi^{1-delta}, which removes
    it exactly; the rest uses panels short enough that the largest knot
    advances at most a few radians of phase per panel.
    """

    def __init__(self, rho, ts, nu_max: float, delta: float, *, support_hi=None,
                 tail_tol: float = 1e-9):
        self.rho = rho
        ts = np.asarray(ts, dtype=float)
        t_top = max(float(ts[-1]), 1.0)

        # Truncation point: past a0 the density carries mass < tail_tol/4,
        # and |kernel| <= 2 bounds the discarded contribution.
        probe = np.geomspace(1e-10, 1e30, 600)
        pv = rho(probe) * probe                      # d(mass)/d(log a)
        lp = np.log(probe)
        seg = 0.5 * (pv[1:] + pv[:-1]) * np.diff(lp)
        tail_mass = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
        ok = np.nonzero(tail_mass <= 0.25 * tail_tol)[0]
        a0 = probe[ok[0]] if ok.size else probe[-1]
        if support_hi is not None:
            a0 = min(a0, support_hi)
        self.trunc_err = float(2.0 * tail_mass[ok[0]]) if ok.size else math.inf

        xi_max = math.log1p(nu_max * a0)
        xi_h = min(0.3, 0.2 * xi_max)
        pw = 1.0 / (1.0 - delta)
        eta_h = xi_h ** (1.0 - delta)
        n_head = int(np.clip(math.ceil(t_top * xi_h * pw / 5.0), 3, 400))
        eh = np.linspace(0.0, eta_h, n_head + 1)
        eh = np.concatenate([eh[:1], eh[1] * np.array([1e-4, 1e-2, 0.1, 0.3]), eh[1:]])
        half_e = 0.5 * np.diff(eh)
        mid_e = 0.5 * (eh[1:] + eh[:-1])
        eta = mid_e[:, None] + half_e[:, None] * _GK_NODES[None, :]
        xs_head = eta**pw
        jac = pw * eta ** (pw - 1.0)
        wk_head = half_e[:, None] * _GK_WK[None, :] * jac
        wg_head = half_e[:, None] * _GK_WG[None, :] * jac

        h = min(0.35, 5.0 / t_top)
        n_u = max(2, int(math.ceil((xi_max - xi_h) / h)))
        edges = np.linspace(xi_h, xi_max, n_u + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        xs_body = mid[:, None] + half[:, None] * _GK_NODES[None, :]
        wk_body = half[:, None] * _GK_WK[None, :]
        wg_body = half[:, None] * _GK_WG[None, :]

        self.xs = np.concatenate([xs_head.ravel(), xs_body.ravel()])
        self.wk = np.concatenate([wk_head.ravel(), wk_body.ravel()])
        self.wg = np.concatenate([wg_head.ravel(), wg_body.ravel()])
        self.npan = len(mid_e) + len(mid)
        self.ts = ts
        # Kernel 1 - e^{-j t xi} for every node and knot, built once.  The
        # density alone is not integrable at 0 (only the kerneled product
        # is), so the kernel must multiply pointwise before any summation.
        self.K = -np.expm1(-1j * self.xs[:, None] * ts[None, :])
        self.absK = np.abs(self.K)

    def __call__(self, nu):
        """Returns (G, err) with G shaped (len(nu), len(ts))."""
        nu = np.maximum(np.asarray(nu, dtype=float), 1e-200)
        with np.errstate(over="ignore", under="ignore"):
            a = np.expm1(self.xs)[None, :] / nu[:, None]
            g = self.rho(a) * (np.exp(self.xs)[None, :] / nu[:, None])
        gk = g * self.wk[None, :]
        gd = gk - g * self.wg[None, :]
        G = gk @ self.K
        # Kronrod-minus-Gauss panel sums of the full complex integrand, with
        # the QUADPACK rescaling so the far-better Kronrod value is not
        # charged the embedded rule's full oscillation error.
        nn = len(nu)
        nt = self.K.shape[-1]
        raw = np.abs(np.einsum("vpx,pxt->vpt", gd.reshape(nn, self.npan, 15),
                               self.K.reshape(self.npan, 15, nt)))
        env = np.einsum("vpx,pxt->vpt", np.abs(gk).reshape(nn, self.npan, 15),
                        self.absK.reshape(self.npan, 15, nt)) + 1e-300
        scale = np.minimum(1.0, (200.0 * raw / env) ** 1.5)
        err = (env * scale).sum(1) + self.trunc_err
        return G, err


def _jt_fpc_fast(cfg: SystemConfig, ts: np.ndarray, abs_tol: float):
    """Characteristic-function knots M_{jt} via the pushforward route."""
    theta, alpha, eps = cfg.theta, cfg.alpha, cfg.epsilon
    rho, cap = _rho_cached(cfg.direction, alpha, eps)
    g_err = [0.0]

    if cfg.direction is Direction.UPLINK:
        p = 0.5 * alpha * (1.0 - eps)
        fe = _FourierExponent(rho, ts, theta * _Z_MAX**p, 2.0 / alpha,
                              support_hi=cap, tail_tol=abs_tol / 50.0)

        def zf(z):
            live = z <= _Z_MAX
            out = np.zeros((len(ts),) + z.shape, dtype=complex)
            if np.any(live):
                zl = z[live]
                G, err = fe(theta * zl**p)
                g_err[0] = max(g_err[0], float(np.max(err)))
                out[:, live] = np.exp(-(zl[None, :] + G.T))
            return out

        r = _check(integrate_semi_infinite(zf, tol=Tol(abs=abs_tol, rel=1e-13)),
                   "uplink cf table")
        return r.value, float(np.max(r.abs_error)) + g_err[0]

    q = 0.5 * alpha * eps
    if eps == 0.0:
        fe = _FourierExponent(rho, ts, theta, 2.0 / alpha, support_hi=cap,
                              tail_tol=abs_tol / 50.0)
        G, err = fe(np.array([theta]))
        vals = 1.0 / (1.0 + G[0])
        return vals, float(np.max(np.abs(vals) ** 2 * err))

    z_floor = 1e-10          # below this z the integrand is 1 + O(z^{1-eps})
    nu_top = theta * z_floor ** (-q)
    fe = _FourierExponent(rho, ts, nu_top, 2.0 / alpha, support_hi=cap,
                          tail_tol=abs_tol / 50.0)

    def zf(z):
        live = z <= _Z_MAX
        out = np.zeros((len(ts),) + z.shape, dtype=complex)
        if np.any(live):
            zl = z[live]
            with np.errstate(over="ignore", divide="ignore"):
                nu = np.minimum(theta * zl ** (-q), nu_top)
            G, err = fe(nu)
            g_err[0] = max(g_err[0], float(np.max(err)))
            out[:, live] = np.exp(-zl[None, :] * (1.0 + G.T))
        return out

    r = _check(integrate_semi_infinite(zf, tol=Tol(abs=abs_tol, rel=1e-13)),
               "downlink cf table")
    return r.value, float(np.max(r.abs_error)) + g_err[0] + z_floor


# ---- moment assembly --------------------------------------------------------

def _uplink_moments_fpc(bs, theta: float, alpha: float, eps: float,
                        abs_tol: float = 1e-8):
    """Moments of orders `bs` (array, real or complex) for the uplink, FPC.

    Returns (values, err_estimate) with values shaped like bs.
    """
    bs = np.asarray(bs)
    p = 0.5 * alpha * (1.0 - eps)

    if eps == 1.0:
        g = _g_uplink(np.full(bs.shape, theta), bs, alpha, eps, abs_tol / 5.0)
        vals = np.exp(-g.value)
        err = float(np.max(np.abs(vals) * (g.abs_error + abs_tol / 5.0)))
        return vals, err

    g_err_seen = [0.0]

    def zf(z):
        with np.errstate(over="ignore"):
            nu = theta * z**p
        live = (z <= _Z_MAX) & (nu <= _NU_CAP)
        out_shape = bs.shape + z.shape
        out = np.zeros(out_shape, dtype=complex if np.iscomplexobj(bs) else float)
        if np.any(live):
            zl = z[live]
            g = _g_uplink(nu[live], bs[..., None], alpha, eps, abs_tol / 10.0)
            g_err_seen[0] = max(g_err_seen[0], float(np.max(g.abs_error)))
            out[..., live] = np.exp(-(zl + g.value))
        return out

    r = _check(
        integrate_semi_infinite(zf, tol=Tol(abs=abs_tol, rel=1e-13)),
        "uplink moment",
    )
    err = float(np.max(r.abs_error)) + g_err_seen[0]
    return r.value, err


def _downlink_moments_fpc(bs, theta: float, alpha: float, eps: float,
                          abs_tol: float = 1e-8):
    """Moments of orders `bs` for the downlink, FPC."""
    bs = np.asarray(bs)
    q = 0.5 * alpha * eps

    if eps == 0.0:
        g = _g_downlink(np.full(bs.shape, theta), bs, alpha, eps, abs_tol / 5.0)
        vals = 1.0 / (1.0 + g.value)
        err = float(np.max(np.abs(vals) ** 2 * (g.abs_error + abs_tol / 5.0)))
        return vals, err

    g_err_seen = [0.0]

    def zf(z):
        with np.errstate(over="ignore", divide="ignore"):
            nu = theta * z ** (-q)
        live = z <= _Z_MAX
        out_shape = bs.shape + z.shape
        out = np.zeros(out_shape, dtype=complex if np.iscomplexobj(bs) else float)
        if np.any(live):
            zl = z[live]
            g = _g_downlink(nu[live], bs[..., None], alpha, eps, abs_tol / 10.0)
            g_err_seen[0] = max(g_err_seen[0], float(np.max(g.abs_error)))
            out[..., live] = np.exp(-zl * (1.0 + g.value))
        return out

    r = _check(
        integrate_semi_infinite(zf, tol=Tol(abs=abs_tol, rel=1e-13)),
        "downlink moment",
    )
    err = float(np.max(r.abs_error)) + g_err_seen[0]
    return r.value, err


# ---- uplink mean local delay (order -1) -------------------------------------
#
# At b = -1 the exponent is exactly linear in nu: G(nu) = -C*nu with
#   C = (Gamma(1+q)/B1) int_0^inf W(s) P(1+q, s) s^{-alpha/2} ds,
# P the regularized lower incomplete gamma.  The moment integral
# int exp(-z + theta*C*z^p) dz then converges iff p < 1, or p = 1 with
# theta*C < 1 (and the slope integral itself requires p < 2).

def _uplink_delay_slope(alpha: float, eps: float, abs_tol: float = 1e-10) -> float:
    q = 0.5 * alpha * eps

    def f(s):
        with np.errstate(divide="ignore", over="ignore"):
            tail = s ** (-0.5 * alpha)
        return _W(s) * sp.gammainc(1.0 + q, s) * tail

    r = _tail_split(f, 0.0, 12.0, 0.5 * alpha - 1.0, Tol(abs=0.5 * abs_tol, rel=1e-12))
    return math.gamma(1.0 + q) / B1 * float(r.value)


def _uplink_mld(theta: float, alpha: float, eps: float, abs_tol: float = 1e-9):
    p = 0.5 * alpha * (1.0 - eps)
    if p > 1.0:
        return math.inf, 0.0
    C = _uplink_delay_slope(alpha, eps)
    if p == 1.0:
        if theta * C >= 1.0:
            return math.inf, 0.0
        return 1.0 / (1.0 - theta * C), abs_tol
    if p == 0.0:
        return math.exp(theta * C), abs_tol
    zpk = (theta * C * p) ** (1.0 / (1.0 - p)) if theta * C > 0 else 1.0
    edges = [0.5 * zpk, zpk, 2.0 * zpk, 4.0 * zpk + 60.0]

    def f(z):
        return np.exp(-z + theta * C * z**p)

    r = _check(
        integrate_semi_infinite(f, tol=Tol(abs=abs_tol, rel=1e-12), edges=edges),
        "uplink mean local delay",
    )
    return float(r.value), float(r.abs_error) + abs_tol


# ---- public operations ------------------------------------------------------

def uplink_moment(req: MomentRequest, abs_tol: float = 1e-8) -> MomentValue:
    """Moment of order req.b for the uplink with fractional power control."""
    cfg = validate_config(req.cfg)
    if cfg.power_model is not PowerModel.FPC:
        raise ValueError("uplink_moment handles FPC; use uplink_tfpc_moment for capped power")
    b = complex(req.b)
    if b == 0:
        return MomentValue(1.0, 0.0)
    if b == -1:
        val, err = _uplink_mld(cfg.theta, cfg.alpha, cfg.epsilon)
        return MomentValue(val, err)
    bs = np.array(b) if b.imag != 0.0 else np.array(b.real)
    vals, err = _uplink_moments_fpc(bs.reshape(1), cfg.theta, cfg.alpha, cfg.epsilon, abs_tol)
    v = complex(vals[0])
    return MomentValue(v if v.imag != 0.0 else v.real, err)


def uplink_moment_eps1(b, theta: float, alpha: float, abs_tol: float = 1e-9) -> MomentValue:
    """Fully compensated uplink moment via the log-domain reduction.

    The double integral collapses to a single x integral against digamma
    differences; exact for eps = 1 and cheap enough to serve as the second,
    independent route for cross-validation.
    """
    bs = np.atleast_1d(np.asarray(b))
    cbar = B2 / B1
    i0 = sp.digamma(1.0 + cbar) + np.euler_gamma
    A = _one_minus_pow(np.full(bs.shape, theta), bs)

    def hx(x):
        base = np.log1p(theta * x ** (0.5 * alpha))
        h = (bs[..., None] * theta * alpha / 2.0) * x ** (0.5 * alpha - 1.0) \
            * np.exp(-(bs[..., None] + 1.0) * base)
        return h * (sp.digamma(x + cbar) - sp.digamma(x))

    r = integrate(hx, 0.0, 1.0, tol=Tol(abs=abs_tol, rel=1e-12),
                  edges=[0.0, 1e-3, 0.1, 1.0])
    log_m = (A * i0 - r.value) / B1
    vals = np.exp(log_m)
    err = float(np.max(np.abs(vals)) * (float(np.max(r.abs_error)) / B1 + 1e-14))
    if np.isscalar(b) or np.ndim(b) == 0:
        v = complex(vals[0])
        return MomentValue(v if v.imag != 0.0 else v.real, err)
    return MomentValue(vals, err)


def uplink_mld_eps1(theta: float, alpha: float) -> float:
    """Closed-form mean local delay for the fully compensated uplink.

    Uses the digamma reading of the simplified constant; the small rational
    approximation baked into that constant leaves a sub-percent systematic
    offset against the exact integral route, so this is a convenience
    formula, not an oracle.
    """
    d = 2.0 / alpha
    C = (1.0 / B1) * (1.5 - (1.0 / d) * (
        2.0 * d / (1.0 - d) + math.log(2.0)
        - sp.digamma((1.0 - d) / d) + sp.digamma((1.0 - d) / (2.0 * d))))
    return math.exp(-theta * C)


def uplink_tfpc_moment(b, theta: float, alpha: float, epsilon: float,
                       lam: float, p_hat: float, abs_tol: float = 1e-7) -> MomentValue:
    """Uplink moment when transmit powers are capped at p_hat.

    The serving-distance integral splits at s_cap, the scaled squared
    distance at which the cap starts to bind; past it the own-power argument
    grows like z^(alpha/2) instead of z^p, and interferer caps enter through
    a correction term restricted to cells beyond the same threshold.
    """
    if epsilon == 0.0:
        # cap is vacuous without compensation
        cfg = SystemConfig(lam=lam, alpha=alpha, epsilon=0.0, theta=theta)
        return uplink_moment(MomentRequest(cfg, b), abs_tol)
    if not math.isfinite(p_hat):
        raise TruncationWithoutCap("capped model needs a finite p_hat")
    b = complex(b)
    if b == 0:
        return MomentValue(1.0, 0.0)
    if b == -1:
        # beyond the cap threshold the serving power stops growing while the
        # exponent argument keeps rising as z^(alpha/2) > z, so the delay
        # integral diverges for every theta > 0
        return MomentValue(math.inf, 0.0)
    bs = np.array(b) if b.imag != 0.0 else np.array(b.real)
    d = 2.0 / alpha
    q = 0.5 * alpha * epsilon
    p = 0.5 * alpha * (1.0 - epsilon)
    s_cap = B1 * lam * math.pi * p_hat ** (d / epsilon)
    inner_tol = Tol(abs=abs_tol / 200.0, rel=1e-13)
    ecap = math.exp(-s_cap) if s_cap < 700.0 else 0.0

    def exponent(mu):
        # Combined interference exponent, parametrized by the capped-cell
        # argument scale mu = nu * s_cap^q.  Interfering cells at scaled own
        # distance v <= s_cap compensate fully, argument mu*(v/s_cap)^q; the
        # rest sit at the cap, argument mu, with the v integral over them
        # collapsing to (e^-s_cap - e^-s).  Splitting this into the
        # uncapped exponent plus a correction would subtract two integrals
        # that both blow up as the cap tightens.
        mu = np.asarray(mu, dtype=float)
        b_arr = np.broadcast_to(bs, mu.shape)
        mu_max = float(np.max(mu, initial=0.0))
        s_star = max(1.0, mu_max ** (2.0 / alpha))
        s_hi = max(8.0, 4.0 * s_star, 1.5 * s_cap)

        def outer(s):
            m = np.minimum(s, s_cap)
            with np.errstate(divide="ignore", over="ignore"):
                sa = s ** (-0.5 * alpha)
            kcap = _one_minus_pow(mu[..., None] * sa, b_arr[..., None])
            cap_w = np.clip(ecap - np.exp(-s), 0.0, None)

            def inner(w):
                v = m[:, None] * w[None, :]
                ratio = np.clip(v / s_cap, 0.0, 1.0)
                with np.errstate(divide="ignore", over="ignore", under="ignore"):
                    A = mu[..., None, None] * ratio**q * sa[:, None]
                return (m[:, None] * np.exp(-v)) * _one_minus_pow(A, b_arr[..., None, None])

            w_edges = _layer_edges(float(np.max(m, initial=0.0)))
            ival = integrate(inner, 0.0, 1.0, tol=inner_tol, edges=w_edges).value
            return (_W(s) / B1) * (ival + cap_w * kcap)

        r = _tail_split(outer, 0.0, s_hi, 0.5 * alpha - 1.0,
                        Tol(abs=abs_tol / 20.0, rel=1e-13),
                        edges=[0.25 * s_star, s_star, s_cap])
        return r.value, float(np.max(r.abs_error))

    errs = [0.0]

    def part1_f(z):
        live = z <= _Z_MAX
        out = np.zeros(z.shape, dtype=complex if np.iscomplexobj(bs) else float)
        if np.any(live):
            e, err = exponent(theta * s_cap**q * z[live] ** p)
            errs[0] = max(errs[0], err)
            out[live] = np.exp(-(z[live] + e))
        return out

    if p == 0.0:
        e, err = exponent(np.atleast_1d(theta * s_cap**q))
        part1_v = -math.expm1(-min(s_cap, 700.0)) * np.exp(-e[0])
        part1_e = abs(part1_v) * err
    else:
        z1_edges = sorted({min(s_cap, v) for v in (1.0, 5.0, 20.0, 45.0)} | {0.0, s_cap})
        r1 = integrate(part1_f, 0.0, s_cap, tol=Tol(abs=abs_tol, rel=1e-13),
                       edges=np.array(sorted(z1_edges)))
        part1_v, part1_e = r1.value, float(np.max(r1.abs_error)) + errs[0]

    if s_cap > _Z_MAX + 5.0:
        # the whole tail part sits beyond the reach of exp(-z)
        total = part1_v + 0.0
        v = complex(total)
        return MomentValue(v if v.imag else v.real, part1_e)

    def part2_f(z):
        live = z <= _Z_MAX
        out = np.zeros(z.shape, dtype=complex if np.iscomplexobj(bs) else float)
        if np.any(live):
            e, err = exponent(theta * z[live] ** (0.5 * alpha))
            errs[0] = max(errs[0], err)
            out[live] = np.exp(-(z[live] + e))
        return out

    r2 = _check(
        integrate_semi_infinite(part2_f, a=s_cap, tol=Tol(abs=abs_tol, rel=1e-13),
                                edges=[s_cap + 1.0, s_cap + 5.0, s_cap + 30.0]),
        "capped uplink moment",
    )
    total = part1_v + r2.value
    err = part1_e + float(np.max(r2.abs_error)) + errs[0]
    v = complex(total)
    return MomentValue(v if v.imag else v.real, err)


def downlink_moment(b, theta: float, alpha: float, epsilon: float,
                    abs_tol: float = 1e-8) -> MomentValue:
    """Moment of order b for the downlink with fractional power control."""
    b = complex(b)
    if b == 0:
        return MomentValue(1.0, 0.0)
    if b == -1 and downlink_mld_log(theta, alpha, epsilon) == math.inf:
        return MomentValue(math.inf, 0.0)
    bs = np.array(b) if b.imag != 0.0 else np.array(b.real)
    vals, err = _downlink_moments_fpc(bs.reshape(1), theta, alpha, epsilon, abs_tol)
    v = complex(vals[0])
    return MomentValue(v if v.imag != 0.0 else v.real, err)


# ---- downlink mean local delay ----------------------------------------------
#
# At b = -1 the downlink exponent is exactly linear, giving
#   M_{-1} = int_0^inf exp(c*Gamma(1+rho)*y^{1-rho} - y) dy,
# c = theta*delta/(B1*(1-delta)), rho = eps/delta.  Finite iff rho <= 1,
# with the extra condition c < 1 at rho = 0.

def _delay_c(theta: float, alpha: float) -> float:
    return theta * _misr(alpha) / B1


def _mld_integral_log(c: float, rho: float, abs_tol: float = 1e-10) -> float:
    """log of int_0^inf exp(a*y^(1-rho) - y) dy for a = c*Gamma(1+rho).

    Shifted by the interior maximum so that values like exp(1400) are
    representable; assumes 0 < rho <= 1 and c > 0.
    """
    if rho >= 1.0:
        return c  # Gamma(2) = 1, flat exponent: integral is exp(c)
    a = c * math.gamma(1.0 + rho)
    y_star = (a * (1.0 - rho)) ** (1.0 / rho)
    peak = a * y_star ** (1.0 - rho) - y_star if y_star > 0 else 0.0
    peak = max(peak, 0.0)
    if rho * y_star > 1e8:
        # The peak is narrower than anything float spacing around t = 1 can
        # host; the pure Gaussian limit is then exact to relative
        # O((1+rho)^2/(rho*y_star)) < 1e-7.
        return peak + 0.5 * math.log(2.0 * math.pi * y_star / rho)
    if rho * y_star > 100.0:
        # Sharp interior peak.  In y = y_star*t the shifted exponent is
        # y_star*((t^(1-rho)-1)/(1-rho) - (t-1)), a bump of width
        # ~1/sqrt(rho*y_star) around t = 1; for large y_star the rational
        # map cannot resolve it, so integrate the window directly.  Mass
        # outside it is down by at least e^-500.
        h = min(0.9, 45.0 / math.sqrt(rho * y_star))

        def ft(t):
            expo = y_star * ((t ** (1.0 - rho) - 1.0) / (1.0 - rho) - (t - 1.0))
            return np.exp(expo)

        r = integrate(ft, 1.0 - h, 1.0 + h, tol=Tol(abs=abs_tol, rel=1e-11),
                      edges=np.array([1.0 - h, 1.0 - 0.25 * h, 1.0 + 0.25 * h, 1.0 + h]))
        return peak + math.log(y_star) + math.log(float(r.value))
    sigma = math.sqrt(max(y_star, 1.0) / max(rho, 1e-3))
    edges = sorted({0.25 * y_star, y_star, y_star + 3 * sigma, y_star + 10 * sigma,
                    4.0 * y_star + 50.0} - {0.0})

    def f(y):
        with np.errstate(over="ignore"):
            return np.exp(a * y ** (1.0 - rho) - y - peak)

    r = integrate_semi_infinite(f, tol=Tol(abs=abs_tol, rel=1e-11), edges=edges)
    return peak + math.log(float(r.value))


def downlink_mld_log(theta: float, alpha: float, epsilon: float) -> float:
    """log mean local delay for the downlink; +inf when divergent."""
    d = 2.0 / alpha
    c = _delay_c(theta, alpha)
    if epsilon > d:
        return math.inf
    if epsilon == 0.0:
        return -math.log1p(-c) if c < 1.0 else math.inf
    return _mld_integral_log(c, epsilon / d)


def downlink_mld(theta: float, alpha: float, epsilon: float) -> float:
    """Downlink mean local delay; +inf exactly when the integral diverges.

    Divergence is classified analytically (compensation exponent above
    delta, or no compensation with the threshold past critical), never by
    numeric blow-up.  Finite values beyond float range return inf as well;
    use downlink_mld_log to distinguish.
    """
    lv = downlink_mld_log(theta, alpha, epsilon)
    if lv == math.inf:
        return math.inf
    return math.exp(lv) if lv < 709.0 else math.inf


def downlink_mld_closed(theta: float, alpha: float, case: str) -> float:
    """Closed forms of the downlink mean local delay at the three special
    compensation levels: none, half delta, and delta.

    All three are driven by the mean interference-to-signal ratio through
    c = theta*MISR/B1: a rational form with critical threshold B1*(1/delta-1)
    at eps=0, an erfc form at eps=delta/2, and exp(c) at eps=delta.
    """
    c = _delay_c(theta, alpha)
    if case == "eps0":
        return 1.0 / (1.0 - c) if c < 1.0 else math.inf
    if case == "eps_half_delta":
        k = c * math.gamma(1.5)
        return 1.0 + k * (math.sqrt(math.pi) / 2.0) * math.exp(0.25 * k * k) * math.erfc(-0.5 * k)
    if case == "eps_delta":
        return math.exp(c)
    raise ValueError(f"unknown case {case!r}; expected eps0, eps_half_delta or eps_delta")


# ---- optimizers --------------------------------------------------------------

def _golden_max(f, lo: float, hi: float, xtol: float):
    """Golden-section maximization on [lo, hi] assuming unimodality."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def epsilon_opt_uplink(theta: float, alpha: float, xtol: float = 1e-3) -> float:
    """Compensation exponent maximizing the uplink mean success probability.

    A 5-point pre-scan brackets the maximum before the golden-section
    refinement; when the scan looks non-unimodal a 41-point grid search
    picks the bracket instead.
    """
    cache: dict[float, float] = {}

    def m1(e: float) -> float:
        e = min(max(e, 0.0), 1.0)
        key = round(e, 6)
        if key not in cache:
            vals, _ = _uplink_moments_fpc(np.array([1.0]), theta, alpha, e, abs_tol=1e-8)
            cache[key] = float(np.real(vals[0]))
        return cache[key]

    scan = np.linspace(0.0, 1.0, 5)
    values = [m1(e) for e in scan]
    k = int(np.argmax(values))
    unimodal = all(values[i] <= values[i + 1] + 1e-7 for i in range(k)) and \
        all(values[i] >= values[i + 1] - 1e-7 for i in range(k, len(values) - 1))
    if not unimodal:
        grid = np.linspace(0.0, 1.0, 41)
        k = int(np.argmax([m1(e) for e in grid]))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, 40)]
    else:
        lo, hi = scan[max(k - 1, 0)], scan[min(k + 1, 4)]
    best = _golden_max(m1, lo, hi, xtol)
    # the refined point must not lose to any scanned point
    if m1(best) + 1e-7 < max(values):
        best = float(scan[int(np.argmax(values))])
    return min(max(best, 0.0), 1.0)


def rho_opt_downlink(c: float, xtol: float = 1e-3) -> float:
    """Compensation ratio (eps/delta) minimizing the downlink delay at fixed c."""
    if c <= 0:
        raise ValueError("c must be positive")

    def neg_log_delay(rho: float) -> float:
        rho = min(max(rho, 1e-3), 1.0)
        return -_mld_integral_log(c, rho)

    scan = np.linspace(0.05, 1.0, 5)
    values = [neg_log_delay(r) for r in scan]
    k = int(np.argmax(values))
    lo = scan[max(k - 1, 0)] if k > 0 else 1e-3
    hi = scan[min(k + 1, len(scan) - 1)]
    return min(max(_golden_max(neg_log_delay, float(lo), float(hi), xtol), 0.0), 1.0)


# ---- dispatch + curve helpers -------------------------------------------------

def moment(cfg: SystemConfig, b, abs_tol: float = 1e-8) -> MomentValue:
    """Moment of order b for any validated configuration."""
    cfg = validate_config(cfg)
    if cfg.power_model is PowerModel.TFPC:
        if cfg.direction is not Direction.UPLINK:
            raise ValueError("capped power control is an uplink model here")
        return uplink_tfpc_moment(b, cfg.theta, cfg.alpha, cfg.epsilon,
                                  cfg.lam, cfg.p_hat, abs_tol)
    if cfg.direction is Direction.UPLINK:
        return uplink_moment(MomentRequest(cfg, b), abs_tol)
    return downlink_moment(b, cfg.theta, cfg.alpha, cfg.epsilon, abs_tol)


def mean_and_variance(cfg: SystemConfig, abs_tol: float = 1e-8):
    """(M1, M2, variance, err) for a configuration."""
    m1 = moment(cfg, 1.0, abs_tol)
    m2 = moment(cfg, 2.0, abs_tol)
    var = float(np.real(m2.value)) - float(np.real(m1.value)) ** 2
    err = m2.abs_error + 2.0 * abs(float(np.real(m1.value))) * m1.abs_error
    return float(np.real(m1.value)), float(np.real(m2.value)), var, err


# ---- characteristic-function tables -------------------------------------------

@dataclass
class ImaginaryMomentTable:
    """Moments of imaginary order jt on a knot grid, spline-interpolated.

    Calling the table at t returns M_{jt} for 0 <= t <= t_max (M_0 = 1
    exactly) and 0 beyond the grid, where the modulus has decayed under
    `tail_level`.
    """

    ts: np.ndarray
    values: np.ndarray
    abs_error: float
    tail_level: float
    _spline_re: object = field(default=None, repr=False)
    _spline_im: object = field(default=None, repr=False)

    @property
    def t_max(self) -> float:
        return float(self.ts[-1])

    def __post_init__(self):
        from scipy.interpolate import CubicSpline
        knots = np.concatenate([[0.0], self.ts])
        vals = np.concatenate([[1.0 + 0.0j], self.values])
        self._spline_re = CubicSpline(knots, vals.real)
        self._spline_im = CubicSpline(knots, vals.imag)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        inside = t <= self.t_max
        out = np.zeros(t.shape, dtype=complex)
        tc = np.clip(t, 0.0, self.t_max)
        vals = self._spline_re(tc) + 1j * self._spline_im(tc)
        out[inside] = vals[inside]
        return out if out.shape else complex(out)


def _jt_values(cfg: SystemConfig, ts: np.ndarray, abs_tol: float):
    if cfg.direction is Direction.UPLINK and cfg.epsilon == 1.0:
        mv = uplink_moment_eps1(1j * ts, cfg.theta, cfg.alpha, abs_tol)
        return np.asarray(mv.value), mv.abs_error
    return _jt_fpc_fast(cfg, ts, abs_tol)


def imaginary_moment_table(cfg: SystemConfig, t_max: float = 40.0, step: float = 0.25,
                           abs_tol: float = 1e-6, t_limit: float = 120.0,
                           tail_level: float = 0.02) -> ImaginaryMomentTable:
    """Build the characteristic-function table M_{jt} for one configuration.

    Knots are dense (geometric) near t = 0 where the curve bends fastest,
    then uniform with the given step.  The grid extends in chunks until the
    modulus falls under tail_level or t_limit is reached.
    """
    cfg = validate_config(cfg)
    if cfg.power_model is PowerModel.TFPC:
        raise NotImplementedError("characteristic-function tables cover FPC only")
    head = np.geomspace(1e-4, step, 9)[:-1]
    ts = np.concatenate([head, np.arange(step, t_max + 1e-9, step)])
    vals, err = _jt_values(cfg, ts, abs_tol)
    while abs(vals[-1]) > tail_level and ts[-1] < t_limit - 1e-9:
        nxt = np.arange(ts[-1] + step, min(ts[-1] + 40.0, t_limit) + 1e-9, step)
        v2, e2 = _jt_values(cfg, nxt, abs_tol)
        ts = np.concatenate([ts, nxt])
        vals = np.concatenate([vals, v2])
        err = max(err, e2)
    return ImaginaryMomentTable(ts=ts, values=vals, abs_error=err, tail_level=tail_level)
