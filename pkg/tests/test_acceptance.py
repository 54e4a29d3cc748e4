"""Acceptance suite: one check per release criterion, one PASS/FAIL line each.

Run with -s to see the lines of passing criteria too; failures carry their
line and the per-point measurements in the failure message.

The simulation-backed criteria (5, 6, 7) share one pool of network
realizations sampled once per session: the sampled geometry does not depend on
the threshold, the compensation exponent, or the link direction, so every
configuration is evaluated on the same realizations (common random numbers;
each estimate stays unbiased).

Three criteria measure how closely the analytical approximations track the
exact network model (4 second leg, 5, 7).  Where the measured gap exceeds the
stated tolerance, the test prints the measurement and fails; the engines match
independent brute-force transcriptions to ~1e-10 and the simulator matches
clean-room reimplementations within Monte Carlo error, so these gaps are
properties of the approximations themselves, not implementation defects.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate as si

from metasir.core import Direction, PowerModel, SystemConfig, conditional_ps
from metasir.geometry import default_window, sample_realization
from metasir.metadist import (
    beta_ccdf,
    beta_fit,
    chebyshev_bounds,
    gil_pelaez_curve,
    markov_bounds,
    paley_zygmund,
)
from metasir.moments import (
    B1,
    MomentRequest,
    downlink_mld,
    downlink_mld_closed,
    downlink_moment,
    epsilon_opt_uplink,
    imaginary_moment_table,
    mean_and_variance,
    moment,
    rho_opt_downlink,
    uplink_moment,
    uplink_moment_eps1,
    uplink_tfpc_moment,
)
from metasir.montecarlo import empirical_ccdf, k_function_experiment, realization_samples

ACC_SEED = 20260815
N_POOL = 300

UL, DL = Direction.UPLINK, Direction.DOWNLINK


def _verdict(num, label, ok, detail=""):
    line = f"criterion {num:2d} ({label}): {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" | {detail}"
    print("\n" + line, flush=True)
    if not ok:
        pytest.fail(line, pytrace=False)


# ---- shared realization pool -----------------------------------------------------------

@pytest.fixture(scope="module")
def pool():
    window = default_window(1.0)
    nets = []
    for i in range(N_POOL):
        rng = np.random.default_rng(np.random.SeedSequence(ACC_SEED, spawn_key=(i,)))
        nets.append(sample_realization(SystemConfig(lam=1.0), window, rng))
    return nets


_PS_CACHE: dict = {}
_AN_CACHE: dict = {}
_TABLE_CACHE: dict = {}


def _key(cfg):
    return (cfg.direction.value, cfg.alpha, cfg.epsilon, cfg.theta)


def _pooled_ps(nets, cfg):
    key = _key(cfg)
    if key not in _PS_CACHE:
        _PS_CACHE[key] = np.concatenate(
            [realization_samples(net, cfg)[2] for net in nets])
    return _PS_CACHE[key]


def _analytic(cfg):
    key = _key(cfg)
    if key not in _AN_CACHE:
        _AN_CACHE[key] = mean_and_variance(cfg)
    return _AN_CACHE[key]


def _table(cfg):
    key = _key(cfg)
    if key not in _TABLE_CACHE:
        _TABLE_CACHE[key] = imaginary_moment_table(cfg)
    return _TABLE_CACHE[key]


# ---- 1: mean local delay phase transition ----------------------------------------------

def test_criterion_1_phase_transition_thresholds():
    ok, details = True, []
    for alpha, target, target_db in ((3.0, 0.625, -2.04), (4.0, 1.25, 0.97)):
        theta_c = B1 * (alpha / 2.0 - 1.0)
        db = 10.0 * math.log10(theta_c)
        below = downlink_mld(theta_c * (1 - 1e-9), alpha, 0.0)
        above = downlink_mld(theta_c * (1 + 1e-9), alpha, 0.0)
        good = (theta_c == target and abs(db - target_db) <= 0.1
                and math.isfinite(below) and math.isinf(above))
        ok &= good
        details.append(f"a={alpha:g}: theta_c={theta_c} ({db:+.3f} dB), "
                       f"finite below/infinite above={math.isfinite(below)}/{math.isinf(above)}")
    _verdict(1, "delay phase-transition thresholds", ok, "; ".join(details))


# ---- 2: closed forms vs the order -1 integral ------------------------------------------

def _delay_integral(theta, alpha, rho):
    """Independent route: direct quadrature of the order -1 reduction."""
    misr = (2.0 / alpha) / (1.0 - 2.0 / alpha)
    c = theta * misr / B1
    if rho == 0.0:
        return 1.0 / (1.0 - c) if c < 1.0 else math.inf
    a = c * math.gamma(1.0 + rho)
    val, _ = si.quad(lambda y: math.exp(a * y ** (1.0 - rho) - y), 0, math.inf,
                     limit=400)
    return val


def test_criterion_2_closed_form_delay():
    t0 = time.time()
    worst_ci = worst_tc = 0.0
    ok = True
    for alpha in (3.0, 4.0):
        delta = 2.0 / alpha
        for theta in (0.25, 1.0):
            for case, rho, eps in (("eps0", 0.0, 0.0),
                                   ("eps_half_delta", 0.5, delta / 2.0),
                                   ("eps_delta", 1.0, delta)):
                closed = downlink_mld_closed(theta, alpha, case)
                integral = _delay_integral(theta, alpha, rho)
                engine = float(np.real(downlink_moment(-1.0, theta, alpha, eps).value))
                if math.isinf(closed):
                    ok &= math.isinf(integral) and math.isinf(engine)
                    continue
                worst_ci = max(worst_ci, abs(closed - integral))
                worst_tc = max(worst_tc, abs(engine - closed))
    elapsed = time.time() - t0
    ok &= worst_ci <= 1e-6 and worst_tc <= 1e-3 and elapsed < 60.0
    _verdict(2, "closed-form vs integral mean local delay", ok,
             f"|closed-integral| {worst_ci:.2e} (tol 1e-6), "
             f"|engine-closed| {worst_tc:.2e} (tol 1e-3), "
             f"divergent point matched, {elapsed:.0f}s")


# ---- 3: fully compensated uplink, two routes ---------------------------------------------

def test_criterion_3_full_compensation_dual_route():
    t0 = time.time()
    worst = 0.0
    for alpha in (3.0, 4.0):
        for theta in (0.1, 1.0, 10.0):
            for b in (1.0, 2.0, -1.0):
                cfg = SystemConfig(alpha=alpha, epsilon=1.0, theta=theta)
                direct = uplink_moment(MomentRequest(cfg, b)).value
                reduced = uplink_moment_eps1(b, theta, alpha).value
                # scale-aware 1e-5: the order -1 values reach 2.7e7
                worst = max(worst, abs(direct - reduced) / max(1.0, abs(reduced)))
    elapsed = time.time() - t0
    ok = worst <= 1e-5 and elapsed < 300.0
    _verdict(3, "full-compensation dual-route consistency", ok,
             f"worst scaled diff {worst:.2e} (tol 1e-5) over 18 points, {elapsed:.0f}s")


# ---- 4: capped power control limits ------------------------------------------------------

def test_criterion_4_power_cap_limits():
    t0 = time.time()
    lam = 0.1
    thetas = [10.0 ** (db / 10.0) for db in range(-10, 12, 2)]
    worst_uncap = 0.0
    for b in (1.0, 2.0):
        for th in thetas:
            cfg = SystemConfig(lam=lam, alpha=4.0, epsilon=1.0, theta=th)
            fpc = uplink_moment(MomentRequest(cfg, b)).value
            capped = uplink_tfpc_moment(b, th, 4.0, 1.0, lam, 1e6).value
            worst_uncap = max(worst_uncap, abs(capped - fpc))
    p15 = 10.0 ** 1.5
    sup15 = 0.0
    for th in thetas:
        cfg = SystemConfig(lam=lam, alpha=4.0, epsilon=1.0, theta=th)
        fpc = uplink_moment(MomentRequest(cfg, 1.0)).value
        capped = uplink_tfpc_moment(1.0, th, 4.0, 1.0, lam, p15).value
        sup15 = max(sup15, abs(capped - fpc))
    elapsed = time.time() - t0
    ok = worst_uncap <= 1e-3 and sup15 <= 0.02 and elapsed < 600.0
    _verdict(4, "power-cap limits", ok,
             f"cap 1e6 vs uncapped {worst_uncap:.2e} (tol 1e-3); "
             f"cap 15 dB M1 sup deviation {sup15:.4f} (tol 0.02, known model gap, "
             f"peak near +2 dB); {elapsed:.0f}s")


# ---- 5: analytic moments vs simulation ----------------------------------------------------

GRID5 = [(UL, 4.0), (DL, 4.0), (DL, 3.0)]
EPS5 = (0.0, 0.5, 1.0)
THETA_DB5 = (-10.0, -5.0, 0.0, 5.0, 10.0)


def test_criterion_5_moments_vs_simulation(pool):
    t0 = time.time()
    lines, n_m1, n_var = [], 0, 0
    n_links = None
    for direction, alpha in GRID5:
        for eps in EPS5:
            for db in THETA_DB5:
                cfg = SystemConfig(alpha=alpha, epsilon=eps,
                                   theta=10.0 ** (db / 10.0), direction=direction)
                m1a, m2a, vara, _ = _analytic(cfg)
                ps = _pooled_ps(pool, cfg)
                n_links = ps.size
                m1e = float(np.mean(ps))
                vare = float(np.mean(ps * ps) - m1e * m1e)
                d1, dv = m1a - m1e, vara - vare
                f1, fv = abs(d1) > 0.02, abs(dv) > 0.01
                n_m1 += f1
                n_var += fv
                tag = ("*M1" if f1 else "   ") + ("*V" if fv else "  ")
                lines.append(
                    f"  {direction.value:8s} a={alpha:g} e={eps:3.1f} th={db:+4.0f}dB: "
                    f"M1 {m1a:.4f} vs {m1e:.4f} (d={d1:+.4f})  "
                    f"var {vara:.4f} vs {vare:.4f} (d={dv:+.4f}) {tag}")
    print("\n".join(lines), flush=True)
    elapsed = time.time() - t0
    ok = n_m1 == 0 and n_var == 0 and n_links >= 10_000 and elapsed < 900.0
    _verdict(5, "analytic moments vs simulation", ok,
             f"{n_m1}/45 M1 points beyond 0.02, {n_var}/45 variance points beyond "
             f"0.01 ({n_links} pooled links, known approximation gaps at mid "
             f"thresholds); {elapsed:.0f}s")


# ---- 6: reliability curve checkpoint ------------------------------------------------------

def test_criterion_6_five_percent_user(pool):
    cfg = SystemConfig(alpha=4.0, epsilon=0.5, theta=1.0, direction=UL)
    xs = np.arange(0.01, 0.991, 0.01)
    curve = gil_pelaez_curve(_table(cfg), xs)
    # the curve is nonincreasing: interpolate the 0.95 crossing on reversed axes
    x_gp = float(np.interp(0.95, curve.values[::-1], xs[::-1]))
    ps = _pooled_ps(pool, cfg)
    x_emp = float(np.quantile(ps, 0.05))
    sup = float(np.max(np.abs(curve.values - empirical_ccdf(ps, xs))))
    ok = abs(x_gp - 0.10) <= 0.05 and abs(x_emp - 0.10) <= 0.05 and sup <= 0.03
    _verdict(6, "five-percent user checkpoint", ok,
             f"95% reliability crossing: inversion x={x_gp:.3f}, empirical "
             f"x={x_emp:.3f} (both 0.10 +- 0.05); sup gap {sup:.4f} (tol 0.03)")


# ---- 7: beta approximation vs simulation ---------------------------------------------------

def test_criterion_7_beta_vs_simulation(pool):
    xs = np.arange(0.05, 0.9501, 0.01)
    lines, n_bad = [], 0
    for direction in (UL, DL):
        for eps in (0.0, 0.5, 1.0):
            cfg = SystemConfig(alpha=4.0, epsilon=eps, theta=1.0,
                               direction=direction)
            m1a, m2a, _, _ = _analytic(cfg)
            beta = beta_ccdf(beta_fit(m1a, m2a), xs)
            emp = empirical_ccdf(_pooled_ps(pool, cfg), xs)
            sup = float(np.max(np.abs(beta.values - emp)))
            bad = sup > 0.03
            n_bad += bad
            lines.append(f"  {direction.value:8s} e={eps:3.1f}: sup "
                         f"{sup:.4f}{' *' if bad else ''}")
    print("\n".join(lines), flush=True)
    _verdict(7, "beta approximation vs simulation", n_bad == 0,
             f"{n_bad}/6 configurations beyond 0.03 on x in [0.05,0.95] "
             f"(beta fitted to analytic moments; inherits their known gaps)")


# ---- 8: bounds sandwich ---------------------------------------------------------------------

def test_criterion_8_bounds_sandwich():
    cfg = SystemConfig(alpha=4.0, epsilon=0.5, theta=1.0, direction=UL)
    xs = np.arange(0.05, 0.9501, 0.05)
    curve = gil_pelaez_curve(_table(cfg), xs)
    tol = curve.metadata["max_abs_error"] + 1e-9
    ms = [float(np.real(moment(cfg, b).value)) for b in (1, 2, 3, 4)]
    worst = 0.0
    for x, g in zip(xs, curve.values):
        lowers, uppers = [], []
        for b in (1, 2, 3, 4):
            lo, hi = markov_bounds(ms[:b], b, x)
            lowers.append(lo)
            uppers.append(hi)
        cl, ch = chebyshev_bounds(ms[0], ms[1], x)
        lowers.append(cl)
        uppers.append(ch)
        if x < ms[0]:
            lowers.append(paley_zygmund(ms[0], ms[1], x / ms[0]))
        worst = max(worst, max(lowers) - g, g - min(uppers))
    ok = worst <= tol
    _verdict(8, "bounds sandwich the inversion curve", ok,
             f"worst violation {worst:.2e} (combined tolerance {tol:.2e}) "
             f"over 19 points, Markov orders 1-4 + Chebyshev + Paley-Zygmund")


# ---- 9: interferer second-order statistics ---------------------------------------------------

def test_criterion_9_k_function():
    t0 = time.time()
    radii = np.arange(0.2, 1.5001, 0.05)
    k_emp, k1, k2 = k_function_experiment(1.0, 1000, radii, seed=ACC_SEED)
    for i in range(0, len(radii), 3):
        print(f"  r={radii[i]:4.2f}  K={k_emp[i]:6.3f}  K1={k1[i]:6.3f} "
              f"(d={k_emp[i] - k1[i]:+.3f})  K2={k2[i]:6.3f}", flush=True)
    d1 = float(np.max(np.abs(k_emp - k1)))
    d2 = float(np.max(np.abs(k_emp - k2)))
    elapsed = time.time() - t0
    ok = d1 < d2 and d1 <= 0.15
    _verdict(9, "interferer K function", ok,
             f"sup|K-K1| {d1:.4f} (tol 0.15; the count model saturates its "
             f"deficit while the true one decays, gap peaks at the range edge) "
             f"< sup|K-K2| {d2:.4f}, 1000 realizations, {elapsed:.0f}s")


# ---- 10: optimizer asymptotics -----------------------------------------------------------------

def test_criterion_10_optimizer_asymptotics():
    e_hi = epsilon_opt_uplink(100.0, 4.0)
    r_lo = rho_opt_downlink(1e-3)
    r_hi = rho_opt_downlink(1e3)
    ok = e_hi < 0.1 and 0.45 <= r_lo <= 0.55 and 0.9 <= r_hi <= 1.0
    _verdict(10, "optimizer asymptotics", ok,
             f"eps_opt(theta=100)={e_hi:.3f} (<0.1), rho_opt(1e-3)={r_lo:.3f} "
             f"(in [0.45,0.55]), rho_opt(1e3)={r_hi:.3f} (in [0.9,1.0])")


# ---- 11: property suite ------------------------------------------------------------------------

def _oracle_ps(net, cfg):
    """Per-cell recomputation through the scalar conditional_ps path."""
    geom = (net.uplink_geometry if cfg.direction is UL else net.downlink_geometry)
    out = []
    for cell in np.flatnonzero(net.guarded):
        g = geom(int(cell))
        out.append(conditional_ps(g, cfg))
    return np.array(out)


def test_criterion_11_property_suite():
    checks = []

    cfgs = [SystemConfig(alpha=4.0, epsilon=0.5, theta=1.0, direction=UL),
            SystemConfig(alpha=3.0, epsilon=1.0, theta=1.0, direction=DL),
            SystemConfig(alpha=4.0, epsilon=0.0, theta=0.3, direction=DL)]
    mono = var_ok = True
    for cfg in cfgs:
        ms = [float(np.real(moment(cfg, b).value)) for b in (1, 2, 3, 4)]
        mono &= all(a > b for a, b in zip(ms, ms[1:])) and ms[0] < 1.0
        var_ok &= (ms[1] - ms[0] ** 2) >= 0.0
    checks.append(("moment monotonicity in order", mono))
    checks.append(("variance nonnegative", var_ok))

    cfg = SystemConfig(alpha=4.0, epsilon=0.5, theta=1.0, direction=UL)
    table = _table(cfg)
    ts = np.linspace(0.0, table.t_max, 200)
    checks.append(("imaginary-order modulus <= 1",
                   bool(np.all(np.abs(table(ts)) <= 1.0 + 1e-9))))

    xs = np.arange(0.0025, 0.99751, 0.005)
    curve = gil_pelaez_curve(table, xs)
    area = float(np.trapezoid(curve.values, xs))
    area += 0.0025 * (1.0 + curve.values[0]) / 2.0       # [0, first] strip
    area += 0.0025 * curve.values[-1] / 2.0              # [last, 1] strip
    m1 = float(np.real(moment(cfg, 1).value))
    checks.append((f"curve area {area:.5f} = M1 {m1:.5f} within 1e-3",
                   abs(area - m1) <= 1e-3))

    lam_drift = 0.0
    for b in (1.0, 2.0):
        vals = [moment(SystemConfig(lam=lam, alpha=4.0, epsilon=0.7, theta=1.0), b).value
                for lam in (0.25, 4.0)]
        lam_drift = max(lam_drift, abs(vals[0] - vals[1]))
    checks.append((f"uncapped moments density-free ({lam_drift:.1e})",
                   lam_drift <= 1e-9))

    rng = np.random.default_rng(np.random.SeedSequence(ACC_SEED, spawn_key=(10_000,)))
    net = sample_realization(SystemConfig(lam=3.0), default_window(3.0) , rng)
    worst = 0.0
    for cfg in (SystemConfig(alpha=4.0, epsilon=0.5, theta=1.3, direction=UL),
                SystemConfig(alpha=3.0, epsilon=1.0, theta=0.6, direction=DL),
                SystemConfig(alpha=3.5, epsilon=1.0, theta=0.8, direction=UL,
                             power_model=PowerModel.TFPC, p_hat=1.2)):
        fast = realization_samples(net, cfg)[2]
        worst = max(worst, float(np.max(np.abs(fast - _oracle_ps(net, cfg)))))
    checks.append((f"kernel vs scalar oracle ({worst:.1e})", worst <= 1e-12))

    failed = [name for name, good in checks if not good]
    detail = "; ".join(f"{name} {'ok' if good else 'FAIL'}" for name, good in checks)
    _verdict(11, "property suite", not failed, detail)
