"""Monte Carlo arm: pooled per-link success probabilities over many networks.

Each realization contributes the links of ALL guarded cells, not only the
cell at the origin; interior cells are exchangeable, so pooling cuts the
variance of every estimate without biasing it.  The downlink simulator uses
the actual user of each cell, so the correlation between a link's own
distance and its interferers' serving distances is fully present; any gap
to the analytic curves therefore measures the quality of the independence
approximation made there, not a simulator artifact.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._kernels import BACKEND, ps_products
from .core import Direction, MomentValue, PowerModel, SystemConfig, transmit_power, validate_config
from .geometry import (
    Disk,
    NetworkRealization,
    PointSet,
    default_window,
    k1_analytic,
    k2_analytic,
    ripley_k,
    sample_realization,
)
from .metadist import MetaCurve, Provenance

__all__ = [
    "EmptySampleSet",
    "HeavyTailWarning",
    "PsSampleSet",
    "realization_samples",
    "run_experiment",
    "empirical_moment",
    "empirical_ccdf",
    "empirical_meta",
    "k_function_experiment",
    "write_samples",
    "read_samples",
]

# margin of extra window beyond the largest K radius: users within r of the
# origin belong to cells whose BS sits within r plus a few mean spacings
_K_WINDOW_MARGIN = 4.5


class EmptySampleSet(ValueError):
    """No links to aggregate."""


class HeavyTailWarning(UserWarning):
    """A negative-order empirical moment is dominated by a few links."""


@dataclass(frozen=True)
class PsSampleSet:
    """Per-link conditional success probabilities pooled over realizations.

    Parallel arrays: link i was the link of cell cell_ids[i] in realization
    realization_ids[i], with serving distance serving[i] and
    n_interferers[i] interfering transmitters.
    """

    samples: np.ndarray
    realization_ids: np.ndarray
    cell_ids: np.ndarray
    serving: np.ndarray
    n_interferers: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "realization_ids", np.asarray(self.realization_ids, dtype=int))
        object.__setattr__(self, "cell_ids", np.asarray(self.cell_ids, dtype=int))
        object.__setattr__(self, "serving", np.asarray(self.serving, dtype=float))
        object.__setattr__(self, "n_interferers", np.asarray(self.n_interferers, dtype=int))
        for name in ("realization_ids", "cell_ids", "serving", "n_interferers"):
            if getattr(self, name).shape != s.shape:
                raise ValueError(f"{name} must align with samples one-to-one")
        if s.size and (s.min() < 0.0 or s.max() > 1.0):
            raise ValueError("success probabilities must lie in [0,1]")
        recorded = self.metadata.get("n_links")
        if recorded is not None and recorded != s.size:
            raise ValueError(f"metadata records {recorded} links but {s.size} are present")

    @property
    def n_links(self) -> int:
        return self.samples.size


def realization_samples(net: NetworkRealization, cfg: SystemConfig):
    """Success probability of every guarded link of one realization.

    Returns (cell_ids, serving_distances, ps).  Uplink: the BS of each
    guarded cell receives from its own user while the users of all other
    cells interfere.  Downlink: the user of each guarded cell receives from
    its BS while all other BSs interfere, each transmitting with the power
    set by its own serving distance.
    """
    cells = np.flatnonzero(net.guarded)
    r_all = net.serving_distances()
    px_all = np.asarray(transmit_power(r_all, cfg), dtype=float)
    serving = r_all[cells]
    if cfg.direction is Direction.UPLINK:
        rx, tx = net.bs.points[cells], net.users
    else:
        rx, tx = net.users[cells], net.bs.points
    ps = ps_products(rx, serving, px_all[cells], tx, px_all, cells, cfg.theta, cfg.alpha)
    return cells, serving, ps


def _one_realization(cfg: SystemConfig, seed, idx: int, window):
    # spawn_key=(idx,) is the documented per-realization stream: any worker
    # rebuilds stream idx from (seed, idx) alone, so results cannot depend
    # on how realizations are distributed over workers
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(idx,)))
    try:
        net = sample_realization(cfg, window=window, rng=rng)
    except (ValueError, RuntimeError) as exc:
        raise type(exc)(f"realization {idx}: {exc}") from exc
    cells, serving, ps = realization_samples(net, cfg)
    return idx, cells, serving, ps, net.n_cells - 1, net.guard_radius


def run_experiment(cfg: SystemConfig, n_realizations: int, seed,
                   n_jobs: int = 1, window=None) -> PsSampleSet:
    """Pool the guarded links of n_realizations independent networks."""
    validate_config(cfg)
    if n_realizations < 1:
        raise ValueError("need at least one realization")
    if window is None:
        window = default_window(cfg.lam)
    args = [(cfg, seed, i, window) for i in range(n_realizations)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_one_realization, *zip(*args)))
    else:
        results = [_one_realization(*a) for a in args]
    results.sort(key=lambda r: r[0])  # bit-stable output whatever the worker order
    rid = np.concatenate([np.full(len(r[1]), r[0]) for r in results])
    cells = np.concatenate([r[1] for r in results])
    serving = np.concatenate([r[2] for r in results])
    ps = np.concatenate([r[3] for r in results])
    n_intf = np.concatenate([np.full(len(r[1]), r[4]) for r in results])
    meta = {
        "cfg": _cfg_dict(cfg),
        "seed": seed,
        "n_realizations": n_realizations,
        "n_links": int(ps.size),
        "guard": {
            "rule": "interior Voronoi cell and BS within the guard radius",
            "sampling": "all guarded cells per realization",
            "guard_radius": results[0][5],
            "window_radius": getattr(window, "radius", None),
        },
        "kernel_backend": BACKEND,
    }
    return PsSampleSet(samples=ps, realization_ids=rid, cell_ids=cells,
                       serving=serving, n_interferers=n_intf, metadata=meta)


def _nonempty(sample_set: PsSampleSet) -> PsSampleSet:
    if sample_set.n_links == 0:
        raise EmptySampleSet("sample set holds no links")
    return sample_set


def empirical_moment(sample_set: PsSampleSet, b) -> MomentValue:
    """(1/n) sum samples_i^b with an iid standard-error estimate.

    For orders with negative real part the population moment may not exist;
    the sample mean is still reported, flagged with a HeavyTailWarning when
    the top 1% of summands carries over half the mass.
    """
    s = _nonempty(sample_set).samples
    b = complex(b)
    with np.errstate(divide="ignore"):
        vals = s ** b.real if b.imag == 0.0 else s.astype(complex) ** b
    if not np.all(np.isfinite(vals)):
        warnings.warn(HeavyTailWarning(
            "links with vanishing success probability make this order diverge"))
        return MomentValue(value=math.inf, abs_error=math.inf)
    if b.real < 0.0:
        mass = np.abs(vals)
        k = max(1, math.ceil(0.01 * mass.size))
        top = float(np.sort(mass)[-k:].sum())
        if top > 0.5 * float(mass.sum()):
            warnings.warn(HeavyTailWarning(
                f"top {k} of {mass.size} links carry {top / float(mass.sum()):.0%} "
                f"of the order-{b.real:g} moment mass; the estimate is unstable"))
    mean = vals.mean()
    se = math.sqrt(float(np.mean(np.abs(vals - mean) ** 2)) / s.size)
    value = complex(mean) if b.imag != 0.0 else float(np.real(mean))
    return MomentValue(value=value, abs_error=se)


def empirical_ccdf(samples, x):
    """Fraction of samples strictly above each x."""
    s = np.sort(np.asarray(samples, dtype=float))
    frac = 1.0 - np.searchsorted(s, np.asarray(x, dtype=float), side="right") / s.size
    return frac if frac.shape else float(frac)


def empirical_meta(sample_set: PsSampleSet, x_grid) -> MetaCurve:
    """Complementary ECDF of the pooled links, nonincreasing by construction."""
    s = _nonempty(sample_set).samples
    meta = {"n_links": int(s.size),
            "seed": sample_set.metadata.get("seed"),
            "cfg": sample_set.metadata.get("cfg")}
    return MetaCurve(x_grid=np.asarray(x_grid, dtype=float),
                     values=empirical_ccdf(s, x_grid),
                     provenance=Provenance.EMPIRICAL, metadata=meta)


def k_function_experiment(lam: float, n_realizations: int, radii, seed=None):
    """Empirical K of the interfering users around the typical BS.

    Returns (K_emp, K1, K2): the realization-averaged empirical curve plus
    the two analytic candidates (distance-dependent thinning rate 12/5
    versus the naive rate-1 independent-cell intensity).  The window only
    needs to cover the largest radius plus a margin, so it is kept small.
    """
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    if n_realizations < 1:
        raise ValueError("need at least one realization")
    radii = np.asarray(radii, dtype=float)
    window = Disk(center=(0.0, 0.0),
                  radius=float(radii.max()) + _K_WINDOW_MARGIN / math.sqrt(lam))
    cfg = SystemConfig(lam=lam)
    acc = np.zeros(radii.shape)
    for idx in range(n_realizations):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(idx,)))
        net = sample_realization(cfg, window=window, rng=rng,
                                 require_origin_interior=False)
        interferers = PointSet(points=net.users[1:], window=window)
        acc += ripley_k(interferers, "typical_bs", radii, lam=lam)
    return acc / n_realizations, k1_analytic(radii, lam), k2_analytic(radii, lam)


# ---- persistence --------------------------------------------------------------------

_CSV_FIELDS = ("realization_id", "cell_id", "R", "n_interferers", "ps")


def _cfg_dict(cfg: SystemConfig) -> dict:
    return {
        "lam": cfg.lam, "alpha": cfg.alpha, "epsilon": cfg.epsilon,
        "theta": cfg.theta, "direction": cfg.direction.value,
        "power_model": cfg.power_model.value,
        "p_hat": "inf" if math.isinf(cfg.p_hat) else cfg.p_hat,
    }


def _cfg_from_dict(d: dict) -> SystemConfig:
    p_hat = d.get("p_hat", "inf")
    return SystemConfig(
        lam=d["lam"], alpha=d["alpha"], epsilon=d["epsilon"], theta=d["theta"],
        direction=Direction(d["direction"]), power_model=PowerModel(d["power_model"]),
        p_hat=math.inf if p_hat == "inf" else float(p_hat),
    )


def write_samples(sample_set: PsSampleSet, path) -> Path:
    """One CSV row per link plus a JSON metadata sidecar; returns the sidecar path."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_FIELDS)
        for row in zip(sample_set.realization_ids, sample_set.cell_ids,
                       sample_set.serving, sample_set.n_interferers, sample_set.samples):
            writer.writerow((int(row[0]), int(row[1]), repr(float(row[2])),
                             int(row[3]), repr(float(row[4]))))
    sidecar = path.with_suffix(".meta.json")
    sidecar.write_text(json.dumps(sample_set.metadata, indent=2, sort_keys=True))
    return sidecar


def read_samples(path) -> PsSampleSet:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != _CSV_FIELDS:
            raise ValueError(f"unexpected CSV header {header}")
        rows = list(reader)
    sidecar = path.with_suffix(".meta.json")
    meta = json.loads(sidecar.read_text()) if sidecar.exists() else {}
    cols = list(zip(*rows)) if rows else [[]] * 5
    return PsSampleSet(
        samples=np.array(cols[4], dtype=float),
        realization_ids=np.array(cols[0], dtype=int),
        cell_ids=np.array(cols[1], dtype=int),
        serving=np.array(cols[2], dtype=float),
        n_interferers=np.array(cols[3], dtype=int),
        metadata=meta,
    )
