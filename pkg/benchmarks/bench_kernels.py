"""Times the per-link interference product: compiled vs numpy reference.

Run from the repository root:

    python3 benchmarks/bench_kernels.py

The workload mirrors one Monte Carlo realization at lambda = 1 (about 300
measured links against 700 transmitters) and a 10x larger one.
"""

import time

import numpy as np

from metasir._kernels import _ref

try:
    from metasir._kernels import _fast
except ImportError:
    _fast = None


def workload(m, n, seed=0):
    rng = np.random.default_rng(seed)
    rx = rng.random((m, 2)) * 30.0
    tx = np.vstack([rx + rng.normal(scale=0.3, size=(m, 2)),
                    rng.random((n - m, 2)) * 30.0])
    R = np.hypot(*(tx[:m] - rx).T)
    p0 = rng.random(m) + 0.5
    px = np.concatenate([p0, rng.random(n - m) + 0.5])
    own = np.arange(m, dtype=np.int64)
    return (np.ascontiguousarray(rx), np.ascontiguousarray(R),
            np.ascontiguousarray(p0), np.ascontiguousarray(tx),
            np.ascontiguousarray(px), own)


def timed(fn, args, repeats=7):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args, 1.0, 4.0)
        best = min(best, time.perf_counter() - t0)
    return best, np.asarray(out)


def main():
    for m, n in [(300, 700), (3000, 7000)]:
        args = workload(m, n)
        t_ref, v_ref = timed(_ref.ps_products, args)
        line = f"m={m:5d} n={n:5d}  numpy {t_ref * 1e3:8.2f} ms"
        if _fast is not None:
            t_fast, v_fast = timed(_fast.ps_products, args)
            worst = float(np.max(np.abs(v_ref - v_fast)))
            line += f"  cython {t_fast * 1e3:8.2f} ms  speedup {t_ref / t_fast:5.2f}x  |diff| {worst:.2e}"
        else:
            line += "  (compiled backend unavailable)"
        print(line)


if __name__ == "__main__":
    main()
