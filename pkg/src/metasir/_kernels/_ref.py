"""Reference implementation of the per-link interference product.

Kept in plain numpy so results stay verifiable without a compiler; the
broadcast builds (m, n) temporaries, which is what the compiled variant
avoids.
"""

import numpy as np

BACKEND = "numpy"


def ps_products(rx, R, p0, tx, px, own, theta, alpha):
    """Success probabilities of m links against n candidate interferers.

    ps[k] = prod over j != own[k] of
            1 / (1 + theta * (px[j]/p0[k]) * (R[k]/|rx[k]-tx[j]|)^alpha)

    own[k] indexes the transmitter serving receiver k inside tx; it is
    skipped.  All arrays are float64; own is integer.
    """
    rx = np.asarray(rx, dtype=float)
    tx = np.asarray(tx, dtype=float)
    R = np.asarray(R, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    px = np.asarray(px, dtype=float)
    own = np.asarray(own)
    d2 = ((rx[:, None, :] - tx[None, :, :]) ** 2).sum(axis=-1)
    with np.errstate(divide="ignore"):
        ratio = theta * (px[None, :] / p0[:, None]) \
            * (R[:, None] ** 2 / d2) ** (0.5 * alpha)
    ratio[np.arange(len(rx)), own] = 0.0
    return np.exp(-np.log1p(ratio).sum(axis=1))
