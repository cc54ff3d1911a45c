"""Pure-numpy implementations of the hot kernels.

Mirrors ``numba_backend`` operation for operation; keep the two in sync.
"""

import numpy as np

NAME = "numpy"

# Regime switch and fixed term counts shared with the numba backend.  The
# power series loses ~5 digits to cancellation near the switch point and the
# asymptotic series bottoms out near e^{-2x}; x=13 keeps both below 1e-11.
BESSEL_SWITCH = 13.0
SERIES_TERMS = 40
ASYM_TERMS = 15
SNAP = 1e-9


def _series_j0(x):
    q = 0.25 * x * x
    term = np.ones_like(x)
    acc = np.ones_like(x)
    for m in range(1, SERIES_TERMS + 1):
        term = term * (-q) / (m * m)
        acc = acc + term
    return acc


def _series_j1(x):
    q = 0.25 * x * x
    term = 0.5 * x
    acc = term.copy()
    for m in range(1, SERIES_TERMS + 1):
        term = term * (-q) / (m * (m + 1.0))
        acc = acc + term
    return acc


def _asym(mu, nu, x):
    # Hankel expansion: J_nu(x) ~ sqrt(2/(pi x)) (P cos(chi) - Q sin(chi)).
    p = np.ones_like(x)
    q = np.zeros_like(x)
    c = np.ones_like(x)
    for j in range(1, ASYM_TERMS + 1):
        c = c * (mu - (2.0 * j - 1.0) ** 2) / (8.0 * j * x)
        if j % 4 in (0, 1):
            if j % 2 == 1:
                q = q + c
            else:
                p = p + c
        else:
            if j % 2 == 1:
                q = q - c
            else:
                p = p - c
    chi = x - (0.5 * nu + 0.25) * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def j0(x):
    """Bessel J0 elementwise for x >= 0 (float64 array in, array out)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    small = x < BESSEL_SWITCH
    if small.any():
        out[small] = _series_j0(x[small])
    large = ~small
    if large.any():
        out[large] = _asym(0.0, 0.0, x[large])
    return out


def j1(x):
    """Bessel J1 elementwise for x >= 0."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    small = x < BESSEL_SWITCH
    if small.any():
        out[small] = _series_j1(x[small])
    large = ~small
    if large.any():
        out[large] = _asym(4.0, 1.0, x[large])
    return out


def bilinear_pair(a, b, pos_t, pos_x):
    """Bilinear lookup of two (nt, nx) tables at fractional grid positions.

    Positions must already be clipped to [0, n-1].  Queries within SNAP of a
    node are snapped so that on-node lookups return stored values exactly.
    """
    nt, nx = a.shape
    it = pos_t.astype(np.int64)
    np.clip(it, 0, nt - 2, out=it)
    ft = pos_t - it
    snap_hi = ft > 1.0 - SNAP
    it[snap_hi] += 1
    ft[snap_hi] = 0.0
    ft[ft < SNAP] = 0.0

    ix = pos_x.astype(np.int64)
    np.clip(ix, 0, nx - 2, out=ix)
    fx = pos_x - ix
    snap_hi = fx > 1.0 - SNAP
    ix[snap_hi] += 1
    fx[snap_hi] = 0.0
    fx[fx < SNAP] = 0.0

    it1 = np.minimum(it + 1, nt - 1)
    ix1 = np.minimum(ix + 1, nx - 1)
    w00 = (1.0 - ft) * (1.0 - fx)
    w01 = (1.0 - ft) * fx
    w10 = ft * (1.0 - fx)
    w11 = ft * fx
    va = w00 * a[it, ix] + w01 * a[it, ix1] + w10 * a[it1, ix] + w11 * a[it1, ix1]
    vb = w00 * b[it, ix] + w01 * b[it, ix1] + w10 * b[it1, ix] + w11 * b[it1, ix1]
    return va, vb
