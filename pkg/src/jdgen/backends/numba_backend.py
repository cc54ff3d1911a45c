"""Numba-jitted implementations of the hot kernels.

Mirrors ``numpy_backend`` operation for operation; keep the two in sync.
"""

import numpy as np
from numba import njit

NAME = "numba"

BESSEL_SWITCH = 13.0
SERIES_TERMS = 40
ASYM_TERMS = 15
SNAP = 1e-9


@njit(cache=True)
def _j0_scalar(x):
    if x < BESSEL_SWITCH:
        q = 0.25 * x * x
        term = 1.0
        acc = 1.0
        for m in range(1, SERIES_TERMS + 1):
            term = term * (-q) / (m * m)
            acc = acc + term
        return acc
    p = 1.0
    q = 0.0
    c = 1.0
    for j in range(1, ASYM_TERMS + 1):
        c = c * (0.0 - (2.0 * j - 1.0) ** 2) / (8.0 * j * x)
        if j % 4 == 0 or j % 4 == 1:
            if j % 2 == 1:
                q = q + c
            else:
                p = p + c
        else:
            if j % 2 == 1:
                q = q - c
            else:
                p = p - c
    chi = x - 0.25 * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


@njit(cache=True)
def _j1_scalar(x):
    if x < BESSEL_SWITCH:
        q = 0.25 * x * x
        term = 0.5 * x
        acc = term
        for m in range(1, SERIES_TERMS + 1):
            term = term * (-q) / (m * (m + 1.0))
            acc = acc + term
        return acc
    p = 1.0
    q = 0.0
    c = 1.0
    for j in range(1, ASYM_TERMS + 1):
        c = c * (4.0 - (2.0 * j - 1.0) ** 2) / (8.0 * j * x)
        if j % 4 == 0 or j % 4 == 1:
            if j % 2 == 1:
                q = q + c
            else:
                p = p + c
        else:
            if j % 2 == 1:
                q = q - c
            else:
                p = p - c
    chi = x - 0.75 * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


@njit(cache=True)
def _j0_arr(x):
    out = np.empty_like(x)
    for i in range(x.size):
        out[i] = _j0_scalar(x[i])
    return out


@njit(cache=True)
def _j1_arr(x):
    out = np.empty_like(x)
    for i in range(x.size):
        out[i] = _j1_scalar(x[i])
    return out


def j0(x):
    """Bessel J0 elementwise for x >= 0 (float64 array in, array out)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    return _j0_arr(x.ravel()).reshape(x.shape)


def j1(x):
    """Bessel J1 elementwise for x >= 0."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    return _j1_arr(x.ravel()).reshape(x.shape)


@njit(cache=True)
def _bilinear_pair(a, b, pos_t, pos_x, va, vb):
    nt, nx = a.shape
    for i in range(pos_t.size):
        pt = pos_t[i]
        it = int(pt)
        if it > nt - 2:
            it = nt - 2
        ft = pt - it
        if ft > 1.0 - SNAP:
            it += 1
            ft = 0.0
        elif ft < SNAP:
            ft = 0.0
        px = pos_x[i]
        ix = int(px)
        if ix > nx - 2:
            ix = nx - 2
        fx = px - ix
        if fx > 1.0 - SNAP:
            ix += 1
            fx = 0.0
        elif fx < SNAP:
            fx = 0.0
        it1 = it + 1
        if it1 > nt - 1:
            it1 = nt - 1
        ix1 = ix + 1
        if ix1 > nx - 1:
            ix1 = nx - 1
        w00 = (1.0 - ft) * (1.0 - fx)
        w01 = (1.0 - ft) * fx
        w10 = ft * (1.0 - fx)
        w11 = ft * fx
        va[i] = w00 * a[it, ix] + w01 * a[it, ix1] + w10 * a[it1, ix] + w11 * a[it1, ix1]
        vb[i] = w00 * b[it, ix] + w01 * b[it, ix1] + w10 * b[it1, ix] + w11 * b[it1, ix1]


def bilinear_pair(a, b, pos_t, pos_x):
    """Bilinear lookup of two (nt, nx) tables at fractional grid positions.

    Positions must already be clipped to [0, n-1].  Queries within SNAP of a
    node are snapped so that on-node lookups return stored values exactly.
    """
    pos_t = np.ascontiguousarray(pos_t, dtype=np.float64)
    pos_x = np.ascontiguousarray(pos_x, dtype=np.float64)
    va = np.empty_like(pos_t)
    vb = np.empty_like(pos_t)
    _bilinear_pair(a, b, pos_t.ravel(), pos_x.ravel(), va.ravel(), vb.ravel())
    return va, vb
