"""Low-level numba kernels for the pairwise magnitude convolutions.

Measures live on a fixed support vector of length B+2:
index 0 is the exact atom at m=0, indices 1..B are the interior cell
centers (j-0.5)/B, index B+1 is the exact atom at m=1.  Mass produced at
an off-support magnitude is deposited on the two bracketing support
points with the mean-preserving split, so support points themselves are
hit exactly (atom algebra stays exact, BEC-type inputs never leak into
the interior).

The variable-node rule uses the tanh addition law in closed form:
a pair of magnitudes (a, b) emits (a+b)/(1+ab) with weight (1+ab)/2 and
|a-b|/(1-ab) with weight (1-ab)/2.  The check-node rule is the plain
product a*b.  Symmetric variants halve the work for x * x.
"""

import numpy as np
from numba import njit, prange

# Fixed chunk count keeps parallel accumulation deterministic regardless
# of the number of worker threads.
_NCHUNK = 8


@njit(cache=True, fastmath=True, inline="always")
def _put(buf, B, m, w):
    t = m * B - 0.5
    if t <= 0.0:
        f = 2.0 * t + 1.0
        if f < 0.0:
            f = 0.0
        buf[0] += w * (1.0 - f)
        buf[1] += w * f
    elif t >= B - 1.0:
        f = 2.0 * (t - (B - 1.0))
        if f > 1.0:
            f = 1.0
        buf[B] += w * (1.0 - f)
        buf[B + 1] += w * f
    else:
        j = int(t)
        f = t - j
        buf[j + 1] += w * (1.0 - f)
        buf[j + 2] += w * f


@njit(cache=True, fastmath=True, inline="always")
def _var_pair(buf, B, a, b, w):
    ab = a * b
    wp = 0.5 * (1.0 + ab)
    _put(buf, B, (a + b) / (1.0 + ab), w * wp)
    den = 1.0 - ab
    if den > 0.0:
        d = a - b
        if d < 0.0:
            d = -d
        _put(buf, B, d / den, w * (1.0 - wp))


@njit(cache=True, fastmath=True)
def _check_serial(v1, w1, v2, w2, B):
    out = np.zeros(B + 2)
    for i in range(v1.shape[0]):
        a = v1[i]
        wa = w1[i]
        for j in range(v2.shape[0]):
            _put(out, B, a * v2[j], wa * w2[j])
    return out


@njit(cache=True, fastmath=True, parallel=True)
def _check_parallel(v1, w1, v2, w2, B):
    n1 = v1.shape[0]
    n2 = v2.shape[0]
    buf = np.zeros((_NCHUNK, B + 2))
    for c in prange(_NCHUNK):
        b = buf[c]
        for i in range(n1 * c // _NCHUNK, n1 * (c + 1) // _NCHUNK):
            a = v1[i]
            wa = w1[i]
            for j in range(n2):
                _put(b, B, a * v2[j], wa * w2[j])
    out = np.zeros(B + 2)
    for c in range(_NCHUNK):
        out += buf[c]
    return out


@njit(cache=True, fastmath=True)
def _check_sym_serial(v, w, B):
    out = np.zeros(B + 2)
    n = v.shape[0]
    for i in range(n):
        a = v[i]
        wa = w[i]
        _put(out, B, a * a, wa * wa)
        wa2 = 2.0 * wa
        for j in range(i + 1, n):
            _put(out, B, a * v[j], wa2 * w[j])
    return out


@njit(cache=True, fastmath=True, parallel=True)
def _check_sym_parallel(v, w, B):
    n = v.shape[0]
    buf = np.zeros((_NCHUNK, B + 2))
    for c in prange(_NCHUNK):
        b = buf[c]
        # strided rows balance the triangular loop across chunks
        for i in range(c, n, _NCHUNK):
            a = v[i]
            wa = w[i]
            _put(b, B, a * a, wa * wa)
            wa2 = 2.0 * wa
            for j in range(i + 1, n):
                _put(b, B, a * v[j], wa2 * w[j])
    out = np.zeros(B + 2)
    for c in range(_NCHUNK):
        out += buf[c]
    return out


@njit(cache=True, fastmath=True)
def _var_serial(v1, w1, v2, w2, B):
    out = np.zeros(B + 2)
    for i in range(v1.shape[0]):
        a = v1[i]
        wa = w1[i]
        for j in range(v2.shape[0]):
            _var_pair(out, B, a, v2[j], wa * w2[j])
    return out


@njit(cache=True, fastmath=True, parallel=True)
def _var_parallel(v1, w1, v2, w2, B):
    n1 = v1.shape[0]
    n2 = v2.shape[0]
    buf = np.zeros((_NCHUNK, B + 2))
    for c in prange(_NCHUNK):
        b = buf[c]
        for i in range(n1 * c // _NCHUNK, n1 * (c + 1) // _NCHUNK):
            a = v1[i]
            wa = w1[i]
            for j in range(n2):
                _var_pair(b, B, a, v2[j], wa * w2[j])
    out = np.zeros(B + 2)
    for c in range(_NCHUNK):
        out += buf[c]
    return out


@njit(cache=True, fastmath=True)
def _var_sym_serial(v, w, B):
    out = np.zeros(B + 2)
    n = v.shape[0]
    for i in range(n):
        a = v[i]
        wa = w[i]
        _var_pair(out, B, a, a, wa * wa)
        wa2 = 2.0 * wa
        for j in range(i + 1, n):
            _var_pair(out, B, a, v[j], wa2 * w[j])
    return out


@njit(cache=True, fastmath=True, parallel=True)
def _var_sym_parallel(v, w, B):
    n = v.shape[0]
    buf = np.zeros((_NCHUNK, B + 2))
    for c in prange(_NCHUNK):
        b = buf[c]
        for i in range(c, n, _NCHUNK):
            a = v[i]
            wa = w[i]
            _var_pair(b, B, a, a, wa * wa)
            wa2 = 2.0 * wa
            for j in range(i + 1, n):
                _var_pair(b, B, a, v[j], wa2 * w[j])
    out = np.zeros(B + 2)
    for c in range(_NCHUNK):
        out += buf[c]
    return out


_PARALLEL_CUTOFF = 200_000  # pair count below which threading is not worth it


def check_conv_raw(v1, w1, v2, w2, B):
    if v1.shape[0] * v2.shape[0] < _PARALLEL_CUTOFF:
        return _check_serial(v1, w1, v2, w2, B)
    return _check_parallel(v1, w1, v2, w2, B)


def check_conv_sym_raw(v, w, B):
    if v.shape[0] * v.shape[0] < 2 * _PARALLEL_CUTOFF:
        return _check_sym_serial(v, w, B)
    return _check_sym_parallel(v, w, B)


def var_conv_raw(v1, w1, v2, w2, B):
    if v1.shape[0] * v2.shape[0] < _PARALLEL_CUTOFF // 2:
        return _var_serial(v1, w1, v2, w2, B)
    return _var_parallel(v1, w1, v2, w2, B)


def var_conv_sym_raw(v, w, B):
    if v.shape[0] * v.shape[0] < _PARALLEL_CUTOFF:
        return _var_sym_serial(v, w, B)
    return _var_sym_parallel(v, w, B)


@njit(cache=True)
def deposit_points(ms, ws, B):
    """Deposit off-grid point masses (mean-preserving split) onto the support."""
    out = np.zeros(B + 2)
    for i in range(ms.shape[0]):
        _put(out, B, ms[i], ws[i])
    return out
