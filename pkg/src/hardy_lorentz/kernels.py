"""Hot float kernels, each with a numba and a pure-numpy implementation.

The numba path is used when numba imports and ``HARDY_LORENTZ_PURE_NUMPY``
is unset (or "0"). Both paths are importable directly as ``*_numba`` and
``*_numpy`` so tests and the benchmark can compare them.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

PURE_NUMPY = os.environ.get("HARDY_LORENTZ_PURE_NUMPY", "0") not in ("", "0")
USE_NUMBA = numba is not None and not PURE_NUMPY


def _njit(f):
    if numba is None:
        return f
    return numba.njit(cache=False)(f)


# -- antichain sums ---------------------------------------------------------
# rows: (n, M) bool membership of stop sets; a, b: per-node weights.
# Returns per-row sums of a and b over the members.


@_njit
def antichain_sums_numba(rows, a, b):
    n, m = rows.shape
    sa = np.zeros(n)
    sb = np.zeros(n)
    for i in range(n):
        ta = 0.0
        tb = 0.0
        for j in range(m):
            if rows[i, j]:
                ta += a[j]
                tb += b[j]
        sa[i] = ta
        sb[i] = tb
    return sa, sb


def antichain_sums_numpy(rows, a, b):
    r = rows.astype(np.float64)
    return r @ a, r @ b


# -- exhaustive stopping-time sequence search -------------------------------
# Slot k of the window takes any pool entry j with numerator weight c[j] and
# denominator weight w[j]; scale[k] = 2**k. Maximises
#     sum_k scale[k] c[x_k] / (sum_k (scale[k] w[x_k])**q)**(1/q)
# over all len(c)**K assignments; assignments with zero denominator are
# skipped. Returns (best ratio, best assignment), ratio -1 if none is valid.


@_njit
def sequence_search_numba(c, w, scale, q):
    m = c.shape[0]
    k_len = scale.shape[0]
    idx = np.zeros(k_len, dtype=np.int64)
    best = -1.0
    best_idx = np.zeros(k_len, dtype=np.int64)
    # per-slot term tables
    num = np.empty((k_len, m))
    den = np.empty((k_len, m))
    for k in range(k_len):
        for j in range(m):
            num[k, j] = scale[k] * c[j]
            den[k, j] = (scale[k] * w[j]) ** q
    total = 1
    for k in range(k_len):
        total *= m
    for _ in range(total):
        nsum = 0.0
        dsum = 0.0
        for k in range(k_len):
            nsum += num[k, idx[k]]
            dsum += den[k, idx[k]]
        if dsum > 0.0:
            r = nsum / dsum ** (1.0 / q)
            if r > best:
                best = r
                for k in range(k_len):
                    best_idx[k] = idx[k]
        # mixed-radix increment
        k = k_len - 1
        while k >= 0:
            idx[k] += 1
            if idx[k] < m:
                break
            idx[k] = 0
            k -= 1
    return best, best_idx


def sequence_search_numpy(c, w, scale, q, chunk=1 << 18):
    c = np.asarray(c, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    scale = np.asarray(scale, dtype=np.float64)
    m = c.shape[0]
    k_len = scale.shape[0]
    num = scale[:, None] * c[None, :]
    den = (scale[:, None] * w[None, :]) ** q
    total = m**k_len
    best = -1.0
    best_idx = np.zeros(k_len, dtype=np.int64)
    radix = m ** np.arange(k_len - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = (flat[:, None] // radix[None, :]) % m
        nsum = num[np.arange(k_len)[None, :], digits].sum(axis=1)
        dsum = den[np.arange(k_len)[None, :], digits].sum(axis=1)
        valid = dsum > 0.0
        if not valid.any():
            continue
        ratio = np.full(flat.shape[0], -1.0)
        ratio[valid] = nsum[valid] / dsum[valid] ** (1.0 / q)
        i = int(np.argmax(ratio))
        if ratio[i] > best:
            best = float(ratio[i])
            best_idx = digits[i].copy()
    return best, best_idx


def antichain_sums(rows, a, b):
    rows = np.ascontiguousarray(rows, dtype=np.bool_)
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if USE_NUMBA:
        return antichain_sums_numba(rows, a, b)
    return antichain_sums_numpy(rows, a, b)


def sequence_search(c, w, scale, q):
    c = np.ascontiguousarray(c, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    scale = np.ascontiguousarray(scale, dtype=np.float64)
    if USE_NUMBA:
        best, idx = sequence_search_numba(c, w, scale, float(q))
    else:
        best, idx = sequence_search_numpy(c, w, scale, float(q))
    return float(best), np.asarray(idx, dtype=np.int64)
