"""Numba @njit implementations of the hot kernels.

Twin of _kernels_numpy with identical integer semantics; every value stays
uint64 inside the jitted code (mixing uint64 with int literals would
promote to float64 under numba's rules and corrupt the stream).
"""
from __future__ import annotations

import numpy as np
from numba import njit

from . import _bits

_GOLD = np.uint64(_bits.GOLD)
_MIX1 = np.uint64(_bits.MIX1)
_MIX2 = np.uint64(_bits.MIX2)
_E1 = np.uint64(_bits.EVEN_1)
_E2 = np.uint64(_bits.EVEN_2)
_E4 = np.uint64(_bits.EVEN_4)
_E8 = np.uint64(_bits.EVEN_8)
_E16 = np.uint64(_bits.EVEN_16)
_E32 = np.uint64(_bits.EVEN_32)
_U0 = np.uint64(0)
_U1 = np.uint64(1)
_TWO_NEG_64 = np.float64(2.0**-64)


@njit(cache=True)
def _fin64(z):
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


@njit(cache=True)
def _mix64(z):
    return _fin64(z + _GOLD)


@njit(cache=True)
def _key(seed, namespace, stream_id):
    return _mix64(_mix64(_mix64(seed) ^ namespace) ^ stream_id)


@njit(cache=True)
def _frac(key, counter):
    state = key + (counter + _U1) * _GOLD
    raw = _fin64(state)
    if raw == _U0:
        raw = _fin64(state + _U1)
    return raw


@njit(cache=True)
def _u01(frac):
    return np.float64(frac) * _TWO_NEG_64


@njit(cache=True)
def _invcdf(cum_row, u, n):
    c = 0
    while c < n and cum_row[c] <= u:
        c += 1
    if c >= n:
        c = n - 1
    return c


@njit(cache=True)
def stream_fracs(seed, namespace, stream_id, start, count):
    key = _key(seed, namespace, stream_id)
    out = np.empty(count, np.uint64)
    for c in range(count):
        out[c] = _frac(key, start + np.uint64(c))
    return out


@njit(cache=True)
def _compact_even(x):
    x = x & _E1
    x = (x | (x >> _U1)) & _E2
    x = (x | (x >> np.uint64(2))) & _E4
    x = (x | (x >> np.uint64(4))) & _E8
    x = (x | (x >> np.uint64(8))) & _E16
    x = (x | (x >> np.uint64(16))) & _E32
    return x


@njit(cache=True)
def split_fracs(fracs):
    n = fracs.size
    hi = np.empty(n, np.uint64)
    lo = np.empty(n, np.uint64)
    for k in range(n):
        x = fracs[k]
        hi[k] = _compact_even(x >> _U1) << np.uint64(32)
        lo[k] = _compact_even(x) << np.uint64(32)
    return hi, lo


@njit(cache=True)
def sample_patches(prior_cum, n_atoms, gen_cum, sym_cum, seeds, M, N, ns_main, ns_cell):
    K = seeds.size
    n_symbols = sym_cum.shape[2]
    n_gen = prior_cum.size
    out = np.empty((K, M, N), np.int64)
    r_sel = np.empty(K, np.int64)
    t_sel = np.empty((K, M), np.int64)
    for k in range(K):
        s = seeds[k]
        a = _u01(_frac(_key(s, ns_main, _U0), _U0))
        r = _invcdf(prior_cum, a, n_gen)
        r_sel[k] = r
        for i in range(M):
            b = _u01(_frac(_key(s, ns_main, np.uint64(i + 1)), _U0))
            t = _invcdf(gen_cum[r], b, n_atoms[r])
            t_sel[k, i] = t
            for j in range(N):
                sid = (np.uint64(i + 1) << np.uint64(32)) | np.uint64(j + 1)
                z = _u01(_frac(_key(s, ns_cell, sid), _U0))
                out[k, i, j] = _invcdf(sym_cum[r, t], z, n_symbols)
    return out, r_sel, t_sel


@njit(cache=True)
def row_cells(seed, ns_cell, row_index, n, cum_row):
    out = np.empty(n, np.int64)
    n_symbols = cum_row.size
    base = np.uint64(row_index + 1) << np.uint64(32)
    for j in range(n):
        sid = base | np.uint64(j + 1)
        z = _u01(_frac(_key(seed, ns_cell, sid), _U0))
        out[j] = _invcdf(cum_row, z, n_symbols)
    return out


@njit(cache=True)
def prohorov_feasible(m1, m2, mind, w1, w2, eps):
    n_masks, n = mind.shape
    for mask in range(n_masks):
        e1 = 0.0
        e2 = 0.0
        for j in range(n):
            if mind[mask, j] <= eps:
                e1 += w1[j]
                e2 += w2[j]
        if m1[mask] > e2 + eps or m2[mask] > e1 + eps:
            return False
    return True
