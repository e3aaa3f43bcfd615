"""Vectorized numpy implementations of the hot kernels.

These are the fallback twins of _kernels_numba; integer arithmetic is
identical bit for bit (everything is uint64 modulo 2**64, float conversion
is a single IEEE round), so sampler outputs match the numba backend
exactly.  See _bits for the documented derivation chain.
"""
from __future__ import annotations

import numpy as np

from . import _bits

_U = np.uint64
_GOLD = _U(_bits.GOLD)
_MIX1 = _U(_bits.MIX1)
_MIX2 = _U(_bits.MIX2)
_TWO_NEG_64 = 2.0**-64


def _fin64_vec(z: np.ndarray) -> np.ndarray:
    z = z.copy()
    z ^= z >> _U(30)
    z *= _MIX1
    z ^= z >> _U(27)
    z *= _MIX2
    z ^= z >> _U(31)
    return z


def _mix64_vec(z: np.ndarray) -> np.ndarray:
    return _fin64_vec(z + _GOLD)


def _keys_for_seeds(seeds: np.ndarray, namespace: np.uint64, stream_id: np.uint64) -> np.ndarray:
    z = _mix64_vec(seeds)
    z = _mix64_vec(z ^ namespace)
    return _mix64_vec(z ^ stream_id)


def _keys_for_ids(seed: np.uint64, namespace: np.uint64, stream_ids: np.ndarray) -> np.ndarray:
    base = _U(_bits.mix64(_bits.mix64(int(seed)) ^ int(namespace)))
    return _mix64_vec(base ^ stream_ids)


def _fracs(keys: np.ndarray, counter: np.uint64) -> np.ndarray:
    state = keys + (counter + _U(1)) * _GOLD
    raw = _fin64_vec(state)
    zero = raw == 0
    if zero.any():
        raw[zero] = _fin64_vec(state[zero] + _U(1))
    return raw


def _u01_vec(fracs: np.ndarray) -> np.ndarray:
    return fracs.astype(np.float64) * _TWO_NEG_64


def _invcdf_rows(cum_rows: np.ndarray, u: np.ndarray, n_per_row: np.ndarray) -> np.ndarray:
    # index = min(#{t < n : cum[t] <= u}, n - 1), per element
    width = cum_rows.shape[1]
    live = np.arange(width)[None, :] < n_per_row[:, None]
    cnt = ((cum_rows <= u[:, None]) & live).sum(axis=1)
    return np.minimum(cnt, n_per_row - 1).astype(np.int64)


def stream_fracs(seed, namespace, stream_id, start, count):
    """Fraction words `start .. start+count-1` of one stream."""
    key = _bits.stream_key(int(seed), int(namespace), int(stream_id))
    counters = np.arange(int(start), int(start) + int(count), dtype=np.uint64)
    state = _U(key) + (counters + _U(1)) * _GOLD
    raw = _fin64_vec(state)
    zero = raw == 0
    if zero.any():
        raw[zero] = _fin64_vec(state[zero] + _U(1))
    return raw


def split_fracs(fracs: np.ndarray):
    """Bulk deinterleave; returns (odd-bit fractions, even-bit fractions)."""
    x = fracs.astype(np.uint64)
    return _compact_even(x >> _U(1)) << _U(32), _compact_even(x) << _U(32)


def _compact_even(x: np.ndarray) -> np.ndarray:
    x = x & _U(_bits.EVEN_1)
    x = (x | (x >> _U(1))) & _U(_bits.EVEN_2)
    x = (x | (x >> _U(2))) & _U(_bits.EVEN_4)
    x = (x | (x >> _U(4))) & _U(_bits.EVEN_8)
    x = (x | (x >> _U(8))) & _U(_bits.EVEN_16)
    x = (x | (x >> _U(16))) & _U(_bits.EVEN_32)
    return x


def sample_patches(prior_cum, n_atoms, gen_cum, sym_cum, seeds, M, N, ns_main, ns_cell):
    """Sample one M x N array per seed through the three-level inverse CDF.

    Returns (symbols[K, M, N], generator_pick[K], atom_pick[K, M]).
    """
    seeds = seeds.astype(np.uint64)
    K = seeds.size
    n_symbols = sym_cum.shape[2]
    n_gen = prior_cum.size

    a = _u01_vec(_fracs(_keys_for_seeds(seeds, ns_main, _U(0)), _U(0)))
    r = _invcdf_rows(np.broadcast_to(prior_cum, (K, n_gen)), a,
                     np.full(K, n_gen, dtype=np.int64))

    out = np.empty((K, M, N), dtype=np.int64)
    t = np.empty((K, M), dtype=np.int64)
    sym_n = np.full(K, n_symbols, dtype=np.int64)
    for i in range(M):
        b = _u01_vec(_fracs(_keys_for_seeds(seeds, ns_main, _U(i + 1)), _U(0)))
        t[:, i] = _invcdf_rows(gen_cum[r], b, n_atoms[r])
        cum_rows = sym_cum[r, t[:, i]]
        for j in range(N):
            sid = _U((i + 1) << 32 | (j + 1))
            z = _u01_vec(_fracs(_keys_for_seeds(seeds, ns_cell, sid), _U(0)))
            out[:, i, j] = _invcdf_rows(cum_rows, z, sym_n)
    return out, r, t


def row_cells(seed, ns_cell, row_index, n, cum_row):
    """Symbols for cells 1..n of one row under a fixed symbol distribution."""
    base = _U((int(row_index) + 1) << 32)
    ids = base | np.arange(1, int(n) + 1, dtype=np.uint64)
    z = _u01_vec(_fracs(_keys_for_ids(seed, ns_cell, ids), _U(0)))
    idx = np.searchsorted(cum_row, z, side="right")
    return np.minimum(idx, cum_row.size - 1).astype(np.int64)


def prohorov_feasible(m1, m2, mind, w1, w2, eps):
    """Check both one-sided conditions at slack eps over all support subsets.

    Expansion masses accumulate point by point in index order, matching
    the numba twin and the subset-mass tables exactly, so eps = 0 is
    feasible for identical measures and backends agree bit for bit.
    """
    close = mind <= eps
    n = w1.size
    e1 = np.zeros(close.shape[0])
    e2 = np.zeros(close.shape[0])
    for j in range(n):
        sel = close[:, j]
        e1[sel] += w1[j]
        e2[sel] += w2[j]
    return bool(np.all(m1 <= e2 + eps) and np.all(m2 <= e1 + eps))
