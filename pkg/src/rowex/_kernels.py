"""Backend dispatch for the hot kernels.

Callers pass plain Python ints for seeds/namespaces; this shim normalizes
argument dtypes so the numba and numpy twins receive identical inputs and
therefore produce identical outputs.
"""
from __future__ import annotations

import numpy as np

from . import _backend

if _backend.using_numba():
    from . import _kernels_numba as _impl
else:
    from . import _kernels_numpy as _impl


def stream_fracs(seed: int, namespace: int, stream_id: int, start: int, count: int) -> np.ndarray:
    return _impl.stream_fracs(
        np.uint64(seed), np.uint64(namespace), np.uint64(stream_id),
        np.uint64(start), int(count),
    )


def split_fracs(fracs: np.ndarray):
    return _impl.split_fracs(np.ascontiguousarray(fracs, dtype=np.uint64))


def sample_patches(prior_cum, n_atoms, gen_cum, sym_cum, seeds, M, N, ns_main, ns_cell):
    seeds = np.ascontiguousarray(seeds, dtype=np.uint64)
    return _impl.sample_patches(
        prior_cum, n_atoms, gen_cum, sym_cum, seeds,
        int(M), int(N), np.uint64(ns_main), np.uint64(ns_cell),
    )


def row_cells(seed, ns_cell, row_index, n, cum_row):
    return _impl.row_cells(
        np.uint64(seed), np.uint64(ns_cell), int(row_index), int(n),
        np.ascontiguousarray(cum_row, dtype=np.float64),
    )


def prohorov_feasible(m1, m2, mind, w1, w2, eps):
    return _impl.prohorov_feasible(m1, m2, mind, w1, w2, float(eps))
