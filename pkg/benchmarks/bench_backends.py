"""Benchmark the numba kernels against the pure-numpy fallback.

Run: python benchmarks/bench_backends.py

Covers the four hot paths: bulk stream generation, fraction splitting,
replicate patch sampling, single-row cell sampling, and the Prohorov
subset-enumeration probe.  Outputs are asserted identical before timing.
"""
from __future__ import annotations

import sys
import time

import numpy as np

try:
    from rowex import _kernels_numba as knb
except ImportError:
    print("numba not available; nothing to compare")
    sys.exit(0)

from rowex import _kernels_numpy as knp
from rowex import builtin_models
from rowex.measures import _subset_tables


def timeit(fn, n_warmup=2, n_runs=5):
    for _ in range(n_warmup):
        fn()
    times = []
    for _ in range(n_runs):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return np.mean(times) * 1000, np.std(times) * 1000


def report(name, numba_fn, numpy_fn):
    mean_nb, std_nb = timeit(numba_fn)
    mean_np, std_np = timeit(numpy_fn)
    speedup = mean_np / mean_nb if mean_nb > 0 else float("inf")
    print(f"--- {name}")
    print(f"numba:  {mean_nb:9.2f} +- {std_nb:.2f} ms")
    print(f"numpy:  {mean_np:9.2f} +- {std_np:.2f} ms")
    print(f"speedup: {speedup:.2f}x\n")


def main():
    u = np.uint64

    # 1. bulk stream generation
    args = (u(42), u(1), u(7), u(0), 5_000_000)
    assert np.array_equal(knb.stream_fracs(*args), knp.stream_fracs(*args))
    report("stream_fracs (5e6 draws)",
           lambda: knb.stream_fracs(*args), lambda: knp.stream_fracs(*args))

    # 2. fraction splitting
    fracs = knp.stream_fracs(*args)
    for a, b in zip(knb.split_fracs(fracs), knp.split_fracs(fracs)):
        assert np.array_equal(a, b)
    report("split_fracs (5e6 words)",
           lambda: knb.split_fracs(fracs), lambda: knp.split_fracs(fracs))

    # 3. replicate patch sampling
    tab = builtin_models("penny", biases=(0.2, 0.7, 0.95),
                         prior=(0.3, 0.4, 0.3)).tables()
    seeds = np.arange(200_000, dtype=np.uint64)
    pargs = (tab.prior_cum, tab.n_atoms, tab.gen_cum, tab.sym_cum,
             seeds, 2, 2, u(3), u(4))
    for a, b in zip(knb.sample_patches(*pargs), knp.sample_patches(*pargs)):
        assert np.array_equal(a, b)
    report("sample_patches (2e5 arrays of 2x2)",
           lambda: knb.sample_patches(*pargs), lambda: knp.sample_patches(*pargs))

    # 4. one long row
    rargs = (u(9), u(4), 0, 1_000_000, tab.sym_cum[0, 0])
    assert np.array_equal(knb.row_cells(*rargs), knp.row_cells(*rargs))
    report("row_cells (1e6 cells)",
           lambda: knb.row_cells(*rargs), lambda: knp.row_cells(*rargs))

    # 5. Prohorov feasibility probe at the support cap
    rng = np.random.default_rng(0)
    n = 16
    w1 = rng.dirichlet(np.ones(n))
    w2 = rng.dirichlet(np.ones(n))
    pts = rng.uniform(0, 1, (n, 2))
    dist = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    m1, m2, mind = _subset_tables(w1, w2, dist)

    def probes(impl):
        def run():
            for eps in np.linspace(0.01, 0.5, 30):
                impl.prohorov_feasible(m1, m2, mind, w1, w2, eps)
        return run

    assert knb.prohorov_feasible(m1, m2, mind, w1, w2, 0.25) == \
        knp.prohorov_feasible(m1, m2, mind, w1, w2, 0.25)
    report("prohorov_feasible (30 probes, 2^16 subsets)",
           probes(knb), probes(knp))


if __name__ == "__main__":
    main()
