"""Shared test helpers: randomized instances and independent slow oracles."""
from __future__ import annotations

import itertools

import numpy as np

from rowex import Alphabet, HierModel, MeasureOnPMFs, PMF, sample_hierarchical


def random_model(rng, max_symbols=4, max_generators=3, max_atoms=4,
                 zero_prob=0.3) -> HierModel:
    """A random finite hierarchical model, occasionally with hard zeros."""
    k = int(rng.integers(2, max_symbols + 1))
    n_gen = int(rng.integers(1, max_generators + 1))
    alphabet = Alphabet([chr(ord("a") + i) for i in range(k)])
    gens = []
    for _ in range(n_gen):
        n_atoms = int(rng.integers(1, max_atoms + 1))
        atom_w = rng.dirichlet(np.ones(n_atoms))
        seen: list[np.ndarray] = []
        atoms = []
        for t in range(n_atoms):
            while True:
                p = rng.dirichlet(np.ones(k) * rng.uniform(0.3, 3.0))
                if rng.random() < zero_prob:
                    p[rng.integers(0, k)] = 0.0
                    p = p / p.sum()
                if all(np.max(np.abs(p - q)) > 1e-6 for q in seen):
                    seen.append(p)
                    break
            atoms.append((float(atom_w[t]), PMF(p)))
        gens.append(MeasureOnPMFs(atoms))
    prior = rng.dirichlet(np.ones(n_gen))
    return HierModel(alphabet, list(zip(prior, gens)))


def random_instance(rng, max_rows=4, max_cols=5, **model_kwargs):
    """A random model plus data sampled from it (so evidence is positive)."""
    model = random_model(rng, **model_kwargs)
    m = int(rng.integers(1, max_rows + 1))
    lengths = [int(rng.integers(0, max_cols + 1)) for _ in range(m)]
    _, data = sample_hierarchical(model, m, lengths, seed=int(rng.integers(2**63)))
    return model, data


def random_euclidean_metric(rng, n: int) -> np.ndarray:
    """Distances between random planar points: a guaranteed true metric."""
    while True:
        pts = rng.uniform(0.0, 1.0, size=(n, 2))
        d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1))
        off = d[~np.eye(n, dtype=bool)]
        if off.size == 0 or off.min() > 1e-6:
            return d


def random_weights(rng, n: int, zero_prob=0.3) -> np.ndarray:
    """Random probability vector, occasionally with an exact zero."""
    w = rng.dirichlet(np.ones(n))
    if n > 1 and rng.random() < zero_prob:
        w[rng.integers(0, n)] = 0.0
        w = w / w.sum()
    return w


def slow_prohorov(w1, w2, dist, tol=1e-9) -> float:
    """Reference Prohorov computation: plain subset loops, no shared code.

    Bisects over eps; at each probe walks every nonempty subset with
    itertools, recomputing the closed expansion from scratch.
    """
    n = len(w1)

    def feasible(eps: float) -> bool:
        for mask in itertools.product((0, 1), repeat=n):
            pts = [i for i in range(n) if mask[i]]
            if not pts:
                continue
            grown = [j for j in range(n)
                     if min(dist[i][j] for i in pts) <= eps]
            mu_a = sum(w1[i] for i in pts)
            nu_a = sum(w2[i] for i in pts)
            mu_g = sum(w1[j] for j in grown)
            nu_g = sum(w2[j] for j in grown)
            if mu_a > nu_g + eps or nu_a > mu_g + eps:
                return False
        return True

    if feasible(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def max_subset_gap(w1, w2) -> float:
    """max_A |mu(A) - nu(A)| by direct enumeration (equals TV)."""
    n = len(w1)
    best = 0.0
    for mask in itertools.product((0, 1), repeat=n):
        gap = sum((w1[i] - w2[i]) for i in range(n) if mask[i])
        best = max(best, abs(gap))
    return best
