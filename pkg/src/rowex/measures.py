"""Finite-support probability measures and the metrics between them.

Two levels of measure appear throughout the package: a PMF is a
probability vector over a finite symbol alphabet (the distribution driving
one row of an array), and a MeasureOnPMFs is a finitely supported
probability measure whose support points are themselves PMFs (the mixing
measure those row distributions are drawn from).

The module also provides the empirical estimators for both levels and two
distances: total variation (exact, cheap, the documented ground metric on
the space of PMFs for all two-level computations) and the Prohorov metric,
computed by bisection with full subset enumeration over the combined
support.

All values are immutable after construction and every operation is a pure
function, so everything here is safe for concurrent use on shared inputs.
"""
from __future__ import annotations

import json
import os
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import DomainError, InputError, ResourceError

#: Threshold under which two PMFs count as the same support point.
PMF_IDENTITY_TOL = 1e-12

#: Tolerance for probability vectors summing to one.
WEIGHT_SUM_TOL = 1e-9

DEFAULT_SUPPORT_CAP = 16
_SUPPORT_CAP_ENV = "ROWEX_SUPPORT_CAP"


def default_support_cap() -> int:
    """Prohorov support cap, overridable via the ROWEX_SUPPORT_CAP variable."""
    raw = os.environ.get(_SUPPORT_CAP_ENV)
    if raw is None:
        return DEFAULT_SUPPORT_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise InputError(f"{_SUPPORT_CAP_ENV} must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise InputError(f"{_SUPPORT_CAP_ENV} must be positive, got {cap}")
    return cap


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class Alphabet:
    """Finite ordered symbol set, optionally with ground distances.

    Parameters
    ----------
    symbols : sequence of str
        Nonempty, pairwise distinct symbol labels.
    metric : array-like, optional
        Square matrix of pairwise ground distances.  Must be symmetric
        with zero diagonal, strictly positive off the diagonal, and
        satisfy the triangle inequality.  When omitted, the discrete
        metric (all off-diagonal distances 1) is implied.
    """

    def __init__(self, symbols: Sequence[str], metric=None):
        symbols = tuple(str(s) for s in symbols)
        if not symbols:
            raise InputError("alphabet needs at least one symbol")
        if len(set(symbols)) != len(symbols):
            raise InputError("alphabet symbols must be pairwise distinct")
        self.symbols = symbols
        self._index = {s: i for i, s in enumerate(symbols)}
        if metric is None:
            self.metric = None
        else:
            m = np.asarray(metric, dtype=np.float64)
            self._check_metric(m, len(symbols))
            self.metric = _readonly(m)

    @staticmethod
    def _check_metric(m: np.ndarray, k: int) -> None:
        if m.shape != (k, k):
            raise InputError(f"metric must be {k}x{k}, got shape {m.shape}")
        if not np.all(np.abs(np.diag(m)) <= 1e-15):
            raise InputError("metric diagonal must be zero")
        if not np.allclose(m, m.T, rtol=0.0, atol=1e-12):
            raise InputError("metric must be symmetric")
        off = m[~np.eye(k, dtype=bool)]
        if off.size and not np.all(off > 0):
            raise InputError("metric must be strictly positive off the diagonal")
        # triangle inequality with a small float slack
        for j in range(k):
            if np.any(m > m[:, j:j + 1] + m[None, j, :] + 1e-12):
                raise InputError("metric violates the triangle inequality")

    def __len__(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise InputError(f"unknown symbol {symbol!r}") from None

    def distance_matrix(self) -> np.ndarray:
        """Ground distances; the discrete metric when none was given."""
        if self.metric is not None:
            return self.metric
        k = len(self.symbols)
        return _readonly(np.ones((k, k)) - np.eye(k))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Alphabet):
            return NotImplemented
        if self.symbols != other.symbols:
            return False
        if (self.metric is None) != (other.metric is None):
            return False
        return self.metric is None or bool(np.array_equal(self.metric, other.metric))

    def __repr__(self) -> str:
        return f"Alphabet({list(self.symbols)!r})"

    def to_json(self) -> dict:
        out = {"symbols": list(self.symbols)}
        if self.metric is not None:
            out["metric"] = self.metric.tolist()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Alphabet":
        if not isinstance(data, dict) or "symbols" not in data:
            raise InputError('alphabet JSON must be {"symbols": [...], "metric"?: [[...]]}')
        return cls(data["symbols"], data.get("metric"))


class PMF:
    """Probability vector over a finite alphabet (one weight per symbol)."""

    def __init__(self, weights, validate: bool = True):
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if validate:
            if w.size == 0:
                raise InputError("pmf needs at least one weight")
            if np.any(w < 0.0) or np.any(w > 1.0):
                raise InputError("pmf weights must lie in [0, 1]")
            s = float(w.sum())
            if abs(s - 1.0) > WEIGHT_SUM_TOL:
                raise InputError(f"pmf weights sum {s:.12g}, expected 1")
        self.weights = _readonly(w)

    def __len__(self) -> int:
        return self.weights.size

    def prob(self, index: int) -> float:
        return float(self.weights[index])

    def prob_of(self, indices: Sequence[int]) -> float:
        """Total mass of a set of symbol indices."""
        return float(self.weights[np.asarray(indices, dtype=np.int64)].sum())

    def approx_equal(self, other: "PMF", tol: float = PMF_IDENTITY_TOL) -> bool:
        if len(self) != len(other):
            return False
        return bool(np.max(np.abs(self.weights - other.weights)) <= tol)

    def __repr__(self) -> str:
        return f"PMF({self.weights.tolist()!r})"

    def to_json(self) -> dict:
        return {"weights": self.weights.tolist()}

    @classmethod
    def from_json(cls, data, validate: bool = True) -> "PMF":
        if isinstance(data, dict):
            if "weights" not in data:
                raise InputError('pmf JSON must be {"weights": [...]}')
            data = data["weights"]
        return cls(data, validate=validate)


class MeasureOnPMFs:
    """Finitely supported probability measure over PMFs.

    Atoms are (weight, pmf) pairs; atom PMFs must be pairwise distinct
    (componentwise, beyond the 1e-12 identity threshold) so that every
    support point is unambiguous.
    """

    def __init__(self, atoms: Sequence[tuple], validate: bool = True):
        pairs = tuple((float(w), p) for w, p in atoms)
        if validate:
            if not pairs:
                raise InputError("measure needs at least one atom")
            dims = {len(p) for _, p in pairs}
            if len(dims) != 1:
                raise InputError("atom pmfs must share one alphabet size")
            s = sum(w for w, _ in pairs)
            if abs(s - 1.0) > WEIGHT_SUM_TOL:
                raise InputError(f"atom weights sum {s:.12g}, expected 1")
            if any(w < 0.0 or w > 1.0 for w, _ in pairs):
                raise InputError("atom weights must lie in [0, 1]")
            for i in range(len(pairs)):
                for j in range(i + 1, len(pairs)):
                    if pairs[i][1].approx_equal(pairs[j][1]):
                        raise InputError(
                            f"atoms {i} and {j} are duplicate support points"
                        )
        self.atoms = pairs

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.atoms])

    @property
    def pmfs(self) -> tuple:
        return tuple(p for _, p in self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    def __repr__(self) -> str:
        return f"MeasureOnPMFs({len(self.atoms)} atoms)"

    def to_json(self) -> dict:
        return {
            "atoms": [{"weight": w, "pmf": p.weights.tolist()} for w, p in self.atoms]
        }

    @classmethod
    def from_json(cls, data: dict, validate: bool = True) -> "MeasureOnPMFs":
        if not isinstance(data, dict) or "atoms" not in data:
            raise InputError('measure JSON must be {"atoms": [{"weight": w, "pmf": [...]}]}')
        atoms = []
        for entry in data["atoms"]:
            atoms.append((entry["weight"], PMF.from_json(entry["pmf"], validate=validate)))
        return cls(atoms, validate=validate)


def empirical_row_distribution(alphabet: Alphabet, row: Sequence[str]) -> PMF:
    """Frequency distribution of the symbols observed in one row.

    The weight of symbol x is count(x) / len(row), which is exact in
    binary arithmetic whenever representable (in particular the weights
    sum to exactly 1 when the row length is a power of two).
    """
    if len(row) == 0:
        raise DomainError("cannot form an empirical distribution from an empty row")
    counts = np.zeros(len(alphabet), dtype=np.int64)
    for pos, symbol in enumerate(row):
        idx = alphabet._index.get(symbol)
        if idx is None:
            raise InputError(f"unknown symbol {symbol!r} at position {pos + 1}")
        counts[idx] += 1
    return PMF(counts / len(row))


def empirical_generator(row_dists: Sequence[PMF]) -> MeasureOnPMFs:
    """Frequency measure of a list of row distributions.

    Distinct PMFs (componentwise identity within 1e-12) become atoms
    weighted by their relative frequency, in first-appearance order.
    """
    if len(row_dists) == 0:
        raise DomainError("cannot form an empirical generator from an empty list")
    dim = len(row_dists[0])
    reps: list[PMF] = []
    counts: list[int] = []
    for p in row_dists:
        if len(p) != dim:
            raise InputError("row distributions must share one alphabet size")
        for k, rep in enumerate(reps):
            if rep.approx_equal(p):
                counts[k] += 1
                break
        else:
            reps.append(p)
            counts.append(1)
    n = len(row_dists)
    return MeasureOnPMFs([(c / n, rep) for c, rep in zip(counts, reps)])


def total_variation(mu, nu) -> float:
    """Total variation distance, (1/2) sum of absolute weight differences.

    Defined for a pair of PMFs over the same alphabet, or a pair of
    MeasureOnPMFs (whose supports are merged by the 1e-12 identity rule).
    """
    if isinstance(mu, PMF) and isinstance(nu, PMF):
        if len(mu) != len(nu):
            raise InputError(f"dimension mismatch: {len(mu)} vs {len(nu)}")
        return float(0.5 * np.abs(mu.weights - nu.weights).sum())
    if isinstance(mu, MeasureOnPMFs) and isinstance(nu, MeasureOnPMFs):
        w1, w2, _ = _merged_atom_supports(mu, nu)
        return float(0.5 * np.abs(w1 - w2).sum())
    raise InputError("total_variation expects two PMFs or two MeasureOnPMFs")


def pmf_metric_on_simplex(p: PMF, q: PMF) -> float:
    """Ground metric between PMFs used for all two-level distances.

    Fixed to total variation: on a finite alphabet it metrizes weak
    convergence and is exact to compute.
    """
    if not (isinstance(p, PMF) and isinstance(q, PMF)):
        raise InputError("pmf_metric_on_simplex expects two PMFs")
    return total_variation(p, q)


def _merged_atom_supports(mu: MeasureOnPMFs, nu: MeasureOnPMFs):
    """Align two atom lists on one merged support (1e-12 identity)."""
    points: list[PMF] = []
    w1: list[float] = []
    w2: list[float] = []

    def locate(p: PMF) -> int:
        for k, rep in enumerate(points):
            if rep.approx_equal(p):
                return k
        points.append(p)
        w1.append(0.0)
        w2.append(0.0)
        return len(points) - 1

    for w, p in mu.atoms:
        w1[locate(p)] += w
    for w, p in nu.atoms:
        w2[locate(p)] += w
    return np.array(w1), np.array(w2), points


def _subset_tables(w1: np.ndarray, w2: np.ndarray, dist: np.ndarray):
    """Per-subset masses and point-to-subset distances for all 2**n subsets."""
    n = w1.size
    n_masks = 1 << n
    member = ((np.arange(n_masks)[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)
    m1 = np.zeros(n_masks)
    m2 = np.zeros(n_masks)
    mind = np.full((n_masks, n), np.inf)
    for i in range(n):
        sel = member[:, i]
        m1[sel] += w1[i]
        m2[sel] += w2[i]
        mind[sel] = np.minimum(mind[sel], dist[i][None, :])
    return m1, m2, mind


def prohorov_distance(mu, nu, ground=None, *, support_cap: Optional[int] = None,
                      tol: float = 1e-9) -> float:
    """Prohorov distance between two finitely supported probability measures.

    Returns inf{eps > 0 : mu(A) <= nu(A^eps) + eps and nu(A) <= mu(A^eps)
    + eps for every subset A of the combined support}, where A^eps is the
    closed eps-expansion under the ground metric.  Computed by bisection
    over eps to absolute tolerance `tol`, enumerating every subset at each
    probe.  Both one-sided conditions are checked for robustness even
    though they coincide for probability measures.

    For PMF arguments, `ground` may be an Alphabet, a distance matrix, or
    None for the discrete metric.  For MeasureOnPMFs arguments, the ground
    metric is fixed to total variation between atom PMFs and `ground` must
    be None.

    Raises ResourceError when the combined support exceeds the cap
    (default 16, overridable per call or via ROWEX_SUPPORT_CAP).
    """
    if isinstance(mu, PMF) and isinstance(nu, PMF):
        if len(mu) != len(nu):
            raise InputError(f"dimension mismatch: {len(mu)} vs {len(nu)}")
        if ground is None:
            dist_full = np.ones((len(mu), len(mu))) - np.eye(len(mu))
        elif isinstance(ground, Alphabet):
            if len(ground) != len(mu):
                raise InputError("ground alphabet size does not match the measures")
            dist_full = ground.distance_matrix()
        else:
            dist_full = np.asarray(ground, dtype=np.float64)
            Alphabet._check_metric(dist_full, len(mu))
        support = np.flatnonzero((mu.weights > 0) | (nu.weights > 0))
        w1 = mu.weights[support]
        w2 = nu.weights[support]
        dist = dist_full[np.ix_(support, support)]
    elif isinstance(mu, MeasureOnPMFs) and isinstance(nu, MeasureOnPMFs):
        if ground is not None:
            raise InputError(
                "ground metric between PMFs is fixed to total variation; pass ground=None"
            )
        w1, w2, points = _merged_atom_supports(mu, nu)
        keep = np.flatnonzero((w1 > 0) | (w2 > 0))
        w1, w2 = w1[keep], w2[keep]
        points = [points[k] for k in keep]
        n = len(points)
        dist = np.zeros((n, n))
        for a in range(n):
            for b in range(a + 1, n):
                dist[a, b] = dist[b, a] = total_variation(points[a], points[b])
    else:
        raise InputError("prohorov_distance expects two PMFs or two MeasureOnPMFs")

    cap = default_support_cap() if support_cap is None else int(support_cap)
    if w1.size > cap:
        raise ResourceError(
            f"combined support size {w1.size} exceeds the cap {cap}; "
            f"raise support_cap or {_SUPPORT_CAP_ENV} to override"
        )

    m1, m2, mind = _subset_tables(np.ascontiguousarray(w1), np.ascontiguousarray(w2), dist)
    w1 = np.ascontiguousarray(w1)
    w2 = np.ascontiguousarray(w2)
    if _kernels.prohorov_feasible(m1, m2, mind, w1, w2, 0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _kernels.prohorov_feasible(m1, m2, mind, w1, w2, mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def load_measure_file(path: str):
    """Read a PMF or MeasureOnPMFs JSON file, detecting the kind by keys."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read measure file {path}: {exc}") from exc
    if isinstance(data, dict) and "atoms" in data:
        return MeasureOnPMFs.from_json(data)
    if isinstance(data, dict) and "weights" in data:
        return PMF.from_json(data)
    raise InputError(f"{path}: expected a PMF or MeasureOnPMFs JSON object")
