"""Exact Bayesian computation for finite hierarchical models.

Given an observed ragged array, the posterior over the latent structure
factorizes: conditional on the generator, rows are independent and each
row's atom posterior depends only on that row's data.  This module
computes the factored posterior (in log space, so thousands of columns do
not underflow), the chained one-row-at-a-time kernels that reconstruct the
joint law of the row distributions, predictive probabilities for
unobserved cells, and an independent brute-force oracle that enumerates
every latent configuration directly in linear arithmetic.

Row and column indices in user-facing objects (PredictiveQuery, report
JSON) are 1-based; everything internal is 0-based.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import InferenceError, InputError, ResourceError
from .hiermodel import HierModel, ModelTables, ObservationArray, _require_valid
from .measures import PMF

DEFAULT_ORACLE_CAP = 10**6


def _check_data(model: HierModel, X: ObservationArray) -> None:
    if model.alphabet.symbols != X.alphabet.symbols:
        raise InputError("observation alphabet does not match the model alphabet")


def _log_nonneg(w: np.ndarray) -> np.ndarray:
    out = np.full(w.shape, -np.inf)
    pos = w > 0
    with np.errstate(divide="ignore"):
        out[pos] = np.log(w[pos])
    return out


def _loglik_table(tab: ModelTables, counts: np.ndarray) -> np.ndarray:
    """Per-row, per-generator, per-atom log likelihood, shape (M, R, T).

    Depends on the data only through per-row symbol counts, so the result
    is exactly invariant under permuting symbols within a row.  Entries
    are -inf where an observed symbol has atom probability zero and in
    atom padding slots.
    """
    R, T, _ = tab.theta.shape
    pos = tab.theta > 0
    logtheta = np.where(pos, np.log(np.where(pos, tab.theta, 1.0)), 0.0)
    ll = np.tensordot(counts, logtheta, axes=([1], [2]))            # (M, R, T)
    hit_zero = np.tensordot(counts, (~pos).astype(np.int64), axes=([1], [2])) > 0
    ll = np.where(hit_zero, -np.inf, ll)
    padding = np.arange(T)[None, :] >= tab.n_atoms[:, None]          # (R, T)
    return np.where(padding[None, :, :], -np.inf, ll)


class _PosteriorCore:
    """Shared factored-posterior pieces used by every inference operation."""

    def __init__(self, model: HierModel, X: ObservationArray):
        _check_data(model, X)
        _require_valid(model)
        self.model = model
        self.X = X
        self.tab = model.tables()
        self.counts = X.counts()
        self.loglik = _loglik_table(self.tab, self.counts)           # (M, R, T)
        self.log_phi = _log_nonneg(self.tab.gen_w)                   # (R, T)
        self.scores = self.log_phi[None, :, :] + self.loglik         # (M, R, T)
        self.log_row_evid = logsumexp(self.scores, axis=2)           # (M, R)
        log_prior = _log_nonneg(model.generator_weights)
        self.log_gen = log_prior + self.log_row_evid.sum(axis=0)     # (R,)
        self.log_evidence = float(logsumexp(self.log_gen))

    def require_evidence(self) -> None:
        if self.log_evidence == -np.inf:
            raise InferenceError("zero evidence: data impossible under every generator")

    @property
    def gen_weights(self) -> np.ndarray:
        return np.exp(self.log_gen - self.log_evidence)

    def row_conditionals(self) -> np.ndarray:
        """P(atom t | generator r, row i data), shape (M, R, T).

        Zero everywhere for (i, r) with zero row evidence (the generator
        is then impossible and carries no posterior weight).
        """
        finite = np.isfinite(self.log_row_evid)                      # (M, R)
        safe = np.where(finite, self.log_row_evid, 0.0)
        with np.errstate(invalid="ignore"):
            cond = np.exp(self.scores - safe[:, :, None])
        return np.where(finite[:, :, None], cond, 0.0)


@dataclass(frozen=True)
class RowPosterior:
    """Posterior over one row's distribution, in factored form.

    `atom_pmfs` are the distinct atom values across generators,
    `weights` the mixed marginal over them, and `per_generator[r]` the
    conditional atom weights within generator r (None when that generator
    has zero posterior mass).
    """

    row: int                      # 1-based
    atom_pmfs: tuple
    weights: np.ndarray
    per_generator: tuple

    def to_json(self) -> dict:
        return {
            "atom_weights": [
                {"pmf": p.weights.tolist(), "weight": float(w)}
                for p, w in zip(self.atom_pmfs, self.weights)
            ]
        }


class PosteriorReport:
    """Joint posterior of all row distributions, factored by generator.

    The report stores the generator posterior and, per row, the atom
    conditionals given each generator; together these reproduce the exact
    joint probability of any tuple of row-distribution values
    (`atom_tuple_probability`).  `evidence` is the total data probability;
    `log_evidence` is authoritative when the linear value underflows.
    """

    def __init__(self, core: _PosteriorCore):
        core.require_evidence()
        self._tab = core.tab
        self.generator_weights = core.gen_weights
        self.evidence = float(np.exp(core.log_evidence))
        self.log_evidence = core.log_evidence
        self._cond = core.row_conditionals()                         # (M, R, T)
        self.row_posteriors = tuple(
            _mix_row_posterior(core, self._cond, i, self.generator_weights)
            for i in range(core.X.n_rows)
        )

    @property
    def n_rows(self) -> int:
        return len(self.row_posteriors)

    def atom_tuple_probability(self, thetas: Sequence[PMF]) -> float:
        """Exact joint posterior probability of one tuple of row values."""
        if len(thetas) != self.n_rows:
            raise InputError(f"expected {self.n_rows} row values, got {len(thetas)}")
        tab = self._tab
        total = 0.0
        for r in range(tab.prior_cum.size):
            w = self.generator_weights[r]
            if w == 0.0:
                continue
            prod = w
            for i, theta in enumerate(thetas):
                t = tab.atom_index_of(r, theta)
                if t < 0:
                    prod = 0.0
                    break
                prod *= self._cond[i, r, t]
            total += prod
        return float(total)

    def to_json(self) -> dict:
        return {
            "evidence": self.evidence,
            "log_evidence": self.log_evidence,
            "generator_weights": self.generator_weights.tolist(),
            "rows": [rp.to_json() for rp in self.row_posteriors],
        }


def _mix_row_posterior(core: _PosteriorCore, cond: np.ndarray, i: int,
                       gen_weights: np.ndarray) -> RowPosterior:
    tab = core.tab
    values = tab.values
    mixed = np.zeros(len(values))
    per_gen = []
    for r in range(tab.prior_cum.size):
        n = int(tab.n_atoms[r])
        block = cond[i, r, :n]
        if gen_weights[r] > 0.0:
            per_gen.append(block.copy())
            for t in range(n):
                mixed[tab.value_id[r, t]] += gen_weights[r] * block[t]
        else:
            per_gen.append(None)
    return RowPosterior(i + 1, values, mixed, tuple(per_gen))


def likelihood_given_mus(thetas: Sequence[PMF], X: ObservationArray) -> float:
    """Probability of the observed array given one distribution per row.

    Conditional on the row distributions the cells are independent, so
    this is the product of per-cell masses, accumulated in log space and
    exponentiated; it is 0 whenever any observed symbol has mass 0.
    """
    if len(thetas) != X.n_rows:
        raise InputError(f"need one distribution per row: {len(thetas)} vs {X.n_rows}")
    k = len(X.alphabet)
    counts = X.counts()
    total = 0.0
    for i, theta in enumerate(thetas):
        if len(theta) != k:
            raise InputError(f"row {i + 1} distribution has wrong dimension")
        c = counts[i]
        seen = c > 0
        if np.any(theta.weights[seen] == 0.0):
            return 0.0
        total += float(np.dot(c[seen], np.log(theta.weights[seen])))
    return float(np.exp(total))


def generator_posterior(model: HierModel, X: ObservationArray):
    """Posterior weights over generators and the total data probability."""
    core = _PosteriorCore(model, X)
    core.require_evidence()
    return core.gen_weights, float(np.exp(core.log_evidence))


def joint_mu_posterior(model: HierModel, X: ObservationArray) -> PosteriorReport:
    """Joint posterior of all row distributions given the observed array."""
    return PosteriorReport(_PosteriorCore(model, X))


def row_posterior_chain(model: HierModel, X: ObservationArray, m: int,
                        fixed: Sequence[PMF] = ()) -> RowPosterior:
    """Posterior of row m's distribution given data and earlier rows' values.

    Conditions on the full array and on the realized distributions of
    rows 1..m-1; by conditional independence given those values, the data
    of rows 1..m-1 drop out and only rows m..M contribute likelihood.
    Each fixed value must be an atom of at least one generator with
    positive prior weight, otherwise the conditioning event is null.
    """
    core = _PosteriorCore(model, X)
    M = X.n_rows
    if not (1 <= m <= M):
        raise InputError(f"row index m must be in 1..{M}, got {m}")
    fixed = tuple(fixed)
    if len(fixed) != m - 1:
        raise InputError(f"need {m - 1} fixed row values for m={m}, got {len(fixed)}")
    tab = core.tab
    R = tab.prior_cum.size
    prior_w = model.generator_weights

    fixed_atoms = np.full((len(fixed), R), -1, dtype=np.int64)
    for i, pmf in enumerate(fixed):
        matched = False
        for r in range(R):
            t = tab.atom_index_of(r, pmf)
            fixed_atoms[i, r] = t
            if t >= 0 and prior_w[r] > 0:
                matched = True
        if not matched:
            raise InferenceError(
                f"conditioning event has probability zero: fixed distribution for "
                f"row {i + 1} ({pmf.weights.tolist()}) is not an atom of any "
                f"positive-weight generator"
            )

    log_prior = _log_nonneg(prior_w)
    log_g = np.full((R, tab.gen_w.shape[1]), -np.inf)
    for r in range(R):
        prefix = 0.0
        for i in range(m - 1):
            t = fixed_atoms[i, r]
            if t < 0 or tab.gen_w[r, t] == 0.0:
                prefix = -np.inf
                break
            prefix += np.log(tab.gen_w[r, t])
        if prefix == -np.inf:
            continue
        suffix = float(core.log_row_evid[m:, r].sum()) if m < M else 0.0
        log_g[r] = log_prior[r] + prefix + core.scores[m - 1, r] + suffix

    log_total = float(logsumexp(log_g))
    if log_total == -np.inf:
        raise InferenceError(
            f"conditioning event has probability zero for row {m} given the "
            f"fixed row distributions"
        )
    g = np.exp(log_g - log_total)

    mixed = np.zeros(len(tab.values))
    per_gen = []
    for r in range(R):
        n = int(tab.n_atoms[r])
        block = g[r, :n]
        mass = float(block.sum())
        if mass > 0.0:
            per_gen.append(block / mass)
            for t in range(n):
                mixed[tab.value_id[r, t]] += block[t]
        else:
            per_gen.append(None)
    return RowPosterior(m, tab.values, mixed, tuple(per_gen))


@dataclass(frozen=True)
class PredictiveCell:
    """One queried cell: row and column (1-based) and a symbol subset."""

    row: int
    col: int
    symbols: tuple

    @classmethod
    def from_json(cls, data: dict) -> "PredictiveCell":
        return cls(int(data["row"]), int(data["col"]), tuple(data["symbols"]))

    def to_json(self) -> dict:
        return {"row": self.row, "col": self.col, "symbols": list(self.symbols)}


@dataclass(frozen=True)
class PredictiveQuery:
    """A set of unobserved cells with symbol subsets, one event per cell."""

    cells: tuple

    @classmethod
    def from_json(cls, data: dict) -> "PredictiveQuery":
        if not isinstance(data, dict) or "cells" not in data:
            raise InputError('query JSON must be {"cells": [...]}')
        return cls(tuple(PredictiveCell.from_json(c) for c in data["cells"]))

    def to_json(self) -> dict:
        return {"cells": [c.to_json() for c in self.cells]}

    def validated_indices(self, model: HierModel, X: ObservationArray):
        """Per-cell (row0, symbol index array); raises InputError on misuse."""
        seen = set()
        out = []
        for cell in self.cells:
            if cell.row < 1 or cell.col < 1:
                raise InputError("query row and column indices must be positive")
            if cell.row > X.n_rows:
                raise InputError(
                    f"query row {cell.row} exceeds the {X.n_rows} observed rows"
                )
            n_i = X.lengths[cell.row - 1]
            if cell.col <= n_i:
                raise InputError(
                    f"query cell ({cell.row}, {cell.col}) references an observed "
                    f"column (row {cell.row} has {n_i} observed columns)"
                )
            if (cell.row, cell.col) in seen:
                raise InputError(f"duplicate query cell ({cell.row}, {cell.col})")
            seen.add((cell.row, cell.col))
            if not cell.symbols:
                raise InputError("query symbol subsets must be nonempty")
            if len(set(cell.symbols)) != len(cell.symbols):
                raise InputError("query symbol subsets must not repeat symbols")
            idx = np.array([model.alphabet.index(s) for s in cell.symbols],
                           dtype=np.int64)
            out.append((cell.row - 1, idx))
        return out


def predictive(model: HierModel, X: ObservationArray, query: PredictiveQuery) -> float:
    """Posterior probability that every queried cell lands in its subset.

    Given the row distributions the queried cells are independent with
    per-cell mass equal to the subset mass, so the answer is the
    posterior expectation of a product of subset masses.  Within a row
    only the multiset of subsets matters, not the column indices.
    """
    core = _PosteriorCore(model, X)
    core.require_evidence()
    cells = query.validated_indices(model, X)
    if not cells:
        return 1.0
    tab = core.tab
    W = core.gen_weights
    cond = core.row_conditionals()

    by_row: dict[int, list[np.ndarray]] = {}
    for row0, idx in cells:
        by_row.setdefault(row0, []).append(idx)

    total = 0.0
    for r in range(tab.prior_cum.size):
        if W[r] == 0.0:
            continue
        prod = W[r]
        n = int(tab.n_atoms[r])
        for row0, subsets in by_row.items():
            factor = np.ones(n)
            for idx in subsets:
                factor *= tab.theta[r, :n, idx].sum(axis=0)
            prod *= float(np.dot(cond[row0, r, :n], factor))
        total += prod
    return float(total)


class OracleJoint:
    """Brute-force joint table over every latent configuration.

    For each generator r and each tuple of per-row atom picks, the
    unnormalized probability is prior(r) times the product over rows of
    atom weight times row likelihood, evaluated in plain linear
    arithmetic (no log space): an independent route against which the
    factored computations are checked.
    """

    def __init__(self, model: HierModel, X: ObservationArray,
                 cap: Optional[int] = None):
        _check_data(model, X)
        _require_valid(model)
        cap = DEFAULT_ORACLE_CAP if cap is None else int(cap)
        tab = model.tables()
        M = X.n_rows
        bound = model.n_generators * int(np.max(tab.n_atoms)) ** M
        if bound > cap:
            raise ResourceError(
                f"oracle enumeration would cover {bound} configurations, "
                f"over the cap {cap}"
            )
        self.model = model
        self.X = X
        self.tab = tab
        self.M = M
        counts = X.counts()
        prior_w = model.generator_weights
        # per generator: likelihood matrix (M, T_r) then the outer-product
        # tensor over atom tuples, shape (T_r,) * M
        self.lik: list[np.ndarray] = []
        self.tensors: list[np.ndarray] = []
        for r in range(model.n_generators):
            n = int(tab.n_atoms[r])
            theta = tab.theta[r, :n]                                  # (T_r, K)
            lik = np.prod(np.power(theta[None, :, :], counts[:, None, :]), axis=2)
            self.lik.append(lik)                                      # (M, T_r)
            tensor = np.array(prior_w[r])
            for i in range(M):
                tensor = tensor[..., None] * (tab.gen_w[r, :n] * lik[i])
            self.tensors.append(tensor)
        self.evidence = float(sum(t.sum() for t in self.tensors))
        self.impossible = self.evidence == 0.0

    def generator_marginal(self) -> np.ndarray:
        """Posterior over generators (zeros with `impossible` set if null)."""
        sums = np.array([t.sum() for t in self.tensors])
        if self.impossible:
            return sums
        return sums / self.evidence

    def configurations(self):
        """Yield (r, atom tuple, unnormalized probability) for every config."""
        for r, tensor in enumerate(self.tensors):
            for t_tuple in np.ndindex(tensor.shape):
                yield r, t_tuple, float(tensor[t_tuple])

    def atom_tuple_probability(self, thetas: Sequence[PMF]) -> float:
        """Posterior probability of one tuple of row-distribution values."""
        if self.impossible:
            raise InferenceError("zero evidence: data impossible under every generator")
        if len(thetas) != self.M:
            raise InputError(f"expected {self.M} row values, got {len(thetas)}")
        total = 0.0
        for r, tensor in enumerate(self.tensors):
            idx = []
            ok = True
            for theta in thetas:
                t = self.tab.atom_index_of(r, theta)
                if t < 0:
                    ok = False
                    break
                idx.append(t)
            if ok:
                total += float(tensor[tuple(idx)])
        return total / self.evidence

    def row_value_marginal(self, i: int) -> np.ndarray:
        """Posterior over distinct atom values for row i (0-based)."""
        if self.impossible:
            raise InferenceError("zero evidence: data impossible under every generator")
        out = np.zeros(len(self.tab.values))
        for r, tensor in enumerate(self.tensors):
            axes = tuple(a for a in range(self.M) if a != i)
            marg = tensor.sum(axis=axes) if axes else tensor
            for t in range(marg.size):
                out[self.tab.value_id[r, t]] += float(marg[t])
        return out / self.evidence

    def predictive(self, query: PredictiveQuery) -> float:
        """Direct conditional expectation of the product of subset masses."""
        if self.impossible:
            raise InferenceError("zero evidence: data impossible under every generator")
        cells = query.validated_indices(self.model, self.X)
        total = 0.0
        for r, tensor in enumerate(self.tensors):
            n = int(self.tab.n_atoms[r])
            weighted = tensor
            for i in range(self.M):
                factor = np.ones(n)
                for row0, idx in cells:
                    if row0 == i:
                        factor *= self.tab.theta[r, :n, idx].sum(axis=0)
                shape = [1] * self.M
                shape[i] = n
                weighted = weighted * factor.reshape(shape)
            total += float(weighted.sum())
        return total / self.evidence


def oracle_joint(model: HierModel, X: ObservationArray,
                 cap: Optional[int] = None) -> OracleJoint:
    """Enumerate every latent configuration; ground truth for the tests."""
    return OracleJoint(model, X, cap)


def markov_discrepancy(model: HierModel, X: ObservationArray, m: int,
                       cap: Optional[int] = None) -> float:
    """How much rows 1..m-1's data move row m's posterior: exactly zero.

    For every realizable tuple of values of rows 1..m-1, compares the
    conditional law of row m's value given the full data against the law
    given only rows m..M, both by direct enumeration, and returns the
    largest absolute difference.
    """
    _check_data(model, X)
    _require_valid(model)
    if not (1 <= m <= X.n_rows):
        raise InputError(f"row index m must be in 1..{X.n_rows}, got {m}")
    oracle = OracleJoint(model, X, cap)
    if oracle.impossible:
        raise InferenceError("zero evidence: data impossible under every generator")
    tab = oracle.tab
    M = X.n_rows
    n_values = len(tab.values)

    # unnormalized weights with likelihood restricted to rows m..M
    part_tensors = []
    prior_w = model.generator_weights
    for r in range(model.n_generators):
        n = int(tab.n_atoms[r])
        tensor = np.array(prior_w[r])
        for i in range(M):
            v = tab.gen_w[r, :n].copy()
            if i >= m - 1:
                v = v * oracle.lik[r][i]
            tensor = tensor[..., None] * v
        part_tensors.append(tensor)

    full_by_prefix: dict[tuple, np.ndarray] = {}
    part_by_prefix: dict[tuple, np.ndarray] = {}
    for r in range(model.n_generators):
        n = int(tab.n_atoms[r])
        full = oracle.tensors[r]
        part = part_tensors[r]
        # collapse the axes after row m into the row-m axis
        tail_axes = tuple(range(m, M))
        full_m = full.sum(axis=tail_axes) if tail_axes else full      # prefix + row m
        part_m = part.sum(axis=tail_axes) if tail_axes else part
        for prefix_idx in np.ndindex(full_m.shape[:m - 1]):
            key = tuple(int(tab.value_id[r, t]) for t in prefix_idx)
            fvec = np.zeros(n_values)
            pvec = np.zeros(n_values)
            for t in range(n):
                vid = tab.value_id[r, t]
                fvec[vid] += full_m[prefix_idx + (t,)]
                pvec[vid] += part_m[prefix_idx + (t,)]
            full_by_prefix[key] = full_by_prefix.get(key, 0) + fvec
            part_by_prefix[key] = part_by_prefix.get(key, 0) + pvec

    worst = 0.0
    for key, fvec in full_by_prefix.items():
        fmass = fvec.sum()
        if fmass <= 0.0:
            continue  # prefix not realizable under the full conditioning
        pvec = part_by_prefix[key]
        diff = np.max(np.abs(fvec / fmass - pvec / pvec.sum()))
        worst = max(worst, float(diff))
    return worst
