"""Finite hierarchical models for row exchangeable arrays.

A HierModel is a finitely supported prior over generators, where each
generator is itself a finitely supported measure over symbol
distributions.  Sampling walks the hierarchy: one generator for the whole
array, one atom (row distribution) per row, one symbol per cell, each by
inverse CDF in declaration order on dedicated uniform streams.

The same hierarchy can be packaged as an explicit three-argument
representation function (rep_from_model); sampling through that function
produces the same array law as hierarchical sampling, which the
diagnostics module verifies statistically.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from . import _bits, _kernels
from ._bits import NS_HIER_CELL, NS_HIER_MAIN
from .errors import InputError
from .measures import (
    WEIGHT_SUM_TOL,
    Alphabet,
    MeasureOnPMFs,
    PMF,
    PMF_IDENTITY_TOL,
)
from .representation import TableRepFunction, _scalar_invcdf


class HierModel:
    """Prior over generators of row distributions on a finite alphabet.

    Parameters
    ----------
    alphabet : Alphabet
    generator_prior : sequence of (weight, MeasureOnPMFs)
        Prior weights over generators; each generator's atoms are PMFs
        over `alphabet`.
    validate : bool
        When False the model is stored as-is so that `validate_model` can
        report problems instead of the constructor raising.
    """

    def __init__(self, alphabet: Alphabet, generator_prior: Sequence[tuple],
                 validate: bool = True):
        self.alphabet = alphabet
        self.generator_prior = tuple((float(w), g) for w, g in generator_prior)
        self._tables: Optional[ModelTables] = None
        if validate:
            issues = validate_model(self)
            if issues:
                raise InputError(issues[0])

    @property
    def n_generators(self) -> int:
        return len(self.generator_prior)

    @property
    def generator_weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.generator_prior])

    @property
    def generators(self) -> tuple:
        return tuple(g for _, g in self.generator_prior)

    def tables(self) -> "ModelTables":
        if self._tables is None:
            self._tables = ModelTables.build(self)
        return self._tables

    def __repr__(self) -> str:
        return (f"HierModel({len(self.alphabet)} symbols, "
                f"{self.n_generators} generators)")

    def to_json(self) -> dict:
        return {
            "alphabet": self.alphabet.to_json(),
            "generator_prior": [
                {"weight": w, "atoms": g.to_json()["atoms"]}
                for w, g in self.generator_prior
            ],
        }

    @classmethod
    def from_json(cls, data: dict, validate: bool = True) -> "HierModel":
        if not isinstance(data, dict) or "alphabet" not in data or "generator_prior" not in data:
            raise InputError(
                'model JSON must be {"alphabet": {...}, "generator_prior": [...]}'
            )
        alphabet = Alphabet.from_json(data["alphabet"])
        prior = []
        for entry in data["generator_prior"]:
            gen = MeasureOnPMFs.from_json({"atoms": entry["atoms"]}, validate=False)
            prior.append((entry["weight"], gen))
        return cls(alphabet, prior, validate=validate)


def load_model_file(path: str, validate: bool = True) -> HierModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read model file {path}: {exc}") from exc
    return HierModel.from_json(data, validate=validate)


def validate_model(model: HierModel) -> list[str]:
    """Check every model invariant; returns diagnostics instead of raising.

    Each entry is "<path>: <problem>"; an empty list means the model is
    valid.  Checks prior weight ranges and sums, atom weight sums, atom
    PMF validity against the alphabet size, and atom distinctness.
    """
    issues: list[str] = []
    k = len(model.alphabet)
    prior = model.generator_prior
    if not prior:
        issues.append("generator_prior: needs at least one generator")
        return issues
    total = sum(w for w, _ in prior)
    for r, (w, _) in enumerate(prior):
        if not (0.0 <= w <= 1.0):
            issues.append(f"generator_prior[{r}]: prior weight {w:.6g} outside [0, 1]")
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        issues.append(f"generator_prior: prior weights sum {total:.6g}")
    for r, (_, gen) in enumerate(prior):
        base = f"generator_prior[{r}]"
        if not isinstance(gen, MeasureOnPMFs) or len(gen.atoms) == 0:
            issues.append(f"{base}: generator needs at least one atom")
            continue
        atom_total = sum(w for w, _ in gen.atoms)
        if abs(atom_total - 1.0) > WEIGHT_SUM_TOL:
            issues.append(f"{base}.atoms: weights sum {atom_total:.6g}")
        for t, (w, pmf) in enumerate(gen.atoms):
            path = f"{base}.atoms[{t}]"
            if not (0.0 <= w <= 1.0):
                issues.append(f"{path}: weight {w:.6g} outside [0, 1]")
            if len(pmf) != k:
                issues.append(f"{path}.pmf: has {len(pmf)} weights, alphabet has {k}")
                continue
            wsum = float(pmf.weights.sum())
            if np.any(pmf.weights < 0.0) or np.any(pmf.weights > 1.0):
                issues.append(f"{path}.pmf: weights outside [0, 1]")
            elif abs(wsum - 1.0) > WEIGHT_SUM_TOL:
                issues.append(f"{path}.pmf: weights sum {wsum:.6g}")
        for a in range(len(gen.atoms)):
            for b in range(a + 1, len(gen.atoms)):
                if gen.atoms[a][1].approx_equal(gen.atoms[b][1]):
                    issues.append(
                        f"{base}.atoms: atoms {a} and {b} are duplicate support points"
                    )
    return issues


def _require_valid(model: HierModel) -> None:
    issues = validate_model(model)
    if issues:
        raise InputError(f"invalid model: {issues[0]}")


@dataclass(frozen=True)
class ModelTables:
    """Padded cumulative tables for inverse-CDF sampling and inference."""

    prior_cum: np.ndarray       # (R,)
    n_atoms: np.ndarray         # (R,)
    gen_w: np.ndarray           # (R, T) atom weights, zero padded
    gen_cum: np.ndarray         # (R, T)
    theta: np.ndarray           # (R, T, K) atom PMFs, zero padded
    sym_cum: np.ndarray         # (R, T, K)
    values: tuple               # distinct atom PMFs across generators
    value_id: np.ndarray        # (R, T) index into `values`, -1 in padding

    @classmethod
    def build(cls, model: HierModel) -> "ModelTables":
        k = len(model.alphabet)
        R = model.n_generators
        T = max(len(g) for g in model.generators)
        prior_cum = np.cumsum(model.generator_weights)
        n_atoms = np.array([len(g) for g in model.generators], dtype=np.int64)
        gen_w = np.zeros((R, T))
        theta = np.zeros((R, T, k))
        sym_cum = np.zeros((R, T, k))
        value_id = np.full((R, T), -1, dtype=np.int64)
        values: list[PMF] = []
        for r, gen in enumerate(model.generators):
            for t, (w, pmf) in enumerate(gen.atoms):
                gen_w[r, t] = w
                theta[r, t] = pmf.weights
                sym_cum[r, t] = np.cumsum(pmf.weights)
                for v, rep in enumerate(values):
                    if rep.approx_equal(pmf):
                        value_id[r, t] = v
                        break
                else:
                    values.append(pmf)
                    value_id[r, t] = len(values) - 1
        gen_cum = np.cumsum(gen_w, axis=1)
        return cls(prior_cum, n_atoms, gen_w, gen_cum, theta, sym_cum,
                   tuple(values), value_id)

    def atom_index_of(self, r: int, pmf: PMF, tol: float = PMF_IDENTITY_TOL) -> int:
        """Atom slot of generator r matching a PMF value, or -1."""
        for t in range(int(self.n_atoms[r])):
            if float(np.max(np.abs(self.theta[r, t] - pmf.weights))) <= tol:
                return t
        return -1


@dataclass(frozen=True)
class LatentAssignment:
    """Realized latent indices behind one sampled array (0-based)."""

    generator_index: int
    row_atom_indices: tuple

    def to_json(self) -> dict:
        # user-facing files carry 1-based indices
        return {
            "generator_index": self.generator_index + 1,
            "row_atom_indices": [t + 1 for t in self.row_atom_indices],
        }

    @classmethod
    def from_json(cls, data: dict) -> "LatentAssignment":
        return cls(
            int(data["generator_index"]) - 1,
            tuple(int(t) - 1 for t in data["row_atom_indices"]),
        )


class ObservationArray:
    """Ragged array of observed symbols with its alphabet.

    Rows are stored as int64 index arrays; `from_labels` accepts symbol
    labels.  Row lengths may differ and rows may be empty, but there must
    be at least one row.
    """

    def __init__(self, alphabet: Alphabet, rows: Sequence[Sequence[int]]):
        if len(rows) == 0:
            raise InputError("observation array needs at least one row")
        k = len(alphabet)
        stored = []
        for i, row in enumerate(rows):
            arr = np.asarray(row, dtype=np.int64).reshape(-1)
            if arr.size and (arr.min() < 0 or arr.max() >= k):
                raise InputError(f"row {i + 1} contains a symbol index outside 0..{k - 1}")
            arr.setflags(write=False)
            stored.append(arr)
        self.alphabet = alphabet
        self.rows = tuple(stored)

    @classmethod
    def from_labels(cls, alphabet: Alphabet, rows: Sequence[Sequence[str]]) -> "ObservationArray":
        indexed = []
        for i, row in enumerate(rows):
            idx_row = []
            for pos, symbol in enumerate(row):
                idx = alphabet._index.get(symbol)
                if idx is None:
                    raise InputError(
                        f"unknown symbol {symbol!r} at row {i + 1}, position {pos + 1}"
                    )
                idx_row.append(idx)
            indexed.append(idx_row)
        return cls(alphabet, indexed)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def lengths(self) -> tuple:
        return tuple(r.size for r in self.rows)

    def counts(self) -> np.ndarray:
        """Per-row symbol counts, shape (n_rows, alphabet size)."""
        k = len(self.alphabet)
        out = np.zeros((self.n_rows, k), dtype=np.int64)
        for i, row in enumerate(self.rows):
            if row.size:
                out[i] = np.bincount(row, minlength=k)
        return out

    def label_rows(self) -> list[list[str]]:
        syms = self.alphabet.symbols
        return [[syms[x] for x in row] for row in self.rows]

    def __repr__(self) -> str:
        return f"ObservationArray({self.n_rows} rows, lengths {self.lengths})"


def _row_lengths(M: int, N: Union[int, Sequence[int]]) -> list[int]:
    if M < 1:
        raise InputError(f"need at least one row, got M={M}")
    if isinstance(N, (int, np.integer)):
        lengths = [int(N)] * M
    else:
        lengths = [int(n) for n in N]
        if len(lengths) != M:
            raise InputError(f"got {len(lengths)} row lengths for M={M} rows")
    if any(n < 0 for n in lengths):
        raise InputError("row lengths must be nonnegative")
    return lengths


def sample_hierarchical(model: HierModel, M: int, N: Union[int, Sequence[int]],
                        seed: int) -> tuple[LatentAssignment, ObservationArray]:
    """Ancestral sampling through the hierarchy on dedicated streams.

    Draws the generator, then one atom per row, then the cells, all by
    inverse CDF in declaration order.  Deterministic per seed; extending
    M or any row length leaves previously sampled cells unchanged.
    """
    _require_valid(model)
    lengths = _row_lengths(M, N)
    tab = model.tables()
    a = _bits.u01(_bits.frac_at(_bits.stream_key(seed, NS_HIER_MAIN, 0), 0))
    r = _scalar_invcdf(tab.prior_cum, a, tab.prior_cum.size)
    atom_idx = []
    rows = []
    for i, n in enumerate(lengths):
        b = _bits.u01(_bits.frac_at(_bits.stream_key(seed, NS_HIER_MAIN, i + 1), 0))
        t = _scalar_invcdf(tab.gen_cum[r], b, int(tab.n_atoms[r]))
        atom_idx.append(t)
        if n == 0:
            rows.append(np.empty(0, dtype=np.int64))
        else:
            rows.append(_kernels.row_cells(seed, NS_HIER_CELL, i, n, tab.sym_cum[r, t]))
    latent = LatentAssignment(r, tuple(atom_idx))
    return latent, ObservationArray(model.alphabet, rows)


def sample_hier_patches(model: HierModel, M: int, N: int, seeds: np.ndarray):
    """Bulk hierarchical sampling: one M x N array per seed.

    Returns (symbols[K, M, N], generator_pick[K], atom_pick[K, M]); used
    by the statistical diagnostics, which need many independent replicate
    arrays.
    """
    _require_valid(model)
    if M < 1 or N < 1:
        raise InputError(f"array dimensions must be at least 1x1, got {M}x{N}")
    tab = model.tables()
    return _kernels.sample_patches(
        tab.prior_cum, tab.n_atoms, tab.gen_cum, tab.sym_cum,
        np.asarray(seeds, dtype=np.uint64), int(M), int(N),
        NS_HIER_MAIN, NS_HIER_CELL,
    )


def rep_from_model(model: HierModel) -> TableRepFunction:
    """Explicit representation function equivalent in law to the hierarchy.

    The shared uniform picks the generator, the row uniform picks the
    atom within it, and the cell uniform picks the symbol, each by
    inverse CDF.  Pure and deterministic.
    """
    _require_valid(model)
    tab = model.tables()
    return TableRepFunction(tab.prior_cum, tab.n_atoms, tab.gen_cum, tab.sym_cum)


def _penny(biases: Sequence[float] = (0.5, 1.0),
           prior: Optional[Sequence[float]] = None) -> HierModel:
    biases = [float(b) for b in biases]
    if not biases:
        raise InputError("penny model needs at least one bias")
    if any(not (0.0 <= b <= 1.0) for b in biases):
        raise InputError("penny biases must lie in [0, 1]")
    if prior is None:
        prior = [1.0 / len(biases)] * len(biases)
    if len(prior) != len(biases):
        raise InputError("penny prior must have one weight per bias")
    alphabet = Alphabet(["H", "T"])
    gens = [
        (w, MeasureOnPMFs([(1.0, PMF([b, 1.0 - b]))]))
        for w, b in zip(prior, biases)
    ]
    return HierModel(alphabet, gens)


def _loaded_die(faces: int = 6, weights: Optional[Sequence[float]] = None) -> HierModel:
    faces = int(faces)
    if faces < 2:
        raise InputError("loaded_die needs at least 2 faces")
    if weights is None:
        weights = [1.0 / faces] * faces
    if len(weights) != faces:
        raise InputError(f"loaded_die weights must have length {faces}")
    alphabet = Alphabet([str(f) for f in range(1, faces + 1)])
    gen = MeasureOnPMFs([(1.0, PMF(weights))])
    return HierModel(alphabet, [(1.0, gen)])


def _globe_cells(bands: int = 8, bump: int = 3, width: float = 1.5,
                 bumps: Optional[Sequence[int]] = None) -> HierModel:
    """Latitude-band discretization of a rolled irregular globe.

    Each atom is a smooth bump of mass across the band cells, centered at
    a band index; the alphabet carries the normalized band separation as
    its ground metric.
    """
    bands = int(bands)
    if bands < 2:
        raise InputError("globe_cells needs at least 2 bands")
    centers = [int(bump)] if bumps is None else [int(b) for b in bumps]
    if any(not (0 <= c < bands) for c in centers):
        raise InputError(f"bump centers must lie in 0..{bands - 1}")
    if width <= 0:
        raise InputError("bump width must be positive")
    idx = np.arange(bands)
    metric = np.abs(idx[:, None] - idx[None, :]) / (bands - 1)
    alphabet = Alphabet([f"b{c}" for c in range(bands)], metric=metric)
    atoms = []
    for c in centers:
        raw = np.exp(-(((idx - c) / width) ** 2))
        atoms.append((1.0 / len(centers), PMF(raw / raw.sum())))
    return HierModel(alphabet, [(1.0, MeasureOnPMFs(atoms))])


_BUILTINS = {
    "penny": _penny,
    "loaded_die": _loaded_die,
    "globe_cells": _globe_cells,
}


def builtin_models(name: str, **params) -> HierModel:
    """Construct one of the named example models.

    penny(biases, prior): two-symbol alphabet {H, T}; one generator per
    bias, each a point mass at the PMF (bias, 1 - bias).
    loaded_die(faces, weights): one generator with a single face PMF.
    globe_cells(bands, bump, width, bumps): banded sphere discretization.
    """
    try:
        factory = _BUILTINS[name]
    except KeyError:
        choices = ", ".join(sorted(_BUILTINS))
        raise InputError(f"unknown builtin model {name!r}; choices: {choices}") from None
    return factory(**params)
