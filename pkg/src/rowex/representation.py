"""Seeded uniform streams and representation-function array samplers.

A row exchangeable array can be produced by a single measurable function
applied to one shared uniform, one uniform per row, and one uniform per
cell.  This module provides the deterministic machinery for that: exact
64-bit uniforms on counter-based streams, the digit/interleave split that
turns one uniform into two independent ones, the collapse of a
four-argument (separately exchangeable) evaluator into a three-argument
one, and samplers driven by either form.

Stream layout (derived from one run seed, see _bits for the exact mix):
the shared uniform uses stream 0 of a namespace, per-row uniforms use
stream i, per-cell uniforms use stream (i << 32) | j in a dedicated
namespace, and per-column uniforms (separate form only) use stream j in
another.  Sampling is therefore bit-reproducible for a fixed seed, stable
under extending the array (new rows or columns never disturb existing
cells), and shardable across workers without shared state.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from . import _bits, _kernels
from ._bits import NS_CELL, NS_COL, NS_MAIN
from .errors import InputError

_SCALE = 1 << 64

#: Three-argument evaluator (shared, row, cell) -> symbol index.
RepFunction = Callable[["UnitUniform", "UnitUniform", "UnitUniform"], int]

#: Four-argument evaluator (shared, row, column, cell) -> symbol index.
SepRepFunction = Callable[
    ["UnitUniform", "UnitUniform", "UnitUniform", "UnitUniform"], int
]


@dataclass(frozen=True)
class UnitUniform:
    """A uniform variate stored as a 64-bit fixed-point fraction.

    The represented value is frac / 2**64.  Stream draws are never zero
    (the resample convention in _bits guarantees a value in (0, 1)); a
    zero frac can only arise by splitting a dyadic rational, whose
    terminating expansion is the convention here.
    """

    frac: int

    def __post_init__(self):
        if not isinstance(self.frac, (int, np.integer)):
            raise InputError("frac must be an integer in [0, 2**64)")
        object.__setattr__(self, "frac", int(self.frac))
        if not (0 <= self.frac < _SCALE):
            raise InputError("frac must be an integer in [0, 2**64)")

    @property
    def value(self) -> float:
        """Nearest float64; can round to exactly 1.0 for fracs near 2**64."""
        return _bits.u01(self.frac)

    @classmethod
    def from_float(cls, x: float) -> "UnitUniform":
        if not (0.0 <= x < 1.0):
            raise InputError(f"uniform value must lie in [0, 1), got {x}")
        return cls(round(x * _SCALE))

    def __repr__(self) -> str:
        return f"UnitUniform({self.value:.17g})"


@dataclass
class UniformStream:
    """Counter-based uniform stream.

    The draw at any counter is a pure function of (seed, stream_id,
    counter) within a namespace; distinct stream ids behave as independent
    streams.  Streams are cheap values: recreating one at any position
    yields the same outputs.
    """

    seed: int
    stream_id: int = 0
    namespace: int = NS_MAIN
    counter: int = 0
    _key: int = field(init=False, repr=False)

    def __post_init__(self):
        self._key = _bits.stream_key(self.seed, self.namespace, self.stream_id)

    def uniform_at(self, counter: int) -> UnitUniform:
        """The draw at an explicit counter, without touching stream state."""
        return UnitUniform(_bits.frac_at(self._key, counter))

    def next_uniform(self) -> UnitUniform:
        """Stateful convenience: draw at the current counter, then advance."""
        u = self.uniform_at(self.counter)
        self.counter += 1
        return u

    def fracs(self, count: int, start: int = 0) -> np.ndarray:
        """Fraction words for counters start..start+count-1 (uint64 array)."""
        return _kernels.stream_fracs(self.seed, self.namespace, self.stream_id,
                                     start, count)


def digit(n: int, x) -> int:
    """The n-th binary fraction digit of a uniform, for n in 1..64.

    Equals floor(2**n x) - 2 floor(2**(n-1) x) for every x representable
    in 64 fraction bits; extracted directly as a bit of frac.
    """
    if not (1 <= n <= 64):
        raise InputError(f"digit index must be in 1..64, got {n}")
    x = _as_uniform(x)
    return (x.frac >> (64 - n)) & 1


def split_uniform(x) -> tuple[UnitUniform, UnitUniform]:
    """Split one uniform into two by deinterleaving its fraction bits.

    The first output carries digits 1, 3, 5, ..., 63 and the second
    digits 2, 4, ..., 64, each as a 32-bit fraction (zero padded).  On a
    uniform 64-bit input the outputs are independent and uniform over
    their 32-bit grids.
    """
    x = _as_uniform(x)
    hi, lo = _bits.split_frac(x.frac)
    return UnitUniform(hi), UnitUniform(lo)


def _as_uniform(x) -> UnitUniform:
    if isinstance(x, UnitUniform):
        return x
    if isinstance(x, float):
        return UnitUniform.from_float(x)
    raise InputError(f"expected UnitUniform or float, got {type(x).__name__}")


@dataclass(frozen=True)
class CollapsedRepFunction:
    """Three-argument evaluator wrapping a four-argument one.

    The cell uniform is split into a (column-role, cell-role) pair which
    feeds the wrapped evaluator, preserving its distribution over arrays.
    """

    inner: SepRepFunction

    def __call__(self, a: UnitUniform, b: UnitUniform, z: UnitUniform) -> int:
        e, z2 = split_uniform(z)
        return self.inner(a, b, e, z2)


def collapse(g: SepRepFunction) -> CollapsedRepFunction:
    """Turn a four-argument evaluator into an equivalent three-argument one."""
    return CollapsedRepFunction(g)


@dataclass(frozen=True)
class TableRepFunction:
    """Three-level inverse-CDF evaluator backed by cumulative tables.

    The shared uniform selects a mixing component via `prior_cum`, the row
    uniform selects that component's atom via `gen_cum`, and the cell
    uniform selects a symbol via `sym_cum`.  Samplers recognize this type
    and use the bulk kernels; calling it scalar-wise gives bit-identical
    results.
    """

    prior_cum: np.ndarray      # (R,)
    n_atoms: np.ndarray        # (R,) atoms per component
    gen_cum: np.ndarray        # (R, T) padded atom-weight cumsums
    sym_cum: np.ndarray        # (R, T, K) per-atom symbol cumsums

    def select(self, a: UnitUniform, b: UnitUniform) -> tuple[int, int]:
        """Component and atom picked by the shared and row uniforms."""
        r = _scalar_invcdf(self.prior_cum, a.value, self.prior_cum.size)
        t = _scalar_invcdf(self.gen_cum[r], b.value, int(self.n_atoms[r]))
        return r, t

    def __call__(self, a: UnitUniform, b: UnitUniform, z: UnitUniform) -> int:
        r, t = self.select(a, b)
        return _scalar_invcdf(self.sym_cum[r, t], z.value, self.sym_cum.shape[2])


def _scalar_invcdf(cum: np.ndarray, u: float, n: int) -> int:
    return min(int(np.searchsorted(cum[:n], u, side="right")), n - 1)


class RealizedUniforms(NamedTuple):
    """The shared and per-row uniforms behind one sampled array."""

    alpha: UnitUniform
    betas: tuple


def _check_dims(M: int, N: int) -> None:
    if M < 1 or N < 1:
        raise InputError(f"array dimensions must be at least 1x1, got {M}x{N}")


def sample_array_rep(f: RepFunction, M: int, N: int, seed: int,
                     return_uniforms: bool = False):
    """Sample an M x N symbol-index array as f(shared, row_i, cell_ij).

    Deterministic for fixed (seed, M, N); the first N columns are
    unchanged when N grows, and existing rows are unchanged when M grows.
    With `return_uniforms`, also returns the realized shared and per-row
    uniforms.
    """
    _check_dims(M, N)
    if isinstance(f, TableRepFunction) and not return_uniforms:
        out, _, _ = _kernels.sample_patches(
            f.prior_cum, f.n_atoms, f.gen_cum, f.sym_cum,
            np.array([seed], dtype=np.uint64), M, N, NS_MAIN, NS_CELL,
        )
        return out[0]
    alpha = UnitUniform(_bits.frac_at(_bits.stream_key(seed, NS_MAIN, 0), 0))
    betas = tuple(
        UnitUniform(_bits.frac_at(_bits.stream_key(seed, NS_MAIN, i + 1), 0))
        for i in range(M)
    )
    out = np.empty((M, N), dtype=np.int64)
    for i in range(M):
        for j in range(N):
            sid = ((i + 1) << 32) | (j + 1)
            z = UnitUniform(_bits.frac_at(_bits.stream_key(seed, NS_CELL, sid), 0))
            out[i, j] = int(f(alpha, betas[i], z))
    if return_uniforms:
        return out, RealizedUniforms(alpha, betas)
    return out


def sample_array_separate(g: SepRepFunction, M: int, N: int, seed: int) -> np.ndarray:
    """Sample an M x N array as g(shared, row_i, col_j, cell_ij)."""
    _check_dims(M, N)
    alpha = UnitUniform(_bits.frac_at(_bits.stream_key(seed, NS_MAIN, 0), 0))
    betas = [
        UnitUniform(_bits.frac_at(_bits.stream_key(seed, NS_MAIN, i + 1), 0))
        for i in range(M)
    ]
    etas = [
        UnitUniform(_bits.frac_at(_bits.stream_key(seed, NS_COL, j + 1), 0))
        for j in range(N)
    ]
    out = np.empty((M, N), dtype=np.int64)
    for i in range(M):
        for j in range(N):
            sid = ((i + 1) << 32) | (j + 1)
            z = UnitUniform(_bits.frac_at(_bits.stream_key(seed, NS_CELL, sid), 0))
            out[i, j] = int(g(alpha, betas[i], etas[j], z))
    return out


def sample_patch_arrays(f: TableRepFunction, M: int, N: int,
                        seeds: np.ndarray) -> np.ndarray:
    """Bulk form of sample_array_rep for table evaluators: one array per seed."""
    _check_dims(M, N)
    out, _, _ = _kernels.sample_patches(
        f.prior_cum, f.n_atoms, f.gen_cum, f.sym_cum,
        np.asarray(seeds, dtype=np.uint64), M, N, NS_MAIN, NS_CELL,
    )
    return out
