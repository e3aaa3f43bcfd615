"""Scalar integer primitives for counter-based uniform streams.

Everything here is plain Python int arithmetic modulo 2**64 and serves as
the reference semantics that both kernel backends reproduce bit for bit.

Derivation chain, documented exactly (all ops mod 2**64):

    fin64(z):  z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
               z ^= z >> 27;  z *= 0x94D049BB133111EB
               z ^= z >> 31
    mix64(z)       = fin64(z + 0x9E3779B97F4A7C15)
    stream_key     = mix64(mix64(mix64(seed) ^ namespace) ^ stream_id)
    frac(key, c):  state = key + (c + 1) * 0x9E3779B97F4A7C15
                   raw   = fin64(state)
                   if raw == 0: raw = fin64(state + 1)

fin64 is a bijection whose only zero preimage is state 0, so the zero
fix-up triggers for at most one counter per stream and never recurses;
draws are uniform over {1, ..., 2**64 - 1}.
"""
from __future__ import annotations

M64 = (1 << 64) - 1
GOLD = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB

EVEN_1 = 0x5555555555555555
EVEN_2 = 0x3333333333333333
EVEN_4 = 0x0F0F0F0F0F0F0F0F
EVEN_8 = 0x00FF00FF00FF00FF
EVEN_16 = 0x0000FFFF0000FFFF
EVEN_32 = 0x00000000FFFFFFFF

# Stream namespaces.  Within a namespace, the stream ids follow the layout:
# the shared draw uses stream 0, per-row draws use stream i, per-cell draws
# use stream (i << 32) | j, per-column draws use stream j (i, j 1-based).
NS_MAIN = 0        # representation sampler: shared + per-row uniforms
NS_CELL = 1        # representation sampler: per-cell uniforms
NS_COL = 2         # separate-form sampler: per-column uniforms
NS_HIER_MAIN = 3   # hierarchical sampler: generator + per-row uniforms
NS_HIER_CELL = 4   # hierarchical sampler: per-cell uniforms
NS_REPLICA_A = 5   # replicate-seed derivation, primary set
NS_REPLICA_B = 6   # replicate-seed derivation, independent comparison set


def fin64(z: int) -> int:
    z &= M64
    z ^= z >> 30
    z = (z * MIX1) & M64
    z ^= z >> 27
    z = (z * MIX2) & M64
    z ^= z >> 31
    return z


def mix64(z: int) -> int:
    return fin64((z + GOLD) & M64)


def stream_key(seed: int, namespace: int, stream_id: int) -> int:
    return mix64(mix64(mix64(seed & M64) ^ (namespace & M64)) ^ (stream_id & M64))


def frac_at(key: int, counter: int) -> int:
    """Fraction word of draw `counter` from the stream with this key."""
    state = (key + ((counter + 1) * GOLD)) & M64
    raw = fin64(state)
    if raw == 0:
        raw = fin64((state + 1) & M64)
    return raw


def u01(frac: int) -> float:
    """Nearest float64 to frac / 2**64 (may round to 1.0 near the top)."""
    return float(frac) * 2.0**-64


def compact_even_bits(x: int) -> int:
    """Gather the bits at even positions 0,2,...,62 into the low 32 bits."""
    x &= EVEN_1
    x = (x | (x >> 1)) & EVEN_2
    x = (x | (x >> 2)) & EVEN_4
    x = (x | (x >> 4)) & EVEN_8
    x = (x | (x >> 8)) & EVEN_16
    x = (x | (x >> 16)) & EVEN_32
    return x


def split_frac(frac: int) -> tuple[int, int]:
    """Deinterleave one 64-bit fraction into two 32-bit fractions.

    The first output carries the odd-numbered fraction bits (the 1st, 3rd,
    5th, ... most significant), the second the even-numbered ones, each
    left-aligned into a 64-bit fraction word.
    """
    hi = compact_even_bits(frac >> 1) << 32
    lo = compact_even_bits(frac) << 32
    return hi, lo


def subseed(seed: int, namespace: int, index: int) -> int:
    """Derived 64-bit seed for replicate `index`, independent per namespace."""
    return stream_key(seed, namespace, index)
