"""Counter-based deterministic random number generation.

Every random quantity in the library (dataset draws, parameter inits,
minibatch shuffles) flows from this module, never from OS entropy or global
generator state. The generator is SplitMix64: the i-th raw word of the
stream with key k is

    word(k, i) = mix64(k + (i + 1) * GAMMA)        (mod 2**64)

where GAMMA = 0x9E3779B97F4A7C15 and mix64 is the SplitMix64 finalizer.
Because each word depends only on (key, index), any draw can be reproduced
in isolation, and an implementation in another language can match streams
exactly from this comment alone.

Substreams are obtained by deriving child keys from a parent key and integer
tags; derivation runs in pure Python integers with explicit 64-bit masking
(numpy uint64 scalars warn on overflow, arrays wrap silently, so bulk word
generation is vectorized while keying is not).
"""

from __future__ import annotations

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    """SplitMix64 finalizer on a pure-Python integer."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_key(seed: int, *tags: int) -> int:
    """Derive a substream key from a seed and a path of integer tags.

    derive_key(s) == derive_key(s,) mixes the seed; each further tag folds
    in mix64(tag * GAMMA) and re-mixes, so (seed, tag path) -> key is
    collision-resistant for practical purposes and order-sensitive.
    """
    key = _mix64(seed & _MASK)
    for tag in tags:
        key = _mix64(key ^ _mix64((tag * _GAMMA) & _MASK))
    return key


# Vectorized counterpart of _mix64 for bulk draws. Arrays of uint64 wrap
# modulo 2**64 silently, which is exactly the arithmetic we want.
def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def words(key: int, n: int, offset: int = 0) -> np.ndarray:
    """Raw stream words offset+1 .. offset+n for the given key, as uint64."""
    counters = np.arange(offset + 1, offset + n + 1, dtype=np.uint64)
    return _mix64_array(np.uint64(key) + counters * np.uint64(_GAMMA))


def uniforms(key: int, n: int, offset: int = 0) -> np.ndarray:
    """n doubles uniform on [0, 1): the top 53 bits of each word."""
    return (words(key, n, offset) >> np.uint64(11)) * 2.0**-53


def normals(key: int, n: int) -> np.ndarray:
    """n standard normals via Box-Muller on two derived substreams.

    The radius substream is shifted by one ulp-of-the-lattice so u1 lies in
    (0, 1], keeping log(u1) finite.
    """
    m = (n + 1) // 2
    u1 = ((words(derive_key(key, 101), m) >> np.uint64(11)) + np.uint64(1)) * 2.0**-53
    u2 = uniforms(derive_key(key, 102), m)
    r = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * m)
    out[0::2] = r * np.cos(2.0 * np.pi * u2)
    out[1::2] = r * np.sin(2.0 * np.pi * u2)
    return out[:n]


def permutation(key: int, n: int) -> np.ndarray:
    """A permutation of range(n) as the argsort of the first n stream words.

    Stable sort makes the (astronomically unlikely) tie case deterministic.
    """
    return np.argsort(words(key, n), kind="stable")
