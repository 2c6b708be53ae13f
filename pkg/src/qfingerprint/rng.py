"""Counter-based SplitMix64 generator.

Every random quantity in the package is derived from this generator so that
results are reproducible across platforms and can be accessed at arbitrary
offsets without replaying the stream.

Output word ``i`` of the stream with key ``seed`` is::

    z = seed + (i + 1) * 0x9E3779B97F4A7C15          (mod 2**64)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    word_i = z ^ (z >> 31)

which is exactly the sequence produced by the reference SplitMix64 generator
seeded with ``seed``. Bits are taken from each word least-significant first.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def _finalize(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def mix64(x):
    """SplitMix64 finalizer on a Python int or a uint64 array."""
    if isinstance(x, np.ndarray):
        with np.errstate(over="ignore"):
            return _finalize(x.astype(np.uint64, copy=False))
    z = x & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def random_words(seed, start, count):
    """Return ``count`` stream words beginning at word offset ``start``."""
    if count < 0 or start < 0:
        raise ValueError("start and count must be non-negative")
    base = np.uint64(seed & MASK64)
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = base + idx * np.uint64(GOLDEN)
        return _finalize(z)


def derive_seed(master, *indices):
    """Deterministically mix a master seed with a tuple of integer indices.

    Used for per-trial, per-party and per-code seeds; each index is folded in
    with one SplitMix64 step so distinct index tuples give unrelated seeds.
    """
    h = mix64((master & MASK64) ^ 0x5851F42D4C957F2D)
    for i in indices:
        h = mix64((h + GOLDEN + (i & MASK64)) & MASK64)
    return h


def derive_seeds(master, indices, *suffix):
    """Vectorised :func:`derive_seed` over an array of first indices."""
    h0 = mix64((master & MASK64) ^ 0x5851F42D4C957F2D)
    idx = np.asarray(indices, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = mix64(np.uint64(h0) + np.uint64(GOLDEN) + idx)
        for s in suffix:
            h = mix64(h + np.uint64(GOLDEN) + np.uint64(s & MASK64))
    return h


def to_unit(words):
    """Map uint64 words to floats in the open interval (0, 1).

    The top 52 bits select one of 2**52 equal cells and the cell midpoint is
    returned; every midpoint is exactly representable, so 0 and 1 never occur.
    """
    return ((np.asarray(words, dtype=np.uint64) >> np.uint64(12)).astype(np.float64) + 0.5) * 2.0**-52
