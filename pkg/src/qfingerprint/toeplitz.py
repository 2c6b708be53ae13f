"""Random linear codes with a Toeplitz generator matrix.

The ``m x n`` generator has entries ``T[i][j] = s(i - j)`` where the diagonal
sequence is::

    s(k) = first_col[k]     for 0 <= k < m
    s(k) = first_row[-k]    for -(n - 1) <= k < 0

so ``E(x)_i = XOR_j s(i - j) x_j``: the codeword is the valid part of the GF(2)
convolution of ``s`` with ``x``.

Seeded codes take ``first_col`` from words ``[0, ceil(m / 64))`` of the
SplitMix64 stream and ``first_row`` from the words that follow, with
``first_row[0]`` overwritten by ``first_col[0]``.  Nothing of size ``m`` is
materialised unless asked for, so a code with ``n = 2e9`` is cheap to build.

Encoding splits rows and columns into blocks of ``P`` bits.  Output block
``b`` is ``sum_p conv(segment(b - p), piece(p))`` where ``segment(k)`` holds
``s`` over ``[kP - P + 1, kP + P]``; each term is a length-``2P`` real FFT
product and the sum is formed in the frequency domain, so only one inverse
transform per output block is needed.  Integer results are recovered by
rounding (checked), then reduced mod 2.
"""

import logging
import math
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction

import numba
import numpy as np
import scipy.fft

from .bits import BitString, _nbytes
from .rng import random_words

log = logging.getLogger(__name__)

DEFAULT_MEMORY_BUDGET = 2 << 30
MAX_BLOCK_BITS = 1 << 23
DENSE_MAX_N = 4096
EXHAUSTIVE_MAX_N = 24

_ROUNDING_TOLERANCE = 0.25
_MAC_TILE = 512
_MIN_SLICE = 1024


def codeword_length(n, rate):
    """``ceil(n / rate)`` evaluated exactly on the decimal value of ``rate``."""
    return math.ceil(Fraction(int(n)) / Fraction(repr(float(rate))))


@dataclass(frozen=True, eq=False)
class ToeplitzCode:
    n: int
    m: int
    rate: float
    seed: int | None
    design_distance: float
    requested_seed: int | None = None
    _col: BitString | None = field(default=None, repr=False)
    _row: BitString | None = field(default=None, repr=False)

    @classmethod
    def from_bits(cls, first_col, first_row, design_distance=0.22):
        """Explicit code from its first column (``m`` bits) and first row (``n`` bits)."""
        if isinstance(first_col, str):
            first_col = BitString.from_str(first_col)
        if isinstance(first_row, str):
            first_row = BitString.from_str(first_row)
        if len(first_col) < 1 or len(first_row) < 1:
            raise ValueError("first row and column must be non-empty")
        if first_col[0] != first_row[0]:
            raise ValueError("first_row[0] must equal first_col[0]")
        m, n = len(first_col), len(first_row)
        return cls(n, m, n / m, None, design_distance, None, first_col, first_row)

    @property
    def is_seeded(self):
        return self._col is None

    @property
    def _row_word_offset(self):
        return (self.m + 63) >> 6

    def _stream_bits(self, word_offset, start, stop):
        w0 = start >> 6
        w1 = (stop + 63) >> 6
        words = random_words(self.seed, word_offset + w0, w1 - w0)
        raw = np.unpackbits(words.astype("<u8").view(np.uint8), bitorder="little")
        off = start - 64 * w0
        return raw[off : off + stop - start]

    def _col_bits(self, start, stop):
        if self._col is not None:
            return self._col.bit_range(start, stop)
        return self._stream_bits(0, start, stop)

    def _row_bits(self, start, stop):
        # start >= 1 always: row[0] is shared with the column
        if self._row is not None:
            return self._row.bit_range(start, stop)
        return self._stream_bits(self._row_word_offset, start, stop)

    @property
    def first_col(self):
        if self._col is not None:
            return self._col
        return BitString.from_bits(self._col_bits(0, self.m))

    @property
    def first_row(self):
        if self._row is not None:
            return self._row
        bits = self._stream_bits(self._row_word_offset, 0, self.n)
        bits[0] = self._col_bits(0, 1)[0]
        return BitString.from_bits(bits)

    def diagonal(self, start, stop):
        """Values of ``s(k)`` for ``start <= k < stop`` as a 0/1 uint8 array."""
        out = np.zeros(max(0, stop - start), dtype=np.uint8)
        # row part, k in [a, b) with -(n-1) <= k < 0
        a, b = max(start, -(self.n - 1)), min(stop, 0)
        if a < b:
            out[a - start : b - start] = self._row_bits(1 - b, 1 - a)[::-1]
        a, b = max(start, 0), min(stop, self.m)
        if a < b:
            out[a - start : b - start] = self._col_bits(a, b)
        return out

    def matrix(self):
        """Dense generator matrix (small codes only)."""
        if self.n * self.m > 1 << 26:
            raise ValueError("matrix too large to materialise")
        s = self.diagonal(-(self.n - 1), self.m)
        i = np.arange(self.m)[:, None]
        j = np.arange(self.n)[None, :]
        return s[i - j + self.n - 1]

    def is_zero(self, chunk=1 << 22):
        for start in range(-(self.n - 1), self.m, chunk):
            if self.diagonal(start, min(start + chunk, self.m)).any():
                return False
        return True

    def to_descriptor(self):
        """Flat ``key = value`` record from which the code can be regenerated."""
        if not self.is_seeded:
            raise ValueError("explicit codes have no seed descriptor")
        return (
            f"n = {self.n}\nm = {self.m}\nrate = {self.rate!r}\n"
            f"seed = {self.seed}\ndesign_distance = {self.design_distance!r}\n"
        )

    @classmethod
    def from_descriptor(cls, text):
        fields = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"malformed descriptor line: {line!r}")
            fields[key.strip()] = value.strip()
        missing = {"n", "m", "rate", "seed", "design_distance"} - fields.keys()
        if missing:
            raise ValueError(f"descriptor missing keys: {sorted(missing)}")
        n, rate = int(fields["n"]), float(fields["rate"])
        m = int(fields["m"])
        if m != codeword_length(n, rate):
            raise ValueError("descriptor m is inconsistent with n and rate")
        seed = int(fields["seed"])
        return cls(n, m, rate, seed, float(fields["design_distance"]), seed)


def new_code(n, rate=0.24, design_distance=0.22, seed=0):
    """Seeded Toeplitz code with ``m = ceil(n / rate)``.

    A generator whose first row and column are entirely zero is rejected and
    the seed is incremented; ``requested_seed`` keeps the original value.
    """
    if not 0 < rate <= 1:
        raise ValueError(f"rate must lie in (0, 1], got {rate}")
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 <= design_distance < 0.5:
        raise ValueError("design_distance must lie in [0, 0.5)")
    m = codeword_length(n, rate)
    s = seed
    while True:
        code = ToeplitzCode(int(n), m, float(rate), s, float(design_distance), seed)
        if not code.is_zero():
            return code
        log.warning("all-zero Toeplitz generator for seed %d; retrying with seed %d", s, s + 1)
        s += 1


# encoding ---------------------------------------------------------------


def encode_dense(code, x):
    """Reference GF(2) matrix-vector product; small codes only."""
    if len(x) != code.n:
        raise ValueError(f"input has {len(x)} bits, code expects {code.n}")
    if code.n > DENSE_MAX_N:
        raise ValueError(f"dense encode limited to n <= {DENSE_MAX_N}")
    y = (code.matrix().astype(np.int64) @ x.to_bits().astype(np.int64)) & 1
    return BitString.from_bits(y)


@numba.njit(cache=True, nogil=True)
def _mac(acc, a, b):
    for i in range(acc.shape[0]):
        acc[i] += a[i] * b[i]


@numba.njit(cache=True, nogil=True)
def _mac_slice(out, seg, x, seg_slot, tile):
    # out[b] += seg[seg_slot[b, p]] * x[p] over all blocks b and pieces p,
    # tiled along frequency so each output tile stays in cache across pieces
    n_out, width = out.shape
    n_x = x.shape[0]
    for t0 in range(0, width, tile):
        t1 = min(t0 + tile, width)
        for b in range(n_out):
            for p in range(n_x):
                s = seg_slot[b, p]
                for i in range(t0, t1):
                    out[b, i] += seg[s, i] * x[p, i]


def _next_pow2(v):
    return 1 << max(0, int(v - 1).bit_length())


def auto_block_bits(n, m, memory_budget=DEFAULT_MEMORY_BUDGET):
    """Block size used when none is given: large enough to cover small inputs
    in one piece, capped so that a handful of spectra fit in the budget."""
    p = _next_pow2(max(64, n, min(m, DENSE_MAX_N)))
    p = min(p, MAX_BLOCK_BITS)
    while p > 64 and 7 * 16 * (p + 1) > memory_budget:
        p //= 2
    return p


class _SpectrumFile:
    """Fixed-size complex spectra stored in slots of a scratch file."""

    def __init__(self, directory, size):
        self.size = size
        self._fh = tempfile.TemporaryFile(dir=directory)

    def write(self, slot, spec, lo=0):
        self._fh.seek(16 * (slot * self.size + lo))
        spec.astype(np.complex128, copy=False).tofile(self._fh)

    def read(self, slot, lo=0, hi=None, out=None):
        hi = self.size if hi is None else hi
        if out is None:
            out = np.empty(hi - lo, dtype=np.complex128)
        self._fh.seek(16 * (slot * self.size + lo))
        if self._fh.readinto(out.view(np.uint8)) != 16 * (hi - lo):
            raise OSError("scratch file truncated")
        return out

    def close(self):
        self._fh.close()


class _BlockEncoder:
    def __init__(self, code, x, block_bits, memory_budget, scratch_dir=None):
        self.code = code
        self.x = x
        P = block_bits or auto_block_bits(code.n, code.m, memory_budget)
        if P < 8 or P & (P - 1):
            raise ValueError("block_bits must be a power of two >= 8")
        self.P = P
        self.L = 2 * P
        self.n_pieces = -(-code.n // P)
        self.n_blocks = -(-code.m // P)
        self.pieces = [p for p in range(self.n_pieces) if self._piece_nonzero(p)]
        self.scratch_dir = scratch_dir
        avail = memory_budget // (16 * (P + 1))
        # G accumulators + G windowed segments + one piece + FFT scratch
        g_plain = max(1, (avail - 5) // 2)
        g_cached = (avail - 5 - len(self.pieces)) // 2
        self.cache_pieces = scratch_dir is None and g_cached >= 1 and self.fft_count(
            min(g_cached, self.n_blocks), True
        ) <= self.fft_count(min(g_plain, self.n_blocks), False)
        self.G = min(self.n_blocks, g_cached if self.cache_pieces else g_plain)
        self.memory_budget = memory_budget
        self._xcache = {}
        self._xfile = self._sfile = self._yfile = None

    def fft_count(self, g=None, cached=None):
        """Number of length-2P transforms the encode will perform."""
        g = self.G if g is None else g
        k = len(self.pieces)
        if self.scratch_dir is not None:
            return k + len(self._segment_keys()) + self.n_blocks
        cached = self.cache_pieces if cached is None else cached
        groups = -(-self.n_blocks // g)
        return (k if cached else groups * k) + groups * (k + g - 1) + self.n_blocks

    def _segment_keys(self):
        return sorted({b - p for p in self.pieces for b in range(self.n_blocks)})

    def _piece_nonzero(self, p):
        P = self.P
        return bool(self.x.byte_range(p * P // 8, _nbytes(min((p + 1) * P, self.code.n))).any())

    def _compute_piece(self, p):
        bits = self.x.bit_range(p * self.P, (p + 1) * self.P)
        return scipy.fft.rfft(bits.astype(np.float64), n=self.L)

    def _compute_segment(self, k):
        P = self.P
        seg = self.code.diagonal(k * P - P + 1, k * P + P + 1)
        return scipy.fft.rfft(seg.astype(np.float64), n=self.L)

    def _piece_spectrum(self, p):
        if self._xfile is not None:
            return self._xfile.read(self._xslot[p])
        if p in self._xcache:
            return self._xcache[p]
        spec = self._compute_piece(p)
        if self.cache_pieces:
            self._xcache[p] = spec
        return spec

    def _segment_spectrum(self, k):
        if self._sfile is not None:
            return self._sfile.read(self._sslot[k])
        return self._compute_segment(k)

    def _spill(self):
        size = self.P + 1
        self._xfile = _SpectrumFile(self.scratch_dir, size)
        self._xslot = {}
        for slot, p in enumerate(self.pieces):
            self._xfile.write(slot, self._compute_piece(p))
            self._xslot[p] = slot
        self._sfile = _SpectrumFile(self.scratch_dir, size)
        self._sslot = {}
        for slot, k in enumerate(self._segment_keys()):
            self._sfile.write(slot, self._compute_segment(k))
            self._sslot[k] = slot

    def _finish_block(self, b, acc):
        P = self.P
        y = scipy.fft.irfft(acc, n=self.L)[P - 1 : 2 * P - 1]
        count = min(P, self.code.m - b * P)
        y = y[:count]
        r = np.rint(y)
        err = float(np.max(np.abs(y - r))) if count else 0.0
        if err > _ROUNDING_TOLERANCE:
            raise FloatingPointError(
                f"FFT rounding error {err:.3g} in block {b}; use a smaller block_bits"
            )
        bits = (r.astype(np.int64) & 1).astype(np.uint8)
        return BitString(np.packbits(bits, bitorder="little"), count)

    def blocks(self):
        P, m = self.P, self.code.m
        if not self.pieces:
            for b in range(self.n_blocks):
                yield BitString.zeros(min(P, m - b * P))
            return
        try:
            if self.scratch_dir is not None:
                self._spill()
                yield from self._sliced_blocks()
            else:
                yield from self._grouped_blocks()
        finally:
            for f in (self._xfile, self._sfile, self._yfile):
                if f is not None:
                    f.close()

    def _sliced_blocks(self):
        # every frequency bin is independent, so the spilled spectra are
        # combined one frequency slice at a time: each spectrum is read once
        # and the output spectra are parked on disk until their inverse FFT
        size = self.P + 1
        seg_keys = self._segment_keys()
        n_x, n_seg, n_out = len(self.pieces), len(seg_keys), self.n_blocks
        slot = {k: i for i, k in enumerate(seg_keys)}
        seg_slot = np.array([[slot[b - p] for p in self.pieces] for b in range(n_out)], dtype=np.int64)
        # leave room for one inverse transform and its workspace
        spare = max(0, self.memory_budget - 4 * 16 * size)
        width = int(min(size, max(_MIN_SLICE, spare // (16 * (n_x + n_seg + n_out)))))
        self._yfile = _SpectrumFile(self.scratch_dir, size)
        x = np.empty((n_x, width), dtype=np.complex128)
        seg = np.empty((n_seg, width), dtype=np.complex128)
        out = np.empty((n_out, width), dtype=np.complex128)
        for lo in range(0, size, width):
            hi = min(size, lo + width)
            w = hi - lo
            for i, p in enumerate(self.pieces):
                self._xfile.read(self._xslot[p], lo, hi, out=x[i, :w])
            for i, k in enumerate(seg_keys):
                self._sfile.read(self._sslot[k], lo, hi, out=seg[i, :w])
            out[:, :w] = 0
            _mac_slice(out[:, :w], seg[:, :w], x[:, :w], seg_slot, _MAC_TILE)
            for b in range(n_out):
                self._yfile.write(b, out[b, :w], lo)
        del x, seg, out
        for b in range(n_out):
            yield self._finish_block(b, self._yfile.read(b))

    def _grouped_blocks(self):
        G = self.G
        for g0 in range(0, self.n_blocks, G):
            rows = range(g0, min(g0 + G, self.n_blocks))
            acc = np.zeros((len(rows), self.P + 1), dtype=np.complex128)
            window = {}
            for idx, p in enumerate(self.pieces):
                X = self._piece_spectrum(p)
                for r, b in enumerate(rows):
                    k = b - p
                    S = window.get(k)
                    if S is None:
                        S = window[k] = self._segment_spectrum(k)
                    _mac(acc[r], S, X)
                if idx + 1 < len(self.pieces):
                    limit = rows[-1] - self.pieces[idx + 1]
                    for k in [k for k in window if k > limit]:
                        del window[k]
                del X
            del window
            for r, b in enumerate(rows):
                yield self._finish_block(b, acc[r])
            del acc


def _gather(n, x_chunks):
    chunks = list(x_chunks)
    if len(chunks) == 1 and isinstance(chunks[0], BitString):
        x = chunks[0]
    else:
        x = BitString.concat(chunks)
    if len(x) != n:
        raise ValueError(f"input chunks total {len(x)} bits, code expects {n}")
    return x


def encode_streaming(
    code,
    x_chunks,
    emit,
    *,
    block_bits=None,
    memory_budget=DEFAULT_MEMORY_BUDGET,
    scratch_dir=None,
):
    """Encode an input given as consecutive chunks; codeword chunks go to ``emit``.

    The packed input (``n / 8`` bytes) is held in memory; transform workspace
    stays within ``memory_budget`` bytes regardless of ``m``.  Codeword chunks
    are emitted in order and are block-sized except for the last one.

    With ``scratch_dir`` set, every input and diagonal spectrum is computed
    once and parked in temporary files there, together with the output
    spectra (about ``32 * (m + n)`` bytes in all).  Each file is then read
    once, one frequency slice at a time, instead of once per output group.
    """
    x = _gather(code.n, x_chunks)
    for chunk in _BlockEncoder(code, x, block_bits, memory_budget, scratch_dir).blocks():
        emit(chunk)


def encode(code, x, **kwargs):
    """Codeword ``E(x) = T x`` over GF(2)."""
    if len(x) != code.n:
        raise ValueError(f"input has {len(x)} bits, code expects {code.n}")
    parts = []
    encode_streaming(code, [x], parts.append, **kwargs)
    return BitString.concat(parts)


def codeword_weight(code, x, **kwargs):
    """Hamming weight of ``E(x)`` without keeping the codeword."""
    total = 0

    def count(chunk):
        nonlocal total
        total += chunk.popcount()

    encode_streaming(code, [x], count, **kwargs)
    return total


# distance ---------------------------------------------------------------


def estimate_min_distance(code, mode="exhaustive", trials=1000, seed=0):
    """Relative minimum distance of the code.

    ``exhaustive`` enumerates every nonzero input (``n <= 24``).  ``sampled``
    takes the minimum over random nonzero inputs, which is an upper bound on the
    true relative distance.
    """
    T = None
    if mode == "exhaustive":
        if code.n > EXHAUSTIVE_MAX_N:
            raise ValueError(f"exhaustive search refused for n > {EXHAUSTIVE_MAX_N}")
        T = code.matrix().astype(np.int64)
        best = code.m
        batch = 1 << 14
        for start in range(1, 1 << code.n, batch):
            idx = np.arange(start, min(start + batch, 1 << code.n), dtype=np.int64)
            xs = (idx[:, None] >> np.arange(code.n)) & 1
            w = ((xs @ T.T) & 1).sum(axis=1)
            best = min(best, int(w.min()))
        return best / code.m
    if mode == "sampled":
        rng = np.random.Generator(np.random.Philox(key=seed))
        if code.n <= DENSE_MAX_N and code.n * code.m <= 1 << 24:
            T = code.matrix().astype(np.int64)
        best = code.m
        for _ in range(trials):
            bits = rng.integers(0, 2, code.n, dtype=np.uint8)
            if not bits.any():
                bits[rng.integers(code.n)] = 1
            if T is not None:
                w = int(((T @ bits.astype(np.int64)) & 1).sum())
            else:
                w = codeword_weight(code, BitString.from_bits(bits))
            best = min(best, w)
        return best / code.m
    raise ValueError(f"unknown mode {mode!r}")
