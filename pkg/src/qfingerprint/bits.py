"""Bit-packed strings for messages and codewords.

Bit order
---------
Logical bit ``j`` of a :class:`BitString` lives in byte ``j >> 3`` at bit
position ``j & 7`` (least-significant bit first).  Reading the same buffer as
little-endian 64-bit words puts bit ``j`` in word ``j >> 6`` at position
``j & 63``; the two views are interchangeable.  Any file is read with this
convention, so the first bit of a file is the low bit of its first byte.

Unused bits past ``length`` in the final byte are always zero.
"""

import math
import os

import numpy as np

from .rng import random_words

#: Inputs longer than this are memory-mapped instead of copied into RAM.
IN_MEMORY_CAP_BITS = 256_000_000

_CHUNK_BYTES = 1 << 22


def _nbytes(length):
    return (length + 7) >> 3


def _tail_mask(length):
    r = length & 7
    return 0xFF if r == 0 else (1 << r) - 1


class BitString:
    """Immutable packed bit sequence.

    Instances are built by the module-level constructors; the raw constructor
    takes ownership of ``data``, a uint8 buffer of ``ceil(length / 8)`` bytes.
    Large file-backed instances keep a read-only memory map as their buffer and
    mask the final byte on access.
    """

    __slots__ = ("_length", "_data", "_mapped")

    def __init__(self, data, length, _mapped=False):
        if length < 0:
            raise ValueError("length must be non-negative")
        data = np.asarray(data, dtype=np.uint8).reshape(-1)
        if data.size != _nbytes(length):
            raise ValueError(f"expected {_nbytes(length)} bytes for {length} bits, got {data.size}")
        if not _mapped:
            if data.flags.writeable:
                data.flags.writeable = False
            mask = _tail_mask(length)
            if data.size and int(data[-1]) & ~mask & 0xFF:
                data = data.copy()
                data[-1] &= mask
                data.flags.writeable = False
        self._length = length
        self._data = data
        self._mapped = _mapped

    # construction -------------------------------------------------------

    @classmethod
    def zeros(cls, length):
        return cls(np.zeros(_nbytes(length), dtype=np.uint8), length)

    @classmethod
    def ones(cls, length):
        data = np.full(_nbytes(length), 0xFF, dtype=np.uint8)
        if data.size:
            data[-1] = _tail_mask(length)
        return cls(data, length)

    @classmethod
    def from_bits(cls, bits):
        """Build from an iterable of 0/1 values (index 0 first)."""
        arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits)
        arr = arr.astype(bool, copy=False).reshape(-1)
        return cls(np.packbits(arr, bitorder="little"), arr.size)

    @classmethod
    def from_str(cls, text):
        """Build from a string such as ``"1011"``; the first character is bit 0."""
        text = "".join(text.split())
        if set(text) - {"0", "1"}:
            raise ValueError("bit strings may only contain '0' and '1'")
        return cls.from_bits(np.frombuffer(text.encode(), dtype=np.uint8) - ord("0"))

    @classmethod
    def from_bytes(cls, data, length=None):
        buf = np.frombuffer(bytes(data), dtype=np.uint8)
        if length is None:
            length = 8 * buf.size
        if length > 8 * buf.size:
            raise ValueError("length exceeds the supplied bytes")
        return cls(buf[: _nbytes(length)].copy(), length)

    @classmethod
    def concat(cls, parts):
        """Concatenate bit strings in order."""
        parts = list(parts)
        total = sum(len(p) for p in parts)
        out = np.zeros(_nbytes(total), dtype=np.uint8)
        pos = 0
        for p in parts:
            _write_at(out, pos, p)
            pos += len(p)
        return cls(out, total)

    # basic protocol -----------------------------------------------------

    @property
    def length(self):
        return self._length

    def __len__(self):
        return self._length

    @property
    def nbytes(self):
        return self._data.size

    @property
    def words(self):
        """Little-endian uint64 word view (a copy, zero padded to whole words)."""
        buf = np.zeros(8 * ((self._length + 63) >> 6), dtype=np.uint8)
        buf[: self.nbytes] = self.byte_range(0, self.nbytes)
        return buf.view("<u8").astype(np.uint64)

    def byte_range(self, start, stop):
        """Bytes ``[start, stop)`` of the packed buffer, with the tail masked."""
        stop = min(stop, self.nbytes)
        if not self._mapped:
            return self._data[start:stop]
        out = np.array(self._data[start:stop])
        if stop == self.nbytes and out.size:
            out[-1] &= _tail_mask(self._length)
        return out

    def iter_bytes(self, chunk_bytes=_CHUNK_BYTES):
        for start in range(0, self.nbytes, chunk_bytes):
            yield self.byte_range(start, start + chunk_bytes)

    def to_bytes(self):
        return b"".join(c.tobytes() for c in self.iter_bytes())

    def to_bits(self):
        """Unpacked uint8 array of 0/1 values."""
        out = np.empty(self._length, dtype=np.uint8)
        for start in range(0, self.nbytes, _CHUNK_BYTES):
            chunk = np.unpackbits(self.byte_range(start, start + _CHUNK_BYTES), bitorder="little")
            lo = 8 * start
            hi = min(lo + chunk.size, self._length)
            out[lo:hi] = chunk[: hi - lo]
        return out

    def bit_range(self, start, stop):
        """Unpacked 0/1 values of bits ``[start, stop)``."""
        start = max(start, 0)
        stop = min(stop, self._length)
        if stop <= start:
            return np.zeros(0, dtype=np.uint8)
        b0 = start >> 3
        raw = np.unpackbits(self.byte_range(b0, _nbytes(stop)), bitorder="little")
        off = start - 8 * b0
        return raw[off : off + stop - start]

    def __getitem__(self, j):
        if isinstance(j, slice):
            start, stop, step = j.indices(self._length)
            if step != 1:
                raise ValueError("only contiguous slices are supported")
            return self.slice(start, stop)
        if j < 0:
            j += self._length
        if not 0 <= j < self._length:
            raise IndexError("bit index out of range")
        return int(self._data[j >> 3] >> (j & 7) & 1)

    def slice(self, start, stop):
        stop = max(start, min(stop, self._length))
        if start & 7 == 0:
            data = np.array(self.byte_range(start >> 3, _nbytes(stop)))
            return BitString(data, stop - start)
        return BitString.from_bits(self.bit_range(start, stop))

    def chunks(self, chunk_bits):
        """Yield consecutive pieces of ``chunk_bits`` bits (the last may be shorter)."""
        if chunk_bits <= 0:
            raise ValueError("chunk_bits must be positive")
        for start in range(0, self._length, chunk_bits):
            yield self.slice(start, start + chunk_bits)

    def popcount(self):
        return int(sum(int(np.bitwise_count(c).sum(dtype=np.int64)) for c in self.iter_bytes()))

    def any(self):
        return any(c.any() for c in self.iter_bytes())

    def __xor__(self, other):
        if not isinstance(other, BitString):
            return NotImplemented
        _check_same_length(self, other)
        out = np.empty(self.nbytes, dtype=np.uint8)
        for start in range(0, self.nbytes, _CHUNK_BYTES):
            stop = start + _CHUNK_BYTES
            np.bitwise_xor(self.byte_range(start, stop), other.byte_range(start, stop), out=out[start:stop])
        return BitString(out, self._length)

    def __invert__(self):
        return self ^ BitString.ones(self._length)

    def __eq__(self, other):
        if not isinstance(other, BitString):
            return NotImplemented
        if self._length != other._length:
            return False
        return all(
            np.array_equal(self.byte_range(s, s + _CHUNK_BYTES), other.byte_range(s, s + _CHUNK_BYTES))
            for s in range(0, self.nbytes, _CHUNK_BYTES)
        )

    __hash__ = None

    def __str__(self):
        return "".join(map(str, self.to_bits()))

    def __repr__(self):
        if self._length <= 64:
            return f"BitString('{self}')"
        head = "".join(map(str, self.bit_range(0, 32)))
        return f"BitString(length={self._length}, head='{head}...')"

    def write(self, path):
        """Write the packed bytes to ``path`` (the inverse of :func:`from_file`)."""
        with open(path, "wb") as fh:
            for chunk in self.iter_bytes():
                fh.write(chunk.tobytes())


def _write_at(out, pos, bits):
    """OR ``bits`` into the packed buffer ``out`` starting at bit ``pos``."""
    n = len(bits)
    if n == 0:
        return
    shift = pos & 7
    base = pos >> 3
    for start in range(0, bits.nbytes, _CHUNK_BYTES):
        chunk = bits.byte_range(start, start + _CHUNK_BYTES)
        lo = base + start
        if shift == 0:
            out[lo : lo + chunk.size] |= chunk
            continue
        wide = chunk.astype(np.uint16) << shift
        out[lo : lo + chunk.size] |= (wide & 0xFF).astype(np.uint8)
        hi = (wide >> 8).astype(np.uint8)
        end = min(lo + 1 + chunk.size, out.size)
        out[lo + 1 : end] |= hi[: end - lo - 1]


def _check_same_length(a, b):
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} != {len(b)}")


def from_file(path, max_bits, in_memory_cap=IN_MEMORY_CAP_BITS):
    """Read the first ``min(8 * filesize, max_bits)`` bits of a file.

    Results longer than ``in_memory_cap`` bits are backed by a read-only memory
    map so multi-gigabit inputs can be processed in chunks.
    """
    if max_bits <= 0:
        raise ValueError("max_bits must be positive")
    size = os.path.getsize(path)
    if size == 0:
        raise ValueError(f"{path}: empty file")
    length = min(8 * size, int(max_bits))
    nb = _nbytes(length)
    if length > in_memory_cap:
        mm = np.memmap(path, dtype=np.uint8, mode="r", shape=(nb,))
        return BitString(mm, length, _mapped=True)
    with open(path, "rb") as fh:
        data = np.frombuffer(fh.read(nb), dtype=np.uint8).copy()
    return BitString(data, length)


def random_bits(seed, length):
    """Deterministic pseudorandom bits: the SplitMix64 stream of ``seed``."""
    if length <= 0:
        raise ValueError("length must be positive")
    words = random_words(seed, 0, (length + 63) >> 6)
    data = words.astype("<u8").view(np.uint8)[: _nbytes(length)].copy()
    return BitString(data, length)


def hamming_distance(a, b):
    """Number of positions at which ``a`` and ``b`` differ."""
    _check_same_length(a, b)
    total = 0
    for start in range(0, a.nbytes, _CHUNK_BYTES):
        stop = start + _CHUNK_BYTES
        x = np.bitwise_xor(a.byte_range(start, stop), b.byte_range(start, stop))
        total += int(np.bitwise_count(x).sum(dtype=np.int64))
    return total


def round_half_up(x):
    return int(math.floor(x + 0.5))


def flip_fraction(a, fraction, seed, chunk_bits=1 << 20):
    """Copy of ``a`` with exactly ``round(fraction * len(a))`` distinct bits flipped.

    Positions are a uniform sample without replacement, drawn chunk by chunk:
    a hypergeometric draw splits the remaining flips between the current chunk
    and the rest, then positions inside the chunk are sampled directly.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    n = len(a)
    k = round_half_up(fraction * n)
    rng = np.random.Generator(np.random.Philox(key=seed & ((1 << 64) - 1)))
    chunk_bits = 8 * max(1, chunk_bits // 8)
    out = np.empty(a.nbytes, dtype=np.uint8)
    remaining_n, remaining_k = n, k
    for start in range(0, n, chunk_bits):
        c = min(chunk_bits, n - start)
        if remaining_k == 0:
            h = 0
        elif c == remaining_n:
            h = remaining_k
        else:
            h = int(rng.hypergeometric(c, remaining_n - c, remaining_k))
        mask = np.zeros(c, dtype=bool)
        if h:
            mask[rng.choice(c, size=h, replace=False)] = True
        b0 = start >> 3
        packed = np.packbits(mask, bitorder="little")
        out[b0 : b0 + packed.size] = a.byte_range(b0, b0 + packed.size) ^ packed
        remaining_n -= c
        remaining_k -= h
    return BitString(out, n)
