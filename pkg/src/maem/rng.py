"""Counter-based random streams (Philox4x32-10).

Every independent run owns a stream keyed by ``(master seed, *stream ids)``.
The key is derived with :class:`numpy.random.SeedSequence`; the counter is the
index of the draw, so a stream can be positioned anywhere without replaying
it. Each call of the block function yields four 32-bit words.
"""

from __future__ import annotations

import numba as nb
import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_ZERO = np.uint64(0)


@nb.njit(cache=True, nogil=True, inline="always")
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten-round Philox4x32 block function.

    Words are 32-bit values carried in uint64 registers; every result is
    masked back to 32 bits.
    """
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (p1 >> _SHIFT32) ^ c1 ^ k0, p1 & _MASK32, (p0 >> _SHIFT32) ^ c3 ^ k1, p0 & _MASK32
        k0 = (k0 + _W0) & _MASK32
        k1 = (k1 + _W1) & _MASK32
    return c0, c1, c2, c3


@nb.njit(cache=True, nogil=True, inline="always")
def block_at(counter, k0, k1):
    """Four words for a 64-bit draw index (upper counter words are zero)."""
    return philox4x32(counter & _MASK32, counter >> _SHIFT32, _ZERO, _ZERO, k0, k1)


@nb.njit(cache=True, nogil=True, inline="always")
def bounded(word, n):
    """Map a uniform 32-bit word to ``[0, n)`` by multiply-shift."""
    return np.int64((word * np.uint64(n)) >> _SHIFT32)


def derive_key(seed: int, *stream_ids: int) -> tuple[int, int]:
    """Two 32-bit key words for the stream ``(seed, *stream_ids)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream_ids))
    k = ss.generate_state(2, dtype=np.uint32)
    return int(k[0]), int(k[1])


class PhiloxStream:
    """A positioned Philox stream.

    ``counter`` is the index of the next block to be drawn; kernels that
    consume the stream return the advanced counter, which is stored back.
    """

    __slots__ = ("seed", "stream_ids", "k0", "k1", "counter")

    def __init__(self, seed: int = 0, *stream_ids: int, counter: int = 0):
        if not 0 <= int(seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self.stream_ids = tuple(int(s) for s in stream_ids)
        self.k0, self.k1 = derive_key(self.seed, *self.stream_ids)
        self.counter = int(counter)

    @classmethod
    def from_key(cls, k0: int, k1: int, counter: int = 0) -> "PhiloxStream":
        obj = cls.__new__(cls)
        obj.seed = None
        obj.stream_ids = ()
        obj.k0, obj.k1 = int(k0), int(k1)
        obj.counter = int(counter)
        return obj

    def block(self) -> tuple[int, int, int, int]:
        """Draw the next four 32-bit words."""
        words = block_at(np.uint64(self.counter), np.uint64(self.k0), np.uint64(self.k1))
        self.counter += 1
        return tuple(int(w) for w in words)

    def kernel_args(self):
        return np.uint64(self.k0), np.uint64(self.k1), np.uint64(self.counter)

    def __repr__(self):
        return (
            f"PhiloxStream(seed={self.seed}, stream_ids={self.stream_ids}, "
            f"counter={self.counter})"
        )
