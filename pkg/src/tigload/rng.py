"""Counter-based random source used everywhere randomness is needed.

The generator is a pure function of ``(key, counter)``: output ``i`` of a
stream is ``mix64(key + (i + 1) * GOLDEN_GAMMA)`` where ``mix64`` is the
splitmix64 finalizer. Because there is no sequential state, streams can be
partitioned across workers at arbitrary counter offsets and reproduced
exactly from the seed alone, in any language. ``tigload._kernels.vectors``
freezes reference outputs so reimplementations can be checked bit for bit.

Uniform doubles are ``(u64 >> 11) * 2**-53``, i.e. 53-bit dyadic rationals
in [0, 1), which convert exactly to IEEE float64 on every platform.

This module is the normative scalar definition (plain Python integers).
Batch implementations live in ``tigload._kernels``.
"""

from __future__ import annotations

_MASK64 = 0xFFFFFFFFFFFFFFFF

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX_MULT_1 = 0xBF58476D1CE4E5B9
_MIX_MULT_2 = 0x94D049BB133111EB
_DERIVE_MULT = 0xD1B54A32D192ED03

_INV_2_53 = 2.0 ** -53


def mix64(x: int) -> int:
    """splitmix64 finalizer: bijective avalanche mix of a 64-bit word."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * _MIX_MULT_1) & _MASK64
    x = ((x ^ (x >> 27)) * _MIX_MULT_2) & _MASK64
    return x ^ (x >> 31)


def u64_at(key: int, counter: int) -> int:
    """Output ``counter`` of the stream identified by ``key``, as uint64."""
    return mix64((key + ((counter + 1) * GOLDEN_GAMMA)) & _MASK64)


def uniform_at(key: int, counter: int) -> float:
    """Uniform double in [0, 1) at position ``counter`` of stream ``key``."""
    return (u64_at(key, counter) >> 11) * _INV_2_53


def derive_key(key: int, index: int) -> int:
    """Derive subkey ``index`` from ``key`` for an independent substream."""
    salt = mix64(((index + 1) * _DERIVE_MULT) & _MASK64)
    return mix64((key & _MASK64) ^ salt)


def fnv1a64(text: str) -> int:
    """FNV-1a hash of UTF-8 bytes; stable way to turn ids into stream keys."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & _MASK64
    return h


class CounterRNG:
    """Sequential convenience cursor over one counter-based stream.

    Draws advance an internal counter; the state is just ``(key, counter)``
    so a generator can be forked or fast-forwarded freely.
    """

    def __init__(self, key: int, counter: int = 0):
        self.key = key & _MASK64
        self.counter = counter

    def fork(self, index: int) -> "CounterRNG":
        """Independent child stream; drawing from it never affects the parent."""
        return CounterRNG(derive_key(self.key, index))

    def u64(self) -> int:
        value = u64_at(self.key, self.counter)
        self.counter += 1
        return value

    def random(self) -> float:
        return (self.u64() >> 11) * _INV_2_53

    def randrange(self, n: int) -> int:
        """Unbiased integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ValueError("randrange() bound must be positive")
        threshold = (1 << 64) % n
        while True:
            r = self.u64()
            if r >= threshold:
                return r % n

    def randint(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi], both ends inclusive."""
        return lo + self.randrange(hi - lo + 1)

    def choice(self, seq):
        if not seq:
            raise ValueError("choice() from empty sequence")
        return seq[self.randrange(len(seq))]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randrange(i + 1)
            items[i], items[j] = items[j], items[i]
