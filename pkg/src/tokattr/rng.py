"""Seedable, portable random number generation.

Permutation sampling must be reproducible bit-for-bit across runs and
across reimplementations, so instead of relying on any library's stream
guarantees we fix the generator explicitly:

* stream: SplitMix64 (Steele, Lea & Flood 2014), the 64-bit finalizer
  with gamma 0x9e3779b97f4a7c15, seeded directly with the user seed;
* bounded draws: rejection sampling on the high bits
  (``randbelow(k)`` retries until ``value % 2**ceil == value < k`` holds
  via masking, see below);
* permutations: Fisher-Yates, swapping index ``i`` with
  ``randbelow(i + 1)`` for ``i = n-1 .. 1``.

The identifier ``"splitmix64-fisher-yates"`` names this scheme in run
configs and output records.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

GENERATOR_NAME = "splitmix64-fisher-yates"


class SplitMix64:
    """SplitMix64 stream over 64-bit unsigned integers."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_uint64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def randbelow(self, k: int) -> int:
        """Uniform integer in [0, k) via masked rejection sampling."""
        if k <= 0:
            raise ValueError("randbelow requires k >= 1")
        mask = (1 << (k - 1).bit_length()) - 1 if k > 1 else 0
        while True:
            value = self.next_uint64() & mask
            if value < k:
                return value

    def permutation(self, n: int) -> list[int]:
        """Fisher-Yates shuffle of range(n), one swap per next draw."""
        out = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.randbelow(i + 1)
            out[i], out[j] = out[j], out[i]
        return out


def derive_seed(base_seed: int, key: str) -> int:
    """Stable per-utterance seed: blake2b over the key, keyed by the base seed.

    Keeps per-utterance permutation streams independent of corpus order
    while remaining reproducible for a fixed (seed, utterance id) pair.
    """
    import hashlib

    digest = hashlib.blake2b(
        key.encode("utf-8"),
        digest_size=8,
        key=str(base_seed).encode("ascii"),
    ).digest()
    return int.from_bytes(digest, "big") & ((1 << 63) - 1)
