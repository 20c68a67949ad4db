"""Deterministic counter-based random numbers shared by every module.

All randomness in this project flows through :class:`Rng`, a counter-based
generator built on the SplitMix64 output function.  The i-th raw draw of a
stream is ``mix64(key + (i+1) * GOLDEN)``, so a stream is fully determined
by its 64-bit key and the number of values drawn so far.  Keys for
sub-streams are derived by hashing string/integer tags into the parent key,
which lets independent parts of an experiment (noise injection, weight
init, minibatch order, ...) draw from non-overlapping streams while the
whole run remains reproducible from a single integer seed.

The concrete algorithms (SplitMix64 constants, key-sort permutations,
floor-multiply bounded integers, Box-Muller normals) are part of the
on-disk reproducibility contract and must not change between versions;
tests pin golden values.
"""

from __future__ import annotations

import numpy as np

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

# float in [0, 1) from the top 53 bits of a u64
_INV_2_53 = 1.0 / (1 << 53)


def mix64(z):
    """SplitMix64 finalizer over uint64 scalars or arrays (wrapping mod 2^64)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _hash_tag(tag) -> int:
    """FNV-1a of a string/int tag, for key derivation only."""
    if isinstance(tag, (int, np.integer)):
        data = int(tag).to_bytes(16, "little", signed=True)
    elif isinstance(tag, str):
        data = tag.encode("utf-8")
    else:
        raise TypeError(f"rng tags must be str or int, got {type(tag).__name__}")
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


class Rng:
    """A named deterministic stream of random values.

    Streams advance by an internal counter; two `Rng` objects with the same
    key always produce the same sequence.  Use :meth:`child` to derive an
    independent stream instead of sharing one object across concerns.
    """

    def __init__(self, seed: int, _key: int | None = None):
        if _key is None:
            self.key = np.uint64(int(mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))))
        else:
            self.key = np.uint64(_key)
        self.counter = 0

    def child(self, *tags) -> "Rng":
        """Derive an independent stream keyed by this stream plus tags."""
        k = int(self.key)
        for tag in tags:
            k = int(mix64(np.uint64((k ^ _hash_tag(tag)) & 0xFFFFFFFFFFFFFFFF)))
        return Rng(0, _key=k)

    def u64(self, n: int) -> np.ndarray:
        """Next n raw 64-bit draws."""
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            return mix64(self.key + idx * _GOLDEN)

    def uniform(self, n: int) -> np.ndarray:
        """n doubles uniform in [0, 1)."""
        return (self.u64(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def uniform_range(self, lo: float, hi: float, n: int) -> np.ndarray:
        return lo + self.uniform(n) * (hi - lo)

    def integers(self, bound: int, n: int) -> np.ndarray:
        """n ints uniform in [0, bound) via floor-multiply of uniforms.

        The floor-multiply map has bias O(bound / 2^53); negligible for the
        bounds used here and exactly reproducible on IEEE-754 hardware.
        """
        if bound <= 0:
            raise ValueError("bound must be positive")
        return np.minimum((self.uniform(n) * bound).astype(np.int64), bound - 1)

    def permutation(self, n: int) -> np.ndarray:
        """Uniform permutation of range(n) by stable argsort of u64 keys."""
        keys = self.u64(n)
        return np.argsort(keys, kind="stable")

    def shuffled(self, arr: np.ndarray) -> np.ndarray:
        return np.asarray(arr)[self.permutation(len(arr))]

    def choice_no_replace(self, n: int, k: int) -> np.ndarray:
        """k distinct indices from range(n): first k of a fresh permutation."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot draw {k} from {n} without replacement")
        return self.permutation(n)[:k]

    def standard_normal(self, n: int) -> np.ndarray:
        """n N(0,1) draws by Box-Muller; always consumes 2*ceil(n/2) uniforms."""
        half = (n + 1) // 2
        u1 = 1.0 - self.uniform(half)  # (0, 1], keeps log finite
        u2 = self.uniform(half)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.concatenate([r * np.cos(theta), r * np.sin(theta)])
        return out[:n]
