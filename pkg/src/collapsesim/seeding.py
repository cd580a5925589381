"""Deterministic per-trial random streams.

Every Monte Carlo trial gets its own stream whose seed is derived as
``mix64(seed, trial_index)``, so results never depend on how trials are
scheduled across workers. The mixing function is the SplitMix64 finaliser
and must never change; recorded runs depend on it.

    mix64(seed, k) = fmix(seed + (k + 1) * GOLDEN)          (mod 2**64)
    fmix(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
             z ^= z >> 27; z *= 0x94D049BB133111EB
             z ^= z >> 31

A stream started at ``s`` yields ``fmix(s + n * GOLDEN)`` for n = 1, 2, ...;
a uniform double is the top 53 bits times 2**-53.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 2.0**-53


def fmix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def mix64(seed: int, index: int) -> int:
    return fmix64((seed + (index + 1) * GOLDEN) & MASK64)


class SplitMix64:
    """Minimal engine with a ``random()`` method, usable wherever an rng is expected."""

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return fmix64(self.state)

    def random(self) -> float:
        return (self.next_u64() >> 11) * _INV53


def trial_engine(seed: int, index: int) -> SplitMix64:
    return SplitMix64(mix64(seed, index))


def _fmix64_vec(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_M1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def trial_uniforms(seed: int, start: int, stop: int, draws: int) -> np.ndarray:
    """Uniforms for trials ``start..stop-1``; shape ``(stop - start, draws)``.

    Row ``k`` equals the first ``draws`` outputs of ``trial_engine(seed, start + k)``.
    """
    idx = np.arange(start, stop, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = np.uint64(seed & MASK64) + (idx + np.uint64(1)) * np.uint64(GOLDEN)
        child = _fmix64_vec(base)
        steps = np.arange(1, draws + 1, dtype=np.uint64) * np.uint64(GOLDEN)
        z = _fmix64_vec(child[:, None] + steps[None, :])
    return (z >> np.uint64(11)).astype(np.float64) * _INV53
