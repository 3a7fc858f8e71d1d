"""Deterministic per-unit seed derivation.

The CLI derives one child seed per story/episode from the master seed with
splitmix64: ``child_i = mix(master + (i + 1) * GOLDEN)``. The scheme keeps
per-unit streams independent of processing order, so units could be handled
in parallel without changing outputs.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> int:
    """One splitmix64 output step for the given 64-bit state."""
    z = (state + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """Child seed for unit `index` under `master`. Stable across runs."""
    return splitmix64((master + (index + 1) * _GOLDEN) & _MASK)
