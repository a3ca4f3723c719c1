"""Deterministic 64-bit seed derivation.

All sub-seeds in the package (per-mode factor streams, per-trial operator
and model streams) come from one splitmix64-style mixing function so runs
are reproducible across processes and platforms.
"""

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix(seed: int, index: int) -> int:
    """Derive a child seed from a parent seed and a stream index."""
    z = (int(seed) + (int(index) + 1) * _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)
