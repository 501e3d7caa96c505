"""Deterministic low-discrepancy (Halton) sampling of box domains.

The radical-inverse construction is hand-rolled so that reports are
byte-identical across platforms and library versions.  The ``seed`` acts as
an index offset into the sequence; indices start at ``seed + 1`` so that no
sample ever lands on the (open) box boundary.
"""

from __future__ import annotations

import numpy as np

__all__ = ["radical_inverse", "halton_unit", "halton_box"]

_PRIMES = (2, 3, 5, 7)


def radical_inverse(base: int, index: int) -> float:
    """Van der Corput radical inverse of ``index`` in the given base."""
    inv = 0.0
    scale = 1.0 / base
    while index > 0:
        index, digit = divmod(index, base)
        inv += digit * scale
        scale /= base
    return inv


def halton_unit(n: int, dim: int, seed: int = 0) -> np.ndarray:
    """``n`` Halton points in the open unit cube ``(0,1)^dim``."""
    if n < 1:
        raise ValueError("need at least one sample")
    if not 1 <= dim <= len(_PRIMES):
        raise ValueError(f"dim must be in 1..{len(_PRIMES)}")
    pts = np.empty((n, dim))
    for j in range(dim):
        base = _PRIMES[j]
        pts[:, j] = [radical_inverse(base, seed + 1 + i) for i in range(n)]
    return pts


def halton_box(n: int, lower, upper, seed: int = 0) -> np.ndarray:
    """``n`` Halton points strictly inside the box ``(lower, upper)``."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    unit = halton_unit(n, lower.size, seed)
    return lower + unit * (upper - lower)
