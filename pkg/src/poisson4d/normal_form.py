"""Sign normalization and factorization of the coupling constants.

For a structure with all six couplings nonzero, the signs of the phi and psi
functions can be redefined so that every coupling becomes positive while the
evaluated structure matrix is unchanged entrywise.  The positive couplings
then factor uniquely as ``s_ij = s_i * s_j`` with positive ``s_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .exprlang import UnivariateFn, sneg
from .structure import (
    COMPATIBILITY_RTOL,
    PAIRS,
    FamilyStructure,
    SigmaSet,
    check_sigma_compatibility,
)

__all__ = ["SigmaFactors", "sigma_positive_normalize", "factor_sigma", "resolve_flips"]

# When exactly one opposite pair is negative (or, symmetrically, exactly one
# is positive), flipping the sign of two psi functions clears the remaining
# negative couplings.  Keyed by the distinguished opposite pair.
_PSI_FLIPS_BY_OPPOSITE_PAIR = {
    frozenset({(1, 2), (3, 4)}): (3, 4),
    frozenset({(1, 3), (2, 4)}): (1, 3),
    frozenset({(1, 4), (2, 3)}): (1, 4),
}

_OPPOSITE_PAIRS = (frozenset({(1, 2), (3, 4)}),
                   frozenset({(1, 3), (2, 4)}),
                   frozenset({(1, 4), (2, 3)}))


@dataclass(frozen=True)
class SigmaFactors:
    """Positive per-axis factors with ``s_i * s_j`` reproducing the couplings."""

    s1: float
    s2: float
    s3: float
    s4: float

    def __post_init__(self):
        for v in self.as_tuple():
            if not v > 0.0:
                raise ValueError("factors must be positive")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.s1, self.s2, self.s3, self.s4)

    def get(self, i: int) -> float:
        return self.as_tuple()[i - 1]

    def product(self) -> float:
        return self.s1 * self.s2 * self.s3 * self.s4

    def reconstruct(self) -> SigmaSet:
        t = self.as_tuple()
        return SigmaSet(*(t[i - 1] * t[j - 1] for (i, j) in PAIRS))


def _flipped(fn: UnivariateFn) -> UnivariateFn:
    # Negation wrapper: preserves exact evaluability of the original tree.
    return UnivariateFn(sneg(fn.expr), fn.var, fn.interval)


def resolve_flips(sigma: SigmaSet) -> tuple[bool, frozenset[int]]:
    """Which functions to flip: (flip all phi?, set of psi indices to flip)."""
    negatives = frozenset(p for p in PAIRS if sigma.get(*p) < 0.0)
    if not negatives:
        return False, frozenset()
    if len(negatives) == 6:
        return True, frozenset()
    product = sigma.sigma()
    if product > 0.0:
        # Opposite pairs share a sign, so the negative count must be 2 or 4.
        if len(negatives) == 2:
            if negatives not in _PSI_FLIPS_BY_OPPOSITE_PAIR:
                raise ValueError(
                    f"sign pattern {sorted(negatives)} inconsistent with the "
                    "compatibility condition")
            return True, frozenset(_PSI_FLIPS_BY_OPPOSITE_PAIR[negatives])
        if len(negatives) == 4:
            positives = frozenset(PAIRS) - negatives
            if positives not in _PSI_FLIPS_BY_OPPOSITE_PAIR:
                raise ValueError(
                    f"sign pattern {sorted(negatives)} inconsistent with the "
                    "compatibility condition")
            return False, frozenset(_PSI_FLIPS_BY_OPPOSITE_PAIR[positives])
        raise ValueError(
            f"{len(negatives)} negative couplings with positive opposite-pair "
            "product cannot satisfy the compatibility condition")
    # Negative opposite-pair product: exactly one negative coupling per
    # opposite pair.  The three negatives either meet at a vertex (flip that
    # vertex's psi) or form a triangle (flip the missing vertex's psi, which
    # makes every coupling negative, then flip all phi).
    if len(negatives) != 3 or any(op <= negatives for op in _OPPOSITE_PAIRS):
        raise ValueError(
            f"sign pattern {sorted(negatives)} inconsistent with a negative "
            "opposite-pair product")
    counts = {v: 0 for v in range(1, 5)}
    for (i, j) in negatives:
        counts[i] += 1
        counts[j] += 1
    hubs = [v for v, c in counts.items() if c == 3]
    if hubs:
        return False, frozenset({hubs[0]})
    missing = [v for v, c in counts.items() if c == 0]
    return True, frozenset({missing[0]})


def sigma_positive_normalize(F: FamilyStructure) -> FamilyStructure:
    """Equivalent structure with all couplings positive.

    Requires all six couplings nonzero.  The returned structure evaluates to
    the identical matrix at every point: sign flips of phi/psi exactly
    compensate taking absolute values of the couplings.  Idempotent.
    """
    threshold = F.sigma.zero_threshold()
    if any(abs(v) <= threshold for v in F.sigma.as_tuple()):
        raise ValueError("normalization requires all six couplings nonzero")
    flip_phi, psi_flips = resolve_flips(F.sigma)
    # The bookkeeping must clear every sign; a failure here means the input
    # violated the compatibility condition numerically.
    for (i, j) in PAIRS:
        sign = math.copysign(1.0, F.sigma.get(i, j))
        if flip_phi:
            sign = -sign
        if i in psi_flips:
            sign = -sign
        if j in psi_flips:
            sign = -sign
        if sign < 0:
            raise ValueError(
                "sign normalization failed; coupling signs are incompatible")
    new_sigma = SigmaSet(*(abs(v) for v in F.sigma.as_tuple()))
    new_phi = tuple(_flipped(fn) if flip_phi else fn for fn in F.phi)
    new_psi = tuple(_flipped(fn) if fn.var in psi_flips else fn for fn in F.psi)
    return FamilyStructure(sigma=new_sigma, eta=F.eta, psi=new_psi,
                           phi=new_phi, domain=F.domain)


def factor_sigma(s: SigmaSet) -> SigmaFactors:
    """Unique positive factors with ``s_i * s_j = s_ij`` for all pairs.

    Closed form: with ``sig = s12*s34``,

        s1 = sqrt(s12*s13*s14 / sig)      s2 = sqrt(sig*s12 / (s13*s14))
        s3 = sqrt(sig*s13 / (s12*s14))    s4 = sqrt(sig*s14 / (s12*s13))

    Requires all six couplings positive and mutually compatible.
    """
    if any(v <= 0.0 for v in s.as_tuple()):
        raise ValueError("factorization requires all couplings positive")
    ok, residuals = check_sigma_compatibility(s)
    if not ok:
        raise ValueError(f"coupling compatibility violated: residuals {residuals}")
    sig = s.sigma()
    s1 = math.sqrt(s.s12 * s.s13 * s.s14 / sig)
    s2 = math.sqrt(sig * s.s12 / (s.s13 * s.s14))
    s3 = math.sqrt(sig * s.s13 / (s.s12 * s.s14))
    s4 = math.sqrt(sig * s.s14 / (s.s12 * s.s13))
    factors = SigmaFactors(s1, s2, s3, s4)
    rebuilt = factors.reconstruct()
    for (i, j) in PAIRS:
        target = s.get(i, j)
        if abs(rebuilt.get(i, j) - target) > COMPATIBILITY_RTOL * abs(target):
            raise ValueError("factorization round-trip failed; couplings are "
                             "not compatible to working precision")
    return factors
