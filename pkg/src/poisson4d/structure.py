"""Four-dimensional coupling-family Poisson structures.

Defines the family whose structure matrix has upper-triangle entries

    J12 = s12*eta*psi1*psi2*(phi4 - phi3)    J23 = s23*eta*psi2*psi3*(phi4 - phi1)
    J13 = s13*eta*psi1*psi3*(phi2 - phi4)    J24 = s24*eta*psi2*psi4*(phi1 - phi3)
    J14 = s14*eta*psi1*psi4*(phi3 - phi2)    J34 = s34*eta*psi3*psi4*(phi2 - phi1)

together with the compatibility condition s12*s34 = s13*s24 = s14*s23 on the
six symmetric coupling constants.  Provides numerical verification of the
Jacobi identities, rank/Pfaffian diagnostics, hypothesis checks by
low-discrepancy sampling, and classification of the zero-pattern of the
couplings into the case tree used by the Casimir and Darboux modules.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exprlang import (
    Const,
    Expr,
    UnivariateFn,
    differentiate,
    evaluate,
    parse,
    smul,
    ssub,
)
from .sampling import halton_box

__all__ = [
    "SigmaSet",
    "BoxDomain",
    "FamilyStructure",
    "MatrixField",
    "CaseLabel",
    "HypothesesReport",
    "RankReport",
    "PAIRS",
    "TRIPLES",
    "check_sigma_compatibility",
    "evaluate_matrix",
    "check_hypotheses",
    "jacobi_residual",
    "rank_and_determinant",
    "bracket_obstruction",
    "classify",
]

# Unordered index pairs in lexicographic order.
PAIRS = ((1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4))

# Independent Jacobi triples in four dimensions.
TRIPLES = ((1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4))

# For each pair (i, j), the complementary pair (k, l) with k < l and the sign
# of the permutation (i, j, k, l) of (1, 2, 3, 4); the matrix entry is then
# sign * s_ij * eta * psi_i * psi_j * (phi_l - phi_k).
_COMPLEMENT = {
    (1, 2): ((3, 4), 1.0),
    (1, 3): ((2, 4), -1.0),
    (1, 4): ((2, 3), 1.0),
    (2, 3): ((1, 4), 1.0),
    (2, 4): ((1, 3), -1.0),
    (3, 4): ((1, 2), 1.0),
}

SIGMA_ZERO_RTOL = 1e-12         # relative threshold below which a coupling counts as zero
COMPATIBILITY_RTOL = 1e-12


@dataclass(frozen=True)
class SigmaSet:
    """The six symmetric coupling constants, stored once per unordered pair."""

    s12: float
    s13: float
    s14: float
    s23: float
    s24: float
    s34: float

    def get(self, i: int, j: int) -> float:
        """Symmetric lookup: ``get(i, j) == get(j, i)``."""
        if i == j:
            raise ValueError("coupling constants are defined for distinct indices")
        a, b = min(i, j), max(i, j)
        return getattr(self, f"s{a}{b}")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.s12, self.s13, self.s14, self.s23, self.s24, self.s34)

    def opposite_products(self) -> tuple[float, float, float]:
        return (self.s12 * self.s34, self.s13 * self.s24, self.s14 * self.s23)

    def sigma(self) -> float:
        """The common opposite-pair product ``s12*s34``."""
        return self.s12 * self.s34

    def zero_threshold(self) -> float:
        return SIGMA_ZERO_RTOL * max(abs(v) for v in self.as_tuple())

    def nonzero_pairs(self) -> frozenset[tuple[int, int]]:
        thr = self.zero_threshold()
        return frozenset(p for p in PAIRS if abs(self.get(*p)) > thr)

    def validate(self) -> None:
        """Raise if all couplings vanish or the compatibility condition fails."""
        if not self.nonzero_pairs():
            raise ValueError("all six coupling constants are zero")
        ok, residuals = check_sigma_compatibility(self)
        if not ok:
            raise ValueError(
                f"coupling compatibility violated: residuals {residuals}")

    def scaled(self, factor: float) -> "SigmaSet":
        return SigmaSet(*(factor * v for v in self.as_tuple()))


def check_sigma_compatibility(s: SigmaSet) -> tuple[bool, tuple[float, float]]:
    """Check ``s12*s34 == s13*s24 == s14*s23`` to relative tolerance 1e-12.

    Returns ``(ok, (r1, r2))`` with the two residuals against ``s12*s34``.
    """
    p0, p1, p2 = s.opposite_products()
    r1, r2 = abs(p0 - p1), abs(p0 - p2)
    bound = COMPATIBILITY_RTOL * max(1.0, abs(p0))
    return (r1 <= bound and r2 <= bound), (r1, r2)


@dataclass(frozen=True)
class BoxDomain:
    """Open axis-aligned box in R^4 (or R^3 for leaf reductions)."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise ValueError("lower and upper must have equal length")
        for lo, hi in zip(self.lower, self.upper):
            if not lo < hi:
                raise ValueError(f"empty interval [{lo}, {hi}]")

    @property
    def dim(self) -> int:
        return len(self.lower)

    def interval(self, i: int) -> tuple[float, float]:
        return (self.lower[i - 1], self.upper[i - 1])

    def midpoint(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.lower) + np.asarray(self.upper))

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x > self.lower) and np.all(x < self.upper))

    def sample(self, n: int, seed: int = 0) -> np.ndarray:
        return halton_box(n, self.lower, self.upper, seed)


@dataclass(frozen=True)
class FamilyStructure:
    """A member of the coupling family: ``(sigma, eta, psi_i, phi_i, domain)``."""

    sigma: SigmaSet
    eta: Expr
    psi: tuple[UnivariateFn, UnivariateFn, UnivariateFn, UnivariateFn]
    phi: tuple[UnivariateFn, UnivariateFn, UnivariateFn, UnivariateFn]
    domain: BoxDomain

    def __post_init__(self):
        if self.domain.dim != 4:
            raise ValueError("family structures live on a 4-dimensional box")
        for i, fn in enumerate(self.psi, start=1):
            if fn.var != i:
                raise ValueError(f"psi[{i - 1}] must be a function of x{i}")
        for i, fn in enumerate(self.phi, start=1):
            if fn.var != i:
                raise ValueError(f"phi[{i - 1}] must be a function of x{i}")

    @classmethod
    def from_strings(cls, sigma: SigmaSet, eta: str, psi: list[str], phi: list[str],
                     lower, upper) -> "FamilyStructure":
        domain = BoxDomain(tuple(float(v) for v in lower), tuple(float(v) for v in upper))
        psi_fns = tuple(UnivariateFn(parse(s), i, domain.interval(i))
                        for i, s in enumerate(psi, start=1))
        phi_fns = tuple(UnivariateFn(parse(s), i, domain.interval(i))
                        for i, s in enumerate(phi, start=1))
        return cls(sigma, parse(eta), psi_fns, phi_fns, domain)

    def entry_expr(self, i: int, j: int) -> Expr:
        """Expression tree of the (i, j) matrix entry, i < j."""
        (k, l), sign = _COMPLEMENT[(i, j)]
        coeff = Const(sign * self.sigma.get(i, j))
        diff = ssub(self.phi[l - 1].expr, self.phi[k - 1].expr)
        return smul(coeff, smul(self.eta,
                    smul(self.psi[i - 1].expr, smul(self.psi[j - 1].expr, diff))))

    def matrix_field(self) -> "MatrixField":
        return matrix_field_from_family(self)

    def validate_expressions(self, n_samples: int = 64, seed: int = 0) -> None:
        """Sample the box and require finite values from every expression.

        Also surfaces power-domain faults (e.g. non-integer powers of
        nonpositive bases), per the load-time validation contract.
        """
        pts = self.domain.sample(n_samples, seed)
        values = [evaluate(self.eta, pts)]
        values += [fn(pts[:, fn.var - 1]) for fn in self.psi]
        values += [fn(pts[:, fn.var - 1]) for fn in self.phi]
        for v in values:
            if not np.all(np.isfinite(v)):
                raise ValueError("expression evaluates to a non-finite value on the domain")


def evaluate_matrix(F: FamilyStructure, x, *, check_domain: bool = True) -> np.ndarray:
    """Structure matrix at ``x`` (shape ``(4,4)``; batched for ``(n,4)``).

    ``check_domain=False`` skips the box-membership error; integrator stages
    may evaluate slightly outside the validation box.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    if check_domain and (not np.all(pts > F.domain.lower)
                         or not np.all(pts < F.domain.upper)):
        raise ValueError("point outside the structure's domain")
    eta = evaluate(F.eta, pts)
    psi = [fn(pts[:, fn.var - 1]) for fn in F.psi]
    phi = [fn(pts[:, fn.var - 1]) for fn in F.phi]
    J = np.zeros(pts.shape[:-1] + (4, 4))
    for (i, j) in PAIRS:
        (k, l), sign = _COMPLEMENT[(i, j)]
        entry = (sign * F.sigma.get(i, j)) * eta * psi[i - 1] * psi[j - 1] \
            * (phi[l - 1] - phi[k - 1])
        J[..., i - 1, j - 1] = entry
        J[..., j - 1, i - 1] = -entry
    return J[0] if single else J


@dataclass(frozen=True)
class MatrixField:
    """A matrix-valued field with its entry derivatives.

    ``matrix(x)`` returns the ``(dim, dim)`` matrix at ``x`` and
    ``partials(x)`` the ``(dim, dim, dim)`` array ``P[l, i, j] = d J_ij / d x_l``;
    both accept batches ``(n, dim)``.  Derivatives are analytic when built
    from a family structure, central differences for external callables.
    """

    matrix: Callable[[np.ndarray], np.ndarray]
    partials: Callable[[np.ndarray], np.ndarray]
    dim: int = 4

    def skewness_defect(self, x) -> float:
        J = self.matrix(np.asarray(x, dtype=float))
        return float(np.max(np.abs(J + np.swapaxes(J, -1, -2))))


def matrix_field_from_family(F: FamilyStructure) -> MatrixField:
    """Analytic matrix field (exact symbolic entry derivatives)."""
    entries = {p: F.entry_expr(*p) for p in PAIRS}
    deriv = {p: [differentiate(entries[p], l) for l in range(1, 5)] for p in PAIRS}

    def matrix(x):
        return evaluate_matrix(F, x, check_domain=False)

    def partials(x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        P = np.zeros(pts.shape[:-1] + (4, 4, 4))
        for (i, j) in PAIRS:
            for l in range(1, 5):
                d = evaluate(deriv[(i, j)][l - 1], pts)
                P[..., l - 1, i - 1, j - 1] = d
                P[..., l - 1, j - 1, i - 1] = -np.asarray(d)
        return P[0] if single else P

    return MatrixField(matrix=matrix, partials=partials, dim=4)


def matrix_field_from_callable(matrix: Callable[[np.ndarray], np.ndarray],
                               dim: int = 4) -> MatrixField:
    """Matrix field for an externally supplied callable.

    Entry derivatives use central differences with per-axis step
    ``h_l = 1e-6 * (1 + |x_l|)``.
    """

    def batched(x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return np.asarray(matrix(x), dtype=float)
        return np.stack([np.asarray(matrix(p), dtype=float) for p in x])

    def partials(x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        P = np.empty(pts.shape[:-1] + (dim, dim, dim))
        for l in range(dim):
            h = 1e-6 * (1.0 + np.abs(pts[:, l]))
            step = np.zeros_like(pts)
            step[:, l] = h
            P[..., l, :, :] = (batched(pts + step) - batched(pts - step)) \
                / (2.0 * h)[:, None, None]
        return P[0] if single else P

    return MatrixField(matrix=batched, partials=partials, dim=dim)


# ---------------------------------------------------------------------------
# Hypothesis checks
# ---------------------------------------------------------------------------

HYPOTHESIS_MIN_ABS = 1e-9


@dataclass
class HypothesesReport:
    """Sampled minima and sign-constancy of the nonvanishing hypotheses."""

    n_samples: int
    min_abs_eta: float
    min_abs_psi: tuple[float, float, float, float]
    min_abs_phi_diff: dict[str, float]
    sign_changes: list[str]
    flagged: list[str]

    @property
    def ok(self) -> bool:
        return not self.flagged and not self.sign_changes

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "min_abs_eta": self.min_abs_eta,
            "min_abs_psi": list(self.min_abs_psi),
            "min_abs_phi_diff": dict(sorted(self.min_abs_phi_diff.items())),
            "sign_changes": sorted(self.sign_changes),
            "flagged": sorted(self.flagged),
            "ok": self.ok,
        }


def _sign_constant(values: np.ndarray) -> bool:
    return bool(np.all(values > 0.0) or np.all(values < 0.0))


def check_hypotheses(F: FamilyStructure, n_samples: int = 200,
                     seed: int = 0) -> HypothesesReport:
    """Sample the box and report minima of |eta|, |psi_i| and |phi_i - phi_j|.

    Values below 1e-9, and any sign change between samples (which implies a
    zero of the continuous function), are flagged.  Report-only: never raises
    on a failing hypothesis.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    pts = F.domain.sample(n_samples, seed)
    flagged: list[str] = []
    sign_changes: list[str] = []

    eta_vals = np.atleast_1d(evaluate(F.eta, pts))
    min_eta = float(np.min(np.abs(eta_vals)))
    if min_eta < HYPOTHESIS_MIN_ABS:
        flagged.append("eta")
    if not _sign_constant(eta_vals):
        sign_changes.append("eta")

    psi_minima = []
    for idx, fn in enumerate(F.psi, start=1):
        vals = np.atleast_1d(fn(pts[:, idx - 1]))
        psi_minima.append(float(np.min(np.abs(vals))))
        if psi_minima[-1] < HYPOTHESIS_MIN_ABS:
            flagged.append(f"psi{idx}")
        if not _sign_constant(vals):
            sign_changes.append(f"psi{idx}")

    phi_vals = [np.atleast_1d(fn(pts[:, idx - 1])) for idx, fn in enumerate(F.phi, start=1)]
    diff_minima: dict[str, float] = {}
    for (i, j) in PAIRS:
        diff = phi_vals[i - 1] - phi_vals[j - 1]
        key = f"phi{i}-phi{j}"
        diff_minima[key] = float(np.min(np.abs(diff)))
        if diff_minima[key] < HYPOTHESIS_MIN_ABS:
            flagged.append(key)
        if not _sign_constant(diff):
            sign_changes.append(key)

    return HypothesesReport(
        n_samples=n_samples,
        min_abs_eta=min_eta,
        min_abs_psi=tuple(psi_minima),
        min_abs_phi_diff=diff_minima,
        sign_changes=sign_changes,
        flagged=flagged,
    )


# ---------------------------------------------------------------------------
# Jacobi residual, rank and obstruction diagnostics
# ---------------------------------------------------------------------------

def jacobi_residual(M: MatrixField, x) -> float | np.ndarray:
    """Max over independent index triples of the Jacobi identity residual.

    Evaluates ``sum_l (J_il d_l J_jk + J_kl d_l J_ij + J_jl d_l J_ki)`` for
    every triple ``i<j<k`` and returns the largest magnitude.  Batched input
    ``(n, dim)`` yields an ``(n,)`` array.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    J = M.matrix(pts)
    P = M.partials(pts)
    dim = M.dim
    triples = TRIPLES if dim == 4 else tuple(itertools.combinations(range(1, dim + 1), 3))
    out = np.zeros(pts.shape[0])
    for (i, j, k) in triples:
        a, b, c = i - 1, j - 1, k - 1
        term = np.einsum("nl,nl->n", J[:, a, :], P[:, :, b, c]) \
            + np.einsum("nl,nl->n", J[:, c, :], P[:, :, a, b]) \
            + np.einsum("nl,nl->n", J[:, b, :], P[:, :, c, a])
        out = np.maximum(out, np.abs(term))
    return float(out[0]) if single else out


@dataclass(frozen=True)
class RankReport:
    rank: int
    det: float
    pfaffian: float
    singular_values: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "det": self.det,
            "pfaffian": self.pfaffian,
            "singular_values": list(self.singular_values),
        }


RANK_SV_RTOL = 1e-9


def rank_and_determinant(J: np.ndarray) -> RankReport:
    """Determinant, Pfaffian and singular-value rank of a skew 4x4 matrix."""
    J = np.asarray(J, dtype=float)
    det = float(np.linalg.det(J))
    pf = pfaffian4(J)
    sv = np.linalg.svd(J, compute_uv=False)
    threshold = RANK_SV_RTOL * max(1.0, float(sv[0]))
    rank = int(np.sum(sv > threshold))
    return RankReport(rank=rank, det=det, pfaffian=pf,
                      singular_values=tuple(float(s) for s in sv))


def pfaffian4(J: np.ndarray) -> float | np.ndarray:
    """Pfaffian ``J12*J34 - J13*J24 + J14*J23`` (batched on leading axes)."""
    J = np.asarray(J, dtype=float)
    pf = (J[..., 0, 1] * J[..., 2, 3]
          - J[..., 0, 2] * J[..., 1, 3]
          + J[..., 0, 3] * J[..., 1, 2])
    return float(pf) if pf.ndim == 0 else pf


def bracket_obstruction(J: np.ndarray) -> float:
    """Obstruction to multiplying the structure by an arbitrary scale field.

    Returns ``max |J_im J_jk + J_km J_ij + J_jm J_ki|`` over the permutation
    classes of (1,2,3,4); it coincides with |pfaffian| for the canonical
    ordering, and vanishes identically on family members.
    """
    J = np.asarray(J, dtype=float)
    worst = 0.0
    for m in range(1, 5):
        i, j, k = (idx for idx in range(1, 5) if idx != m)
        a, b, c, d = i - 1, j - 1, k - 1, m - 1
        value = J[a, d] * J[b, c] + J[c, d] * J[a, b] + J[b, d] * J[c, a]
        worst = max(worst, abs(float(value)))
    return worst


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

# Allowed nonzero pairs per pattern, in the canonical testing order.  Triangle
# patterns (II.A.m) avoid one vertex entirely; star patterns (II.B.k) consist
# of the three pairs meeting at one vertex.
IIA_ALLOWED = {
    1: frozenset({(1, 2), (1, 3), (2, 3)}),
    2: frozenset({(2, 3), (2, 4), (3, 4)}),
    3: frozenset({(1, 3), (1, 4), (3, 4)}),
    4: frozenset({(1, 2), (1, 4), (2, 4)}),
}
IIB_ALLOWED = {
    1: frozenset({(1, 2), (2, 3), (2, 4)}),
    2: frozenset({(1, 4), (2, 4), (3, 4)}),
    3: frozenset({(1, 3), (2, 3), (3, 4)}),
    4: frozenset({(1, 2), (1, 3), (1, 4)}),
}

# Vertex untouched by the allowed pairs of II.A.m (its coordinate is a
# Casimir), and the hub vertex of the star of II.B.k.
IIA_EXCLUDED_VERTEX = {1: 4, 2: 1, 3: 2, 4: 3}
IIB_STAR_VERTEX = {1: 2, 2: 4, 3: 3, 4: 1}


@dataclass(frozen=True)
class CaseLabel:
    """Position of a coupling pattern in the case tree."""

    kind: str                 # 'I', 'II.A' or 'II.B'
    index: Optional[int] = None
    generic: Optional[bool] = None

    def __str__(self) -> str:
        if self.kind == "I":
            return "CaseI"
        if self.kind == "II.A":
            return f"IIA.{self.index}"
        suffix = "generic" if self.generic else "nongeneric"
        return f"IIB.{self.index}.{suffix}"

    @property
    def is_case1(self) -> bool:
        return self.kind == "I"


def classify(s: SigmaSet) -> CaseLabel:
    """Classify the zero-pattern of the couplings.

    All six nonzero gives Case I.  Otherwise the first triangle pattern
    (canonical order II.A.1..II.A.4) containing the nonzero set wins; this
    absorbs every pattern with at most two nonzero couplings.  Star patterns
    are labelled II.B.k, generic when all three star couplings are present.
    Couplings with ``|s_ij| <= 1e-12 * max|s|`` count as exactly zero, which
    makes the classification invariant under positive rescaling.
    """
    s.validate()
    nonzero = set(s.nonzero_pairs())
    if len(nonzero) == 6:
        return CaseLabel("I")
    for m in (1, 2, 3, 4):
        if nonzero <= IIA_ALLOWED[m]:
            return CaseLabel("II.A", m)
    for k in (1, 2, 3, 4):
        if nonzero == IIB_ALLOWED[k]:
            return CaseLabel("II.B", k, generic=True)
        if nonzero < IIB_ALLOWED[k]:
            # Unreachable for valid coupling sets: every pattern with at most
            # two nonzero pairs is contained in some triangle above.
            return CaseLabel("II.B", k, generic=False)
    raise ValueError(
        f"nonzero pattern {sorted(nonzero)} violates the compatibility condition")
