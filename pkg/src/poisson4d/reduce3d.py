"""Limit cases: separable structures and reduction to 3D leaves.

When the fourth-axis functions are declared identically zero, the fourth
coordinate is invariant and the structure restricts to the symplectic leaf
``x4 = c`` as a three-dimensional structure of the standard form

    J12 = eta * psi1 * psi2 * phi3~     (phi_i~ = s_jk * phi_i)
    J13 = -eta * psi1 * psi3 * phi2~
    J23 = eta * psi2 * psi3 * phi1~

which is a Poisson matrix for any choice of the functions.  Separately, when
eta and all phi_i are constant the 4D structure is separable,
``J_ij = a_ij psi_i psi_j`` with a constant skew matrix A of rank 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exprlang import (
    Const,
    Expr,
    UnivariateFn,
    differentiate,
    evaluate,
    is_zero_expr,
    smul,
    sneg,
    substitute,
    to_string,
)
from .structure import (
    _COMPLEMENT,
    PAIRS,
    BoxDomain,
    FamilyStructure,
    MatrixField,
    jacobi_residual,
)

__all__ = [
    "ThreeDStructure",
    "SeparableReport",
    "leaf_reduce",
    "jacobi3_residual",
    "is_separable",
]

_IDENTICALLY_ZERO_TOL = 1e-14


def _identically_zero(expr: Expr, samples: np.ndarray) -> bool:
    if is_zero_expr(expr):
        return True
    vals = np.asarray(evaluate(expr, samples))
    return bool(np.max(np.abs(vals)) <= _IDENTICALLY_ZERO_TOL)


@dataclass(frozen=True)
class ThreeDStructure:
    """A 3D leaf structure with its own domain and leaf constant."""

    eta: Expr                       # function of x1, x2, x3
    psi: tuple[UnivariateFn, UnivariateFn, UnivariateFn]
    phi_tilde: tuple[UnivariateFn, UnivariateFn, UnivariateFn]
    domain: BoxDomain               # 3-dimensional box
    leaf_constant: float

    def __post_init__(self):
        if self.domain.dim != 3:
            raise ValueError("leaf structures live on a 3-dimensional box")

    def matrix(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        eta = np.broadcast_to(np.asarray(evaluate(self.eta, pts)), pts.shape[:-1])
        psi = [np.broadcast_to(np.asarray(fn(pts[..., i])), pts.shape[:-1])
               for i, fn in enumerate(self.psi)]
        phi = [np.broadcast_to(np.asarray(fn(pts[..., i])), pts.shape[:-1])
               for i, fn in enumerate(self.phi_tilde)]
        J = np.zeros(pts.shape[:-1] + (3, 3))
        J[..., 0, 1] = eta * psi[0] * psi[1] * phi[2]
        J[..., 0, 2] = -eta * psi[0] * psi[2] * phi[1]
        J[..., 1, 2] = eta * psi[1] * psi[2] * phi[0]
        J[..., 1, 0] = -J[..., 0, 1]
        J[..., 2, 0] = -J[..., 0, 2]
        J[..., 2, 1] = -J[..., 1, 2]
        return J[0] if single else J

    def entry_exprs(self) -> dict[tuple[int, int], Expr]:
        e12 = smul(self.eta, smul(self.psi[0].expr,
                                  smul(self.psi[1].expr, self.phi_tilde[2].expr)))
        e13 = sneg(smul(self.eta, smul(self.psi[0].expr,
                                       smul(self.psi[2].expr, self.phi_tilde[1].expr))))
        e23 = smul(self.eta, smul(self.psi[1].expr,
                                  smul(self.psi[2].expr, self.phi_tilde[0].expr)))
        return {(1, 2): e12, (1, 3): e13, (2, 3): e23}

    def matrix_field(self) -> MatrixField:
        entries = self.entry_exprs()
        deriv = {p: [differentiate(e, l) for l in range(1, 4)]
                 for p, e in entries.items()}

        def partials(x):
            x = np.asarray(x, dtype=float)
            single = x.ndim == 1
            pts = x[None, :] if single else x
            P = np.zeros(pts.shape[:-1] + (3, 3, 3))
            for (i, j), ds in deriv.items():
                for l in range(1, 4):
                    d = np.broadcast_to(np.asarray(evaluate(ds[l - 1], pts)),
                                        pts.shape[:-1])
                    P[..., l - 1, i - 1, j - 1] = d
                    P[..., l - 1, j - 1, i - 1] = -d
            return P[0] if single else P

        return MatrixField(matrix=self.matrix, partials=partials, dim=3)

    def describe(self) -> dict:
        return {
            "leaf_constant": self.leaf_constant,
            "eta": to_string(self.eta),
            "psi": [to_string(fn.expr) for fn in self.psi],
            "phi_tilde": [to_string(fn.expr) for fn in self.phi_tilde],
            "entries": {f"J{i}{j}": to_string(e)
                        for (i, j), e in self.entry_exprs().items()},
        }


def leaf_reduce(F: FamilyStructure, c: float, n_samples: int = 64) -> ThreeDStructure:
    """Restrict a declared-limit structure (psi4 = phi4 = 0) to ``x4 = c``.

    This is a distinct constructor, not a family member: identically zero
    psi4/phi4 violate the nonvanishing hypotheses, so they are verified here
    by tree folding or sampling instead of the usual hypothesis check.  The
    reduced weights are ``phi_i~ = s_jk * phi_i`` with (i, j, k) a permutation
    of (1, 2, 3).
    """
    lo4, hi4 = F.domain.interval(4)
    if not lo4 < c < hi4:
        raise ValueError(f"leaf constant {c} outside the x4 interval ({lo4}, {hi4})")
    ts = np.linspace(lo4, hi4, n_samples)
    for name, fn in (("psi4", F.psi[3]), ("phi4", F.phi[3])):
        if not (is_zero_expr(fn.expr)
                or np.max(np.abs(np.asarray(fn(ts)))) <= _IDENTICALLY_ZERO_TOL):
            raise ValueError(f"leaf reduction requires {name} identically zero")
    weights = {1: F.sigma.get(2, 3), 2: F.sigma.get(1, 3), 3: F.sigma.get(1, 2)}
    domain3 = BoxDomain(F.domain.lower[:3], F.domain.upper[:3])
    phi_tilde = tuple(
        UnivariateFn(smul(Const(weights[i]), F.phi[i - 1].expr), i, domain3.interval(i))
        for i in range(1, 4))
    psi3 = tuple(UnivariateFn(F.psi[i - 1].expr, i, domain3.interval(i))
                 for i in range(1, 4))
    eta3 = substitute(F.eta, 4, Const(float(c)))
    return ThreeDStructure(eta=eta3, psi=psi3, phi_tilde=phi_tilde,
                           domain=domain3, leaf_constant=float(c))


def jacobi3_residual(S: ThreeDStructure, x) -> float | np.ndarray:
    """Residual of the single independent 3D Jacobi identity at ``x``."""
    return jacobi_residual(S.matrix_field(), x)


@dataclass
class SeparableReport:
    separable: bool
    reason: str
    coefficients: Optional[np.ndarray]
    rank: Optional[int]

    def to_dict(self) -> dict:
        return {
            "separable": self.separable,
            "reason": self.reason,
            "coefficients": None if self.coefficients is None
            else [[float(v) for v in row] for row in self.coefficients],
            "rank": self.rank,
        }


def is_separable(F: FamilyStructure, samples: int = 64, seed: int = 0) -> SeparableReport:
    """Detect the constant-eta, constant-phi limit ``J_ij = a_ij psi_i psi_j``.

    Constancy is decided by symbolic derivatives folding to zero, falling
    back to sampled magnitudes below 1e-14.  When separable, reports the
    induced constant matrix ``a_ij`` and its rank; family members always
    yield rank 2, which does not exhaust 4D separable matrices.
    """
    pts = F.domain.sample(samples, seed)
    for l in range(1, 5):
        if not _identically_zero(differentiate(F.eta, l), pts):
            return SeparableReport(False, f"eta depends on x{l}", None, None)
    for i, fn in enumerate(F.phi, start=1):
        if not _identically_zero(differentiate(fn.expr, i), pts):
            return SeparableReport(False, f"phi{i} is not constant", None, None)
    mid = F.domain.midpoint()
    eta0 = float(np.asarray(evaluate(F.eta, mid)))
    phi0 = [float(np.asarray(fn(mid[i]))) for i, fn in enumerate(F.phi)]
    A = np.zeros((4, 4))
    for (i, j) in PAIRS:
        (k, l), sign = _COMPLEMENT[(i, j)]
        a = sign * F.sigma.get(i, j) * eta0 * (phi0[l - 1] - phi0[k - 1])
        A[i - 1, j - 1] = a
        A[j - 1, i - 1] = -a
    return SeparableReport(True, "eta and all phi constant", A,
                           int(np.linalg.matrix_rank(A)))
