"""Closed-form Casimir invariant pairs for every case of the coupling family.

Casimirs are expressed in the y-coordinates produced by the per-axis
rectifying map ``y_i(x_i) = int dx_i / psi_i`` (see :mod:`poisson4d.darboux`),
where the structure matrix loses its psi factors.  Every evaluator takes the
original x-point and composes with the forward y-map internally, so inverse
maps are never required; the pullback to x is the same code path.

Integrals ``int phi_i(y) dy`` are evaluated through the substitution
``int phi_i(x)/psi_i(x) dx``, symbolically when the integration table applies
and by adaptive quadrature otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exprlang import (
    AntiderivativeFn,
    Const,
    UnivariateFn,
    Var,
    antiderivative,
    sadd,
    sdiv,
    smul,
    substitute,
    to_string,
)
from .normal_form import SigmaFactors, factor_sigma, sigma_positive_normalize
from .structure import (
    IIA_EXCLUDED_VERTEX,
    IIB_STAR_VERTEX,
    CaseLabel,
    FamilyStructure,
    SigmaSet,
    classify,
    evaluate_matrix,
)

__all__ = [
    "YAxis",
    "YCoordinates",
    "CasimirPair",
    "CasimirReport",
    "PreparedStructure",
    "prepare_structure",
    "casimirs_case1",
    "casimirs_case_iia",
    "casimirs_case_iib_generic",
    "casimirs_nongeneric",
    "casimirs_for",
    "verify_casimir",
]


# ---------------------------------------------------------------------------
# x-parameterized view of the rectified coordinates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class YAxis:
    """Per-axis data for one rectified coordinate."""

    index: int
    phi: UnivariateFn            # phi_i as a function of x_i
    psi: UnivariateFn
    dphi_dx: UnivariateFn
    y: AntiderivativeFn          # y_i(x_i) = int dx/psi_i from the interval midpoint
    phi_int: AntiderivativeFn    # int phi_i(y) dy evaluated at y(x_i)

    def dphi_dy(self, t):
        # d phi/dy = phi'(x) * psi(x) along the axis.
        return self.dphi_dx(t) * self.psi(t)


@dataclass(frozen=True)
class YCoordinates:
    axes: tuple[YAxis, YAxis, YAxis, YAxis]

    @classmethod
    def from_structure(cls, F: FamilyStructure) -> "YCoordinates":
        axes = []
        for i in range(1, 5):
            psi = F.psi[i - 1]
            phi = F.phi[i - 1]
            base = psi.midpoint()
            y_fn = antiderivative(
                UnivariateFn(sdiv(Const(1.0), psi.expr), i, psi.interval), base)
            phi_int = antiderivative(
                UnivariateFn(sdiv(phi.expr, psi.expr), i, psi.interval), base)
            axes.append(YAxis(index=i, phi=phi, psi=psi,
                              dphi_dx=phi.derivative(), y=y_fn, phi_int=phi_int))
        return cls(tuple(axes))

    def axis(self, i: int) -> YAxis:
        return self.axes[i - 1]

    def y_values(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1]
        return np.stack([np.broadcast_to(np.asarray(self.axes[i].y(x[..., i]),
                                                    dtype=float), shape)
                         for i in range(4)], axis=-1)

    def psi_values(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1]
        return np.stack([np.broadcast_to(np.asarray(self.axes[i].psi(x[..., i]),
                                                    dtype=float), shape)
                         for i in range(4)], axis=-1)

    def integral_string(self, i: int) -> str:
        """Emitted form of ``int phi_i(y) dy``: symbolic in y when possible."""
        axis = self.axis(i)
        psi_expr = axis.psi.expr
        symbolic = axis.phi_int.symbolic_expr()
        if isinstance(psi_expr, Const) and symbolic is not None:
            # Constant psi makes the axis map affine (x = c*y + m), so the
            # x-space antiderivative composes into a y-expression.
            c, m = psi_expr.value, axis.psi.midpoint()
            expr_y = substitute(symbolic, i, sadd(smul(Const(c), Var(i)), Const(m)))
            return to_string(expr_y).replace(f"x{i}", f"y{i}")
        return (f"quadrature-backed: int phi{i}/psi{i} dx{i} with "
                f"phi{i} = {to_string(axis.phi.expr)}, psi{i} = {to_string(axis.psi.expr)}")


# ---------------------------------------------------------------------------
# Casimir pairs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CasimirPair:
    """Two scalar invariants with analytic y-gradients, evaluated via x.

    ``value*(x)`` and ``grad*_y(x)`` take x-points (shape ``(..., 4)``); the
    gradients are with respect to the rectified y-coordinates at ``y(x)``.
    """

    provenance: str
    structure: FamilyStructure
    ycoords: YCoordinates
    value1: Callable[[np.ndarray], np.ndarray]
    value2: Callable[[np.ndarray], np.ndarray]
    grad1_y: Callable[[np.ndarray], np.ndarray]
    grad2_y: Callable[[np.ndarray], np.ndarray]
    description: tuple[str, str]

    def values(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        return self.value1(x), self.value2(x)

    def grads_y(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        return self.grad1_y(x), self.grad2_y(x)

    def grads_x(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Pullback gradients with respect to x: ``(dy/dx)^T grad_y``."""
        x = np.asarray(x, dtype=float)
        psi = self.ycoords.psi_values(x)
        g1, g2 = self.grads_y(x)
        return g1 / psi, g2 / psi

    def describe(self) -> dict:
        return {
            "coordinates": "y (rectified)",
            "provenance": self.provenance,
            "C1": self.description[0],
            "C2": self.description[1],
        }


def _broadcast_constant(vec: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    vec = np.asarray(vec, dtype=float)

    def grad(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(vec, x.shape[:-1] + (4,)).copy()

    return grad


def casimirs_case1(factors: SigmaFactors, ycoords: YCoordinates,
                   structure: FamilyStructure) -> CasimirPair:
    """Invariant pair for all-couplings-nonzero structures (positive factors).

    ``C1 = sum_i w_i y_i`` with ``w_i`` the product of the other three
    factors, and ``C2 = (s1 s2 s3 s4) * sum_i int phi_i(y_i)/s_i dy_i``.
    """
    s = factors.as_tuple()
    product = factors.product()
    weights = np.array([product / s[i] for i in range(4)])

    def value1(x):
        y = ycoords.y_values(x)
        return y @ weights

    def value2(x):
        x = np.asarray(x, dtype=float)
        terms = [product / s[i] * np.asarray(ycoords.axes[i].phi_int(x[..., i]))
                 for i in range(4)]
        return sum(terms)

    def grad2(x):
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1]
        cols = [np.broadcast_to(
            product / s[i] * np.asarray(ycoords.axes[i].phi(x[..., i]), dtype=float),
            shape) for i in range(4)]
        return np.stack(cols, axis=-1)

    c1_text = " + ".join(f"{float(weights[i])!r}*y{i + 1}" for i in range(4))
    c2_text = " + ".join(
        f"{float(product / s[i])!r}*[{ycoords.integral_string(i + 1)}]" for i in range(4))
    return CasimirPair(
        provenance="case-I",
        structure=structure,
        ycoords=ycoords,
        value1=value1,
        value2=value2,
        grad1_y=_broadcast_constant(weights),
        grad2_y=grad2,
        description=(f"C1 = {c1_text}", f"C2 = {c2_text}"),
    )


def _iia_weights(m: int, sigma: SigmaSet) -> tuple[int, dict[int, float]]:
    """Excluded vertex and per-axis weights for triangle pattern ``m``."""
    excluded = IIA_EXCLUDED_VERTEX[m]
    others = [i for i in range(1, 5) if i != excluded]
    weights = {}
    for i in others:
        j, k = (v for v in others if v != i)
        weights[i] = sigma.get(j, k)
    return excluded, weights


def casimirs_case_iia(m: int, sigma: SigmaSet, ycoords: YCoordinates,
                      structure: FamilyStructure) -> CasimirPair:
    """Invariant pair for triangle patterns (couplings avoid one vertex).

    With ``e`` the avoided vertex and weights ``c_i`` the coupling of the
    opposite edge: ``C1 = y_e`` and
    ``C2 = sum_i c_i int phi_i dy_i - (sum_i c_i y_i) phi_e(y_e)``.
    Zero couplings simply drop their terms, which covers the absorbed
    nongeneric patterns.
    """
    label = classify(sigma)
    if label.kind != "II.A" or label.index != m:
        raise ValueError(f"coupling pattern classifies as {label}, not IIA.{m}")
    excluded, weights = _iia_weights(m, sigma)
    others = sorted(weights)

    def value1(x):
        x = np.asarray(x, dtype=float)
        return np.asarray(ycoords.axes[excluded - 1].y(x[..., excluded - 1]))

    grad1 = _broadcast_constant(np.eye(4)[excluded - 1])

    def value2(x):
        x = np.asarray(x, dtype=float)
        acc = sum(weights[i] * np.asarray(ycoords.axes[i - 1].phi_int(x[..., i - 1]))
                  for i in others)
        lin = sum(weights[i] * np.asarray(ycoords.axes[i - 1].y(x[..., i - 1]))
                  for i in others)
        phi_e = np.asarray(ycoords.axes[excluded - 1].phi(x[..., excluded - 1]))
        return acc - lin * phi_e

    def grad2(x):
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1]
        g = np.zeros(shape + (4,))
        phi_e = np.asarray(ycoords.axes[excluded - 1].phi(x[..., excluded - 1]))
        for i in others:
            phi_i = np.asarray(ycoords.axes[i - 1].phi(x[..., i - 1]))
            g[..., i - 1] = weights[i] * (phi_i - phi_e)
        lin = sum(weights[i] * np.asarray(ycoords.axes[i - 1].y(x[..., i - 1]))
                  for i in others)
        g[..., excluded - 1] = -lin * np.asarray(
            ycoords.axes[excluded - 1].dphi_dy(x[..., excluded - 1]))
        return g

    ints = " + ".join(f"{float(weights[i])!r}*[{ycoords.integral_string(i)}]"
                      for i in others if weights[i] != 0.0)
    lin_text = " + ".join(f"{float(weights[i])!r}*y{i}" for i in others if weights[i] != 0.0)
    c2_text = f"{ints or '0.0'} - ({lin_text or '0.0'})*phi{excluded}(y{excluded})"
    return CasimirPair(
        provenance=f"case-II.A.{m}",
        structure=structure,
        ycoords=ycoords,
        value1=value1,
        value2=value2,
        grad1_y=grad1,
        grad2_y=grad2,
        description=(f"C1 = y{excluded}", f"C2 = {c2_text}"),
    )


def casimirs_case_iib_generic(k: int, sigma: SigmaSet, ycoords: YCoordinates,
                              structure: FamilyStructure) -> CasimirPair:
    """Invariant pair for generic star patterns (three couplings at a hub).

    With hub ``v`` and weights ``d_i`` the product of the two star couplings
    not reaching axis ``i``: ``C1 = sum d_i y_i`` and
    ``C2 = sum d_i int phi_i dy_i`` over the three non-hub axes.
    """
    label = classify(sigma)
    if label.kind != "II.B" or label.index != k or not label.generic:
        raise ValueError(f"coupling pattern classifies as {label}, not IIB.{k}.generic")
    hub = IIB_STAR_VERTEX[k]
    others = [i for i in range(1, 5) if i != hub]
    weights = {}
    for i in others:
        j, l = (v for v in others if v != i)
        weights[i] = sigma.get(hub, j) * sigma.get(hub, l)
    wvec = np.zeros(4)
    for i in others:
        wvec[i - 1] = weights[i]

    def value1(x):
        y = ycoords.y_values(x)
        return y @ wvec

    def value2(x):
        x = np.asarray(x, dtype=float)
        return sum(weights[i] * np.asarray(ycoords.axes[i - 1].phi_int(x[..., i - 1]))
                   for i in others)

    def grad2(x):
        x = np.asarray(x, dtype=float)
        g = np.zeros(x.shape[:-1] + (4,))
        for i in others:
            g[..., i - 1] = weights[i] * np.asarray(
                ycoords.axes[i - 1].phi(x[..., i - 1]))
        return g

    c1_text = " + ".join(f"{float(weights[i])!r}*y{i}" for i in others)
    c2_text = " + ".join(f"{float(weights[i])!r}*[{ycoords.integral_string(i)}]" for i in others)
    return CasimirPair(
        provenance=f"case-II.B.{k}-generic",
        structure=structure,
        ycoords=ycoords,
        value1=value1,
        value2=value2,
        grad1_y=_broadcast_constant(wvec),
        grad2_y=grad2,
        description=(f"C1 = {c1_text}", f"C2 = {c2_text}"),
    )


def casimirs_nongeneric(sigma: SigmaSet, ycoords: YCoordinates,
                        structure: FamilyStructure) -> CasimirPair:
    """Invariant pair for absorbed nongeneric patterns (at most two couplings).

    A single nonzero coupling (i, j) leaves the complementary coordinates
    invariant outright: ``C1 = y_k``, ``C2 = y_m`` (k < m).  The degenerate
    triangle formulas annihilate as well; the coordinate pair is emitted as
    the canonical choice.  Two-coupling patterns delegate to the first
    triangle pattern containing them, whose zero couplings drop terms.
    """
    label = classify(sigma)
    if label.kind != "II.A":
        raise ValueError(f"coupling pattern classifies as {label}, not an "
                         "absorbed nongeneric pattern")
    nonzero = sorted(sigma.nonzero_pairs())
    if len(nonzero) >= 3:
        raise ValueError("pattern is generic for its triangle; use the "
                         "triangle constructor")
    if len(nonzero) == 2:
        return casimirs_case_iia(label.index, sigma, ycoords, structure)
    (i, j), = nonzero
    k, m = sorted(set(range(1, 5)) - {i, j})

    def coordinate(idx):
        def value(x):
            x = np.asarray(x, dtype=float)
            return np.asarray(ycoords.axes[idx - 1].y(x[..., idx - 1]))
        return value

    return CasimirPair(
        provenance="coordinate-pair",
        structure=structure,
        ycoords=ycoords,
        value1=coordinate(k),
        value2=coordinate(m),
        grad1_y=_broadcast_constant(np.eye(4)[k - 1]),
        grad2_y=_broadcast_constant(np.eye(4)[m - 1]),
        description=(f"C1 = y{k}", f"C2 = y{m}"),
    )


# ---------------------------------------------------------------------------
# Dispatch and verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PreparedStructure:
    """Classification plus the (possibly sign-normalized) working structure."""

    structure: FamilyStructure
    label: CaseLabel
    factors: Optional[SigmaFactors]
    ycoords: YCoordinates


def prepare_structure(F: FamilyStructure) -> PreparedStructure:
    """Classify and, for all-nonzero patterns, sign-normalize and factor."""
    label = classify(F.sigma)
    if label.is_case1:
        normalized = sigma_positive_normalize(F)
        factors = factor_sigma(normalized.sigma)
        return PreparedStructure(normalized, label, factors,
                                 YCoordinates.from_structure(normalized))
    return PreparedStructure(F, label, None, YCoordinates.from_structure(F))


def casimirs_for(prepared: PreparedStructure | FamilyStructure) -> CasimirPair:
    """Construct the invariant pair appropriate to the structure's case."""
    if isinstance(prepared, FamilyStructure):
        prepared = prepare_structure(prepared)
    F, label, ycoords = prepared.structure, prepared.label, prepared.ycoords
    if label.is_case1:
        return casimirs_case1(prepared.factors, ycoords, F)
    if label.kind == "II.A":
        if len(F.sigma.nonzero_pairs()) == 1:
            return casimirs_nongeneric(F.sigma, ycoords, F)
        return casimirs_case_iia(label.index, F.sigma, ycoords, F)
    if label.generic:
        return casimirs_case_iib_generic(label.index, F.sigma, ycoords, F)
    raise ValueError(f"no Casimir construction for label {label}")


@dataclass
class CasimirReport:
    n_samples: int
    max_residual: float
    min_second_singular_value: float
    min_independence_ratio: float

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "max_annihilation_residual": self.max_residual,
            "min_second_singular_value": self.min_second_singular_value,
            "min_independence_ratio": self.min_independence_ratio,
        }


def verify_casimir(F: FamilyStructure, pair: CasimirPair, n: int = 200,
                   seed: int = 0) -> CasimirReport:
    """Sampled annihilation and gradient-independence check.

    ``F`` must be the structure the pair was built on (for all-nonzero
    patterns, the sign-normalized one).  Reports the max over samples of
    ``max_k |J'(y) grad C_k|_inf`` and the min over samples of the second
    singular value of the stacked gradients.
    """
    pts = F.domain.sample(n, seed)
    J = evaluate_matrix(F, pts)
    psi = pair.ycoords.psi_values(pts)
    # Rectified-coordinate matrix J' = diag(1/psi) J diag(1/psi).
    Jy = J / (psi[:, :, None] * psi[:, None, :])
    g1, g2 = pair.grads_y(pts)
    r1 = np.abs(np.einsum("nij,nj->ni", Jy, g1)).max()
    r2 = np.abs(np.einsum("nij,nj->ni", Jy, g2)).max()
    stacked = np.stack([g1, g2], axis=1)
    sv = np.linalg.svd(stacked, compute_uv=False)
    ratios = sv[:, 1] / np.maximum(sv[:, 0], np.finfo(float).tiny)
    return CasimirReport(
        n_samples=n,
        max_residual=float(max(r1, r2)),
        min_second_singular_value=float(sv[:, 1].min()),
        min_independence_ratio=float(ratios.min()),
    )
