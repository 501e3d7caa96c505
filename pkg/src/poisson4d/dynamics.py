"""Fixed-step integration of Poisson systems with invariant monitoring.

Classical RK4 is used deliberately: the point of the integration layer is to
*verify* the algebraic structure, so every accepted step checks the exact
pointwise identities (energy orthogonality ``grad H . J grad H = 0`` and
Casimir orthogonality ``grad C . xdot = 0``) and the trajectory records the
relative drift of the Hamiltonian and both Casimirs.  Trajectories that
leave the validation box are truncated and flagged, not failed.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from typing import Callable, Optional

import numpy as np

from .casimir import CasimirPair
from .exprlang import Expr, differentiate, evaluate
from .reduce3d import ThreeDStructure
from .structure import BoxDomain, FamilyStructure, MatrixField

__all__ = [
    "PoissonSystem",
    "Trajectory",
    "IntegrationError",
    "integrate",
    "integrate_reparametrized",
]


class IntegrationError(RuntimeError):
    """Raised on non-finite states or a sign change of the time factor."""


@dataclass(frozen=True)
class PoissonSystem:
    """A structure matrix field, a Hamiltonian, and optional Casimirs."""

    field: MatrixField
    hamiltonian: Expr
    domain: BoxDomain
    casimirs: Optional[CasimirPair] = None

    @classmethod
    def from_family(cls, F: FamilyStructure, hamiltonian: Expr,
                    casimirs: Optional[CasimirPair] = None) -> "PoissonSystem":
        return cls(field=F.matrix_field(), hamiltonian=hamiltonian,
                   domain=F.domain, casimirs=casimirs)

    @classmethod
    def from_leaf(cls, S: ThreeDStructure, hamiltonian: Expr) -> "PoissonSystem":
        return cls(field=S.matrix_field(), hamiltonian=hamiltonian, domain=S.domain)

    @property
    def dim(self) -> int:
        return self.field.dim

    def grad_h(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([float(np.asarray(evaluate(differentiate(self.hamiltonian, i), x)))
                         for i in range(1, self.dim + 1)])

    def velocity(self, x) -> np.ndarray:
        return self.field.matrix(x) @ self.grad_h(x)


@dataclass
class Trajectory:
    """Sampled states with per-sample invariant values and diagnostics."""

    times: np.ndarray
    states: np.ndarray
    hamiltonian: np.ndarray
    casimir1: Optional[np.ndarray]
    casimir2: Optional[np.ndarray]
    drifts: dict = dataclass_field(default_factory=dict)
    domain_exit: bool = False
    max_energy_orthogonality: float = 0.0    # max |gH . J gH| / ||gH||^2
    max_casimir_directional: float = 0.0     # max scaled |gC . xdot|
    dt: float = 0.0

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    def max_drift(self) -> float:
        return max(self.drifts.values()) if self.drifts else 0.0

    def summary(self) -> dict:
        return {
            "n_steps": self.n_steps,
            "dt": self.dt,
            "t_final": float(self.times[-1]),
            "domain_exit": self.domain_exit,
            "drifts": {k: float(v) for k, v in sorted(self.drifts.items())},
            "max_energy_orthogonality": self.max_energy_orthogonality,
            "max_casimir_directional": self.max_casimir_directional,
            "final_state": [float(v) for v in self.states[-1]],
        }


def _rk4_step(f: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
              h: float) -> np.ndarray:
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _relative_drift(values: np.ndarray) -> float:
    return float(np.max(np.abs(values - values[0])) / max(1.0, abs(values[0])))


def _run(sys: PoissonSystem, x0, t_end: float, dt: float,
         mu: Optional[Callable[[np.ndarray], float]]) -> Trajectory:
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (sys.dim,):
        raise ValueError(f"initial state must have shape ({sys.dim},)")
    if not sys.domain.contains(x0):
        raise ValueError("initial state outside the domain")

    grads = [differentiate(sys.hamiltonian, i) for i in range(1, sys.dim + 1)]

    def grad_h(x):
        return np.array([float(np.asarray(evaluate(g, x))) for g in grads])

    def rhs(x):
        v = sys.field.matrix(x) @ grad_h(x)
        return v if mu is None else float(mu(x)) * v

    n_steps = int(round(t_end / dt))
    times = [0.0]
    states = [x0]
    h_values = []
    c1_values = [] if sys.casimirs is not None else None
    c2_values = [] if sys.casimirs is not None else None
    max_orth = 0.0
    max_casimir = 0.0
    mu_sign = None
    domain_exit = False

    x = x0
    for step in range(n_steps + 1):
        # Per-step invariant bookkeeping at the accepted state.
        g = grad_h(x)
        J = sys.field.matrix(x)
        v_unscaled = J @ g
        g_norm2 = float(g @ g)
        if g_norm2 > 0.0:
            max_orth = max(max_orth, abs(float(g @ v_unscaled)) / g_norm2)
        if mu is not None:
            m = float(mu(x))
            if m == 0.0 or (mu_sign is not None and np.sign(m) != mu_sign):
                raise IntegrationError(
                    f"time factor mu vanishes or changes sign at t={step * dt}")
            mu_sign = np.sign(m)
        v = v_unscaled if mu is None else float(mu(x)) * v_unscaled
        h_values.append(float(np.asarray(evaluate(sys.hamiltonian, x))))
        if sys.casimirs is not None:
            c1, c2 = sys.casimirs.values(x)
            c1_values.append(float(np.asarray(c1)))
            c2_values.append(float(np.asarray(c2)))
            g1x, g2x = sys.casimirs.grads_x(x)
            for gc in (np.asarray(g1x), np.asarray(g2x)):
                scale = max(1.0, float(np.linalg.norm(gc) * np.linalg.norm(v)))
                max_casimir = max(max_casimir, abs(float(gc @ v)) / scale)
        if step == n_steps:
            break
        x_next = _rk4_step(rhs, x, dt)
        if not np.all(np.isfinite(x_next)):
            raise IntegrationError(f"non-finite state after step {step + 1}")
        if not sys.domain.contains(x_next):
            domain_exit = True
            break
        x = x_next
        times.append((step + 1) * dt)
        states.append(x)

    traj = Trajectory(
        times=np.asarray(times),
        states=np.asarray(states),
        hamiltonian=np.asarray(h_values),
        casimir1=None if c1_values is None else np.asarray(c1_values),
        casimir2=None if c2_values is None else np.asarray(c2_values),
        domain_exit=domain_exit,
        max_energy_orthogonality=max_orth,
        max_casimir_directional=max_casimir,
        dt=dt,
    )
    traj.drifts = {"H": _relative_drift(traj.hamiltonian)}
    if traj.casimir1 is not None:
        traj.drifts["C1"] = _relative_drift(traj.casimir1)
        traj.drifts["C2"] = _relative_drift(traj.casimir2)
    return traj


def integrate(sys: PoissonSystem, x0, t_end: float, dt: float) -> Trajectory:
    """Integrate ``xdot = J grad H`` with fixed-step RK4.

    Records relative drift ``max_t |f(x(t)) - f(x0)| / max(1, |f(x0)|)`` for
    the Hamiltonian and the Casimirs.  Leaving the domain truncates the
    trajectory and sets ``domain_exit``; non-finite states raise.
    """
    return _run(sys, x0, t_end, dt, mu=None)


def integrate_reparametrized(sys: PoissonSystem, mu: Callable[[np.ndarray], float],
                             x0, tau_end: float, dtau: float) -> Trajectory:
    """Integrate the time-reparametrized field ``xdot = mu(x) J grad H``.

    The Hamiltonian and Casimirs remain first integrals (a scalar factor
    preserves orthogonality), so drift is reported identically.  A vanishing
    or sign-changing ``mu`` along the trajectory raises.
    """
    return _run(sys, x0, tau_end, dtau, mu=mu)
