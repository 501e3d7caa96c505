"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import numpy as np

from poisson4d.structure import FamilyStructure, SigmaSet
from poisson4d.exprlang import parse, UnivariateFn

# Benchmark point of the primary fixture (box midpoint).
PRIMARY_POINT = np.array([0.5, 2.5, 4.5, 6.5])

# Standard validation box: per-axis intervals are disjoint, so identity-like
# phi functions have separated ranges and the difference hypotheses hold.
BOX_LOWER = (0.0, 2.0, 4.0, 6.0)
BOX_UPPER = (1.0, 3.0, 5.0, 7.0)

_PAIR_KEYS = ("s12", "s13", "s14", "s23", "s24", "s34")


def sigma_from(values: dict[str, float]) -> SigmaSet:
    return SigmaSet(*(float(values.get(k, 0.0)) for k in _PAIR_KEYS))


def structure_from_pattern(values: dict[str, float],
                           eta: str = "1",
                           psi: tuple[str, str, str, str] = ("1", "1", "1", "1"),
                           phi: tuple[str, str, str, str] = ("x1", "x2", "x3", "x4"),
                           lower=BOX_LOWER, upper=BOX_UPPER) -> FamilyStructure:
    return FamilyStructure.from_strings(sigma_from(values), eta, list(psi),
                                        list(phi), list(lower), list(upper))


def primary_structure() -> FamilyStructure:
    """Factors (1, 2, 3, 5), identity phi, unit psi and eta."""
    return structure_from_pattern(
        {"s12": 2, "s13": 3, "s14": 5, "s23": 6, "s24": 10, "s34": 15})


# One structure per reachable case label, plus absorbed nongeneric patterns.
def label_fixtures() -> dict[str, FamilyStructure]:
    return {
        "CaseI": primary_structure(),
        "IIA.1": structure_from_pattern({"s12": 1, "s13": 1, "s23": 1}),
        "IIA.2": structure_from_pattern({"s23": 1, "s24": 2, "s34": 3}),
        "IIA.3": structure_from_pattern({"s13": 1.5, "s14": 2, "s34": 1}),
        "IIA.4": structure_from_pattern({"s12": 2, "s14": 1, "s24": 3}),
        "IIB.1.generic": structure_from_pattern({"s12": 1, "s23": 2, "s24": 3}),
        "IIB.2.generic": structure_from_pattern({"s14": 1, "s24": 2, "s34": 1.5}),
        "IIB.3.generic": structure_from_pattern({"s13": 1, "s23": 2, "s34": 2.5}),
        "IIB.4.generic": structure_from_pattern({"s12": 1, "s13": 2, "s14": 3}),
        # Two-coupling patterns, absorbed into triangle cases.
        "absorbed-12-13": structure_from_pattern({"s12": 1, "s13": 2}),
        "absorbed-12-23": structure_from_pattern({"s12": 1, "s23": 2}),
        "absorbed-23-24": structure_from_pattern({"s23": 1, "s24": 2}),
        "absorbed-12-24": structure_from_pattern({"s12": 1, "s24": 2}),
        # Single-coupling patterns.
        "single-12": structure_from_pattern({"s12": 2.5}),
        "single-34": structure_from_pattern({"s34": 1.5}),
    }


# Gentle expression tables for random structures: bounded away from zero on
# the standard box, small derivatives, ranges that keep the phi differences
# separated.
ETA_TABLE = ("1", "2", "1 + 0.1*sin(x1)", "1 + 0.02*x1*x2", "1 + 0.1*cos(x3)")
PSI_TABLE = ("1", "1.5", "1 + 0.1*sin({v})", "1 + 0.05*cos({v})")
PHI_TABLE = ("{v}", "{v} + 0.1*sin({v})", "0.9*{v}", "{v} - 0.05*cos({v})")


def random_functions(rng: np.random.Generator):
    eta = str(rng.choice(ETA_TABLE))
    psi = tuple(str(rng.choice(PSI_TABLE)).format(v=f"x{i}") for i in range(1, 5))
    phi = tuple(str(rng.choice(PHI_TABLE)).format(v=f"x{i}") for i in range(1, 5))
    return eta, psi, phi


def random_case1_structure(rng: np.random.Generator) -> FamilyStructure:
    f = rng.uniform(0.5, 5.0, size=4)
    values = {"s12": f[0] * f[1], "s13": f[0] * f[2], "s14": f[0] * f[3],
              "s23": f[1] * f[2], "s24": f[1] * f[3], "s34": f[2] * f[3]}
    eta, psi, phi = random_functions(rng)
    return structure_from_pattern(values, eta=eta, psi=psi, phi=phi)


_ZERO_PATTERNS = (
    ("s12", "s13", "s23"), ("s23", "s24", "s34"), ("s13", "s14", "s34"),
    ("s12", "s14", "s24"),                      # triangles
    ("s12", "s23", "s24"), ("s14", "s24", "s34"), ("s13", "s23", "s34"),
    ("s12", "s13", "s14"),                      # stars
)


def random_case2_structure(rng: np.random.Generator) -> FamilyStructure:
    allowed = _ZERO_PATTERNS[rng.integers(len(_ZERO_PATTERNS))]
    keep = max(1, int(rng.integers(1, 4)))      # 1..3 nonzero couplings
    chosen = list(rng.choice(len(allowed), size=keep, replace=False))
    values = {allowed[i]: float(rng.uniform(0.5, 5.0)) for i in chosen}
    eta, psi, phi = random_functions(rng)
    return structure_from_pattern(values, eta=eta, psi=psi, phi=phi)


def random_sign_sigma(rng: np.random.Generator) -> SigmaSet:
    """Random compatible coupling set with a random admissible sign pattern."""
    f = rng.uniform(0.5, 5.0, size=4)
    mags = {"s12": f[0] * f[1], "s13": f[0] * f[2], "s14": f[0] * f[3],
            "s23": f[1] * f[2], "s24": f[1] * f[3], "s34": f[2] * f[3]}
    e12, e13, e14 = (int(rng.integers(0, 2)) * 2 - 1 for _ in range(3))
    e_sigma = int(rng.integers(0, 2)) * 2 - 1
    signs = {"s12": e12, "s13": e13, "s14": e14,
             "s34": e_sigma * e12, "s24": e_sigma * e13, "s23": e_sigma * e14}
    return sigma_from({k: signs[k] * mags[k] for k in mags})


def composite_simpson(f, a: float, b: float, n: int = 2000) -> float:
    """Fixed-step composite Simpson oracle (independent of the adaptive code)."""
    if n % 2:
        n += 1
    xs = np.linspace(a, b, n + 1)
    ys = np.array([f(x) for x in xs])
    h = (b - a) / n
    return float(h / 3.0 * (ys[0] + ys[-1] + 4.0 * ys[1:-1:2].sum()
                            + 2.0 * ys[2:-1:2].sum()))


def central_difference(fn, x: np.ndarray, i: int, h: float = 1e-5) -> float:
    """Central-difference derivative of a point function along axis ``i``."""
    xp = np.array(x, dtype=float)
    xm = np.array(x, dtype=float)
    xp[i] += h
    xm[i] -= h
    return (fn(xp) - fn(xm)) / (2.0 * h)


def univariate(text: str, var: int, interval) -> UnivariateFn:
    return UnivariateFn(parse(text), var, tuple(interval))
