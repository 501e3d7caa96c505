"""Bundled example structures covering every branch of the case tree.

Four-dimensional entries: an all-couplings-nonzero benchmark with integer
factors (1, 2, 3, 5), a variant with nonconstant eta/psi/phi exercising the
quadrature paths, a mixed-sign variant exercising sign normalization, one
triangle pattern, one generic star pattern, a single-coupling pattern, and a
separable (constant eta and phi) structure.  Three-dimensional leaf templates
(rigid-body top, 3-species predator-prey, epidemic compartment model) ship as
declared-limit files with psi4 = phi4 = 0.
"""

from __future__ import annotations

from pathlib import Path

from .fileio import LoadedStructure, structure_dict, structure_from_dict, write_definition

__all__ = ["GALLERY", "gallery_names", "gallery_entry", "load_gallery_entry",
           "materialize"]

_BOX = {"lower": [0.0, 2.0, 4.0, 6.0], "upper": [1.0, 3.0, 5.0, 7.0]}
_IDENTITY_PHI = ["x1", "x2", "x3", "x4"]
_UNIT_PSI = ["1", "1", "1", "1"]
_SUM_H = "x1 + x2 + x3 + x4"


def _entry(name, sigma, eta=None, psi=None, phi=None, box=None,
           hamiltonian=_SUM_H, leaf_limit=False):
    box = box or _BOX
    return structure_dict(
        name=name,
        sigma=sigma,
        eta=eta or "1",
        psi=psi or list(_UNIT_PSI),
        phi=phi or list(_IDENTITY_PHI),
        lower=box["lower"],
        upper=box["upper"],
        hamiltonian=hamiltonian,
        leaf_limit=leaf_limit,
    )


GALLERY: dict[str, dict] = {
    # Factors (1, 2, 3, 5): couplings are their pairwise products.
    "case1-primary": _entry(
        "case1-primary",
        {"s12": 2.0, "s13": 3.0, "s14": 5.0, "s23": 6.0, "s24": 10.0, "s34": 15.0},
    ),
    # Nonconstant eta, psi and phi; psi1 and phi1 fall outside the symbolic
    # integration table, exercising the quadrature-backed paths.
    "case1-wavy": _entry(
        "case1-wavy",
        {"s12": 1.5, "s13": 3.0, "s14": 1.5, "s23": 2.0, "s24": 1.0, "s34": 2.0},
        eta="1 + 0.1*x1*x2",
        psi=["1 + 0.1*sin(x1)", "1.25", "1", "1"],
        phi=["x1 - 0.2*exp(-1*x1^2)", "x2", "x3 + 0.1*sin(x3)", "x4"],
        hamiltonian="x1 + 0.5*x2^2 + x3 + x4",
    ),
    # Mixed signs with positive opposite-pair product (both opposite pairs
    # of one axis negative); normalization flips all phi then psi3, psi4.
    "case1-signflip": _entry(
        "case1-signflip",
        {"s12": -2.0, "s13": 3.0, "s14": 5.0, "s23": 6.0, "s24": 10.0, "s34": -15.0},
    ),
    # Triangle pattern on vertices {1,2,3}: x4 is invariant.
    "case2a1-triangle": _entry(
        "case2a1-triangle",
        {"s12": 1.0, "s13": 1.0, "s14": 0.0, "s23": 1.0, "s24": 0.0, "s34": 0.0},
    ),
    # Generic star pattern at vertex 2.
    "case2b1-star": _entry(
        "case2b1-star",
        {"s12": 1.0, "s13": 0.0, "s14": 0.0, "s23": 2.0, "s24": 3.0, "s34": 0.0},
    ),
    # A single nonzero coupling: both complementary coordinates are invariant.
    "single-pair": _entry(
        "single-pair",
        {"s12": 2.5, "s13": 0.0, "s14": 0.0, "s23": 0.0, "s24": 0.0, "s34": 0.0},
    ),
    # Constant eta and phi: separable structure J_ij = a_ij psi_i psi_j.
    "separable": _entry(
        "separable",
        {"s12": 1.0, "s13": 1.0, "s14": 1.0, "s23": 1.0, "s24": 1.0, "s34": 1.0},
        psi=["x1", "x2", "x3", "x4"],
        phi=["0", "1", "2", "4"],
        box={"lower": [0.5, 2.0, 4.0, 6.0], "upper": [1.5, 3.0, 5.0, 7.0]},
    ),
    # Leaf template: rigid-body (free top) bracket J12 = x3, J13 = -x2,
    # J23 = x1 on the leaf.
    "euler-top-3d": _entry(
        "euler-top-3d",
        {"s12": 1.0, "s13": 1.0, "s14": 0.0, "s23": 1.0, "s24": 0.0, "s34": 0.0},
        psi=["1", "1", "1", "0"],
        phi=["x1", "x2", "x3", "0"],
        box={"lower": [0.5, 0.5, 0.5, -3.0], "upper": [1.5, 1.5, 1.5, 3.0]},
        hamiltonian="0.5*x1^2 + 0.25*x2^2 + 0.125*x3^2",
        leaf_limit=True,
    ),
    # Leaf template: 3-species predator-prey bracket with quadratic entries.
    "lotka-volterra-3d": _entry(
        "lotka-volterra-3d",
        {"s12": 1.0, "s13": 1.0, "s14": 0.0, "s23": 1.0, "s24": 0.0, "s34": 0.0},
        psi=["x1", "x2", "x3", "0"],
        phi=["1", "-1", "1", "0"],
        box={"lower": [0.5, 0.5, 0.5, -1.0], "upper": [2.0, 2.0, 2.0, 1.0]},
        hamiltonian="x1 + x2 + x3 - ln(x1) - ln(x2) - ln(x3)",
        leaf_limit=True,
    ),
    # Leaf template: epidemic compartment bracket (susceptible/infected/
    # recovered with unit contact and recovery rates).
    "kermack-mckendrick-3d": _entry(
        "kermack-mckendrick-3d",
        {"s12": 1.0, "s13": 1.0, "s14": 0.0, "s23": 1.0, "s24": 0.0, "s34": 0.0},
        psi=["x1", "x2", "1", "0"],
        phi=["-1", "0", "-1", "0"],
        box={"lower": [0.2, 0.2, -1.0, -1.0], "upper": [2.0, 2.0, 3.0, 1.0]},
        hamiltonian="x1 + x2 + x3",
        leaf_limit=True,
    ),
}


def gallery_names() -> list[str]:
    return list(GALLERY)


def gallery_entry(name: str) -> dict:
    try:
        return GALLERY[name]
    except KeyError:
        raise KeyError(f"unknown gallery entry '{name}'; "
                       f"available: {', '.join(GALLERY)}") from None


def load_gallery_entry(name: str) -> LoadedStructure:
    return structure_from_dict(gallery_entry(name), name=name)


def materialize(dest: str | Path) -> list[Path]:
    """Write every gallery entry as a definition file under ``dest``."""
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    return [write_definition(data, dest / f"{name}.json")
            for name, data in GALLERY.items()]
