"""Structure-definition files and report/trajectory output.

Definition files are JSON or TOML (selected by extension) with keys:

    sigma        object with s12, s13, s14, s23, s24, s34
    eta          expression string
    psi, phi     arrays of four expression strings
    domain       {"lower": [..4 reals..], "upper": [..4 reals..]}
    hamiltonian  optional expression string
    leaf_limit   optional bool: declares psi4 = phi4 = 0 for 3D reduction
    name         optional display name

Reports are JSON with sorted keys and no timestamps, so identical inputs and
seeds produce byte-identical output.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .exprlang import Expr, ExprError, parse
from .structure import FamilyStructure, SigmaSet

try:  # Python 3.11+
    import tomllib as _toml
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as _toml

__all__ = [
    "StructureFileError",
    "LoadedStructure",
    "load_structure",
    "structure_dict",
    "write_definition",
    "dump_report",
    "write_trajectory_csv",
]

_SIGMA_KEYS = ("s12", "s13", "s14", "s23", "s24", "s34")


class StructureFileError(Exception):
    """Malformed definition file (missing keys, bad expressions, ...)."""


@dataclass(frozen=True)
class LoadedStructure:
    name: str
    structure: FamilyStructure
    hamiltonian: Optional[Expr]
    leaf_limit: bool
    path: Optional[str] = None


def _parse_expr(text, context: str) -> Expr:
    if not isinstance(text, str):
        raise StructureFileError(f"{context}: expected an expression string")
    try:
        return parse(text)
    except ExprError as exc:
        raise StructureFileError(f"{context}: {exc}") from exc


def structure_from_dict(data: dict, name: str = "", path: str | None = None) -> LoadedStructure:
    try:
        sigma_raw = data["sigma"]
        sigma = SigmaSet(*(float(sigma_raw[k]) for k in _SIGMA_KEYS))
        eta = data["eta"]
        psi = data["psi"]
        phi = data["phi"]
        lower = [float(v) for v in data["domain"]["lower"]]
        upper = [float(v) for v in data["domain"]["upper"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise StructureFileError(f"missing or malformed key: {exc}") from exc
    if len(psi) != 4 or len(phi) != 4 or len(lower) != 4 or len(upper) != 4:
        raise StructureFileError("psi, phi, domain.lower and domain.upper need 4 entries")
    _parse_expr(eta, "eta")  # surface syntax errors with their context
    for i, s in enumerate(psi):
        _parse_expr(s, f"psi[{i}]")
    for i, s in enumerate(phi):
        _parse_expr(s, f"phi[{i}]")
    try:
        structure = FamilyStructure.from_strings(sigma, eta, list(psi), list(phi),
                                                 lower, upper)
        structure.validate_expressions()
    except (ExprError, ValueError) as exc:
        raise StructureFileError(str(exc)) from exc
    hamiltonian = None
    if data.get("hamiltonian"):
        hamiltonian = _parse_expr(data["hamiltonian"], "hamiltonian")
    return LoadedStructure(
        name=data.get("name", name),
        structure=structure,
        hamiltonian=hamiltonian,
        leaf_limit=bool(data.get("leaf_limit", False)),
        path=path,
    )


def load_structure(path: str | Path) -> LoadedStructure:
    path = Path(path)
    if not path.exists():
        raise StructureFileError(f"no such file: {path}")
    suffix = path.suffix.lower()
    try:
        if suffix == ".json":
            data = json.loads(path.read_text())
        elif suffix == ".toml":
            data = _toml.loads(path.read_text())
        else:
            raise StructureFileError(f"unsupported extension '{suffix}' (use .json or .toml)")
    except (json.JSONDecodeError, _toml.TOMLDecodeError) as exc:
        raise StructureFileError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise StructureFileError(f"{path}: top level must be a table/object")
    return structure_from_dict(data, name=path.stem, path=str(path))


def structure_dict(name: str, sigma: dict, eta: str, psi: list[str], phi: list[str],
                   lower: list[float], upper: list[float],
                   hamiltonian: str | None = None,
                   leaf_limit: bool = False) -> dict:
    data = {
        "name": name,
        "sigma": sigma,
        "eta": eta,
        "psi": psi,
        "phi": phi,
        "domain": {"lower": lower, "upper": upper},
    }
    if hamiltonian is not None:
        data["hamiltonian"] = hamiltonian
    if leaf_limit:
        data["leaf_limit"] = True
    return data


def write_definition(data: dict, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def dump_report(report: dict, path: str | Path | None = None) -> str:
    """Serialize a report deterministically; write it when a path is given."""
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def write_trajectory_csv(traj, path: str | Path) -> Path:
    """Delimited trajectory output: t, coordinates, H and Casimir columns."""
    path = Path(path)
    dim = traj.states.shape[1]
    header = ["t"] + [f"x{i}" for i in range(1, dim + 1)] + ["H", "C1", "C2"]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row_index in range(len(traj.times)):
            row = [repr(float(traj.times[row_index]))]
            row += [repr(float(v)) for v in traj.states[row_index]]
            row.append(repr(float(traj.hamiltonian[row_index])))
            for series in (traj.casimir1, traj.casimir2):
                row.append("" if series is None else repr(float(series[row_index])))
            writer.writerow(row)
    return path
