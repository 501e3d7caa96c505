"""Command-line toolkit: validate, classify, reduce and integrate structures.

Exit codes: 0 on success, 1 on validation failure, 2 on usage, file or
expression errors.  Reports are deterministic JSON (see :mod:`fileio`); the
``integrate`` command additionally writes a CSV trajectory and renders a
figure next to it unless ``--no-plot`` is given.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .casimir import casimirs_for, prepare_structure, verify_casimir
from .darboux import build_pipeline, verify_pipeline
from .dynamics import IntegrationError, PoissonSystem, integrate, integrate_reparametrized
from .exprlang import ExprError, free_variables
from .fileio import (
    LoadedStructure,
    StructureFileError,
    dump_report,
    load_structure,
    write_trajectory_csv,
)
from .gallery import GALLERY, gallery_names, load_gallery_entry, materialize
from .normal_form import factor_sigma, resolve_flips, sigma_positive_normalize
from .reduce3d import is_separable, jacobi3_residual, leaf_reduce
from .structure import (
    PAIRS,
    check_hypotheses,
    check_sigma_compatibility,
    classify,
    evaluate_matrix,
    jacobi_residual,
    pfaffian4,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2

PFAFFIAN_RTOL = 1e-12


def _fail_usage(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_USAGE


def _load(spec: str) -> LoadedStructure:
    if Path(spec).exists():
        return load_structure(spec)
    if spec in GALLERY:
        return load_gallery_entry(spec)
    raise StructureFileError(f"no such file or gallery entry: {spec}")


def _emit(report: dict, args) -> None:
    if getattr(args, "format", "json") == "csv":
        lines = [f"{key},{value}" for key, value in sorted(_flatten(report).items())]
        text = "\n".join(lines) + "\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return
    text = dump_report(report, args.out)
    if not args.out:
        sys.stdout.write(text)


def _flatten(d: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in d.items():
        name = f"{prefix}.{key}" if prefix else str(key)
        if isinstance(value, dict):
            flat.update(_flatten(value, name))
        else:
            flat[name] = value
    return flat


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def _check_leaf(loaded: LoadedStructure, args) -> tuple[dict, bool]:
    F = loaded.structure
    leaf = 0.5 * (F.domain.interval(4)[0] + F.domain.interval(4)[1])
    S = leaf_reduce(F, leaf)
    pts = S.domain.sample(args.samples, args.seed)
    residual = float(np.max(jacobi3_residual(S, pts)))
    psi_minima = [float(np.min(np.abs(np.asarray(fn(pts[:, i])))))
                  for i, fn in enumerate(S.psi)]
    ok = residual <= args.tol and all(m > 1e-9 for m in psi_minima)
    report = {
        "leaf_limit": True,
        "leaf_constant": leaf,
        "jacobi3_max_residual": residual,
        "min_abs_psi": psi_minima,
        "pass": ok,
    }
    return report, ok


def cmd_check(args) -> int:
    loaded = _load(args.input)
    F = loaded.structure
    ok_sigma, residuals = check_sigma_compatibility(F.sigma)
    report = {
        "command": "check",
        "input": loaded.name,
        "samples": args.samples,
        "seed": args.seed,
        "tolerance": args.tol,
        "sigma_compatibility": {
            "ok": ok_sigma,
            "residuals": [float(r) for r in residuals],
        },
    }
    if loaded.leaf_limit:
        leaf_report, ok = _check_leaf(loaded, args)
        report.update(leaf_report)
        report["pass"] = ok_sigma and ok
        _emit(report, args)
        return EXIT_OK if report["pass"] else EXIT_VALIDATION

    hyp = check_hypotheses(F, args.samples, args.seed)
    pts = F.domain.sample(args.samples, args.seed)
    jac_max = float(np.max(jacobi_residual(F.matrix_field(), pts)))
    J = evaluate_matrix(F, pts)
    frob2 = np.sum(J * J, axis=(-2, -1))
    pf = np.abs(pfaffian4(J))
    pf_ok = bool(np.all(pf <= PFAFFIAN_RTOL * np.maximum(1.0, frob2)))
    sv = np.linalg.svd(J, compute_uv=False)
    ranks = np.sum(sv > 1e-9 * np.maximum(1.0, sv[:, :1]), axis=1)
    rank_ok = bool(np.all(ranks == 2))
    try:
        label = str(classify(F.sigma))
    except ValueError as exc:
        label = None
        report["classification_error"] = str(exc)
    separable = is_separable(F)
    ok = ok_sigma and hyp.ok and jac_max <= args.tol and pf_ok and rank_ok
    report.update({
        "hypotheses": hyp.to_dict(),
        "jacobi": {"max_residual": jac_max, "ok": jac_max <= args.tol},
        "rank": {
            "all_rank2": rank_ok,
            "max_abs_pfaffian": float(np.max(pf)),
            "pfaffian_ok": pf_ok,
        },
        "case_label": label,
        "separable": separable.separable,
        "pass": ok,
    })
    if separable.separable:
        report["separable_rank"] = separable.rank
    _emit(report, args)
    return EXIT_OK if ok else EXIT_VALIDATION


# ---------------------------------------------------------------------------
# classify / casimirs / darboux
# ---------------------------------------------------------------------------

def cmd_classify(args) -> int:
    loaded = _load(args.input)
    F = loaded.structure
    try:
        label = classify(F.sigma)
    except ValueError as exc:
        _emit({"command": "classify", "input": loaded.name, "error": str(exc),
               "pass": False}, args)
        return EXIT_VALIDATION
    report = {
        "command": "classify",
        "input": loaded.name,
        "case_label": str(label),
        "nonzero_pairs": sorted(f"s{i}{j}" for (i, j) in F.sigma.nonzero_pairs()),
        "pass": True,
    }
    if args.normalize:
        if label.is_case1:
            flip_phi, psi_flips = resolve_flips(F.sigma)
            normalized = sigma_positive_normalize(F)
            factors = factor_sigma(normalized.sigma)
            report["normalization"] = {
                "flip_all_phi": flip_phi,
                "flip_psi": sorted(psi_flips),
                "sigma": {f"s{i}{j}": normalized.sigma.get(i, j) for (i, j) in PAIRS},
                "factors": list(factors.as_tuple()),
            }
        else:
            report["normalization"] = "not applicable (zero couplings present)"
    _emit(report, args)
    return EXIT_OK


def cmd_casimirs(args) -> int:
    loaded = _load(args.input)
    try:
        prepared = prepare_structure(loaded.structure)
        pair = casimirs_for(prepared)
    except ValueError as exc:
        _emit({"command": "casimirs", "input": loaded.name, "error": str(exc),
               "pass": False}, args)
        return EXIT_VALIDATION
    rep = verify_casimir(prepared.structure, pair, args.samples, args.seed)
    ok = rep.max_residual <= args.tol and rep.min_independence_ratio >= 1e-6
    report = {
        "command": "casimirs",
        "input": loaded.name,
        "case_label": str(prepared.label),
        "casimirs": pair.describe(),
        "verification": rep.to_dict(),
        "pass": ok,
    }
    _emit(report, args)
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_darboux(args) -> int:
    loaded = _load(args.input)
    F = loaded.structure
    # Prerequisite: the structure must pass validation before reducing.
    ok_sigma, _ = check_sigma_compatibility(F.sigma)
    hyp = check_hypotheses(F, args.samples, args.seed)
    if not (ok_sigma and hyp.ok):
        _emit({"command": "darboux", "input": loaded.name,
               "error": "structure fails validation (run 'check')",
               "pass": False}, args)
        return EXIT_VALIDATION
    try:
        pipeline = build_pipeline(F)
    except ValueError as exc:
        _emit({"command": "darboux", "input": loaded.name, "error": str(exc),
               "pass": False}, args)
        return EXIT_VALIDATION
    rep = verify_pipeline(F, pipeline, args.samples, args.seed)
    ok = rep.max_deviation <= args.tol and rep.ok
    report = {
        "command": "darboux",
        "input": loaded.name,
        **pipeline.describe(),
        "verification": rep.to_dict(),
        "pass": ok,
    }
    _emit(report, args)
    return EXIT_OK if ok else EXIT_VALIDATION


# ---------------------------------------------------------------------------
# integrate / reduce3d / gallery
# ---------------------------------------------------------------------------

def _parse_x0(text: str, dim: int) -> np.ndarray:
    parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
    if len(parts) != dim:
        raise ValueError(f"--x0 needs {dim} comma-separated components")
    return np.array([float(p) for p in parts])


def cmd_integrate(args) -> int:
    loaded = _load(args.input)
    if loaded.hamiltonian is None:
        return _fail_usage(f"'{loaded.name}' defines no hamiltonian")
    mu = None
    if loaded.leaf_limit:
        F = loaded.structure
        leaf = args.leaf if args.leaf is not None else \
            0.5 * sum(F.domain.interval(4))
        S = leaf_reduce(F, leaf)
        if free_variables(loaded.hamiltonian) - {1, 2, 3}:
            return _fail_usage("hamiltonian of a leaf structure may only use x1..x3")
        system = PoissonSystem.from_leaf(S, loaded.hamiltonian)
        if args.mu_from_pipeline:
            return _fail_usage("--mu-from-pipeline applies to 4D structures only")
    else:
        pair = None
        try:
            pair = casimirs_for(loaded.structure)
        except ValueError:
            pass  # no invariants for invalid coupling sets; integrate anyway
        system = PoissonSystem.from_family(loaded.structure, loaded.hamiltonian, pair)
        if args.mu_from_pipeline:
            pipeline = build_pipeline(loaded.structure)
            mu = pipeline.mu
    try:
        x0 = _parse_x0(args.x0, system.dim)
    except ValueError as exc:
        return _fail_usage(str(exc))
    try:
        if mu is None:
            traj = integrate(system, x0, args.t_end, args.dt)
        else:
            traj = integrate_reparametrized(system, mu, x0, args.t_end, args.dt)
    except (ValueError, IntegrationError) as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    summary = {
        "command": "integrate",
        "input": loaded.name,
        "x0": [float(v) for v in x0],
        "t_end": args.t_end,
        "dt": args.dt,
        "reparametrized": mu is not None,
        **traj.summary(),
    }
    if args.out:
        base = Path(args.out)
        if base.suffix:
            base = base.with_suffix("")
        csv_path = write_trajectory_csv(traj, base.with_suffix(".csv"))
        dump_report(summary, base.with_suffix(".json"))
        summary_paths = {"csv": str(csv_path), "report": str(base.with_suffix(".json"))}
        if not args.no_plot:
            from .plots import render_trajectory_figure
            fig_path = render_trajectory_figure(traj, base.with_suffix(".png"),
                                                title=loaded.name)
            summary_paths["figure"] = str(fig_path)
        print(dump_report({"written": summary_paths}), end="")
    else:
        print(dump_report(summary), end="")
    return EXIT_OK


def cmd_reduce3d(args) -> int:
    loaded = _load(args.input)
    F = loaded.structure
    leaf = args.leaf if args.leaf is not None else 0.5 * sum(F.domain.interval(4))
    try:
        S = leaf_reduce(F, leaf)
    except ValueError as exc:
        return _fail_usage(str(exc))
    pts = S.domain.sample(args.samples, args.seed)
    residual = float(np.max(jacobi3_residual(S, pts)))
    ok = residual <= args.tol
    report = {
        "command": "reduce3d",
        "input": loaded.name,
        "structure": S.describe(),
        "jacobi3_max_residual": residual,
        "samples": args.samples,
        "pass": ok,
    }
    _emit(report, args)
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_gallery(args) -> int:
    if args.dest:
        for path in materialize(args.dest):
            print(path)
        return EXIT_OK
    for name in gallery_names():
        kind = "3D leaf template" if GALLERY[name].get("leaf_limit") else "4D structure"
        print(f"{name}\t{kind}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--samples", type=int, default=200,
                        help="number of low-discrepancy sample points (default 200)")
    parser.add_argument("--tol", type=float, default=1e-8,
                        help="residual tolerance (default 1e-8, analytic paths)")
    parser.add_argument("--seed", type=int, default=0,
                        help="sampling sequence offset (default 0)")
    parser.add_argument("--out", type=str, default=None, help="report output path")
    parser.add_argument("--format", choices=("json", "csv"), default="json",
                        help="report format (default json)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="poisson4d",
        description="Validate, classify, reduce and integrate a family of "
                    "four-dimensional rank-2 Poisson structures.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate a structure definition")
    p.add_argument("input", help="definition file (.json/.toml) or gallery name")
    _add_common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("classify", help="classify the coupling zero-pattern")
    p.add_argument("input")
    p.add_argument("--normalize", action="store_true",
                   help="also sign-normalize and factor the couplings")
    _add_common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("casimirs", help="construct and verify the invariant pair")
    p.add_argument("input")
    _add_common(p)
    p.set_defaults(func=cmd_casimirs)

    p = sub.add_parser("darboux", help="build and verify the reduction pipeline")
    p.add_argument("input")
    _add_common(p)
    p.set_defaults(func=cmd_darboux)

    p = sub.add_parser("integrate", help="integrate the induced dynamics")
    p.add_argument("input")
    p.add_argument("--x0", required=True, help="initial state, comma separated")
    p.add_argument("--t-end", type=float, required=True, dest="t_end")
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--mu-from-pipeline", action="store_true", dest="mu_from_pipeline",
                   help="scale the field by 1/eta'' from the reduction pipeline")
    p.add_argument("--leaf", type=float, default=None,
                   help="leaf constant for 3D templates (default: x4 midpoint)")
    p.add_argument("--no-plot", action="store_true", dest="no_plot",
                   help="skip the figure next to the CSV output")
    _add_common(p)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("reduce3d", help="reduce a declared-limit structure to a leaf")
    p.add_argument("input")
    p.add_argument("--leaf", type=float, default=None,
                   help="leaf constant (default: x4 interval midpoint)")
    _add_common(p)
    p.set_defaults(func=cmd_reduce3d)

    p = sub.add_parser("gallery", help="list or materialize bundled examples")
    p.add_argument("--list", action="store_true", help="list entries (default)")
    p.add_argument("--dest", type=str, default=None,
                   help="write definition files to this directory")
    p.set_defaults(func=cmd_gallery)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (StructureFileError, ExprError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
