"""Acceptance suite: one test per criterion, printing a pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  Tolerances are pinned here and must not be loosened.
"""

import time

import numpy as np

from helpers import (
    PRIMARY_POINT,
    label_fixtures,
    primary_structure,
    random_case1_structure,
    random_case2_structure,
    random_sign_sigma,
)
from poisson4d.casimir import casimirs_for, prepare_structure, verify_casimir
from poisson4d.darboux import build_pipeline, verify_pipeline
from poisson4d.dynamics import PoissonSystem, integrate
from poisson4d.exprlang import parse, to_string
from poisson4d.gallery import GALLERY, gallery_names, load_gallery_entry
from poisson4d.normal_form import factor_sigma, sigma_positive_normalize
from poisson4d.reduce3d import jacobi3_residual, leaf_reduce
from poisson4d.structure import (
    PAIRS,
    FamilyStructure,
    SigmaSet,
    evaluate_matrix,
    jacobi_residual,
    pfaffian4,
)


def _report(criterion: int, ok: bool, detail: str) -> None:
    print(f"[criterion {criterion}] {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {criterion}: {detail}"


def _gallery_4d() -> dict[str, FamilyStructure]:
    out = {}
    for name in gallery_names():
        if not GALLERY[name].get("leaf_limit"):
            out[name] = load_gallery_entry(name).structure
    return out


def _all_valid_structures() -> dict[str, FamilyStructure]:
    structures = dict(_gallery_4d())
    structures.update(label_fixtures())
    return structures


def test_criterion_1_jacobi_forward():
    """Gallery plus 50 random valid structures: residual <= 1e-10, < 30 s."""
    start = time.monotonic()
    rng = np.random.default_rng(1234)
    structures = list(_gallery_4d().values())
    structures += [random_case1_structure(rng) for _ in range(25)]
    structures += [random_case2_structure(rng) for _ in range(25)]
    worst = 0.0
    for F in structures:
        pts = F.domain.sample(200)
        worst = max(worst, float(np.max(jacobi_residual(F.matrix_field(), pts))))
    elapsed = time.monotonic() - start
    ok = worst <= 1e-10 and elapsed < 30.0
    _report(1, ok, f"{len(structures)} structures, max residual {worst:.3e} "
                   f"(<= 1e-10), runtime {elapsed:.1f}s (< 30s)")


def test_criterion_2_jacobi_converse():
    """5% perturbation of one coupling drives the residual above 1e-4.

    Applies to the all-nonzero gallery structures with nonconstant phi; the
    separable entry (constant phi) stays a Poisson structure under any
    couplings, so the converse direction has nothing to detect there.
    """
    worst_detail = []
    ok = True
    for name, F in _gallery_4d().items():
        if len(F.sigma.nonzero_pairs()) != 6:
            continue
        from poisson4d.reduce3d import is_separable
        if is_separable(F).separable:
            continue
        values = list(F.sigma.as_tuple())
        values[4] *= 1.05  # perturb s24
        broken = FamilyStructure(SigmaSet(*values), F.eta, F.psi, F.phi, F.domain)
        pts = F.domain.sample(200)
        residual = float(np.max(jacobi_residual(broken.matrix_field(), pts)))
        ok = ok and residual > 1e-4
        worst_detail.append(f"{name}: {residual:.3e}")
    _report(2, ok and bool(worst_detail),
            "perturbed residuals > 1e-4: " + "; ".join(worst_detail))


def test_criterion_3_rank_and_pfaffian():
    """|pfaffian| <= 1e-12 * ||J||_F^2 and singular-value rank 2 everywhere."""
    worst_pf, min_rank, max_rank = 0.0, 4, 0
    for name, F in _all_valid_structures().items():
        pts = F.domain.sample(200)
        J = evaluate_matrix(F, pts)
        frob2 = np.maximum(1.0, np.sum(J * J, axis=(-2, -1)))
        worst_pf = max(worst_pf, float(np.max(np.abs(pfaffian4(J)) / frob2)))
        sv = np.linalg.svd(J, compute_uv=False)
        ranks = np.sum(sv > 1e-9 * np.maximum(1.0, sv[:, :1]), axis=1)
        min_rank = min(min_rank, int(ranks.min()))
        max_rank = max(max_rank, int(ranks.max()))
    ok = worst_pf <= 1e-12 and min_rank == 2 and max_rank == 2
    _report(3, ok, f"max |pf|/||J||^2 = {worst_pf:.3e} (<= 1e-12), "
                   f"rank range [{min_rank}, {max_rank}] (== 2)")


def test_criterion_4_normalization():
    """Sign normalization preserves the matrix to 1e-13; factors round-trip."""
    rng = np.random.default_rng(77)
    base = primary_structure()
    pts = base.domain.sample(20)
    worst_matrix = 0.0
    worst_factor = 0.0
    for _ in range(50):
        sigma = random_sign_sigma(rng)
        F = FamilyStructure(sigma, base.eta, base.psi, base.phi, base.domain)
        G = sigma_positive_normalize(F)
        worst_matrix = max(worst_matrix, float(np.max(np.abs(
            evaluate_matrix(G, pts) - evaluate_matrix(F, pts)))))
        factors = factor_sigma(G.sigma)
        rebuilt = factors.reconstruct()
        for (i, j) in PAIRS:
            target = G.sigma.get(i, j)
            worst_factor = max(worst_factor,
                               abs(rebuilt.get(i, j) - target) / target)
    ok = worst_matrix <= 1e-13 and worst_factor <= 1e-12
    _report(4, ok, f"50 sign patterns x 20 points: max matrix deviation "
                   f"{worst_matrix:.3e} (<= 1e-13), max factor error "
                   f"{worst_factor:.3e} (<= 1e-12 relative)")


def test_criterion_5_casimirs():
    """Annihilation <= 1e-9 and gradient independence for every case label."""
    worst_resid = 0.0
    worst_ratio = 1.0
    checked = 0
    for name, F in _all_valid_structures().items():
        prepared = prepare_structure(F)
        pair = casimirs_for(prepared)
        report = verify_casimir(prepared.structure, pair, 200)
        worst_resid = max(worst_resid, report.max_residual)
        worst_ratio = min(worst_ratio, report.min_independence_ratio)
        checked += 1
    ok = worst_resid <= 1e-9 and worst_ratio >= 1e-6
    _report(5, ok, f"{checked} structures: max annihilation {worst_resid:.3e} "
                   f"(<= 1e-9), min independence ratio {worst_ratio:.3e} (>= 1e-6)")


def test_criterion_6_darboux_pipeline():
    """Pushforward equals eta'' * J_D to 1e-8; eta''(benchmark) = 4 exactly."""
    worst_dev = 0.0
    signs_ok = True
    for name, F in _all_valid_structures().items():
        pipeline = build_pipeline(F)
        report = verify_pipeline(F, pipeline, 200)
        worst_dev = max(worst_dev, report.max_deviation)
        signs_ok = signs_ok and report.eta_dd_sign_constant
    eta_dd = build_pipeline(primary_structure()).eta_doubleprime(PRIMARY_POINT)
    eta_ok = abs(eta_dd - 4.0) <= 1e-12
    ok = worst_dev <= 1e-8 and signs_ok and eta_ok
    _report(6, ok, f"max |pushforward - eta''*J_D| = {worst_dev:.3e} (<= 1e-8), "
                   f"eta'' sign constant: {signs_ok}, "
                   f"eta''(benchmark) = {eta_dd!r} (= 4 +- 1e-12)")


def test_criterion_7_dynamics():
    """Per-step orthogonality, Casimir conservation, drift and RK4 order."""
    F = primary_structure()
    pair = casimirs_for(F)
    system = PoissonSystem.from_family(F, parse("x1 + x2 + x3 + x4"), pair)
    x0 = PRIMARY_POINT
    traj = integrate(system, x0, 1.0, 1e-3)
    fine = integrate(system, x0, 1.0, 5e-4)
    factor = traj.max_drift() / fine.max_drift()
    ok = (traj.max_energy_orthogonality <= 1e-12
          and traj.max_casimir_directional <= 1e-10
          and traj.drifts["H"] <= 1e-8
          and factor >= 8.0)
    _report(7, ok, f"orthogonality {traj.max_energy_orthogonality:.3e} (<= 1e-12), "
                   f"casimir direction {traj.max_casimir_directional:.3e} (<= 1e-10), "
                   f"H drift {traj.drifts['H']:.3e} (<= 1e-8), "
                   f"halving factor {factor:.1f} (>= 8)")


def test_criterion_8_leaf_reduction():
    """3D Jacobi <= 1e-10 on all leaf templates; rigid-body entries exact."""
    worst = 0.0
    for name in gallery_names():
        if not GALLERY[name].get("leaf_limit"):
            continue
        F = load_gallery_entry(name).structure
        mid4 = 0.5 * sum(F.domain.interval(4))
        S = leaf_reduce(F, mid4)
        pts = S.domain.sample(100)
        worst = max(worst, float(np.max(jacobi3_residual(S, pts))))
    top = leaf_reduce(load_gallery_entry("euler-top-3d").structure, 2.0)
    entries = {k: to_string(e) for k, e in top.entry_exprs().items()}
    exact = entries == {(1, 2): "x3", (1, 3): "-x2", (2, 3): "x1"}
    ok = worst <= 1e-10 and exact
    _report(8, ok, f"max 3D residual {worst:.3e} (<= 1e-10), "
                   f"rigid-body entries {entries} (exact)")


def test_criterion_9_worked_example_regression():
    """The benchmark fixture reproduces its hand-derived values to 1e-12."""
    F = primary_structure()
    J = evaluate_matrix(F, PRIMARY_POINT)
    expected = {(1, 2): 4.0, (1, 3): -12.0, (1, 4): 10.0,
                (2, 3): 36.0, (2, 4): -40.0, (3, 4): 30.0}
    entry_err = max(abs(J[i - 1, j - 1] - v) for (i, j), v in expected.items())
    pf = abs(pfaffian4(J))
    pair = casimirs_for(prepare_structure(F))
    weights = pair.grad1_y(PRIMARY_POINT)
    weight_err = float(np.max(np.abs(weights - np.array([30.0, 15.0, 10.0, 6.0]))))
    ok = entry_err <= 1e-12 and pf <= 1e-12 and weight_err <= 1e-12
    _report(9, ok, f"matrix entries err {entry_err:.3e}, pfaffian {pf:.3e}, "
                   f"C1 weights err {weight_err:.3e} (all <= 1e-12)")
