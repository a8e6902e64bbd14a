"""Acceptance suite: one test per numbered criterion, each printing a
PASS/FAIL line with its measured quantities (run with ``pytest -s`` to see
them inline).

The heavy eigensolves at DoF=4096 and above are shared module-scoped
fixtures; on a single core the whole module takes several minutes.

Criterion 2 is implemented exactly as stated and is expected to FAIL: at
the uniform reference resolution the discrete operator certifiably (by
LDL^T inertia) carries only 23 eigenvalues below 0.2, not the 29 obtained
by enumerating the search box, because the three highest band modes are
pushed out of the band by perpendicular under-resolution.  See the
decisions ledger for the full analysis.
"""

import math

import numpy as np
import pytest
import scipy.linalg as sla

import bruteforce as bf
from anisodg.assembly import assemble_operator_set, build_reduced
from anisodg.basis import BasisSpec
from anisodg.fields import CoefficientField, Harmonic, MagneticField, \
    iota_profile
from anisodg.geometry import Alignment, FieldDirection, MeshConfig, build_mesh
from anisodg.spectrum import (SolveSetup, compare_band_errors, convergence_study,
                              exact_spectrum, least_squares_slope,
                              mode_error_table, run_band_solve)

REF_B = FieldDirection(1.165939761, 1.0)
CONST = CoefficientField.constant(1.0)
OMEGA_MAX_SQ = 0.2
ETA_S = 6.0
MODE_BOUND = 20


def report(criterion: int, passed: bool, detail: str) -> None:
    print(f"\n[ACCEPTANCE] criterion {criterion}: "
          f"{'PASS' if passed else 'FAIL'} - {detail}")


def reference_setup(nx, ny, p_xi, p_eta, alignment=Alignment.BOTTOM_TOP,
                    **kwargs) -> SolveSetup:
    return SolveSetup(
        mesh_config=MeshConfig(nx, ny, alignment, REF_B),
        spec=BasisSpec(p_xi, p_eta), alpha=CONST, beta=CONST,
        eta_s=ETA_S, omega_max_sq=OMEGA_MAX_SQ,
        m_max=MODE_BOUND, n_max=MODE_BOUND, **kwargs)


@pytest.fixture(scope="module")
def ref_band():
    """Band solve of the uniform reference configuration (certified)."""
    return run_band_solve(reference_setup(8, 8, 7, 7))


@pytest.fixture(scope="module")
def ref_aligned_full():
    return run_band_solve(reference_setup(8, 8, 7, 7, full_spectrum=True))


@pytest.fixture(scope="module")
def ref_cartesian_full():
    return run_band_solve(reference_setup(8, 8, 7, 7,
                                          alignment=Alignment.CARTESIAN,
                                          full_spectrum=True))


@pytest.fixture(scope="module")
def ref_ratio4_full():
    return run_band_solve(reference_setup(4, 16, 7, 7, full_spectrum=True))


def analytic_band_count(b, omega_max_sq, bound):
    """Brute-force enumeration of the (m, n) grid with multiplicity."""
    count = 0
    for m in range(-bound, bound + 1):
        for n in range(-bound, bound + 1):
            if (b.b1 * m + b.b2 * n) ** 2 <= omega_max_sq:
                count += 1
    return count


def test_criterion_1_reference_exactness_anchor():
    spec = exact_spectrum(REF_B, MODE_BOUND, MODE_BOUND)
    value = spec.omega2(4, -5)
    passed = abs(value - 0.11305798) <= 0.5e-8 + 1e-8 * 0.11305798
    report(1, passed, f"omega2(4,-5) = {value:.10f} vs 0.11305798")
    assert passed


def test_criterion_2_band_completeness(ref_band):
    analytic = analytic_band_count(REF_B, OMEGA_MAX_SQ, MODE_BOUND)
    computed = int(np.sum(ref_band.solution.eigenvalues <= OMEGA_MAX_SQ))
    inertia = ref_band.solution.inertia_count
    passed = computed == analytic
    missing = ref_band.band_report().missing_modes
    report(2, passed,
           f"computed band count {computed} (inertia-certified {inertia}) vs "
           f"analytic enumeration {analytic}; band modes without an in-band "
           f"eigenpair: {missing}")
    assert passed, (
        f"the discrete spectrum at the uniform reference resolution holds "
        f"{computed} eigenvalues <= {OMEGA_MAX_SQ} (certified by LDL^T "
        f"inertia), while enumerating the |m|,|n| <= {MODE_BOUND} grid gives "
        f"{analytic}; the modes {missing} are pushed above the band edge by "
        f"perpendicular under-resolution at this resolution (see the "
        f"decisions ledger)")


def test_criterion_3_alignment_improvement(ref_aligned_full, ref_cartesian_full):
    rows = compare_band_errors(ref_aligned_full, ref_cartesian_full)
    gains = [r.improvement_decades for r in rows
             if max(abs(r.mode[0]), abs(r.mode[1])) >= 10]
    median = float(np.median(gains))
    passed = len(gains) >= 5 and median >= 1.0
    report(3, passed,
           f"median improvement of aligned over cartesian for "
           f"max(|m|,|n|) >= 10: {median:.2f} decades over {len(gains)} modes "
           f"(floor 1.0)")
    assert passed


def test_criterion_4_resolution_redistribution(ref_ratio4_full, ref_aligned_full):
    rows = compare_band_errors(ref_ratio4_full, ref_aligned_full)
    gains = [r.improvement_decades for r in rows
             if max(abs(r.mode[0]), abs(r.mode[1])) > 4]
    median = float(np.median(gains))
    passed = len(gains) >= 5 and median >= 2.5
    report(4, passed,
           f"median improvement of DoF_perp/DoF_par=4 over uniform for mode "
           f"numbers > 4: {median:.2f} decades over {len(gains)} modes "
           f"(floor 2.5)")
    assert passed


@pytest.fixture(scope="module")
def convergence_rows():
    setup = reference_setup(4, 16, 3, 3)
    return convergence_study(setup, [(4, 16), (8, 32), (16, 64)],
                             band_margin=4.0)


def test_criterion_5_convergence_slope(convergence_rows):
    slope = least_squares_slope(convergence_rows)
    p_eta = 3
    lo, hi = p_eta - 1.0, p_eta + 1.5
    errors = [r.max_band_error for r in convergence_rows]
    passed = lo <= slope <= hi and all(r.missing == 0 for r in convergence_rows)
    report(5, passed,
           f"least-squares slope {slope:.3f} of max band error vs DoF "
           f"(errors {', '.join(f'{e:.3e}' for e in errors)}) within "
           f"[{lo}, {hi}]")
    assert passed


SMALL_MESHES = [
    MeshConfig(2, 2, Alignment.CARTESIAN, FieldDirection(1.0, 2.0)),
    MeshConfig(2, 2, Alignment.BOTTOM_TOP, FieldDirection(1.0, 2.0)),
    MeshConfig(2, 2, Alignment.BOTTOM_TOP, REF_B),
    MeshConfig(2, 2, Alignment.LEFT_RIGHT, FieldDirection(2.0, 7.0)),
    MeshConfig(3, 2, Alignment.BOTTOM_TOP, REF_B),
]
VAR_ALPHA = CoefficientField(1.0, (Harmonic(1, 1, 0.2, 0.0),))
VAR_BETA = CoefficientField(1.0, (Harmonic(0, 1, 0.0, 0.1),))


def test_criterion_6_symmetry_and_psd(ref_band):
    worst_sym = 0.0
    worst_eig = 0.0
    worst_null = 0.0
    for cfg in SMALL_MESHES:
        for alpha, beta in [(CONST, CONST), (VAR_ALPHA, VAR_BETA)]:
            mesh = build_mesh(cfg)
            spec = BasisSpec(2, 2)
            ops = assemble_operator_set(mesh, spec, alpha,
                                        MagneticField(cfg.b, beta), ETA_S)
            a, _ = build_reduced(ops)
            asym = a.to_full() - a.to_full().T
            worst_sym = max(worst_sym, 0.0 if asym.nnz == 0
                            else float(np.max(np.abs(asym.data))))
            scale = a.max_abs()
            worst_eig = max(worst_eig,
                            -float(sla.eigvalsh(a.to_dense())[0]) / scale)
            ones = np.zeros(a.n)
            ones[::spec.n_loc] = 1.0
            worst_null = max(worst_null,
                             float(np.max(np.abs(a.matvec(ones)))) / scale)
    # the big reference operator as well
    a_ref = ref_band.a_matrix
    asym = a_ref.to_full() - a_ref.to_full().T
    worst_sym = max(worst_sym, 0.0 if asym.nnz == 0
                    else float(np.max(np.abs(asym.data))))
    ones = np.zeros(a_ref.n)
    ones[::BasisSpec(7, 7).n_loc] = 1.0
    worst_null = max(worst_null,
                     float(np.max(np.abs(a_ref.matvec(ones)))) / a_ref.max_abs())
    worst_eig = max(worst_eig,
                    -float(ref_band.solution.eigenvalues[0]) /
                    ref_band.solution.norm_a)
    passed = worst_sym == 0.0 and worst_eig <= 1e-10 and worst_null <= 1e-10
    report(6, passed,
           f"storage asymmetry {worst_sym}; min eig >= {-worst_eig:.2e}*|A|; "
           f"|A*1| <= {worst_null:.2e}*|A| (incl. variable coefficients)")
    assert passed


ORACLE_MESHES = [
    MeshConfig(2, 2, Alignment.CARTESIAN, FieldDirection(1.0, 2.0)),
    MeshConfig(2, 2, Alignment.BOTTOM_TOP, FieldDirection(1.0, 2.0)),
    MeshConfig(2, 2, Alignment.BOTTOM_TOP, REF_B),
    MeshConfig(2, 2, Alignment.LEFT_RIGHT, FieldDirection(2.0, 7.0)),
]


def test_criterion_7_oracle_equivalence():
    worst = 0.0
    cases = 0
    for cfg in ORACLE_MESHES:
        mesh = build_mesh(cfg)
        for alpha, beta in [(CONST, CONST), (VAR_ALPHA, VAR_BETA)]:
            # variable coefficients: run both paths at the oracle's 20-point
            # rule so the check isolates the assembly machinery
            nq = None if alpha.is_constant and beta.is_constant else 20
            for spec in (BasisSpec(2, 2), BasisSpec(1, 2)):
                field = MagneticField(cfg.b, beta)
                from anisodg.assembly import (assemble_face_terms,
                                              assemble_gradient,
                                              assemble_mass_phi,
                                              assemble_mass_u,
                                              assemble_penalty)
                pairs = [
                    (assemble_mass_u(mesh, spec, nq).to_dense(),
                     bf.oracle_mass(mesh, spec, None)),
                    (assemble_mass_phi(mesh, spec, alpha, nq).to_dense(),
                     bf.oracle_mass(mesh, spec,
                                    lambda x, y: float(alpha.eval(x, y)))),
                    (assemble_gradient(mesh, spec, field, nq).toarray(),
                     bf.oracle_gradient(mesh, spec, field)),
                    (assemble_face_terms(mesh, spec, field, nq).toarray(),
                     bf.oracle_face_terms(mesh, spec, field)),
                    (assemble_penalty(mesh, spec, field, ETA_S, nq).to_dense(),
                     bf.oracle_penalty(mesh, spec, field, ETA_S)),
                ]
                for got, want in pairs:
                    scale = max(np.abs(want).max(), 1e-300)
                    worst = max(worst, float(np.max(np.abs(got - want))) / scale)
                cases += 1
    passed = worst <= 1e-12
    report(7, passed,
           f"worst entrywise deviation from the brute-force assembler over "
           f"{cases} configurations: {worst:.2e} (tolerance 1e-12)")
    assert passed


@pytest.fixture(scope="module")
def variable_pair():
    alpha = CoefficientField(1.0, (Harmonic(1, 1, 0.1, 0.0),
                                   Harmonic(1, -1, 0.1, 0.0)))  # 1+0.2cos(x)cos(y)
    beta = CoefficientField(1.0, (Harmonic(0, 1, 0.1, 0.0),))   # 1+0.1cos(y)
    b = iota_profile(0.5)

    def solve(nx, ny):
        setup = SolveSetup(
            mesh_config=MeshConfig(nx, ny, Alignment.BOTTOM_TOP, b),
            spec=BasisSpec(4, 4), alpha=alpha, beta=beta, eta_s=ETA_S,
            omega_max_sq=OMEGA_MAX_SQ, m_max=MODE_BOUND, n_max=MODE_BOUND)
        return run_band_solve(setup)

    return solve(8, 32), solve(16, 64)


def test_criterion_8_variable_coefficient_self_convergence(variable_pair):
    coarse, fine = variable_pair
    tab_c = mode_error_table(coarse.assoc)
    tab_f = mode_error_table(fine.assoc)
    shared = [mode for mode in tab_c if mode in tab_f
              and max(abs(mode[0]), abs(mode[1])) <= 6]
    worst = 0.0
    for mode in shared:
        wc = tab_c[mode].omega2_computed
        wf = tab_f[mode].omega2_computed
        if abs(wf) > 1e-8:
            worst = max(worst, abs(wc - wf) / abs(wf))
        else:
            worst = max(worst, abs(wc - wf))
    passed = len(shared) >= 5 and worst <= 1e-6
    report(8, passed,
           f"band eigenvalues at (8,32) vs (16,64) agree to {worst:.2e} "
           f"over {len(shared)} modes with max(|m|,|n|) <= 6 (tolerance 1e-6)")
    assert passed


def test_criterion_9_inertia_completeness(ref_band, variable_pair):
    solutions = [ref_band.solution, variable_pair[0].solution,
                 variable_pair[1].solution]
    checks = [(len(s), s.inertia_count) for s in solutions]
    passed = all(count == inertia for count, inertia in checks)
    report(9, passed,
           f"returned-count vs LDL^T inertia on accepted band solves: {checks}")
    assert passed


# --- additional spectrum-level invariants tied to the reference runs --------


def test_invariant_zero_mode_exactness(ref_band):
    lam0 = float(ref_band.solution.eigenvalues[0])
    assert abs(lam0) <= 1e-10 * ref_band.solution.norm_a


def test_invariant_high_band_modes_reported(ref_aligned_full):
    table = mode_error_table(ref_aligned_full.assoc)
    row = table[(17, -20)]
    assert row.error is not None and math.isfinite(row.error)


def test_invariant_band_coverage_at_ratio4(ref_ratio4_full):
    """At the redistributed resolution every analytic band mode of the
    search box is represented by an in-band eigenpair (coverage
    completeness); the raw in-band count is larger because band modes just
    outside the box become resolved as well."""
    exact = ref_ratio4_full.exact
    table = mode_error_table(ref_ratio4_full.assoc)
    box_modes = exact.band_modes(OMEGA_MAX_SQ)
    for mode in box_modes:
        row = table.get(mode)
        assert row is not None, f"band mode {mode} not associated"
        assert row.omega2_computed <= OMEGA_MAX_SQ * (1 + 1e-6), mode
    computed = int(np.sum(ref_ratio4_full.solution.eigenvalues <= OMEGA_MAX_SQ))
    assert computed >= exact.count_with_multiplicity(OMEGA_MAX_SQ)


def test_invariant_anisotropy_ordering(ref_aligned_full):
    """Absolute eigenvalue deviations grow with the band mode number.

    Relative errors are inflated by near-resonant (tiny) exact eigenvalues,
    so the trend is measured on |computed - exact|; pairs below the noise
    floor are skipped and at most 10% inversions are allowed.
    """
    table = mode_error_table(ref_aligned_full.assoc)
    exact = ref_aligned_full.exact
    rows = []
    for mode in exact.band_modes(OMEGA_MAX_SQ):
        if mode == (0, 0):
            continue
        row = table[mode]
        dev = abs(row.omega2_computed - exact.omega2(*mode))
        rows.append((max(abs(mode[0]), abs(mode[1])), dev))
    rows.sort()
    devs = [d for _, d in rows]
    floor = 1e-10 * max(devs)
    inversions = total = 0
    for a, b in zip(devs, devs[1:]):
        if a <= floor and b <= floor:
            continue
        total += 1
        inversions += a > b
    assert total > 0
    assert inversions / total <= 0.10, (inversions, total, devs)
