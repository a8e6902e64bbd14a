"""Analytic reference spectrum, Fourier-mode association, and study drivers.

For constant coefficients the eigenfunctions are the Fourier modes
``exp(i(mx + ny))`` with eigenvalues ``(b1 m + b2 n)^2``; the pairs
``(m, n)`` and ``(-m, -n)`` are degenerate, so a canonical representative
(``m > 0``, or ``m == 0 and n >= 0``) stands for both and real computed
eigenvectors are matched against it by projection magnitude.

Errors are relative to the exact eigenvalue, absolute where the exact
eigenvalue is zero (the constant mode).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import spherical_jn

from .assembly import SparseSymMatrix, assemble_operator_set, build_reduced
from .basis import BasisSpec, dof_parallel, dof_perpendicular
from .eigensolve import (BandRequest, EigenSolution, band_eig,
                         dense_generalized_eig)
from .fields import CoefficientField, MagneticField
from .geometry import FieldDirection, Mesh, MeshConfig, build_mesh

log = logging.getLogger(__name__)

DEFAULT_MODE_BOUND = 20


def canonical_mode(m: int, n: int) -> tuple[int, int]:
    """The representative of the degenerate pair {(m, n), (-m, -n)}."""
    if m > 0 or (m == 0 and n >= 0):
        return m, n
    return -m, -n


def canonical_modes(m_max: int, n_max: int) -> list[tuple[int, int]]:
    out = [(0, n) for n in range(0, n_max + 1)]
    out += [(m, n) for m in range(1, m_max + 1) for n in range(-n_max, n_max + 1)]
    return out


@dataclass(frozen=True)
class ExactSpectrum:
    """omega^2 = (b1 m + b2 n)^2 over the canonical modes of a search box."""

    b: FieldDirection
    m_max: int
    n_max: int
    entries: dict[tuple[int, int], float] = field(default_factory=dict)

    def omega2(self, m: int, n: int) -> float:
        return self.entries[canonical_mode(m, n)]

    def band_modes(self, omega_max_sq: float) -> list[tuple[int, int]]:
        """Canonical modes with exact eigenvalue inside the band, sorted."""
        modes = [mode for mode, w2 in self.entries.items() if w2 <= omega_max_sq]
        return sorted(modes, key=lambda mn: (self.entries[mn], mn))

    def count_with_multiplicity(self, omega_max_sq: float) -> int:
        """Band count counting (m,n)/(-m,-n) twice and the zero mode once."""
        return sum(1 if mode == (0, 0) else 2
                   for mode in self.band_modes(omega_max_sq))


def exact_spectrum(b: FieldDirection, m_max: int = DEFAULT_MODE_BOUND,
                   n_max: int = DEFAULT_MODE_BOUND) -> ExactSpectrum:
    if m_max < 0 or n_max < 0:
        raise ValueError("mode search bounds must be >= 0")
    entries = {(m, n): (b.b1 * m + b.b2 * n) ** 2
               for (m, n) in canonical_modes(m_max, n_max)}
    return ExactSpectrum(b=b, m_max=m_max, n_max=n_max, entries=entries)


class FourierProjector:
    """Projections of DG coefficient vectors onto Fourier modes.

    The moment of basis function ``P_a(xi) P_b(eta)`` against
    ``exp(i(mx+ny))`` factorizes over an affine cell into 1D integrals
    ``int P_a(t) exp(ict) dt = 2 i^a j_a(c)`` with spherical Bessel
    functions, so the full moment matrix is assembled in closed form.
    """

    def __init__(self, mesh: Mesh, spec: BasisSpec,
                 m_max: int = DEFAULT_MODE_BOUND, n_max: int = DEFAULT_MODE_BOUND):
        self.mesh = mesh
        self.spec = spec
        self.m_max = m_max
        self.n_max = n_max
        self.modes = canonical_modes(m_max, n_max)
        self._moments = self._build_moments()

    def _build_moments(self) -> np.ndarray:
        mesh, spec = self.mesh, self.spec
        mm = np.array([mn[0] for mn in self.modes], dtype=float)
        nn = np.array([mn[1] for mn in self.modes], dtype=float)
        n_modes = len(self.modes)
        p_xi, p_eta = spec.p_xi, spec.p_eta

        cell0 = mesh.cells[0]
        hx, he = np.array(cell0.half_xi), np.array(cell0.half_eta)
        det = cell0.jacobian_det
        c_xi = mm * hx[0] + nn * hx[1]
        c_eta = mm * he[0] + nn * he[1]

        def segment_factors(p, c):
            # (p+1, n_modes): 2 * i^a * j_a(c)
            out = np.empty((p + 1, len(c)), dtype=complex)
            for a in range(p + 1):
                out[a] = 2.0 * (1j ** a) * spherical_jn(a, np.abs(c))
                odd = a % 2 == 1
                if odd:  # j_a is odd/even with the parity of a
                    out[a] = np.where(c < 0, -out[a], out[a])
            return out

        f_xi = segment_factors(p_xi, c_xi)       # (p_xi+1, modes)
        f_eta = segment_factors(p_eta, c_eta)    # (p_eta+1, modes)
        local = det * np.einsum("am,bm->mab", f_xi, f_eta).reshape(
            n_modes, spec.n_loc)

        anchors = np.array([c.anchor for c in mesh.cells])  # (cells, 2)
        phase = np.exp(1j * (np.outer(mm, anchors[:, 0])
                             + np.outer(nn, anchors[:, 1])
                             + (c_xi + c_eta)[:, None]))    # (modes, cells)
        # moments[mode, cell*n_loc + k] = phase * local
        moments = phase[:, :, None] * local[:, None, :]
        return moments.reshape(n_modes, mesh.n_cells * spec.n_loc)

    def amplitudes(self, vec: np.ndarray) -> np.ndarray:
        """|projection| of a coefficient vector onto each canonical mode."""
        if vec.shape[0] != self._moments.shape[1]:
            raise ValueError(
                f"vector dimension {vec.shape[0]} does not match the "
                f"{self._moments.shape[1]} degrees of freedom")
        return np.abs(self._moments @ vec)

    def amplitude_table(self, vec: np.ndarray) -> dict[tuple[int, int], float]:
        amps = self.amplitudes(vec)
        return {mode: float(a) for mode, a in zip(self.modes, amps)}

    def argmax_mode(self, vec: np.ndarray) -> tuple[tuple[int, int], float]:
        """Best mode and its amplitude; ties prefer small |m|+|n|, then small m."""
        amps = self.amplitudes(vec)
        best = np.max(amps)
        if best <= 0.0:
            raise ValueError("zero projection everywhere; cannot associate")
        tied = [mode for mode, a in zip(self.modes, amps) if a == best]
        mode = min(tied, key=lambda mn: (abs(mn[0]) + abs(mn[1]), mn[0], mn[1]))
        return mode, float(best)


def project_to_fourier(mesh: Mesh, spec: BasisSpec, eigenvector: np.ndarray,
                       m_max: int = DEFAULT_MODE_BOUND,
                       n_max: int = DEFAULT_MODE_BOUND
                       ) -> dict[tuple[int, int], float]:
    """One-off amplitude table; use FourierProjector to batch eigenvectors."""
    return FourierProjector(mesh, spec, m_max, n_max).amplitude_table(eigenvector)


@dataclass(frozen=True)
class Association:
    index: int
    omega2_computed: float
    mode: tuple[int, int]
    amplitude: float
    omega2_exact: float | None
    error: float | None
    error_kind: str  # "relative", "absolute" or "none"


def associate_modes(solution: EigenSolution, projector: FourierProjector,
                    exact: ExactSpectrum | None = None) -> list[Association]:
    """Associate each eigenpair with its dominant Fourier mode."""
    out = []
    for idx in range(len(solution)):
        mode, amp = projector.argmax_mode(solution.eigenvectors[:, idx])
        w2 = float(solution.eigenvalues[idx])
        if exact is None:
            out.append(Association(idx, w2, mode, amp, None, None, "none"))
            continue
        w2_exact = exact.omega2(*mode)
        if w2_exact == 0.0:
            out.append(Association(idx, w2, mode, amp, w2_exact, abs(w2), "absolute"))
        else:
            out.append(Association(idx, w2, mode, amp, w2_exact,
                                   abs(w2 - w2_exact) / w2_exact, "relative"))
    return out


@dataclass
class BandReport:
    """Per-eigenpair rows whose exact eigenvalue lies in the band."""

    rows: list[Association]
    omega_max_sq: float
    missing_modes: list[tuple[int, int]]

    @property
    def max_error(self) -> float:
        return max((r.error for r in self.rows), default=0.0)


def max_band_mode_error(result: "BandResult") -> tuple[float, int]:
    """Max over band modes of each mode's best-association error.

    Every eigenpair is associated to one mode; per mode the association
    with the largest projection amplitude represents it.  Unassociated
    band modes floor the error at 1 and are counted.  This is the quantity
    traced by convergence studies.
    """
    if result.exact is None:
        raise ValueError("band mode errors need constant coefficients")
    table = mode_error_table(result.assoc)
    worst = 0.0
    missing = 0
    for mode in result.exact.band_modes(result.setup.omega_max_sq):
        row = table.get(mode)
        if row is None or row.error is None:
            missing += 1
            worst = max(worst, 1.0)
        else:
            worst = max(worst, row.error)
    return worst, missing


def band_error_report(assoc: list[Association], omega_max_sq: float,
                      exact: ExactSpectrum) -> BandReport:
    """Rows of the association table whose exact mode is inside the band."""
    rows = [r for r in assoc
            if r.omega2_exact is not None and r.omega2_exact <= omega_max_sq]
    found = {r.mode for r in rows}
    missing = [mode for mode in exact.band_modes(omega_max_sq)
               if mode not in found]
    return BandReport(rows=rows, omega_max_sq=omega_max_sq,
                      missing_modes=missing)


def mode_error_table(assoc: list[Association]) -> dict[tuple[int, int], Association]:
    """Best association per mode (largest projection amplitude wins)."""
    table: dict[tuple[int, int], Association] = {}
    for row in assoc:
        cur = table.get(row.mode)
        if cur is None or row.amplitude > cur.amplitude:
            table[row.mode] = row
    return table


# ---------------------------------------------------------------------------
# pipeline drivers


@dataclass(frozen=True)
class SolveSetup:
    """Everything needed for one band solve of the discretized problem."""

    mesh_config: MeshConfig
    spec: BasisSpec
    alpha: CoefficientField
    beta: CoefficientField
    eta_s: float = 6.0
    omega_max_sq: float = 0.2
    m_max: int = DEFAULT_MODE_BOUND
    n_max: int = DEFAULT_MODE_BOUND
    tolerance: float = 1e-10
    max_subspace: int | None = None
    seed: int = 0
    n_quad: int | None = None
    band_margin: float = 1.0
    full_spectrum: bool = False

    @property
    def constant_coefficients(self) -> bool:
        return self.alpha.is_constant and self.beta.is_constant

    def dof(self) -> int:
        return dof_parallel(self.spec, self.mesh_config.nx) * \
            dof_perpendicular(self.spec, self.mesh_config.ny)


@dataclass
class BandResult:
    setup: SolveSetup
    mesh: Mesh
    solution: EigenSolution
    assoc: list[Association]
    exact: ExactSpectrum | None
    a_matrix: SparseSymMatrix
    nnz_percent: float

    def band_report(self) -> BandReport:
        if self.exact is None:
            raise ValueError("band error report needs constant coefficients")
        return band_error_report(self.assoc, self.setup.omega_max_sq, self.exact)


def run_band_solve(setup: SolveSetup) -> BandResult:
    """geometry -> assembly -> band eigensolve -> Fourier association.

    With ``full_spectrum`` set (and a dimension inside the dense cap) the
    whole spectrum is computed and associated instead of just the band;
    studies use this to track band modes whose discrete eigenvalues sit far
    outside the band on coarse meshes.
    """
    mesh = build_mesh(setup.mesh_config)
    b_field = MagneticField(b=setup.mesh_config.b, beta=setup.beta)
    ops = assemble_operator_set(mesh, setup.spec, setup.alpha, b_field,
                                setup.eta_s, setup.n_quad)
    a, m = build_reduced(ops)
    if setup.full_spectrum:
        solution = dense_generalized_eig(a, m)
    else:
        lam = setup.omega_max_sq * max(setup.band_margin, 1.0)
        req = BandRequest(lambda_max=lam, tolerance=setup.tolerance,
                          max_subspace=setup.max_subspace)
        solution = band_eig(a, m, req, seed=setup.seed)
    projector = FourierProjector(mesh, setup.spec, setup.m_max, setup.n_max)
    exact = exact_spectrum(setup.mesh_config.b, setup.m_max, setup.n_max) \
        if setup.constant_coefficients else None
    assoc = associate_modes(solution, projector, exact)
    nnz = a.nnz_percent()
    log.info("solved %s %dx%d p=(%d,%d): DoF=%d nnzA=%.3f%% band count=%d",
             setup.mesh_config.alignment.value, setup.mesh_config.nx,
             setup.mesh_config.ny, setup.spec.p_xi, setup.spec.p_eta,
             setup.dof(), nnz, len(solution))
    return BandResult(setup=setup, mesh=mesh, solution=solution, assoc=assoc,
                      exact=exact, a_matrix=a, nnz_percent=nnz)


# ---------------------------------------------------------------------------
# studies


@dataclass
class ConvergenceRow:
    level: int
    nx: int
    ny: int
    dof: int
    max_band_error: float
    slope: float
    missing: int


def _loglog_slope(dof0, err0, dof1, err1) -> float:
    if dof1 == dof0 or err0 <= 0.0 or err1 <= 0.0:
        return 0.0
    return -(math.log(err1) - math.log(err0)) / (math.log(dof1) - math.log(dof0))


def convergence_study(setup: SolveSetup, levels: list[tuple[int, int]],
                      band_margin: float = 4.0,
                      _runner=None) -> list[ConvergenceRow]:
    """Max band error over a refinement sequence, with observed slopes.

    Each level rebuilds the setup with its (Nx, Ny); the eigensolve band is
    widened by ``band_margin`` so that poorly resolved band modes are still
    captured and their (large) errors reported.  A negative slope means the
    error grew under refinement and is flagged in the log.
    """
    if len(levels) < 2:
        raise ValueError("need at least two refinement levels")
    runner = _runner or _run_level
    rows: list[ConvergenceRow] = []
    for lvl, (nx, ny) in enumerate(levels):
        max_err, dof, missing = runner(setup, nx, ny, band_margin)
        slope = 0.0
        if rows:
            slope = _loglog_slope(rows[-1].dof, rows[-1].max_band_error,
                                  dof, max_err)
            if slope < 0.0:
                log.warning("error grew under refinement at level %d "
                            "(slope %.3g)", lvl, slope)
        rows.append(ConvergenceRow(level=lvl, nx=nx, ny=ny, dof=dof,
                                   max_band_error=max_err, slope=slope,
                                   missing=missing))
    return rows


#: Levels up to this size are solved with the full dense spectrum, so even
#: badly shifted band modes can be associated and their errors tracked.
FULL_SPECTRUM_CAP = 4096


def _run_level(setup: SolveSetup, nx: int, ny: int, band_margin: float):
    cfg = setup.mesh_config
    level_dof = nx * ny * setup.spec.n_loc
    level_setup = SolveSetup(
        mesh_config=MeshConfig(nx=nx, ny=ny, alignment=cfg.alignment, b=cfg.b),
        spec=setup.spec, alpha=setup.alpha, beta=setup.beta,
        eta_s=setup.eta_s, omega_max_sq=setup.omega_max_sq,
        m_max=setup.m_max, n_max=setup.n_max, tolerance=setup.tolerance,
        max_subspace=setup.max_subspace, seed=setup.seed,
        n_quad=setup.n_quad, band_margin=band_margin,
        full_spectrum=level_dof <= FULL_SPECTRUM_CAP)
    result = run_band_solve(level_setup)
    max_err, missing = max_band_mode_error(result)
    if missing:
        log.warning("level %dx%d: %d band modes not associated", nx, ny, missing)
    return max_err, level_setup.dof(), missing


def least_squares_slope(rows: list[ConvergenceRow]) -> float:
    """Least-squares fit of log(max band error) against log(DoF)."""
    x = np.log([r.dof for r in rows])
    y = np.log([max(r.max_band_error, np.finfo(float).tiny) for r in rows])
    coeff = np.polyfit(x, y, 1)
    return float(-coeff[0])


@dataclass
class CompareRow:
    mode: tuple[int, int]
    omega2_exact: float
    error_a: float
    error_b: float

    @property
    def improvement_decades(self) -> float:
        if self.error_a <= 0.0 or self.error_b <= 0.0:
            return 0.0
        return math.log10(self.error_b / self.error_a)


def compare_band_errors(result_a: BandResult, result_b: BandResult
                        ) -> list[CompareRow]:
    """Per-mode error pairs of two runs over the shared exact band.

    Row ``improvement_decades`` is ``log10(error_b / error_a)``: positive
    when run A is the more accurate one.
    """
    if result_a.exact is None or result_b.exact is None:
        raise ValueError("comparison needs constant-coefficient runs")
    table_a = mode_error_table(result_a.assoc)
    table_b = mode_error_table(result_b.assoc)
    omega_max_sq = result_a.setup.omega_max_sq
    rows = []
    for mode in result_a.exact.band_modes(omega_max_sq):
        ra, rb = table_a.get(mode), table_b.get(mode)
        if ra is None or rb is None or ra.error is None or rb.error is None:
            log.warning("mode %s missing from one side of the comparison", mode)
            continue
        rows.append(CompareRow(mode=mode, omega2_exact=result_a.exact.omega2(*mode),
                               error_a=ra.error, error_b=rb.error))
    return rows
