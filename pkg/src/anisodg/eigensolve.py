"""Generalized symmetric band eigensolver with an inertia completeness check.

``band_eig`` returns *all* eigenpairs of ``A x = lambda M x`` with
``lambda <= lambda_max``.  Completeness is certified through Sylvester's
law: the number of negative pivots of an LDL^T factorization of
``A - lambda_max M`` (equivalently of the congruent standard-form shift)
must equal the number of returned eigenvalues, retrying with a larger
subspace until the counts match.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import BlockDiagMatrix, SparseSymMatrix, standard_form

#: Problems at most this large may be handled by dense LAPACK paths.
DENSE_CAP = 8192

#: Below this size band_eig solves densely instead of running Lanczos.
DENSE_SWITCH = 1200


class CompletenessError(RuntimeError):
    """The band content could not be certified (or solved) completely."""


@dataclass(frozen=True)
class BandRequest:
    lambda_max: float
    tolerance: float = 1e-10
    max_subspace: int | None = None

    def __post_init__(self):
        if not np.isfinite(self.lambda_max) or self.lambda_max <= 0.0:
            raise ValueError("lambda_max must be finite and > 0")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be > 0")


@dataclass
class EigenSolution:
    """Eigenpairs sorted ascending; eigenvectors are M-orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    method: str
    inertia_count: int | None = None
    norm_a: float = field(default=0.0)

    def __len__(self) -> int:
        return len(self.eigenvalues)


def _as_sym(a) -> SparseSymMatrix:
    if isinstance(a, SparseSymMatrix):
        return a
    if sp.issparse(a):
        return SparseSymMatrix.from_product(a)
    return SparseSymMatrix.from_dense(np.asarray(a, dtype=float))


def _as_blockdiag(m, n: int) -> BlockDiagMatrix | None:
    if m is None or isinstance(m, BlockDiagMatrix):
        return m
    m = np.asarray(m, dtype=float)
    if m.ndim == 1:
        return BlockDiagMatrix(m.reshape(n, 1, 1))
    return BlockDiagMatrix(m.reshape(1, n, n))


def dense_generalized_eig(a, m=None, cap: int = DENSE_CAP) -> EigenSolution:
    """Full spectrum of the symmetric pencil (A, M) via LAPACK.

    The generalized problem is reduced with a Cholesky factorization of M
    inside the LAPACK driver; eigenvectors come back M-orthonormal.
    """
    a_sym = _as_sym(a)
    n = a_sym.n
    if n > cap:
        raise ValueError(f"dense solve of dimension {n} exceeds cap {cap}")
    a_d = a_sym.to_dense()
    m_bd = _as_blockdiag(m, n)
    if m_bd is None:
        w, v = sla.eigh(a_d)
        resid = _residuals(a_sym, None, w, v)
    else:
        w, v = sla.eigh(a_d, m_bd.to_dense())
        resid = _residuals(a_sym, m_bd, w, v)
    return EigenSolution(eigenvalues=w, eigenvectors=v, residuals=resid,
                         method="dense", norm_a=a_sym.norm_inf())


def _residuals(a: SparseSymMatrix, m: BlockDiagMatrix | None,
               w: np.ndarray, v: np.ndarray) -> np.ndarray:
    if v.size == 0:
        return np.empty(0)
    r = a.to_full() @ v
    mv = v if m is None else m.matmat(v)
    return np.linalg.norm(r - mv * w[None, :], axis=0)


def ldl_inertia(s, zero_tol: float = 1e-12) -> tuple[int, int, int]:
    """Inertia (n_neg, n_zero, n_pos) of a symmetric matrix.

    Uses the dense Bunch-Kaufman LDL^T factorization; pivot-block
    eigenvalues within ``zero_tol * max|S|`` of zero count as zero.
    """
    if sp.issparse(s):
        s = s.toarray()
    elif isinstance(s, SparseSymMatrix):
        s = s.to_dense()
    s = np.asarray(s, dtype=float)
    n = s.shape[0]
    scale = max(float(np.max(np.abs(s), initial=0.0)), np.finfo(float).tiny)
    _, d, _ = sla.ldl(s, lower=True)
    tol = zero_tol * scale
    n_neg = n_zero = n_pos = 0
    i = 0
    while i < n:
        if i + 1 < n and d[i + 1, i] != 0.0:
            evals = sla.eigvalsh(d[i:i + 2, i:i + 2])
            step = 2
        else:
            evals = [d[i, i]]
            step = 1
        for ev in evals:
            if abs(ev) <= tol:
                n_zero += 1
            elif ev < 0.0:
                n_neg += 1
            else:
                n_pos += 1
        i += step
    return n_neg, n_zero, n_pos


def _superlu_inertia(s_csc: sp.csc_matrix, zero_tol: float) -> tuple[int, int, int]:
    """Inertia from a static-pivot (diagonal) SuperLU factorization.

    With symmetric mode and a zero diagonal-pivot threshold the row and
    column permutations coincide, the factorization is a congruence, and
    the signs of diag(U) give the inertia.  Raises if SuperLU had to pivot
    off the diagonal.
    """
    lu = spla.splu(s_csc.tocsc(), permc_spec="MMD_AT_PLUS_A",
                   diag_pivot_thresh=0.0, options={"SymmetricMode": True})
    if not np.array_equal(lu.perm_r, lu.perm_c):
        raise CompletenessError(
            "static-pivot factorization failed (row pivoting occurred); "
            "inertia count unavailable at this size")
    d = lu.U.diagonal()
    if not np.all(np.isfinite(d)):
        raise CompletenessError("static-pivot factorization broke down")
    scale = max(float(np.max(np.abs(s_csc.data), initial=0.0)), np.finfo(float).tiny)
    tol = zero_tol * scale
    n_zero = int(np.sum(np.abs(d) <= tol))
    n_neg = int(np.sum(d < -tol))
    return n_neg, n_zero, len(d) - n_neg - n_zero


def shifted_inertia(s: SparseSymMatrix, shift: float, zero_tol: float = 1e-12,
                    dense_cap: int = DENSE_CAP) -> tuple[int, int, int]:
    """Inertia of (S - shift * I), dense when affordable, static-pivot sparse
    otherwise."""
    shifted = (s.to_full() - shift * sp.identity(s.n, format="csr")).tocsc()
    if s.n <= dense_cap:
        return ldl_inertia(shifted.toarray(), zero_tol)
    return _superlu_inertia(shifted, zero_tol)


def band_eig(a, m, req: BandRequest, *, seed: int = 0,
             dense_switch: int = DENSE_SWITCH,
             dense_cap: int = DENSE_CAP) -> EigenSolution:
    """All eigenpairs of ``A x = lambda M x`` with ``lambda <= lambda_max``.

    The pencil is reduced to standard form with the block square root of M,
    solved by shift-invert Lanczos around ``sigma = lambda_max / 2`` (every
    band eigenvalue is closer to sigma than any exterior one), and accepted
    only when the returned count matches the LDL^T inertia at lambda_max.
    Small problems use the dense path directly; the certification is
    identical there.
    """
    a_sym = _as_sym(a)
    n = a_sym.n
    m_bd = _as_blockdiag(m, n)
    if m_bd is None:
        s, r_inv = a_sym, None
    else:
        r_inv = m_bd.inv_sqrt()
        s = standard_form(a_sym, m_bd)

    n_neg, n_zero, _ = shifted_inertia(s, req.lambda_max, dense_cap=dense_cap)
    if n_zero:
        raise CompletenessError(
            f"{n_zero} pivot(s) within tolerance of lambda_max="
            f"{req.lambda_max:.6g}; band boundary is ambiguous")
    norm_a = a_sym.norm_inf()
    if n_neg == 0:
        return EigenSolution(eigenvalues=np.empty(0), eigenvectors=np.empty((n, 0)),
                             residuals=np.empty(0), method="empty",
                             inertia_count=0, norm_a=norm_a)

    max_subspace = req.max_subspace or min(n - 1, max(4 * n_neg + 50, 100))
    if n_neg > max_subspace:
        raise CompletenessError(
            f"band holds {n_neg} eigenvalues, more than the subspace cap "
            f"{max_subspace}")
    if n <= dense_switch or n_neg + 8 >= n - 1:
        if n > dense_cap:
            raise CompletenessError(
                f"band of {n_neg} eigenvalues needs a subspace near the full "
                f"dimension {n}, which exceeds the dense cap")
        w, y = sla.eigh(s.to_dense())
        keep = w <= req.lambda_max
        w, y = w[keep], y[:, keep]
        method = "dense-band"
    else:
        w, y = _shift_invert_band(s, req, n_neg, max_subspace, seed)
        method = "shift-invert"

    if len(w) != n_neg:
        raise CompletenessError(
            f"found {len(w)} eigenvalues <= {req.lambda_max:.6g} but the "
            f"inertia count demands {n_neg}")

    order = np.argsort(w)
    w, y = w[order], y[:, order]
    x = y if r_inv is None else r_inv.matmat(y)
    resid = _residuals(a_sym, m_bd, w, x)
    limit = req.tolerance * max(norm_a, np.finfo(float).tiny)
    if np.any(resid > limit):
        raise CompletenessError(
            f"residual {resid.max():.3e} exceeds tolerance {limit:.3e}")
    if np.any(w < -req.tolerance * norm_a):
        raise CompletenessError(
            f"negative eigenvalue {w.min():.3e} below the PSD tolerance")
    return EigenSolution(eigenvalues=w, eigenvectors=x, residuals=resid,
                         method=method, inertia_count=n_neg, norm_a=norm_a)


def _shift_invert_band(s: SparseSymMatrix, req: BandRequest, n_band: int,
                       max_subspace: int, seed: int):
    """ARPACK shift-invert runs with a growing subspace until the band fills."""
    n = s.n
    s_csc = s.to_full().tocsc()
    v0 = np.random.default_rng(seed).standard_normal(n)
    sigma = req.lambda_max / 2.0
    k = min(n - 2, n_band + 2)
    while True:
        try:
            w, y = spla.eigsh(s_csc, k=k, sigma=sigma, which="LM", v0=v0,
                              ncv=min(n - 1, max(4 * k, 40)))
        except RuntimeError as exc:  # factorization hit an eigenvalue
            sigma *= 1.0 + 1e-4
            try:
                w, y = spla.eigsh(s_csc, k=k, sigma=sigma, which="LM", v0=v0,
                                  ncv=min(n - 1, max(4 * k, 40)))
            except RuntimeError:
                raise CompletenessError(f"shift-invert factorization failed: {exc}")
        keep = w <= req.lambda_max
        if int(keep.sum()) >= n_band:
            return w[keep], y[:, keep]
        if k >= max_subspace or k >= n - 2:
            raise CompletenessError(
                f"subspace of {k} vectors holds {int(keep.sum())} band "
                f"eigenvalues, inertia demands {n_band}")
        k = min(max(2 * k, n_band + 8), max_subspace, n - 2)
