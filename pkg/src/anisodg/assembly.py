"""Assembly of the mixed-form LDG operator matrices and the reduced system.

The weak form couples a scalar parallel-gradient variable u with the
primal variable phi through seven matrices:

* ``M_UV``   cell mass blocks of u/v (block diagonal),
* ``A_UPsi`` volume blocks of ``u * B . grad(psi)`` (its transpose is the
  ``A_PhiV`` coupling; shared storage),
* ``B_UPsi`` interface blocks of ``{u} * B . [psi]`` (transpose serves
  ``B_PhiV``),
* ``B_PhiPsi`` penalty ``(eta_S / h_F) * (B . [phi]) (B . [psi])``,
* ``M_PhiPsi`` weighted mass blocks with coefficient alpha.

Eliminating u yields the reduced symmetric positive semidefinite operator

    A = (A_UPsi - B_UPsi) M_UV^{-1} (A_UPsi - B_UPsi)^T + B_PhiPsi

and the generalized eigenproblem ``A Phi = omega^2 M_PhiPsi Phi``.

Conforming and non-conforming interfaces are treated identically: each
sub-segment integrates with its own Gauss rule, mapped into both adjacent
reference edge coordinates.  Contributions on field-tangent edges
(``|b . n| <= 1e-14 |b|``) are skipped, so they are exactly zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .basis import BasisSpec, gauss_rule, tensor_basis_eval
from .fields import CoefficientField, MagneticField
from .geometry import ALIGNMENT_TOL, TWO_PI, Interface, Mesh, edge_point

#: Assembled entries below this times the matrix max are dropped.
DROP_TOL = 1e-15


class AssemblyError(RuntimeError):
    pass


def default_quad_points(spec: BasisSpec) -> int:
    """Default Gauss points per direction (and per interface sub-segment)."""
    return max(spec.p_xi, spec.p_eta) + 3


@dataclass(frozen=True)
class DofMap:
    """Cell-contiguous global numbering: dof = cell_id * n_loc + local."""

    n_cells: int
    n_loc: int

    @classmethod
    def create(cls, mesh: Mesh, spec: BasisSpec) -> "DofMap":
        return cls(n_cells=mesh.n_cells, n_loc=spec.n_loc)

    @property
    def total(self) -> int:
        return self.n_cells * self.n_loc

    def cell_slice(self, cell_id: int) -> slice:
        return slice(cell_id * self.n_loc, (cell_id + 1) * self.n_loc)


class BlockDiagMatrix:
    """Symmetric block diagonal matrix stored as (n_cells, n_loc, n_loc)."""

    def __init__(self, blocks: np.ndarray):
        blocks = np.asarray(blocks, dtype=float)
        if blocks.ndim != 3 or blocks.shape[1] != blocks.shape[2]:
            raise ValueError("blocks must have shape (n_cells, n_loc, n_loc)")
        self.blocks = blocks

    @property
    def n(self) -> int:
        return self.blocks.shape[0] * self.blocks.shape[1]

    @property
    def n_loc(self) -> int:
        return self.blocks.shape[1]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        xb = x.reshape(self.blocks.shape[0], self.n_loc)
        return np.einsum("cij,cj->ci", self.blocks, xb).reshape(x.shape)

    def matmat(self, x: np.ndarray) -> np.ndarray:
        """Apply to the columns of a (n, k) matrix."""
        k = x.shape[1]
        xb = x.reshape(self.blocks.shape[0], self.n_loc, k)
        return np.einsum("cij,cjk->cik", self.blocks, xb).reshape(x.shape)

    def to_sparse(self) -> sp.csr_matrix:
        return sp.block_diag([b for b in self.blocks], format="csr")

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        m = self.n_loc
        for c, blk in enumerate(self.blocks):
            out[c * m:(c + 1) * m, c * m:(c + 1) * m] = blk
        return out

    def map_blocks(self, fn) -> "BlockDiagMatrix":
        return BlockDiagMatrix(np.stack([fn(b) for b in self.blocks]))

    def inverse(self) -> "BlockDiagMatrix":
        try:
            return self.map_blocks(lambda b: _spd_inverse(b))
        except sla.LinAlgError as exc:
            raise AssemblyError(f"singular/indefinite diagonal block: {exc}") from exc

    def inv_sqrt(self) -> "BlockDiagMatrix":
        return self.map_blocks(lambda b: _spd_power(b, -0.5))

    def sqrt(self) -> "BlockDiagMatrix":
        return self.map_blocks(lambda b: _spd_power(b, 0.5))


def _spd_inverse(block: np.ndarray) -> np.ndarray:
    c, low = sla.cho_factor(block)
    inv = sla.cho_solve((c, low), np.eye(block.shape[0]))
    return (inv + inv.T) / 2.0


def _spd_power(block: np.ndarray, expo: float) -> np.ndarray:
    w, v = sla.eigh(block)
    if w[0] <= 0.0:
        raise AssemblyError(f"block not positive definite (min eig {w[0]:.3e})")
    out = (v * w**expo) @ v.T
    return (out + out.T) / 2.0


class SparseSymMatrix:
    """Sparse symmetric matrix storing only the lower triangle."""

    def __init__(self, lower: sp.csr_matrix):
        self.lower = lower.tocsr()
        self._full = None

    @classmethod
    def from_product(cls, full: sp.spmatrix, drop_tol: float = DROP_TOL
                     ) -> "SparseSymMatrix":
        """Symmetrize a (numerically almost symmetric) product and keep tril."""
        full = full.tocsr()
        sym = (full + full.T) * 0.5
        sym.data[np.abs(sym.data) < drop_tol * np.max(np.abs(sym.data), initial=0.0)] = 0.0
        sym.eliminate_zeros()
        return cls(sp.tril(sym, format="csr"))

    @classmethod
    def from_dense(cls, a: np.ndarray) -> "SparseSymMatrix":
        return cls.from_product(sp.csr_matrix(a))

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    def to_full(self) -> sp.csr_matrix:
        if self._full is None:
            diag = sp.diags(self.lower.diagonal())
            self._full = (self.lower + self.lower.T - diag).tocsr()
        return self._full

    def to_dense(self) -> np.ndarray:
        return self.to_full().toarray()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.to_full() @ x

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.lower.data), initial=0.0))

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.to_full()).sum(axis=1)))

    def nnz_percent(self) -> float:
        """Stored nonzeros as a percentage of the full lower triangle."""
        return 100.0 * self.lower.nnz / (self.n * (self.n + 1) / 2.0)

    def dump_coordinate(self, stream) -> None:
        """Write 'row col value' (1-based, lower triangle) to a text stream."""
        coo = self.lower.tocoo()
        order = np.lexsort((coo.col, coo.row))
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            stream.write(f"{r + 1} {c + 1} {v:.17g}\n")


@dataclass
class OperatorSet:
    """The assembled matrices of the mixed LDG system.

    ``a_phiv`` and ``b_phiv`` are the exact transposes of ``a_upsi`` and
    ``b_upsi`` and share their storage.
    """

    m_uv: BlockDiagMatrix
    a_upsi: sp.csr_matrix
    b_upsi: sp.csr_matrix
    b_phipsi: SparseSymMatrix
    m_phipsi: BlockDiagMatrix
    eta_s: float

    @property
    def a_phiv(self) -> sp.csr_matrix:
        return self.a_upsi.T.tocsr()

    @property
    def b_phiv(self) -> sp.csr_matrix:
        return self.b_upsi.T.tocsr()


# ---------------------------------------------------------------------------
# volume terms


def _volume_tables(mesh: Mesh, spec: BasisSpec, n_quad: int):
    """Quadrature nodes and basis tables shared by all (congruent) cells."""
    rule = gauss_rule(n_quad)
    xi, eta = np.meshgrid(rule.nodes, rule.nodes, indexing="ij")
    xi, eta = xi.ravel(), eta.ravel()
    wq = np.outer(rule.weights, rule.weights).ravel()
    vals, grads = tensor_basis_eval(spec, xi, eta)
    return xi, eta, wq, vals, grads


def assemble_mass_u(mesh: Mesh, spec: BasisSpec, n_quad: int | None = None
                    ) -> BlockDiagMatrix:
    """Unweighted cell mass blocks (diagonal for the Legendre basis)."""
    n_quad = n_quad or default_quad_points(spec)
    _, _, wq, vals, _ = _volume_tables(mesh, spec, n_quad)
    det = mesh.cells[0].jacobian_det
    block = np.einsum("q,qi,qj->ij", wq * det, vals, vals)
    block = (block + block.T) / 2.0
    return BlockDiagMatrix(np.broadcast_to(block, (mesh.n_cells,) + block.shape).copy())


def assemble_mass_phi(mesh: Mesh, spec: BasisSpec, alpha: CoefficientField,
                      n_quad: int | None = None) -> BlockDiagMatrix:
    """Cell mass blocks weighted by the coefficient alpha(x)."""
    if alpha.is_constant:
        base = assemble_mass_u(mesh, spec, n_quad)
        return BlockDiagMatrix(base.blocks * alpha.mean)
    n_quad = n_quad or default_quad_points(spec)
    xi, eta, wq, vals, _ = _volume_tables(mesh, spec, n_quad)
    blocks = np.empty((mesh.n_cells, spec.n_loc, spec.n_loc))
    for cid, cell in enumerate(mesh.cells):
        x, y = cell.map_point(xi, eta)
        w = wq * cell.jacobian_det * alpha.eval(x, y)
        blk = np.einsum("q,qi,qj->ij", w, vals, vals)
        blocks[cid] = (blk + blk.T) / 2.0
    return BlockDiagMatrix(blocks)


def assemble_gradient(mesh: Mesh, spec: BasisSpec, B: MagneticField,
                      n_quad: int | None = None) -> sp.csr_matrix:
    """Volume blocks G[i, j] = integral of phi_j * (B . grad phi_i).

    Row index carries the derivative; the same storage serves the
    transposed coupling.
    """
    n_quad = n_quad or default_quad_points(spec)
    xi, eta, wq, vals, grads = _volume_tables(mesh, spec, n_quad)
    # b expressed in reference-gradient components: (J^{-1} b) . grad_ref
    blocks = []
    for cell in mesh.cells:
        c = np.linalg.solve(cell.jacobian, B.b.as_array())
        b_dot_grad = grads @ c  # (nq, n_loc)
        x, y = cell.map_point(xi, eta)
        w = wq * cell.jacobian_det * B.beta.eval(x, y)
        blocks.append(np.einsum("q,qi,qj->ij", w, b_dot_grad, vals))
    return sp.block_diag(blocks, format="csr")


# ---------------------------------------------------------------------------
# interface terms


def face_quadrature(mesh: Mesh, spec: BasisSpec, itf: Interface, n_quad: int):
    """Traces and weights on one interface segment.

    Returns ``(w, x, y, vals_own, vals_nbr)`` where ``w`` includes the
    physical surface measure ``h_F/2`` and the traces are evaluated at
    matching points of both reference edges.  Raises if the two sides do
    not map onto the same physical segment.
    """
    rule = gauss_rule(n_quad)
    own = mesh.cell(itf.owner)
    nbr = mesh.cell(itf.neighbor)
    a, b = itf.owner_range
    c, d = itf.neighbor_range
    t_own = a + (b - a) * (rule.nodes + 1.0) / 2.0
    t_nbr = c + (d - c) * (rule.nodes + 1.0) / 2.0
    xo, yo = own.map_point(*edge_point(itf.owner_edge, t_own))
    xn, yn = nbr.map_point(*edge_point(itf.neighbor_edge, t_nbr))
    dxw = np.remainder(xo - xn, TWO_PI)
    dyw = np.remainder(yo - yn, TWO_PI)
    if np.any(np.minimum(dxw, TWO_PI - dxw) > 1e-9) or \
            np.any(np.minimum(dyw, TWO_PI - dyw) > 1e-9):
        raise AssemblyError(f"owner/neighbor segment mapping mismatch on {itf}")
    vals_own, _ = tensor_basis_eval(spec, *edge_point(itf.owner_edge, t_own))
    vals_nbr, _ = tensor_basis_eval(spec, *edge_point(itf.neighbor_edge, t_nbr))
    w = rule.weights * (itf.h_F / 2.0)
    return w, xo, yo, vals_own, vals_nbr


def _b_dot_normal(B: MagneticField, itf: Interface) -> float:
    """b . n of an interface, snapped to exactly 0 on field-tangent edges."""
    bn = B.b.b1 * itf.normal[0] + B.b.b2 * itf.normal[1]
    if abs(bn) <= ALIGNMENT_TOL * B.b.norm:
        return 0.0
    return bn


class _CooBuilder:
    def __init__(self, n: int):
        self.n = n
        self.rows: list[np.ndarray] = []
        self.cols: list[np.ndarray] = []
        self.data: list[np.ndarray] = []

    def add_block(self, row0: int, col0: int, block: np.ndarray):
        m, k = block.shape
        r = np.repeat(np.arange(row0, row0 + m), k)
        c = np.tile(np.arange(col0, col0 + k), m)
        self.rows.append(r)
        self.cols.append(c)
        self.data.append(block.ravel())

    def tocsr(self) -> sp.csr_matrix:
        if not self.data:
            return sp.csr_matrix((self.n, self.n))
        mat = sp.coo_matrix(
            (np.concatenate(self.data),
             (np.concatenate(self.rows), np.concatenate(self.cols))),
            shape=(self.n, self.n)).tocsr()
        mat.sum_duplicates()
        return mat


def assemble_face_terms(mesh: Mesh, spec: BasisSpec, B: MagneticField,
                        n_quad: int | None = None) -> sp.csr_matrix:
    """Interface blocks F[i, j] = sum over faces of {phi_j} * (B . [phi_i])."""
    n_quad = n_quad or default_quad_points(spec)
    dof = DofMap.create(mesh, spec)
    builder = _CooBuilder(dof.total)
    for itf in mesh.interfaces:
        bn = _b_dot_normal(B, itf)
        if bn == 0.0:
            continue
        w, x, y, vo, vn = face_quadrature(mesh, spec, itf, n_quad)
        beta = B.beta.eval(x, y)
        jump_w = w * bn * beta  # weight for the jump factor rows
        o0 = mesh.cell_id(itf.owner) * spec.n_loc
        n0 = mesh.cell_id(itf.neighbor) * spec.n_loc
        # jump rows: +owner trace, -neighbor trace; average cols: half each
        builder.add_block(o0, o0, np.einsum("q,qi,qj->ij", jump_w * 0.5, vo, vo))
        builder.add_block(o0, n0, np.einsum("q,qi,qj->ij", jump_w * 0.5, vo, vn))
        builder.add_block(n0, o0, np.einsum("q,qi,qj->ij", -jump_w * 0.5, vn, vo))
        builder.add_block(n0, n0, np.einsum("q,qi,qj->ij", -jump_w * 0.5, vn, vn))
    return builder.tocsr()


def assemble_penalty(mesh: Mesh, spec: BasisSpec, B: MagneticField,
                     eta_s: float, n_quad: int | None = None) -> SparseSymMatrix:
    """Penalty (eta_S / h_F) * (B . [phi]) (B . [psi]), symmetric PSD."""
    if eta_s < 0.0:
        raise ValueError("penalty parameter must be >= 0")
    n_quad = n_quad or default_quad_points(spec)
    dof = DofMap.create(mesh, spec)
    builder = _CooBuilder(dof.total)
    if eta_s > 0.0:
        for itf in mesh.interfaces:
            bn = _b_dot_normal(B, itf)
            if bn == 0.0:
                continue
            w, x, y, vo, vn = face_quadrature(mesh, spec, itf, n_quad)
            beta = B.beta.eval(x, y)
            w_pen = w * (eta_s / itf.h_F) * (bn * beta) ** 2
            o0 = mesh.cell_id(itf.owner) * spec.n_loc
            n0 = mesh.cell_id(itf.neighbor) * spec.n_loc
            builder.add_block(o0, o0, np.einsum("q,qi,qj->ij", w_pen, vo, vo))
            builder.add_block(o0, n0, np.einsum("q,qi,qj->ij", -w_pen, vo, vn))
            builder.add_block(n0, o0, np.einsum("q,qi,qj->ij", -w_pen, vn, vo))
            builder.add_block(n0, n0, np.einsum("q,qi,qj->ij", w_pen, vn, vn))
    return SparseSymMatrix.from_product(builder.tocsr())


# ---------------------------------------------------------------------------
# assembled system


def assemble_operator_set(mesh: Mesh, spec: BasisSpec, alpha: CoefficientField,
                          B: MagneticField, eta_s: float,
                          n_quad: int | None = None) -> OperatorSet:
    return OperatorSet(
        m_uv=assemble_mass_u(mesh, spec, n_quad),
        a_upsi=assemble_gradient(mesh, spec, B, n_quad),
        b_upsi=assemble_face_terms(mesh, spec, B, n_quad),
        b_phipsi=assemble_penalty(mesh, spec, B, eta_s, n_quad),
        m_phipsi=assemble_mass_phi(mesh, spec, alpha, n_quad),
        eta_s=eta_s)


def build_reduced(ops: OperatorSet) -> tuple[SparseSymMatrix, BlockDiagMatrix]:
    """Form A = (A_UPsi - B_UPsi) M_UV^{-1} (..)^T + B_PhiPsi and M = M_PhiPsi."""
    c = (ops.a_upsi - ops.b_upsi).tocsr()
    m_inv = ops.m_uv.inverse().to_sparse()
    a_full = (c @ m_inv) @ c.T + ops.b_phipsi.to_full()
    return SparseSymMatrix.from_product(a_full), ops.m_phipsi


def standard_form(a: SparseSymMatrix, m: BlockDiagMatrix) -> SparseSymMatrix:
    """Similarity-free reduction M^{-1/2} A M^{-1/2}; eigenvalues preserved."""
    r = m.inv_sqrt().to_sparse()
    return SparseSymMatrix.from_product((r @ a.to_full()) @ r)
