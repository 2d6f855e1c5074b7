"""Nested dyadic meshes on (0,1)^d and exact P1 finite element assembly.

The domain is the unit interval or unit square with zero Neumann boundary
conditions, so every vertex carries a degree of freedom.  All meshes at
level ``L`` have cell size ``2**-L``; vertices of level ``L`` are a subset
of those at level ``L+1``, which makes inter-level transfer index
computable.  Element integrals for P1 hat functions are polynomial and are
assembled from closed forms, without numerical quadrature.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cholesky_banded
from scipy.sparse.linalg import splu

from .exceptions import CapacityError, DomainError, FactorizationError, NumericalError

# Memory guards: finest admissible level per dimension.
MAX_LEVEL = {1: 14, 2: 8}

#: Relative residual above which a direct solve is considered failed.
SOLVER_TOL = 1e-10


@dataclass(frozen=True)
class DyadicMesh:
    """Uniform simplicial mesh of (0,1)^dim at dyadic refinement level."""

    dim: int
    level: int
    cell_size: float
    vertices: np.ndarray  # (n_vertices, dim), lexicographic order
    cells: np.ndarray  # (n_cells, dim + 1) vertex indices
    h: float  # maximal element diameter

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    def summary(self) -> dict:
        return {
            "dim": self.dim,
            "level": self.level,
            "cell_size": self.cell_size,
            "n_vertices": self.n_vertices,
            "n_cells": self.n_cells,
            "h": self.h,
        }


def build_mesh(dim: int, level: int) -> DyadicMesh:
    """Build the level-``level`` dyadic mesh of (0,1)^dim.

    For dim 2 each 2^-L square is split along the diagonal from its
    lower-left to its upper-right corner, giving two right isoceles
    triangles; the mesh parameter h is the hypotenuse length.
    """
    if dim not in (1, 2):
        raise DomainError(f"dim must be 1 or 2, got {dim}")
    if level < 0:
        raise DomainError(f"level must be >= 0, got {level}")
    if level > MAX_LEVEL[dim]:
        raise CapacityError(
            f"level {level} exceeds guard {MAX_LEVEL[dim]} for dim {dim}"
        )

    n = 2**level
    cell = 1.0 / n
    xs = np.linspace(0.0, 1.0, n + 1)

    if dim == 1:
        vertices = xs[:, None].copy()
        cells = np.column_stack([np.arange(n), np.arange(1, n + 1)])
        h = cell
    else:
        # index(ix, iy) = ix * (n + 1) + iy, lexicographic in (x, y)
        ix, iy = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
        vertices = np.column_stack([xs[ix.ravel()], xs[iy.ravel()]])
        sq_i, sq_j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        a = (sq_i * (n + 1) + sq_j).ravel()  # (i, j)
        b = a + (n + 1)  # (i+1, j)
        c = b + 1  # (i+1, j+1)
        d = a + 1  # (i, j+1)
        lower = np.column_stack([a, b, c])
        upper = np.column_stack([a, c, d])
        cells = np.vstack([lower, upper])
        h = np.sqrt(2.0) * cell

    return DyadicMesh(
        dim=dim, level=level, cell_size=cell, vertices=vertices, cells=cells, h=h
    )


def _assemble_1d(mesh: DyadicMesh) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    ell = mesh.cell_size
    nv = mesh.n_vertices
    c = mesh.cells
    # local matrices: M_e = (ell/6)[[2,1],[1,2]], T_e = (1/ell)[[1,-1],[-1,1]]
    me = (ell / 6.0) * np.array([[2.0, 1.0], [1.0, 2.0]])
    te = (1.0 / ell) * np.array([[1.0, -1.0], [-1.0, 1.0]])
    rows = np.repeat(c, 2, axis=1).ravel()
    cols = np.tile(c, (1, 2)).ravel()
    m_data = np.tile(me.ravel(), mesh.n_cells)
    t_data = np.tile(te.ravel(), mesh.n_cells)
    mass = sp.coo_matrix((m_data, (rows, cols)), shape=(nv, nv)).tocsr()
    stiff = sp.coo_matrix((t_data, (rows, cols)), shape=(nv, nv)).tocsr()
    return mass, stiff


def _assemble_2d(mesh: DyadicMesh) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    nv = mesh.n_vertices
    c = mesh.cells
    p = mesh.vertices[c]  # (n_cells, 3, 2)
    # edge opposite local vertex k
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    area = 0.5 * (
        (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
        - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
    )
    # T_e[i, j] = (e_i . e_j) / (4 A);  M_e = (A / 12)(1 + I)
    te = np.einsum("cid,cjd->cij", e, e) / (4.0 * area)[:, None, None]
    m_local = (np.ones((3, 3)) + np.eye(3)) / 12.0
    me = area[:, None, None] * m_local[None]
    rows = np.repeat(c, 3, axis=1).ravel()
    cols = np.tile(c, (1, 3)).ravel()
    mass = sp.coo_matrix((me.ravel(), (rows, cols)), shape=(nv, nv)).tocsr()
    stiff = sp.coo_matrix((te.ravel(), (rows, cols)), shape=(nv, nv)).tocsr()
    return mass, stiff


def _lower_banded(m: sp.spmatrix) -> np.ndarray:
    """Lower triangle of a symmetric banded matrix in LAPACK band storage."""
    coo = m.tocoo()
    n = coo.shape[0]
    keep = coo.row >= coo.col
    r, c, v = coo.row[keep], coo.col[keep], coo.data[keep]
    bw = int((r - c).max()) if len(r) else 0
    ab = np.zeros((bw + 1, n))
    ab[r - c, c] = v
    return ab


def mass_factor(mass: sp.spmatrix) -> sp.csr_matrix:
    """Sparse lower-triangular Cholesky factor L with L @ L.T == mass.

    Any factor of the mass matrix yields the same Gaussian law for L @ rho
    with rho standard normal; the Cholesky factor is the cheapest choice on
    these banded matrices.
    """
    ab = _lower_banded(mass)
    try:
        cb = cholesky_banded(ab, lower=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - message detail
        raise FactorizationError(f"mass matrix is not positive definite: {exc}")
    except Exception as exc:
        raise FactorizationError(f"banded Cholesky failed: {exc}")
    n = ab.shape[1]
    diags = [cb[r, : n - r] for r in range(ab.shape[0])]
    offsets = [-r for r in range(ab.shape[0])]
    factor = sp.diags(diags, offsets, shape=(n, n), format="csr")
    factor.eliminate_zeros()
    return factor


class FemOperators:
    """Assembled P1 matrices and factorizations for one mesh level.

    Holds the mass matrix M, the stiffness matrix T (zero Neumann, so
    constants lie in its kernel), the second-operator matrix K = M + T,
    and the lower Cholesky factor of M.  System factorizations of
    (M + dt T) and shifted-pencil solvers are cached; the object is
    immutable apart from those caches and safe to share across threads.
    """

    def __init__(self, mesh: DyadicMesh):
        self.mesh = mesh
        if mesh.dim == 1:
            self.mass, self.stiffness = _assemble_1d(mesh)
        else:
            self.mass, self.stiffness = _assemble_2d(mesh)
        # a2(u, v) = (u, v) + (grad u, grad v) in the implemented case
        self.a2_matrix = (self.mass + self.stiffness).tocsr()
        self.mass_chol = mass_factor(self.mass)
        self._sys_cache: dict[float, object] = {}
        self._frac_cache: dict = {}

    @property
    def n_dof(self) -> int:
        return self.mesh.n_vertices

    def sys_factor(self, dt: float):
        """Cached sparse LU factorization of (M + dt * T)."""
        lu = self._sys_cache.get(dt)
        if lu is None:
            system = (self.mass + dt * self.stiffness).tocsc()
            lu = splu(system)
            self._sys_cache[dt] = (lu, system)
        else:
            lu, system = lu
        return lu, system

    def system_solve(self, dt: float, rhs: np.ndarray) -> np.ndarray:
        """Solve (M + dt T) x = rhs with a relative residual check."""
        lu, system = self.sys_factor(dt)
        x = lu.solve(rhs)
        rhs_norm = np.linalg.norm(rhs)
        if rhs_norm > 0.0:
            rel = np.linalg.norm(system @ x - rhs) / rhs_norm
            if not rel <= SOLVER_TOL:
                raise NumericalError(
                    f"backward Euler solve residual {rel:.3e} exceeds "
                    f"{SOLVER_TOL:.0e} (n={self.n_dof}, dt={dt})"
                )
        return x

    def m_norm(self, v: np.ndarray) -> float:
        """Mass-weighted norm, the discrete L2 norm of the P1 function."""
        return float(np.sqrt(v @ (self.mass @ v)))


def assemble(mesh: DyadicMesh) -> FemOperators:
    """Assemble all finite element operators for ``mesh``."""
    return FemOperators(mesh)


def restriction_matrix(coarse: DyadicMesh, fine: DyadicMesh) -> sp.csr_matrix:
    """Matrix A with A[i, j] = (coarse hat function i)(fine vertex j).

    Transfers projected noise from the fine to the coarse level; its
    transpose prolongs coarse nodal values.  Columns sum to one because the
    hat functions partition unity.
    """
    if coarse.dim != fine.dim:
        raise DomainError("meshes differ in dimension")
    if coarse.level > fine.level:
        raise DomainError(
            f"coarse level {coarse.level} exceeds fine level {fine.level}"
        )
    n_c = 2**coarse.level
    inv_hc = float(n_c)
    pts = fine.vertices

    if coarse.dim == 1:
        x = pts[:, 0]
        cell = np.minimum((x * inv_hc).astype(int), n_c - 1)
        s = x * inv_hc - cell
        j = np.arange(fine.n_vertices)
        rows = np.concatenate([cell, cell + 1])
        cols = np.concatenate([j, j])
        vals = np.concatenate([1.0 - s, s])
    else:
        stride = n_c + 1
        x, y = pts[:, 0], pts[:, 1]
        cx = np.minimum((x * inv_hc).astype(int), n_c - 1)
        cy = np.minimum((y * inv_hc).astype(int), n_c - 1)
        s = x * inv_hc - cx
        t = y * inv_hc - cy
        base = cx * stride + cy
        j = np.arange(fine.n_vertices)
        low = s >= t  # lower-right triangle of the square, else upper-left
        rows = np.concatenate(
            [
                base,
                np.where(low, base + stride, base + stride + 1),
                np.where(low, base + stride + 1, base + 1),
            ]
        )
        cols = np.concatenate([j, j, j])
        vals = np.concatenate(
            [
                np.where(low, 1.0 - s, 1.0 - t),
                np.where(low, s - t, s),
                np.where(low, t, t - s),
            ]
        )
    a = sp.coo_matrix(
        (vals, (rows, cols)), shape=(coarse.n_vertices, fine.n_vertices)
    ).tocsr()
    a.eliminate_zeros()
    return a


def export_matrix_triplets(matrix: sp.spmatrix, path: str) -> None:
    """Write a matrix as one ``row col value`` triplet per line."""
    coo = matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8") as fh:
        for i in order:
            fh.write(f"{coo.row[i]} {coo.col[i]} {coo.data[i]:.17g}\n")


def export_mesh_summary(mesh: DyadicMesh, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mesh.summary(), fh, indent=2)
        fh.write("\n")
