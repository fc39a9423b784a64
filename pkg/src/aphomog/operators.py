"""Conservative finite-difference operators -div(A grad u) + kappa u.

The scheme is flux-form and second order: per axis ``i`` the normal flux
uses the coefficient block ``a_ii`` evaluated exactly at face centers and
the exact normal difference; cross blocks ``a_ij`` (i != j) are evaluated
at nodes and paired through centered differences.  With this split the
assembled matrix of the adjoint field is exactly the transpose of the
assembled matrix, and symmetric fields give exactly symmetric matrices.

The discrete divergence of face data is the negative transpose of the
face-difference operator, so summation by parts holds exactly under
periodic boundary conditions.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NonConverged
from .grids import PERIODIC, GridFunction


def _axis_face_diff(cells, h, bc):
    n = int(cells)
    if bc == PERIODIC:
        rows = np.arange(n)
        data = np.concatenate([-np.ones(n), np.ones(n)])
        idx_rows = np.concatenate([rows, rows])
        idx_cols = np.concatenate([rows, (rows + 1) % n])
        return sp.csr_matrix((data / h, (idx_rows, idx_cols)), shape=(n, n))
    rows = np.arange(n)
    data = np.concatenate([-np.ones(n), np.ones(n)])
    idx_rows = np.concatenate([rows, rows])
    idx_cols = np.concatenate([rows, rows + 1])
    return sp.csr_matrix((data / h, (idx_rows, idx_cols)), shape=(n, n + 1))


def _axis_centered(cells, h, bc):
    if bc == PERIODIC:
        n = int(cells)
        rows = np.arange(n)
        data = np.concatenate([np.ones(n), -np.ones(n)]) / (2.0 * h)
        cols = np.concatenate([(rows + 1) % n, (rows - 1) % n])
        return sp.csr_matrix((data, (np.concatenate([rows, rows]), cols)), shape=(n, n))
    n = int(cells) + 1
    rows = np.arange(1, n - 1)
    data = np.concatenate([np.ones(n - 2), -np.ones(n - 2)]) / (2.0 * h)
    cols = np.concatenate([rows + 1, rows - 1])
    return sp.csr_matrix((data, (np.concatenate([rows, rows]), cols)), shape=(n, n))


def _kron_chain(grid, ax, mat):
    factors = []
    for a in range(grid.d):
        if a == ax:
            factors.append(mat)
        else:
            factors.append(sp.identity(grid.node_counts[a], format="csr"))
    return functools.reduce(lambda x, y: sp.kron(x, y, format="csr"), factors)


def face_diff_matrix(grid, ax):
    """Sparse normal-difference operator onto faces orthogonal to ``ax``."""
    return _kron_chain(grid, ax, _axis_face_diff(grid.cells[ax], grid.h[ax], grid.bc))


def centered_diff_matrix(grid, ax):
    """Sparse centered node difference along ``ax`` (zero rows on Dirichlet edges)."""
    return _kron_chain(grid, ax, _axis_centered(grid.cells[ax], grid.h[ax], grid.bc))


@dataclass
class SolveInfo:
    iterations: int
    residual: float
    restarts: int
    method: str


class DiscreteOperator:
    """Assembled stencil for -div(A grad u) + kappa u on a BoxGrid."""

    def __init__(self, grid, field, kappa, matrix, symmetric):
        self.grid = grid
        self.field = field
        self.kappa = float(kappa)
        self.m = field.m
        self.matrix = matrix.tocsr()
        self.symmetric = bool(symmetric)
        self._interior = None
        self._matrix_int = None

    @property
    def interior_indices(self):
        """Flat unknown indices (component-major) kept in a Dirichlet solve."""
        if self._interior is None:
            if self.grid.bc == PERIODIC:
                self._interior = np.arange(self.m * self.grid.node_total)
            else:
                node_mask = self.grid.interior_mask().ravel()
                self._interior = np.flatnonzero(np.tile(node_mask, self.m))
        return self._interior

    @property
    def matrix_interior(self):
        if self._matrix_int is None:
            if self.grid.bc == PERIODIC:
                self._matrix_int = self.matrix
            else:
                idx = self.interior_indices
                self._matrix_int = self.matrix[idx][:, idx].tocsr()
        return self._matrix_int

    def apply(self, u):
        """Apply to a GridFunction; rows at Dirichlet boundary nodes are not meaningful."""
        flat = u.values.reshape(-1)
        out = self.matrix @ flat
        return GridFunction(self.grid, out.reshape(u.values.shape))


def assemble(field, grid, kappa):
    """Assemble the conservative second-order stencil.

    Requires an ellipticity certificate on the field; refuses to assemble
    without one.  ``kappa`` must be nonnegative and, with periodic boundary
    conditions and kappa = 0, the constant kernel is handled by the solver
    through mean projection.
    """
    if field.ellipticity is None:
        raise ValueError("field carries no ellipticity certificate; "
                         "run certify_ellipticity(field) first")
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    if field.d != grid.d:
        raise ValueError("field and grid dimensions differ")
    d, m = grid.d, field.m
    n_nodes = grid.node_total
    blocks = [[[] for _ in range(m)] for _ in range(m)]

    for i in range(d):
        D_i = face_diff_matrix(grid, i)
        pts, _ = grid.face_points(i)
        coeffs = field.evaluate(pts)
        for al in range(m):
            for be in range(m):
                vals = coeffs[:, i, i, al, be]
                if not np.any(vals):
                    continue
                blocks[al][be].append(D_i.T @ sp.diags(vals) @ D_i)
        del coeffs

    if d > 1:
        node_pts = grid.node_points()
        node_coeffs = field.evaluate(node_pts)
        mask = grid.interior_mask().ravel().astype(float)
        G = [centered_diff_matrix(grid, ax) for ax in range(d)]
        for i in range(d):
            for j in range(d):
                if i == j:
                    continue
                for al in range(m):
                    for be in range(m):
                        vals = node_coeffs[:, i, j, al, be] * mask
                        if not np.any(vals):
                            continue
                        blocks[al][be].append(G[i].T @ sp.diags(vals) @ G[j])
        del node_coeffs

    zero = sp.csr_matrix((n_nodes, n_nodes))
    grid_blocks = [[functools.reduce(lambda x, y: x + y, blocks[al][be], zero)
                    for be in range(m)] for al in range(m)]
    L = sp.bmat(grid_blocks, format="csr")
    if kappa:
        L = L + kappa * sp.identity(m * n_nodes, format="csr")
    return DiscreteOperator(grid, field, kappa, L, symmetric=field.symmetric)


def divergence_rhs(g_faces, grid):
    """Discrete divergence of per-axis face data, adjoint to the face gradient.

    ``g_faces[ax]`` holds (m, *face_shape_ax) samples at the centers of the
    faces orthogonal to ``ax``.  Defined as -sum_ax D_ax^T g_ax so that
    sum div(g).v = -sum g.grad v exactly under periodic boundary conditions.
    """
    m = g_faces[0].shape[0]
    out = np.zeros((m,) + grid.node_counts)
    for ax in range(grid.d):
        D = face_diff_matrix(grid, ax)
        flat = g_faces[ax].reshape(m, -1)
        out -= (D.T @ flat.T).T.reshape((m,) + grid.node_counts)
    return GridFunction(grid, out)


def _jacobi_preconditioner(mat):
    diag = mat.diagonal()
    diag = np.where(np.abs(diag) > 0, diag, 1.0)
    inv = 1.0 / diag
    return spla.LinearOperator(mat.shape, matvec=lambda x: inv * x)


def _ilu_preconditioner(mat):
    ilu = spla.spilu(mat.tocsc(), drop_tol=1e-8, fill_factor=20)
    return spla.LinearOperator(mat.shape, matvec=ilu.solve)


def solve(op, rhs, tol=1e-10, max_iters=None, precond="jacobi", x0=None):
    """Krylov solve to a relative residual ||L u - b|| / ||b|| <= tol.

    Conjugate gradients for symmetric operators, BiCGSTAB otherwise; the
    true residual is re-checked after each Krylov run and the iteration
    restarts from the current iterate if the recursion drifted.  Raises
    :class:`NonConverged` when the budget is exhausted.  A zero right-hand
    side returns the zero function immediately.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    b_full = rhs.values.reshape(-1)
    idx = op.interior_indices
    b = b_full[idx]
    shape = rhs.values.shape

    project_mean = op.kappa == 0.0 and op.grid.bc == PERIODIC
    n_nodes = op.grid.node_total

    def _project(vec):
        v = vec.reshape(op.m, n_nodes)
        return (v - v.mean(axis=1, keepdims=True)).reshape(-1)

    if project_mean:
        b = _project(b)

    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        u = GridFunction(op.grid, np.zeros(shape))
        u.solve_info = SolveInfo(0, 0.0, 0, "trivial")
        return u

    mat = op.matrix_interior
    if max_iters is None:
        max_iters = max(1000, 40 * int(np.sqrt(mat.shape[0])) + 2000)
    if precond == "jacobi":
        M = _jacobi_preconditioner(mat)
    elif precond == "ilu":
        M = _ilu_preconditioner(mat)
    elif precond is None:
        M = None
    else:
        raise ValueError(f"unknown preconditioner {precond!r}")

    method = spla.cg if op.symmetric else spla.bicgstab
    x = np.zeros_like(b) if x0 is None else x0.values.reshape(-1)[idx].copy()
    total_iters = 0
    restarts = 0
    residual = np.inf
    while total_iters < max_iters:
        budget = max_iters - total_iters
        count = [0]

        def _cb(_xk):
            count[0] += 1

        x, _ = method(mat, b, x0=x, rtol=tol * 0.5, atol=0.0, maxiter=budget,
                      M=M, callback=_cb)
        total_iters += max(count[0], 1)
        if project_mean:
            x = _project(x)
        residual = float(np.linalg.norm(mat @ x - b)) / b_norm
        if residual <= tol:
            break
        restarts += 1
        if restarts > 4:
            break
    if residual > tol:
        raise NonConverged(residual, total_iters)

    full = np.zeros(op.m * n_nodes)
    full[idx] = x
    u = GridFunction(op.grid, full.reshape(shape))
    u.solve_info = SolveInfo(total_iters, residual, restarts,
                             "cg" if op.symmetric else "bicgstab")
    return u
