"""Cartesian finite-volume infrastructure shared by the parabolic and elliptic solvers.

Cell-centered grids on [-L, L]^2, harmonic face averaging of the two-phase
conductivity, symmetric sparse assembly of c*h^2*I - div(sigma_face grad .)
with Neumann or homogeneous-Dirichlet outer closure, and a Jacobi-
preconditioned conjugate-gradient solve.  Harmonic averaging is what keeps
the discrete normal flux continuous across the phase interface; phases are
assigned by the sign of the signed distance at cell centers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import NoConvergence, SampleOutsideGrid, SingularOperator
from .geometry import Shape

NEUMANN = "neumann"
DIRICHLET_ZERO = "dirichlet_zero"


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid with n x n cells on the box [-L, L]^2."""

    L: float
    n: int

    def __post_init__(self):
        if self.n < 16:
            raise ValueError("need at least 16 cells per axis")
        if self.L <= 0:
            raise ValueError("box half-width must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def n_cells(self) -> int:
        return self.n * self.n

    def axis_centers(self) -> np.ndarray:
        return -self.L + (np.arange(self.n) + 0.5) * self.h

    def cell_centers(self) -> np.ndarray:
        """(n*n, 2) array of centers, row-major in (ix, iy)."""
        ax = self.axis_centers()
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([X.ravel(), Y.ravel()], axis=1)

    def contains_shape(self, shape: Shape) -> bool:
        return shape.bounding_radius < self.L


@dataclass
class ConductivityField:
    """Per-cell conductivity and harmonic face means on a grid."""

    grid: Grid
    sigma_plus: float
    sigma_minus: float
    cell_sigma: np.ndarray  # (n, n)
    inside: np.ndarray  # (n, n) bool, cell center inside the inclusion
    face_sigma_x: np.ndarray  # (n-1, n) faces between ix and ix+1
    face_sigma_y: np.ndarray  # (n, n-1)


def face_conductivities(grid: Grid, shape: Shape, sigma_plus: float, sigma_minus: float) -> ConductivityField:
    """Assign phases by cell-center sign and build harmonic face means."""
    if sigma_plus <= 0 or sigma_minus <= 0:
        raise ValueError("conductivities must be positive")
    if sigma_plus == sigma_minus:
        import warnings

        warnings.warn("sigma_plus == sigma_minus: problem degenerates to one phase", stacklevel=2)
    sd = shape.signed_distance(grid.cell_centers()).reshape(grid.n, grid.n)
    inside = sd < 0.0
    cell = np.where(inside, sigma_plus, sigma_minus)
    harm = lambda a, b: 2.0 * a * b / (a + b)
    return ConductivityField(
        grid=grid,
        sigma_plus=float(sigma_plus),
        sigma_minus=float(sigma_minus),
        cell_sigma=cell,
        inside=inside,
        face_sigma_x=harm(cell[:-1, :], cell[1:, :]),
        face_sigma_y=harm(cell[:, :-1], cell[:, 1:]),
    )


@dataclass
class Operator:
    """Symmetric sparse operator c*h^2*I - div(sigma_face grad .), FV-scaled.

    Row i integrates the equation over cell i, so interior row sums equal
    c*h^2 under Neumann closure and the matrix is an M-matrix for c >= 0.
    """

    matrix: sp.csr_matrix
    grid: Grid
    c: float
    outer_bc: str

    @property
    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()


def assemble_operator(grid: Grid, field: ConductivityField, c: float, outer_bc: str) -> Operator:
    if c < 0:
        raise ValueError("reaction coefficient must be nonnegative")
    if outer_bc not in (NEUMANN, DIRICHLET_ZERO):
        raise ValueError(f"unknown outer boundary condition {outer_bc!r}")
    n = grid.n
    idx = np.arange(grid.n_cells).reshape(n, n)

    rows, cols, vals = [], [], []

    def add(r, cc, v):
        rows.append(r.ravel())
        cols.append(cc.ravel())
        vals.append(v.ravel())

    # interior faces; h^(N-2) = 1 in 2D, kept explicit for clarity
    scale = grid.h ** (2 - 2)
    fx = field.face_sigma_x * scale
    fy = field.face_sigma_y * scale
    a, b = idx[:-1, :], idx[1:, :]
    add(a, b, -fx)
    add(b, a, -fx)
    add(a, a, fx)
    add(b, b, fx)
    a, b = idx[:, :-1], idx[:, 1:]
    add(a, b, -fy)
    add(b, a, -fy)
    add(a, a, fy)
    add(b, b, fy)

    diag_extra = np.full((n, n), c * grid.h**2)
    if outer_bc == DIRICHLET_ZERO:
        # ghost value 0 at the box faces, half-cell distance
        diag_extra[0, :] += 2.0 * field.cell_sigma[0, :] * scale
        diag_extra[-1, :] += 2.0 * field.cell_sigma[-1, :] * scale
        diag_extra[:, 0] += 2.0 * field.cell_sigma[:, 0] * scale
        diag_extra[:, -1] += 2.0 * field.cell_sigma[:, -1] * scale
    add(idx, idx, diag_extra)

    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(grid.n_cells, grid.n_cells),
    ).tocsr()
    return Operator(matrix=mat, grid=grid, c=float(c), outer_bc=outer_bc)


@dataclass
class SolveResult:
    x: np.ndarray
    converged: bool
    iterations: int
    residual_norm: float
    rel_residual: float


def solve_linear(
    op: Operator,
    rhs: np.ndarray,
    rel_tol: float = 1e-10,
    x0: np.ndarray | None = None,
    max_iter: int | None = None,
) -> SolveResult:
    """Jacobi-preconditioned CG; the reported residual is recomputed from the
    returned iterate, not the recurrence."""
    b = np.asarray(rhs, dtype=float).ravel()
    A = op.matrix
    nb = float(np.linalg.norm(b))
    if op.c == 0.0 and op.outer_bc == NEUMANN:
        mean_part = abs(float(b.sum())) / max(np.sqrt(b.size) * max(nb, 1e-300), 1e-300)
        if mean_part > 1e-10:
            raise SingularOperator("c=0 with pure Neumann closure needs a mean-free right-hand side")
    if nb == 0.0:
        return SolveResult(np.zeros_like(b), True, 0, 0.0, 0.0)
    if max_iter is None:
        max_iter = max(2000, 40 * op.grid.n)

    inv_diag = 1.0 / A.diagonal()
    x = np.zeros_like(b) if x0 is None else np.asarray(x0, dtype=float).ravel().copy()
    target = rel_tol * nb
    total_it = 0
    true_res = float(np.linalg.norm(b - A @ x))
    # restart loop guards against recurrence/true residual drift
    for _attempt in range(3):
        if true_res <= target or total_it >= max_iter:
            break
        r = b - A @ x
        z = inv_diag * r
        p = z.copy()
        rz = float(r @ z)
        while total_it < max_iter:
            Ap = A @ p
            alpha = rz / float(p @ Ap)
            x += alpha * p
            r -= alpha * Ap
            total_it += 1
            if np.linalg.norm(r) <= 0.5 * target:
                break
            z = inv_diag * r
            rz_new = float(r @ z)
            p = z + (rz_new / rz) * p
            rz = rz_new
        true_res = float(np.linalg.norm(b - A @ x))
    return SolveResult(x, true_res <= target, total_it, true_res, true_res / nb)


def require_converged(result: SolveResult, context: str) -> np.ndarray:
    if not result.converged:
        raise NoConvergence(
            f"{context}: linear solve stalled at relative residual {result.rel_residual:.3e} "
            f"after {result.iterations} iterations",
            best_iterate=result.x,
            residual=result.residual_norm,
            iterations=result.iterations,
        )
    return result.x


def bilinear_interpolate(field: np.ndarray, grid: Grid, pts: np.ndarray) -> np.ndarray:
    """Bilinear interpolation of a cell-centered field at arbitrary points.

    Points must lie inside the box; within the half-cell margin next to the
    box faces the interpolation degrades to constant extrapolation.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if np.any(np.abs(pts) > grid.L + 1e-12):
        raise SampleOutsideGrid("interpolation point outside the grid box")
    f = (pts + grid.L) / grid.h - 0.5
    f = np.clip(f, 0.0, grid.n - 1.0 - 1e-12)
    i0 = np.floor(f).astype(int)
    i0 = np.minimum(i0, grid.n - 2)
    t = f - i0
    fx, fy = t[:, 0], t[:, 1]
    ix, iy = i0[:, 0], i0[:, 1]
    v00 = field[ix, iy]
    v10 = field[ix + 1, iy]
    v01 = field[ix, iy + 1]
    v11 = field[ix + 1, iy + 1]
    return (
        v00 * (1 - fx) * (1 - fy)
        + v10 * fx * (1 - fy)
        + v01 * (1 - fx) * fy
        + v11 * fx * fy
    )
