"""Direct tridiagonal solver for the screened Neumann problem (I - L)w = u.

L is the flux-form radial Laplacian from :mod:`radks.grid`.  The system is
assembled in the volume-weighted symmetric form

    (a V_i + b K) w = V_i rhs_i,      K = stiffness of the zero-flux mesh,

which is symmetric positive definite, so a banded Cholesky factorization
can be reused across solves.  Summing the rows shows sum w_i V_i equals
sum rhs_i V_i exactly (the K rows sum to zero), the discrete counterpart
of the mass identity between u and w.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, solveh_banded

from .errors import GridMismatchError
from .grid import Grid, RadialField, laplacian

__all__ = [
    "HelmholtzSolver",
    "build_solver",
    "solve",
    "residual",
    "apply_operator",
    "shifted_solve",
]


def _stiffness(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and superdiagonal of K (interior faces only; ends carry no flux)."""
    # areas of interior faces 1..N-1 divided by h
    coupling = grid.face_areas[1:-1] / grid.h
    diag = np.zeros(grid.N)
    diag[:-1] += coupling
    diag[1:] += coupling
    return diag, -coupling


def _banded(grid: Grid, alpha: float, beta: float) -> np.ndarray:
    """Upper banded storage of alpha*diag(V) + beta*K."""
    kdiag, koff = _stiffness(grid)
    ab = np.zeros((2, grid.N))
    ab[1] = alpha * grid.volumes + beta * kdiag
    ab[0, 1:] = beta * koff
    return ab


def _banded_matvec(ab: np.ndarray, x: np.ndarray) -> np.ndarray:
    y = ab[1] * x
    y[:-1] += ab[0, 1:] * x[1:]
    y[1:] += ab[0, 1:] * x[:-1]
    return y


@dataclass(frozen=True)
class HelmholtzSolver:
    """Reusable factorization of (I - L) on one grid."""

    grid: Grid
    _factor: np.ndarray

    def _apply(self, x: np.ndarray) -> np.ndarray:
        """(I - L)x in the same flux-form arithmetic as the residual op."""
        return x - laplacian(RadialField(x, self.grid)).values

    def _solve_values(self, rhs: np.ndarray) -> np.ndarray:
        grid = self.grid
        x = cho_solve_banded((self._factor, False), grid.volumes * rhs)
        # One refinement pass against the flux-form operator, then an exact
        # mass projection: telescoping makes sum w V = sum u V an identity
        # of the scheme, and the constant shift (well below discretization
        # error) pins it down to round-off in floating point as well.
        defect = rhs - self._apply(x)
        x = x + cho_solve_banded((self._factor, False), grid.volumes * defect)
        gap = math.fsum(grid.volumes * rhs) - math.fsum(grid.volumes * x)
        return x + gap / grid.ball_volume


def build_solver(grid: Grid) -> HelmholtzSolver:
    """Factorize (I - L); the matrix is an SPD M-matrix, so this cannot fail."""
    factor = cholesky_banded(_banded(grid, 1.0, 1.0), lower=False)
    return HelmholtzSolver(grid=grid, _factor=factor)


def solve(solver: HelmholtzSolver, u: RadialField) -> RadialField:
    """w = (I - L)^{-1} u; preserves the discrete integral of u to round-off."""
    if not u.grid.same_as(solver.grid):
        raise GridMismatchError("input field does not live on the solver grid")
    return RadialField(solver._solve_values(u.values), solver.grid)


def apply_operator(solver: HelmholtzSolver, v: RadialField) -> np.ndarray:
    """Values of (I - L)v, using the same flux-form L as the solve."""
    if not v.grid.same_as(solver.grid):
        raise GridMismatchError("input field does not live on the solver grid")
    return v.values - laplacian(v).values


def residual(solver: HelmholtzSolver, u: RadialField, w: RadialField) -> float:
    """Max-norm of u - (I - L)w."""
    if not u.grid.same_as(solver.grid) or not w.grid.same_as(solver.grid):
        raise GridMismatchError("fields do not live on the solver grid")
    return float(np.max(np.abs(u.values - apply_operator(solver, w))))


def shifted_solve(grid: Grid, alpha: float, beta: float, rhs: np.ndarray) -> np.ndarray:
    """Solve (alpha I - beta L) x = rhs for alpha > 0, beta >= 0.

    Used by the time stepper, where alpha and beta depend on dt; a single
    banded SPD solve plus one refinement pass.
    """
    ab = _banded(grid, alpha, beta)
    b = grid.volumes * np.asarray(rhs, dtype=float)
    x = solveh_banded(ab, b)
    x += solveh_banded(ab, b - _banded_matvec(ab, x))
    return x
