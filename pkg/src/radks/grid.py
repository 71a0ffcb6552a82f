"""Cell-centered radial finite-volume mesh and discrete operators.

The mesh covers the ball of radius R in n space dimensions with N
uniform radial cells.  Faces sit at i*h for i = 0..N, so r = 0 is a
face and never a sample point, which sidesteps the (n-1)/r singularity.
All differential operators are written in flux form; the no-flux
boundary conditions and the discrete divergence theorem then hold by
telescoping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, GridMismatchError

__all__ = [
    "Grid",
    "RadialField",
    "unit_sphere_area",
    "make_grid",
    "constant_field",
    "field_from_function",
    "integrate",
    "sup_norm",
    "weighted_sup",
    "gradient_faces",
    "laplacian",
    "flux_divergence",
]


def unit_sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n (2 pi^{n/2} / Gamma(n/2)).

    Evaluated through the log-Gamma function so large n stays finite.
    """
    return math.exp(math.log(2.0) + 0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n))


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)  # copy, so the caller's buffer stays writable
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered radial mesh on (0, R].

    Immutable after construction; safe to share between threads.
    """

    n: int
    R: float
    N: int
    h: float
    faces: np.ndarray        # r_{i+1/2} = i*h, length N+1
    centers: np.ndarray      # r_i = (i-1/2)*h, length N
    volumes: np.ndarray      # V_i = omega_n (r_{i+1/2}^n - r_{i-1/2}^n)/n
    face_areas: np.ndarray   # A_{i+1/2} = omega_n r_{i+1/2}^{n-1}
    omega_n: float
    ball_volume: float       # omega_n R^n / n

    def same_as(self, other: "Grid") -> bool:
        return (
            self.n == other.n
            and self.N == other.N
            and self.R == other.R
        )


def make_grid(n: int, R: float, N: int) -> Grid:
    """Build the radial mesh; rejects n < 2, N < 4 and nonpositive R."""
    problems = []
    if not isinstance(n, (int, np.integer)) or n < 2:
        problems.append(f"dimension n must be an integer >= 2, got {n!r}")
    if not isinstance(N, (int, np.integer)) or N < 4:
        problems.append(f"cell count N must be an integer >= 4, got {N!r}")
    if not (isinstance(R, (int, float, np.floating)) and math.isfinite(R) and R > 0):
        problems.append(f"radius R must be a positive finite number, got {R!r}")
    if problems:
        raise ConfigurationError("; ".join(problems))

    n = int(n)
    N = int(N)
    R = float(R)
    h = R / N
    omega = unit_sphere_area(n)
    faces = h * np.arange(N + 1, dtype=float)
    faces[N] = R  # exact boundary face, so r_{N+1/2} = R holds identically
    centers = h * (np.arange(1, N + 1, dtype=float) - 0.5)
    # Volumes as differences of the cumulative ball volume: their exact sum
    # telescopes to omega_n R^n / n.
    cumulative = (omega / n) * faces**n
    volumes = np.diff(cumulative)
    face_areas = omega * faces ** (n - 1)
    return Grid(
        n=n,
        R=R,
        N=N,
        h=h,
        faces=_readonly(faces),
        centers=_readonly(centers),
        volumes=_readonly(volumes),
        face_areas=_readonly(face_areas),
        omega_n=omega,
        ball_volume=float(cumulative[-1]),
    )


@dataclass(frozen=True)
class RadialField:
    """One scalar unknown sampled at cell centers."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        values = _readonly(self.values)
        if values.shape != (self.grid.N,):
            raise GridMismatchError(
                f"field has {values.shape[0] if values.ndim == 1 else values.shape} "
                f"values but the grid has {self.grid.N} cells"
            )
        object.__setattr__(self, "values", values)


def constant_field(grid: Grid, value: float) -> RadialField:
    return RadialField(np.full(grid.N, float(value)), grid)


def field_from_function(grid: Grid, fn) -> RadialField:
    """Sample a radial profile fn(r) at the cell centers."""
    return RadialField(np.asarray([fn(r) for r in grid.centers], dtype=float), grid)


def _check_same_grid(a: RadialField, b: RadialField) -> None:
    if a.grid is not b.grid and not a.grid.same_as(b.grid):
        raise GridMismatchError("fields live on different grids")


def integrate(field: RadialField) -> float:
    """Midpoint-rule integral over the ball, sum f_i V_i.

    Uses an exactly rounded sum so the volume identity holds to a few ulps.
    """
    return math.fsum(field.values * field.grid.volumes)


def sup_norm(field: RadialField) -> float:
    return float(np.max(np.abs(field.values)))


def weighted_sup(field: RadialField, p: float) -> float:
    """max_i r_i^p |f_i| over cell centers."""
    return float(np.max(field.grid.centers**p * np.abs(field.values)))


def gradient_faces(field: RadialField) -> np.ndarray:
    """Face-sampled radial derivative, zero at r = 0 and r = R.

    Interior faces carry the central difference (f_{i+1} - f_i)/h, which
    is exact for quadratics; the boundary values encode symmetry at the
    origin and the homogeneous Neumann condition at r = R.
    """
    g = np.zeros(field.grid.N + 1)
    g[1:-1] = np.diff(field.values) / field.grid.h
    return g


def flux_divergence(grid: Grid, flux: np.ndarray) -> np.ndarray:
    """Cell values of the divergence of a face flux (already area-weighted)."""
    flux = np.asarray(flux, dtype=float)
    if flux.shape != (grid.N + 1,):
        raise GridMismatchError(
            f"flux must have one value per face ({grid.N + 1}), got {flux.shape}"
        )
    return np.diff(flux) / grid.volumes


def laplacian(field: RadialField) -> RadialField:
    """Flux-form radial Laplacian with zero-flux ends.

    (Lf)_i = [A_{i+1/2} g_{i+1/2} - A_{i-1/2} g_{i-1/2}] / V_i with g the
    face gradients.  Annihilates constants and has zero discrete mean for
    every field (fluxes telescope).
    """
    grid = field.grid
    flux = grid.face_areas * gradient_faces(field)
    return RadialField(flux_divergence(grid, flux), grid)
