"""Radial finite-volume solver and verification harness for an
indirect-signal chemotaxis system on a ball in R^n.

The system couples a cell density u, a chemical signal v, and a static
intermediate producer w:

    u_t = div(grad u - u grad v),
    v_t = lap v - v + w,
    0   = lap w - w + u,

with no-flux boundary conditions.  The package provides the radial mesh
and flux-form operators, a direct screened-Poisson solver, an IMEX time
stepper with blowup detection, the energy/dissipation diagnostics, the
concentrated low-energy initial-data family, empirical inequality
probes, and a CLI harness for reproducible experiments.
"""

from .grid import Grid, RadialField, make_grid, integrate, sup_norm
from .helmholtz import HelmholtzSolver, build_solver, solve
from .energy import EnergyReport, compute_energy
from .dynamics import SimStatus, State, StepperConfig, default_stepper_config, run

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "RadialField",
    "make_grid",
    "integrate",
    "sup_norm",
    "HelmholtzSolver",
    "build_solver",
    "solve",
    "EnergyReport",
    "compute_energy",
    "SimStatus",
    "State",
    "StepperConfig",
    "default_stepper_config",
    "run",
    "__version__",
]
