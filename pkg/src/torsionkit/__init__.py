"""Torsion functions, efficiency and localisation for Schrodinger operators on simple domains."""
from .domains import (
    Annulus,
    Ball,
    BallUnion,
    Box,
    Constant,
    DomainError,
    Interval,
    PiecewiseConstant1D,
    SymmetricWell,
    Zero,
    boundary_decay_integral,
    distance_to_boundary,
    measure,
    unit_ball_volume,
)
from .functionals import efficiency_eigen, efficiency_torsion, kappa_estimate, mean_to_max
from .solver import (
    ConvergenceError,
    first_eigenpair_1d,
    first_eigenpair_radial,
    solve_torsion_1d,
    solve_torsion_radial,
    theorem7_profile,
)

__version__ = "0.1.0"
