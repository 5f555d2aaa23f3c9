"""Structure-preserving mechanics on configuration manifolds.

Submodules: :mod:`~geomech.manifold` (charts and retractions),
:mod:`~geomech.systems` (catalog), :mod:`~geomech.lagrangian` (discrete
action, boundary-value solver, variational integrator),
:mod:`~geomech.hamiltonian` (phase space and time steppers),
:mod:`~geomech.symmetry` (Noether charges, Euler top) and
:mod:`~geomech.cli`.
"""
from .errors import (ConfigParseError, ConfigurationError, ConjugatePointError,
                     ConvergenceError, GeomechError, InvalidInputError, NumericalError,
                     UnsupportedMethodError)
from .hamiltonian import (METHODS, PhaseState, Trajectory, evaluate_hamiltonian, integrate,
                          phase_state)
from .lagrangian import DiscretePath, discrete_action, solve_bvp
from .manifold import Manifold, circle, euclidean, point, product, so3, torus
from .systems import CATALOG, MechanicalSystem, SystemConfig, build_system

__version__ = "0.1.0"

__all__ = [
    "CATALOG", "METHODS", "ConfigParseError", "ConfigurationError", "ConjugatePointError",
    "ConvergenceError", "DiscretePath", "GeomechError", "InvalidInputError", "Manifold",
    "MechanicalSystem", "NumericalError", "PhaseState", "SystemConfig", "Trajectory",
    "UnsupportedMethodError", "build_system", "circle", "discrete_action", "euclidean",
    "evaluate_hamiltonian", "integrate", "phase_state", "point", "product", "so3",
    "solve_bvp", "torus",
]
