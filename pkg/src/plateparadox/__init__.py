"""Finite elements for the simply supported Kirchhoff plate on polygonal
approximations of the unit disk."""
from .argyris import BcMode, solve_argyris
from .bench import ExactDiskSolution, PlateProblem, convergence_study
from .dg import DgParams, solve_dg
from .dkt import solve_dkt
from .errors import (ArgumentError, CapacityError, ConstraintRankError, DomainError,
                     ElementQualityError, NotFoundError, PlateError, SolverError,
                     UnsupportedError)
from .mesh import build_disk_mesh
from .splitting import solve_splitting

__version__ = "0.1.0"
