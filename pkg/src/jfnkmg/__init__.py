"""Jacobian-free Newton-Krylov solvers with a matrix-free multigrid preconditioner."""

from .jacobian import JacobianOperator, MatrixOperator, fd_epsilon, rayleigh_quotient
from .krylov import CgOutcome, CgStatus, LbfgsPreconditioner, SecantCollector, cg_solve, uniform_sample_pairs
from .mesh import MeshHierarchy, MeshLevel, build_beam_hierarchy, build_unit_square_hierarchy, refine
from .metrics import effective_ge
from .multigrid import MgConfig, MultigridPreconditioner
from .newton import NewtonConfig, RunReport, cubic_backtracking, newton_solve
from .problems import (
    BratuProblem,
    MinimalSurfaceProblem,
    NeoHookeanProblem,
    NonFiniteError,
    QuadraticProblem,
    make_hierarchy,
    make_problems,
)
from .smoother import chebyshev_smooth, estimate_lambda_max
from .transfer import TransferSet

__version__ = "0.1.0"
