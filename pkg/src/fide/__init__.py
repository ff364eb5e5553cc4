"""Solvers for Caputo fractional differential equations.

First- and second-order fractional Adams-Moulton and IMEX schemes with
singularity corrections, a reference time-stepper, and a fast global solver
based on epsilon-circulant FFT inversion.
"""

from fide.corrections import CorrectionPlan, CorrectionWeights
from fide.fastsolve import picard_solve
from fide.problem import Problem, SolverParams, Trajectory
from fide.stability import BoundaryLocus, StabilityQuery, boundary_locus, is_stable
from fide.stepper import (
    error_metrics,
    observed_order,
    solve_famm,
    solve_famm_corrected,
    solve_imex,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryLocus",
    "CorrectionPlan",
    "CorrectionWeights",
    "Problem",
    "SolverParams",
    "StabilityQuery",
    "Trajectory",
    "boundary_locus",
    "error_metrics",
    "is_stable",
    "observed_order",
    "picard_solve",
    "solve_famm",
    "solve_famm_corrected",
    "solve_imex",
]
