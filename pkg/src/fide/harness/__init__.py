"""Problem registry, convergence/timing studies and the command-line interface."""

from fide.harness.registry import (
    RegisteredProblem,
    case2_variant,
    get_problem,
    problem_names,
    registry,
)
from fide.harness.studies import ConvergenceReport, TimingReport, run_convergence, run_timing

__all__ = [
    "ConvergenceReport",
    "RegisteredProblem",
    "TimingReport",
    "case2_variant",
    "get_problem",
    "problem_names",
    "registry",
    "run_convergence",
    "run_timing",
]
