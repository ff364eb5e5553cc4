"""Assembled data shared by the reference stepper and the fast solver.

Step ``k`` (``0 <= k < N``) of every scheme has the form::

    (I - h^a b0 L) u[k+1] = u[k] + [p=1] h^a b1 L u[k]
                            - pref * sum_j gamma[k, j] u[j]
                            - sum_j Wh[k, j] (u[j] - u0)
                            + h^a L sum_j Wu[k, j] (u[j] - u0)
                            + h^a * force_k

where ``force_k`` is the Adams-Moulton combination of ``f`` (FAMM) or its
extrapolated counterpart (IMEX), plus the ``f`` correction sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from fide.coeffs import HistoryStencil, adams_moulton, history_stencil, kernel_table
from fide.corrections import CorrectionPlan, CorrectionWeights, build_weights
from fide.errors import DomainError, SingularOperatorError
from fide.problem import Problem, SolverParams

KINDS = ("famm", "imex")


@dataclass(frozen=True)
class Scheme:
    kind: str
    alpha: float
    p: int
    h: float
    ha: float
    n: int
    d: int
    lam: np.ndarray
    beta: np.ndarray  # always length 2, beta[1] = 0 for p = 0
    stencil: HistoryStencil
    cols: np.ndarray  # (2, n) leading history columns
    weights: CorrectionWeights
    step_matrix: np.ndarray
    step_lu: tuple
    plan: CorrectionPlan

    @property
    def imex(self) -> bool:
        return self.kind == "imex"

    @property
    def n_start(self) -> int:
        return self.plan.n_start

    def solve_step(self, rhs: np.ndarray) -> np.ndarray:
        return sla.lu_solve(self.step_lu, rhs)

    def force_terms(self, F: np.ndarray, include_implicit: bool = True) -> np.ndarray:
        """Row ``k`` holds ``force_k`` for all steps, ``F`` of shape (n+1, d)."""
        b0, b1 = self.beta
        n = self.n
        out = np.zeros((n, self.d))
        if self.kind == "famm":
            if include_implicit:
                out += b0 * F[1:]
            if self.p == 1:
                out += b1 * F[:-1]
        elif self.p == 0:
            out += b0 * F[:-1]
        else:
            out[0] = (b0 + b1) * F[0]
            out[1:] = (b1 + 2.0 * b0) * F[1:-1] - b0 * F[:-2]
        w = self.weights
        m = w.w_f.shape[1]
        if m:
            out += w.w_f @ (F[1 : m + 1] - F[0])
        m = w.w_ex.shape[1]
        if m and self.imex:
            out += b0 * (w.w_ex @ (F[1 : m + 1] - F[0]))
        return out


def build_scheme(problem: Problem, params: SolverParams, kind: str,
                 corrected: bool = True) -> Scheme:
    if kind not in KINDS:
        raise DomainError(f"scheme kind must be one of {KINDS}, got {kind!r}")
    alpha, p, h, n = params.alpha, params.p, params.h, params.n_steps
    if kind == "imex" and p == 1 and n < 2:
        raise DomainError("IMEX(1) needs at least two steps")
    plan = params.plan if corrected else CorrectionPlan()
    if kind == "famm":
        plan = CorrectionPlan(plan.sigma_u, plan.sigma_hist, plan.delta_f, ())
    if plan.n_start > n:
        raise DomainError(f"{plan.n_start} starting values requested but only {n} steps")
    ha = h**alpha
    beta = np.zeros(2)
    beta[: p + 1] = adams_moulton(alpha, p).beta
    table = kernel_table(alpha, h, n + 2, params.quad_points)
    stencil = history_stencil(table, p, n)
    cols = np.zeros((2, n))
    for j, c in enumerate(stencil.cols):
        cols[j] = c
    weights = build_weights(plan, alpha, p, n, stencil, params.quad_points)
    d = problem.dim
    lam = np.asarray(problem.lambda_op, dtype=float)
    step_matrix = np.eye(d) - ha * beta[0] * lam
    if np.linalg.cond(step_matrix) > 1e14:
        raise SingularOperatorError("step matrix I - h^alpha beta_0 lambda is singular")
    step_lu = sla.lu_factor(step_matrix)
    return Scheme(kind, alpha, p, h, ha, n, d, lam, beta, stencil, cols, weights,
                  step_matrix, step_lu, plan)
