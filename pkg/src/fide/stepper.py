"""Reference sequential time-steppers (direct O(N^2) history sums).

These are the correctness oracle for :mod:`fide.fastsolve`.  Every step
evaluates the full history sum directly; the leading correction block is
resolved by an outer fixed-point sweep over the first ``M`` steps.
"""

from __future__ import annotations

import time

import numpy as np

from fide._accel import USE_NUMBA, njit
from fide._scheme import Scheme, build_scheme
from fide.errors import (
    ConvergenceError,
    DegenerateNormalizationError,
    DomainError,
)
from fide.problem import Problem, SolverParams, Trajectory

__all__ = [
    "solve_famm",
    "solve_famm_corrected",
    "solve_imex",
    "solve_reference",
    "error_metrics",
    "observed_order",
]

START_BLOCK_MAX = 50


# --------------------------------------------------------------------------
# step right-hand side: numba kernel and numpy twin
# --------------------------------------------------------------------------


@njit
def _step_rhs_nb(k, U, F, lam, ha, b0, b1, p, imex, implicit_f, pref, lag, cols,
                 j_first, Wu, Wh, Wf, Wex, out):
    d = U.shape[1]
    acc = np.zeros(d)
    top = min(j_first, k + 1)
    for j in range(top):
        w = cols[j, k]
        for c in range(d):
            acc[c] += w * U[j, c]
    for j in range(j_first, k + 1):
        w = lag[k - j]
        for c in range(d):
            acc[c] += w * U[j, c]
    lin = np.zeros(d)  # argument of h^a * lam
    frc = np.zeros(d)  # force_k
    for c in range(d):
        out[c] = U[k, c] - pref * acc[c]
        if p == 1:
            lin[c] = b1 * U[k, c]
    for j in range(Wu.shape[1]):
        w = Wu[k, j]
        for c in range(d):
            lin[c] += w * (U[j + 1, c] - U[0, c])
    for j in range(Wh.shape[1]):
        w = Wh[k, j]
        for c in range(d):
            out[c] -= w * (U[j + 1, c] - U[0, c])
    if imex:
        if p == 0:
            for c in range(d):
                frc[c] = b0 * F[k, c]
        elif k == 0:
            for c in range(d):
                frc[c] = (b0 + b1) * F[0, c]
        else:
            for c in range(d):
                frc[c] = (b1 + 2.0 * b0) * F[k, c] - b0 * F[k - 1, c]
        for j in range(Wex.shape[1]):
            w = b0 * Wex[k, j]
            for c in range(d):
                frc[c] += w * (F[j + 1, c] - F[0, c])
    else:
        for c in range(d):
            if implicit_f:
                frc[c] = b0 * F[k + 1, c]
            if p == 1:
                frc[c] += b1 * F[k, c]
    for j in range(Wf.shape[1]):
        w = Wf[k, j]
        for c in range(d):
            frc[c] += w * (F[j + 1, c] - F[0, c])
    for c in range(d):
        s = frc[c]
        for e in range(d):
            s += lam[c, e] * lin[e]
        out[c] += ha * s


def _step_rhs_np(k, U, F, lam, ha, b0, b1, p, imex, implicit_f, pref, lag, cols,
                 j_first, Wu, Wh, Wf, Wex, out):
    top = min(j_first, k + 1)
    acc = cols[:top, k] @ U[:top]
    if k >= j_first:
        acc = acc + lag[k - j_first :: -1] @ U[j_first : k + 1]
    lin = b1 * U[k] if p == 1 else np.zeros_like(U[k])
    if Wu.shape[1]:
        lin = lin + Wu[k] @ (U[1 : Wu.shape[1] + 1] - U[0])
    r = U[k] - pref * acc
    if Wh.shape[1]:
        r = r - Wh[k] @ (U[1 : Wh.shape[1] + 1] - U[0])
    if imex:
        if p == 0:
            frc = b0 * F[k]
        elif k == 0:
            frc = (b0 + b1) * F[0]
        else:
            frc = (b1 + 2.0 * b0) * F[k] - b0 * F[k - 1]
        if Wex.shape[1]:
            frc = frc + b0 * (Wex[k] @ (F[1 : Wex.shape[1] + 1] - F[0]))
    else:
        frc = b0 * F[k + 1] if implicit_f else np.zeros_like(U[k])
        if p == 1:
            frc = frc + b1 * F[k]
    if Wf.shape[1]:
        frc = frc + Wf[k] @ (F[1 : Wf.shape[1] + 1] - F[0])
    out[:] = r + ha * (frc + lam @ lin)


_step_rhs = _step_rhs_nb if USE_NUMBA else _step_rhs_np


@njit
def _march_nb(k0, k1, U, F, Minv, lam, ha, b0, b1, p, imex, pref, lag, cols, j_first,
              Wu, Wh, Wf, Wex):
    d = U.shape[1]
    rhs = np.empty(d)
    for k in range(k0, k1):
        _step_rhs_nb(k, U, F, lam, ha, b0, b1, p, imex, True, pref, lag, cols, j_first,
                     Wu, Wh, Wf, Wex, rhs)
        for c in range(d):
            s = 0.0
            for e in range(d):
                s += Minv[c, e] * rhs[e]
            U[k + 1, c] = s


def _march_np(k0, k1, U, F, Minv, lam, ha, b0, b1, p, imex, pref, lag, cols, j_first,
              Wu, Wh, Wf, Wex):
    rhs = np.empty(U.shape[1])
    for k in range(k0, k1):
        _step_rhs_np(k, U, F, lam, ha, b0, b1, p, imex, True, pref, lag, cols, j_first,
                     Wu, Wh, Wf, Wex, rhs)
        U[k + 1] = Minv @ rhs


_march = _march_nb if USE_NUMBA else _march_np


# --------------------------------------------------------------------------
# drivers
# --------------------------------------------------------------------------


class _Runner:
    def __init__(self, problem: Problem, params: SolverParams, scheme: Scheme):
        self.problem = problem
        self.params = params
        self.s = scheme
        n, d = scheme.n, scheme.d
        self.times = params.h * np.arange(n + 1)
        self.U = np.empty((n + 1, d))
        self.U[:] = problem.u0
        if problem.state_independent:
            self.F = problem.f_all(self.times, self.U)
        else:
            self.F = np.empty((n + 1, d))
            self.F[:] = problem.f(0.0, problem.u0)
        w = scheme.weights
        self.W = tuple(np.ascontiguousarray(x) for x in (w.w_u, w.w_hist, w.w_f, w.w_ex))
        self.inner_max = 0

    def _args(self):
        s = self.s
        return (s.lam, s.ha, s.beta[0], s.beta[1], s.p, s.imex)

    def _hist(self):
        s = self.s
        return (s.stencil.prefactor, s.stencil.lag, s.cols, s.stencil.j_first)

    def run(self, k0: int, k1: int) -> None:
        s = self.s
        if self.problem.state_independent:
            Minv = np.linalg.inv(s.step_matrix)
            _march(k0, k1, self.U, self.F, Minv, *self._args(), *self._hist(), *self.W)
            return
        rhs = np.empty(s.d)
        tol, cap = self.params.picard_tol, self.params.picard_max
        for k in range(k0, k1):
            _step_rhs(k, self.U, self.F, *self._args(), False, *self._hist(), *self.W, rhs)
            t1 = self.times[k + 1]
            if not np.all(np.isfinite(rhs)):
                raise ConvergenceError(f"solution diverged at step {k}", step=k)
            if s.imex:
                u = s.solve_step(rhs)
                self.U[k + 1] = u
                self.F[k + 1] = self.problem.f(t1, u)
                continue
            u = self.U[k].copy()
            fk = self.problem.f(t1, u)
            hist = []
            for it in range(1, cap + 1):
                u_new = s.solve_step(rhs + s.ha * s.beta[0] * fk)
                delta = float(np.max(np.abs(u_new - u)))
                hist.append(delta)
                u = u_new
                fk = self.problem.f(t1, u)
                if delta <= tol:
                    break
            else:
                raise ConvergenceError(
                    f"implicit step {k} did not converge in {cap} iterations", hist, step=k
                )
            self.inner_max = max(self.inner_max, it)
            self.U[k + 1] = u
            self.F[k + 1] = fk


def solve_reference(problem: Problem, params: SolverParams, kind: str,
                    corrected: bool = True) -> Trajectory:
    """Sequential stepping of the FAMM (``kind='famm'``) or IMEX scheme."""
    t0 = time.perf_counter()
    scheme = build_scheme(problem, params, kind, corrected)
    r = _Runner(problem, params, scheme)
    M = scheme.n_start
    outer = 0
    residuals = []
    if M:
        r.run(0, M)
        for outer in range(1, START_BLOCK_MAX + 1):
            prev = r.U[1 : M + 1].copy()
            r.run(0, M)
            delta = float(np.max(np.abs(r.U[1 : M + 1] - prev)))
            residuals.append(delta)
            if not np.isfinite(delta):
                break
            if delta <= params.picard_tol:
                break
        else:
            delta = np.inf
        if not (delta <= params.picard_tol):
            raise ConvergenceError(
                f"starting block of {M} steps did not converge in {START_BLOCK_MAX} sweeps",
                residuals,
            )
    r.run(M, scheme.n)
    diag = {
        "solver": f"reference-{kind}",
        "picard_iterations": outer,
        "final_residual": residuals[-1] if residuals else 0.0,
        "residuals": residuals,
        "inner_iterations_max": r.inner_max,
        "corrections_used": not scheme.plan.is_empty,
        "wall_time": time.perf_counter() - t0,
    }
    return Trajectory(r.times, r.U, diag)


def solve_famm(problem: Problem, params: SolverParams) -> Trajectory:
    """Uncorrected fractional Adams-Moulton stepping (implicit in ``f``)."""
    return solve_reference(problem, params, "famm", corrected=False)


def solve_famm_corrected(problem: Problem, params: SolverParams) -> Trajectory:
    """Adams-Moulton stepping with the ``u``, history and ``f`` corrections."""
    return solve_reference(problem, params, "famm", corrected=True)


def solve_imex(problem: Problem, params: SolverParams) -> Trajectory:
    """IMEX(p) stepping: ``lambda u`` implicit, ``f`` extrapolated."""
    return solve_reference(problem, params, "imex", corrected=True)


# --------------------------------------------------------------------------
# metrics
# --------------------------------------------------------------------------


def error_metrics(traj: Trajectory, exact) -> tuple:
    """Relative endpoint and global max-norm errors against ``exact(t)``.

    Returns
    -------
    (err_endpoint, err_global)
    """
    ref = np.array([np.atleast_1d(exact(t)) for t in traj.times], dtype=float)
    ref = ref.reshape(traj.states.shape)
    diff = np.abs(ref - traj.states).max(axis=1)
    mag = np.abs(ref).max(axis=1)
    if mag[-1] == 0.0 or mag.max() == 0.0:
        raise DegenerateNormalizationError("exact solution vanishes; relative error undefined")
    return float(diff[-1] / mag[-1]), float(diff.max() / mag.max())


def observed_order(errs) -> list:
    """``log2`` ratios of successive errors (step halved each time)."""
    e = np.asarray(errs, dtype=float)
    if e.size < 2:
        raise DomainError("need at least two errors to estimate an order")
    if np.any(~(e > 0.0)):
        raise DomainError("errors must be positive to estimate an order")
    return list(np.log2(e[:-1] / e[1:]))
