"""Lubich-type starting weights for the four correction families.

Every family solves the same small generalised Vandermonde system
``sum_j W[k, j] * j**sigma_r = rhs_r[k]`` whose matrix does not depend on
``k``; the bulk builders therefore factor it once and solve all rows in a
single back-substitution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from fide.coeffs import (
    AdamsMoultonCoeffs,
    HistoryStencil,
    adams_moulton,
    gamma_power_sums,
    history_prefactor,
)
from fide.errors import DomainError, IllConditionedError, AccuracyError
from fide.specfun import DEFAULT_QUAD_POINTS, gamma_fn, hyp2f1, incomplete_beta

__all__ = [
    "MAX_POWERS",
    "CorrectionPlan",
    "CorrectionWeights",
    "solve_power_system",
    "weights_integral_u",
    "weights_history",
    "weights_integral_f",
    "weights_extrapolation",
    "integral_rhs",
    "history_rhs",
    "extrapolation_rhs",
    "build_weights",
]

MAX_POWERS = 6
COND_LIMIT = 1e12
RESIDUAL_LIMIT = 1e-8


def _as_powers(name, values) -> tuple:
    vals = tuple(float(v) for v in values)
    if len(vals) > MAX_POWERS:
        raise DomainError(f"{name}: at most {MAX_POWERS} correction powers, got {len(vals)}")
    if any(v <= 0.0 for v in vals):
        raise DomainError(f"{name}: correction powers must be positive, got {vals}")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise DomainError(f"{name}: correction powers must be strictly increasing, got {vals}")
    return vals


@dataclass(frozen=True)
class CorrectionPlan:
    """Singularity powers for each correction family (empty means none).

    Attributes
    ----------
    sigma_u : powers for the fractional integral of ``u``
    sigma_hist : powers for the history load
    delta_f : powers for the fractional integral of ``f``
    delta_ex : powers for the explicit extrapolation of ``f``
    """

    sigma_u: tuple = ()
    sigma_hist: tuple = ()
    delta_f: tuple = ()
    delta_ex: tuple = ()

    def __post_init__(self):
        for name in ("sigma_u", "sigma_hist", "delta_f", "delta_ex"):
            object.__setattr__(self, name, _as_powers(name, getattr(self, name)))

    @classmethod
    def from_sets(cls, sigma=(), delta=()) -> "CorrectionPlan":
        """``sigma`` for both u-families, ``delta`` for both f-families."""
        return cls(tuple(sigma), tuple(sigma), tuple(delta), tuple(delta))

    @property
    def n_start(self) -> int:
        """Largest number of starting values referenced by any family."""
        return max(len(self.sigma_u), len(self.sigma_hist), len(self.delta_f), len(self.delta_ex))

    @property
    def is_empty(self) -> bool:
        return self.n_start == 0


@dataclass(frozen=True)
class CorrectionWeights:
    """Per-step weight matrices, row ``k`` for step ``k -> k+1``."""

    w_u: np.ndarray
    w_hist: np.ndarray
    w_f: np.ndarray
    w_ex: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.w_u.shape[0]

    @classmethod
    def empty(cls, n_rows: int) -> "CorrectionWeights":
        z = np.zeros((n_rows, 0))
        return cls(z, z, z, z)


def _power_matrix(powers) -> np.ndarray:
    j = np.arange(1, len(powers) + 1, dtype=float)
    return j[None, :] ** np.asarray(powers, float)[:, None]


def solve_power_system(powers, rhs) -> np.ndarray:
    """Solve ``sum_{j=1}^m W_j j**powers[r] = rhs[r]``.

    Parameters
    ----------
    powers : sequence of m distinct positive reals
    rhs : array_like, shape (m,) or (m, K)
        Several right-hand sides may be stacked as columns.

    Returns
    -------
    ndarray with the shape of ``rhs``.

    Raises
    ------
    IllConditionedError
        If the equilibrated matrix has condition number above ``1e12``.
    """
    powers = tuple(float(s) for s in powers)
    m = len(powers)
    b = np.asarray(rhs, dtype=float)
    if m == 0:
        return b.copy()
    if m > MAX_POWERS:
        raise DomainError(f"at most {MAX_POWERS} powers supported, got {m}")
    if len(set(powers)) != m:
        raise DomainError(f"powers must be distinct, got {powers}")
    if b.shape[0] != m:
        raise DomainError(f"rhs has {b.shape[0]} rows for {m} powers")
    M = _power_matrix(powers)
    scale = np.abs(M).max(axis=1)
    Me = M / scale[:, None]
    cond = np.linalg.cond(Me)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditionedError(
            f"power system for powers {powers} has condition number {cond:.3e}"
        )
    be = b / (scale[:, None] if b.ndim == 2 else scale)
    w = sla.lu_solve(sla.lu_factor(Me), be)
    resid = np.abs(M @ w - b)
    ref = np.abs(M) @ np.abs(w) + np.abs(b)
    bad = resid > RESIDUAL_LIMIT * np.where(ref > 0, ref, 1.0)
    if np.any(bad):
        raise AccuracyError(f"power system residual check failed for powers {powers}")
    return w


# --------------------------------------------------------------------------
# right-hand sides, vectorised over the row index k
# --------------------------------------------------------------------------


def integral_rhs(powers, alpha: float, p: int, rows, q: int = DEFAULT_QUAD_POINTS) -> np.ndarray:
    """Moment defects of the Adams-Moulton local integral, shape (m, len(rows))."""
    beta = adams_moulton(alpha, p).beta
    k = np.asarray(rows, dtype=int)
    out = np.empty((len(powers), k.size))
    pos = k >= 1
    kp = k[pos].astype(float)
    for r, s in enumerate(powers):
        vals = np.empty(k.size)
        vals[~pos] = gamma_fn(s + 1.0) / gamma_fn(s + alpha + 1.0)
        if kp.size:
            vals[pos] = kp**s / gamma_fn(alpha + 1.0) * hyp2f1(-s, 1.0, alpha + 1.0, -1.0 / kp, q)
        for j, bj in enumerate(beta):
            base = np.maximum(k + 1 - j, 0).astype(float)
            vals -= bj * base**s
        out[r] = vals
    return out


def history_rhs(powers, alpha: float, stencil: HistoryStencil, rows) -> np.ndarray:
    """Moment defects of the discrete history load, shape (m, len(rows)).

    Row 0 is zero (no history yet).
    """
    k = np.asarray(rows, dtype=int)
    if k.size and k.max() >= stencil.n_rows:
        raise DomainError(f"history stencil has {stencil.n_rows} rows, row {k.max()} requested")
    pref = history_prefactor(alpha)
    out = np.zeros((len(powers), k.size))
    pos = k >= 1
    kp = k[pos].astype(float)
    for r, s in enumerate(powers):
        a_par = s - alpha + 1.0
        if a_par <= 0.0:
            raise DomainError(f"history power {s} gives incomplete-beta parameter {a_par} <= 0")
        if not kp.size:
            continue
        c = gamma_fn(s + 1.0) / (gamma_fn(alpha) * gamma_fn(a_par))
        ib = incomplete_beta(kp / (kp + 1.0), a_par, alpha, one_minus_z=1.0 / (kp + 1.0))
        sums = gamma_power_sums(stencil, s)[k[pos]]
        out[r, pos] = kp**s - c * (kp + 1.0) ** s * ib - pref * sums
    return out


def extrapolation_rhs(powers, p: int, rows) -> np.ndarray:
    """Moment defects of the explicit extrapolation, shape (m, len(rows)).

    For ``p = 1`` row 0 falls back to the ``p = 0`` defect (``E_0 f = f_0``).
    """
    k = np.asarray(rows, dtype=float)
    out = np.empty((len(powers), k.size))
    for r, s in enumerate(powers):
        if p == 0:
            out[r] = (k + 1.0) ** s - k**s
        else:
            km1 = np.maximum(k - 1.0, 0.0)
            vals = (k + 1.0) ** s - 2.0 * k**s + km1**s
            first = k == 0
            vals[first] = 1.0
            out[r] = vals
    return out


# --------------------------------------------------------------------------
# per-row operations
# --------------------------------------------------------------------------


def _check_p(p):
    if p not in (0, 1):
        raise DomainError(f"scheme order p must be 0 or 1, got {p}")


def weights_integral_u(k: int, plan: CorrectionPlan, alpha: float, p: int,
                       beta: AdamsMoultonCoeffs | None = None,
                       q: int = DEFAULT_QUAD_POINTS) -> np.ndarray:
    """Row ``k`` of the ``u``-integral weights."""
    _check_p(p)
    if k < 0:
        raise DomainError(f"row index must be non-negative, got {k}")
    if beta is not None and (beta.p != p or beta.alpha != alpha):
        raise DomainError("Adams-Moulton coefficients do not match (alpha, p)")
    rhs = integral_rhs(plan.sigma_u, alpha, p, [k], q)
    return solve_power_system(plan.sigma_u, rhs)[:, 0]


def weights_integral_f(k: int, plan: CorrectionPlan, alpha: float, p: int,
                       beta: AdamsMoultonCoeffs | None = None,
                       q: int = DEFAULT_QUAD_POINTS) -> np.ndarray:
    """Row ``k`` of the ``f``-integral weights."""
    _check_p(p)
    if k < 0:
        raise DomainError(f"row index must be non-negative, got {k}")
    if beta is not None and (beta.p != p or beta.alpha != alpha):
        raise DomainError("Adams-Moulton coefficients do not match (alpha, p)")
    rhs = integral_rhs(plan.delta_f, alpha, p, [k], q)
    return solve_power_system(plan.delta_f, rhs)[:, 0]


def weights_history(k: int, plan: CorrectionPlan, alpha: float, p: int,
                    stencil: HistoryStencil) -> np.ndarray:
    """Row ``k >= 1`` of the history-load weights."""
    _check_p(p)
    if k < 1:
        raise DomainError(f"history weights are defined for k >= 1, got {k}")
    if stencil.p != p:
        raise DomainError("history stencil order does not match p")
    rhs = history_rhs(plan.sigma_hist, alpha, stencil, [k])
    return solve_power_system(plan.sigma_hist, rhs)[:, 0]


def weights_extrapolation(k: int, plan: CorrectionPlan, p: int) -> np.ndarray:
    """Row ``k`` of the extrapolation weights."""
    _check_p(p)
    if k < 0 or (p == 1 and k < 1):
        raise DomainError(f"extrapolation weights for p={p} need k >= {p}, got {k}")
    rhs = extrapolation_rhs(plan.delta_ex, p, [k])
    return solve_power_system(plan.delta_ex, rhs)[:, 0]


def build_weights(plan: CorrectionPlan, alpha: float, p: int, n_rows: int,
                  stencil: HistoryStencil | None = None,
                  q: int = DEFAULT_QUAD_POINTS) -> CorrectionWeights:
    """All four weight matrices for rows ``0 .. n_rows - 1``."""
    _check_p(p)
    rows = np.arange(n_rows)

    def solve(powers, rhs):
        if not powers:
            return np.zeros((n_rows, 0))
        return np.ascontiguousarray(solve_power_system(powers, rhs).T)

    w_u = solve(plan.sigma_u, integral_rhs(plan.sigma_u, alpha, p, rows, q))
    w_f = solve(plan.delta_f, integral_rhs(plan.delta_f, alpha, p, rows, q))
    w_ex = solve(plan.delta_ex, extrapolation_rhs(plan.delta_ex, p, rows))
    if plan.sigma_hist:
        if stencil is None or stencil.n_rows < n_rows:
            raise DomainError("history weights need a stencil covering all rows")
        w_hist = solve(plan.sigma_hist, history_rhs(plan.sigma_hist, alpha, stencil, rows))
    else:
        w_hist = np.zeros((n_rows, 0))
    for w in (w_u, w_hist, w_f, w_ex):
        w.setflags(write=False)
    return CorrectionWeights(w_u, w_hist, w_f, w_ex)
