"""Global block-Toeplitz formulation solved by epsilon-circulant FFT inversion.

All ``N`` step equations are stacked as ``K U = R(U)`` with ``K`` block
lower-triangular Toeplitz.  ``K`` is replaced by the block epsilon-circulant
``K_eps`` (wrap-around band scaled by ``eps``), which the scaled DFT
diagonalises, and ``U = K_eps^{-1} R(U)`` is iterated to a fixed point.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from fide._scheme import Scheme, build_scheme
from fide.errors import ConvergenceError, DomainError, NotApplicableError, SingularOperatorError
from fide.problem import Problem, SolverParams, Trajectory

__all__ = [
    "fft",
    "BlockToeplitzOperator",
    "assemble_operator",
    "build_rhs",
    "apply_inverse",
    "picard_solve",
    "force_matrix",
    "contraction_diagnostic",
]

SPECTRAL_COND_LIMIT = 1e14


def fft(x, direction: str = "forward", axis: int = 0) -> np.ndarray:
    """Discrete Fourier transform of any length along ``axis``.

    ``forward`` is unnormalised, ``inverse`` carries the ``1/N`` factor, so
    ``fft(fft(x), 'inverse') == x``.
    """
    if direction == "forward":
        return np.fft.fft(x, axis=axis)
    if direction == "inverse":
        return np.fft.ifft(x, axis=axis)
    raise DomainError(f"direction must be 'forward' or 'inverse', got {direction!r}")


@dataclass(frozen=True)
class BlockToeplitzOperator:
    """First block column of ``K`` and the epsilon-circulant spectral factors.

    Attributes
    ----------
    first_col : (N, d, d) array, ``K_0 .. K_{N-1}``
    spectral_blocks : (N, d, d) complex array, ``Lambda_j``
    spectral_inv : (N, d, d) complex array, ``Lambda_j^{-1}``
    """

    dim: int
    n_blocks: int
    first_col: np.ndarray
    eps: float
    rho: float
    spectral_blocks: np.ndarray
    spectral_inv: np.ndarray

    def matvec(self, X) -> np.ndarray:
        """Exact product ``K X`` (lower-triangular, no wrap-around)."""
        X = np.asarray(X, dtype=float).reshape(self.n_blocks, self.dim)
        n = self.n_blocks
        size = 2 * n
        Kf = np.fft.rfft(self.first_col, size, axis=0)
        Xf = np.fft.rfft(X, size, axis=0)
        Y = np.fft.irfft(np.einsum("kab,kb->ka", Kf, Xf), size, axis=0)
        return Y[:n]

    def dense(self) -> np.ndarray:
        """Dense ``(N d, N d)`` matrix of ``K`` (small ``N`` only)."""
        n, d = self.n_blocks, self.dim
        out = np.zeros((n * d, n * d))
        for i in range(n):
            for j in range(i + 1):
                out[i * d : (i + 1) * d, j * d : (j + 1) * d] = self.first_col[i - j]
        return out

    def transposed(self) -> "BlockToeplitzOperator":
        """Operator ``K'`` with ``K^T = J K' J`` (``J`` block reversal)."""
        return _from_blocks(np.ascontiguousarray(np.swapaxes(self.first_col, 1, 2)), self.eps)


def _from_blocks(blocks: np.ndarray, eps: float) -> BlockToeplitzOperator:
    n, d, _ = blocks.shape
    rho = float(np.exp(np.log(eps) / n))
    c = blocks * (rho ** np.arange(n))[:, None, None]
    lam = fft(c, "forward", axis=0)
    if d == 1:
        mags = np.abs(lam[:, 0, 0])
        bad = np.flatnonzero(~(mags > mags.max() / SPECTRAL_COND_LIMIT))
        if bad.size:
            raise SingularOperatorError(f"spectral block {bad[0]} is singular")
        inv = 1.0 / lam
    else:
        conds = np.linalg.cond(lam)
        bad = np.flatnonzero(~(conds < SPECTRAL_COND_LIMIT))
        if bad.size:
            raise SingularOperatorError(
                f"spectral block {bad[0]} is singular (condition {conds[bad[0]]:.3e})"
            )
        inv = np.linalg.inv(lam)
    for a in (blocks, lam, inv):
        a.setflags(write=False)
    return BlockToeplitzOperator(d, n, blocks, float(eps), rho, lam, inv)


def _scheme_blocks(s: Scheme) -> np.ndarray:
    n, d = s.n, s.d
    pref, lag = s.stencil.prefactor, s.stencil.lag
    eye = np.eye(d)
    K = np.zeros((n, d, d))
    K[0] = eye - s.ha * s.beta[0] * s.lam
    if n > 1:
        K[1] = (pref * lag[0] - 1.0) * eye - s.ha * s.beta[1] * s.lam
    if n > 2:
        K[2:] = (pref * lag[1 : n - 1])[:, None, None] * eye
    return K


def assemble_operator(scheme: Scheme, eps: float | None = None) -> BlockToeplitzOperator:
    """Block Toeplitz operator of a scheme and its epsilon-circulant factors.

    For ``p = 1`` the column multiplying ``u_1`` is replaced by the Toeplitz
    continuation; :func:`build_rhs` carries the difference.
    """
    return _from_blocks(_scheme_blocks(scheme), 5e-9 if eps is None else eps)


def build_rhs(scheme: Scheme, U: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Right-hand side ``R(U)`` of the global system, shape (N, d).

    Parameters
    ----------
    U : (N+1, d) current iterate including ``u_0``
    F : (N+1, d) force evaluated on ``U``
    """
    s = scheme
    n, d = s.n, s.d
    U = np.asarray(U, dtype=float)
    F = np.asarray(F, dtype=float)
    if U.shape != (n + 1, d) or F.shape != (n + 1, d):
        raise DomainError(f"expected states and forces of shape {(n + 1, d)}")
    u0 = U[0]
    pref = s.stencil.prefactor
    R = s.ha * s.force_terms(F)
    R[0] += u0 + s.ha * s.beta[1] * (s.lam @ u0)
    R -= pref * s.cols[0][:, None] * u0
    w = s.weights
    m = w.w_hist.shape[1]
    if m:
        R -= w.w_hist @ (U[1 : m + 1] - u0)
    m = w.w_u.shape[1]
    if m:
        R += s.ha * ((w.w_u @ (U[1 : m + 1] - u0)) @ s.lam.T)
    if s.p == 1 and n > 1:
        # true u_1 column minus its Toeplitz stand-in
        comp = s.cols[1][1:] - s.stencil.lag[: n - 1]
        R[1:] -= pref * comp[:, None] * U[1]
    return R


def apply_inverse(op: BlockToeplitzOperator, R) -> np.ndarray:
    """``K_eps^{-1} R`` via scaled FFT, ``N`` block solves and inverse FFT."""
    n, d = op.n_blocks, op.dim
    R = np.asarray(R, dtype=float).reshape(n, d)
    scale = op.rho ** np.arange(n)
    Y = fft(R * scale[:, None], "forward")
    if d == 1:
        Z = Y * op.spectral_inv[:, 0, :]
    else:
        Z = np.einsum("kab,kb->ka", op.spectral_inv, Y)
    X = fft(Z, "inverse").real
    return X / scale[:, None]


def picard_solve(problem: Problem, params: SolverParams, kind: str = "imex",
                 refine: bool = True) -> Trajectory:
    """Fast global solve by fixed-point iteration until the update is below tolerance.

    Parameters
    ----------
    kind : {'imex', 'famm'}
        ``famm`` uses the corrected Adams-Moulton step (uncorrected when the
        plan is empty).
    refine : bool
        If true iterate ``U <- U + K_eps^{-1} (R(U) - K U)`` with the exact
        Toeplitz product, whose fixed point solves ``K U = R(U)``.  If false
        iterate ``U <- K_eps^{-1} R(U)``, whose fixed point carries the
        ``O(eps)`` circulant perturbation and rounding amplified by up to
        ``1/eps``.
    """
    t0 = time.perf_counter()
    s = build_scheme(problem, params, kind, corrected=True)
    op = assemble_operator(s, params.eps_circulant)
    t_setup = time.perf_counter() - t0
    n, d = s.n, s.d
    times = params.h * np.arange(n + 1)
    U = np.empty((n + 1, d))
    U[:] = problem.u0
    F = problem.f_all(times, U)
    residuals = []
    # a diverging iterate overflows; that is reported below as non-convergence
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(1, params.picard_max + 1):
            R = build_rhs(s, U, F)
            if refine:
                Unew = U[1:] + apply_inverse(op, R - op.matvec(U[1:]))
            else:
                Unew = apply_inverse(op, R)
            delta = float(np.max(np.abs(Unew - U[1:])))
            U[1:] = Unew
            residuals.append(delta)
            if not problem.state_independent:
                F = problem.f_all(times, U)
            if not np.isfinite(delta):
                break
            if delta <= params.picard_tol:
                break
    if not (residuals[-1] <= params.picard_tol):
        raise ConvergenceError(
            f"Picard iteration stalled after {len(residuals)} iterations "
            f"(last update {residuals[-1]:.3e})",
            residuals,
        )
    diag = {
        "solver": f"fast-{kind}",
        "refine": refine,
        "picard_iterations": len(residuals),
        "final_residual": residuals[-1],
        "residuals": residuals,
        "corrections_used": not s.plan.is_empty,
        "setup_time": t_setup,
        "wall_time": time.perf_counter() - t0,
    }
    return Trajectory(times, U, diag)


# --------------------------------------------------------------------------
# contraction diagnostic
# --------------------------------------------------------------------------


def force_matrix(scheme: Scheme) -> sp.csr_matrix:
    """Scalar ``N x N`` matrix ``G`` with ``force_k = (G F)_k`` for ``F = (f_1..f_N)``.

    ``f_0`` is the known initial force and is excluded.
    """
    s = scheme
    n = s.n
    b0, b1 = s.beta
    G = sp.lil_matrix((n, n))
    # column c of G multiplies f_{c+1}
    for k in range(n):
        if s.kind == "famm":
            G[k, k] += b0
            if s.p == 1 and k >= 1:
                G[k, k - 1] += b1
        elif s.p == 0:
            if k >= 1:
                G[k, k - 1] += b0
        elif k >= 1:
            G[k, k - 1] += b1 + 2.0 * b0
            if k >= 2:
                G[k, k - 2] -= b0
    w = s.weights
    m = w.w_f.shape[1]
    if m:
        G[:, :m] = G[:, :m].toarray() + w.w_f
    m = w.w_ex.shape[1]
    if m and s.imex:
        G[:, :m] = G[:, :m].toarray() + b0 * w.w_ex
    return G.tocsr()


def _hager_inf_norm(apply_a, apply_at, size: int, max_iter: int = 5) -> float:
    # 1-norm estimate of A^T, that is the infinity norm of A
    x = np.full(size, 1.0 / size)
    est = 0.0
    for _ in range(max_iter):
        y = apply_at(x)
        est = float(np.abs(y).sum())
        xi = np.where(y >= 0.0, 1.0, -1.0)
        z = apply_a(xi)
        j = int(np.argmax(np.abs(z)))
        if np.abs(z[j]) <= z @ x:
            break
        x = np.zeros(size)
        x[j] = 1.0
    return est


def contraction_diagnostic(op: BlockToeplitzOperator, problem: Problem,
                           params: SolverParams, scheme: Scheme | None = None) -> float:
    """Estimate ``h^alpha L ||K^{-1} G||_inf`` (below 1 means a contraction)."""
    L = problem.lipschitz_bound
    if L is None:
        raise NotApplicableError("problem has no Lipschitz bound")
    if L == 0.0:
        return 0.0
    s = scheme if scheme is not None else build_scheme(problem, params, "imex", corrected=True)
    n, d = op.n_blocks, op.dim
    G = force_matrix(s)
    GT = G.T.tocsr()
    opT = op.transposed()

    def apply_a(x):
        X = x.reshape(n, d)
        return apply_inverse(op, G @ X).ravel()

    def apply_at(x):
        X = x.reshape(n, d)[::-1]
        Y = apply_inverse(opT, X)[::-1]
        return (GT @ Y).ravel()

    return s.ha * L * _hager_inf_norm(apply_a, apply_at, n * d)
