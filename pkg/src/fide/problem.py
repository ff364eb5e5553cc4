"""Problem, solver-parameter and trajectory containers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from fide.corrections import CorrectionPlan
from fide.errors import DomainError
from fide.specfun import DEFAULT_QUAD_POINTS

__all__ = ["Problem", "SolverParams", "Trajectory"]


@dataclass(frozen=True)
class Problem:
    """``D^alpha u = lambda_op u + force(t, u)``, ``u(0) = u0``.

    Parameters
    ----------
    lambda_op : float or (d, d) array
        Linear part, always treated implicitly.
    force : callable ``(t, u) -> (d,)``
        Remaining right-hand side.
    u0 : (d,) array
    lipschitz_bound : float, optional
        Lipschitz constant of ``force`` in ``u`` (used by diagnostics only).
    force_batch : callable ``(t, U) -> (n, d)``, optional
        Vectorised ``force`` over ``t`` of shape (n,) and ``U`` of shape (n, d).
    state_independent : bool
        ``force`` ignores ``u``; lets solvers evaluate it once.
    """

    lambda_op: object
    force: Callable
    u0: object
    lipschitz_bound: Optional[float] = None
    force_batch: Optional[Callable] = None
    state_independent: bool = False
    name: str = ""

    def __post_init__(self):
        u0 = np.atleast_1d(np.asarray(self.u0, dtype=float)).copy()
        if u0.ndim != 1:
            raise DomainError("u0 must be a vector")
        d = u0.size
        lam = np.asarray(self.lambda_op, dtype=float)
        if lam.ndim == 0:
            lam = float(lam) * np.eye(d)
        if lam.shape != (d, d):
            raise DomainError(f"lambda_op must be scalar or {d}x{d}, got shape {lam.shape}")
        if self.lipschitz_bound is not None and self.lipschitz_bound < 0:
            raise DomainError("lipschitz_bound must be non-negative")
        u0.setflags(write=False)
        lam = lam.copy()
        lam.setflags(write=False)
        object.__setattr__(self, "u0", u0)
        object.__setattr__(self, "lambda_op", lam)

    @property
    def dim(self) -> int:
        return self.u0.size

    def f(self, t: float, u) -> np.ndarray:
        return np.asarray(self.force(t, u), dtype=float).reshape(self.dim)

    def f_all(self, t, U) -> np.ndarray:
        """Force on a batch of times and states, shape (n, d)."""
        t = np.asarray(t, dtype=float)
        U = np.asarray(U, dtype=float).reshape(t.size, self.dim)
        if self.force_batch is not None:
            return np.asarray(self.force_batch(t, U), dtype=float).reshape(t.size, self.dim)
        out = np.empty((t.size, self.dim))
        for i in range(t.size):
            out[i] = self.f(t[i], U[i])
        return out


@dataclass(frozen=True)
class SolverParams:
    """Discretisation and tolerance settings.

    ``n_steps * h`` is the final time.  ``picard_tol`` is the fixed-point
    tolerance used by every iteration (per-step, starting block, global).
    """

    alpha: float
    p: int
    h: float
    n_steps: int
    plan: CorrectionPlan = field(default_factory=CorrectionPlan)
    picard_tol: float = 1e-10
    picard_max: int = 500
    quad_points: int = DEFAULT_QUAD_POINTS
    eps_circulant: float = 5e-9

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.p not in (0, 1):
            raise DomainError(f"p must be 0 or 1, got {self.p}")
        if not (self.h > 0.0):
            raise DomainError(f"h must be positive, got {self.h}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError(f"n_steps must be a positive integer, got {self.n_steps}")
        object.__setattr__(self, "n_steps", int(self.n_steps))
        if not (self.picard_tol > 0.0):
            raise DomainError("picard_tol must be positive")
        if self.picard_max < 1:
            raise DomainError("picard_max must be positive")
        if self.quad_points < 1:
            raise DomainError("quad_points must be positive")
        if not (self.eps_circulant >= 1e-12):
            raise DomainError(f"eps_circulant must be >= 1e-12, got {self.eps_circulant}")
        if not isinstance(self.plan, CorrectionPlan):
            raise DomainError("plan must be a CorrectionPlan")

    @classmethod
    def over(cls, T: float, h: float, **kw) -> "SolverParams":
        """Parameters for the interval ``(0, T]`` with step ``h``."""
        n = round(T / h)
        if n < 1 or abs(n * h - T) > 1e-12 * abs(T):
            raise DomainError(f"T={T} is not an integer multiple of h={h}")
        return cls(h=h, n_steps=n, **kw)

    @property
    def T(self) -> float:
        return self.n_steps * self.h


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]
