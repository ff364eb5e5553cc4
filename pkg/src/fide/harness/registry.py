"""The named benchmark problems."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from fide.corrections import CorrectionPlan
from fide.errors import DomainError
from fide.problem import Problem
from fide.specfun import gamma_fn, mittag_leffler

__all__ = ["RegisteredProblem", "registry", "get_problem", "problem_names", "case2_variant"]


@dataclass(frozen=True)
class RegisteredProblem:
    """A problem family indexed by ``(alpha, p)``.

    ``p`` only matters for ``example1``, whose data are chosen to match the
    scheme order.
    """

    name: str
    description: str
    domain_T: float
    build: Callable
    exact_for: Optional[Callable]
    plan_for: Callable
    picard_tol: float = 1e-7
    extra: dict = field(default_factory=dict)

    @property
    def has_exact(self) -> bool:
        return self.exact_for is not None

    def problem(self, alpha: float, p: int = 0) -> Problem:
        return self.build(alpha, p)

    def exact(self, alpha: float, p: int = 0):
        return None if self.exact_for is None else self.exact_for(alpha, p)

    def default_plan(self, alpha: float, p: int = 0, m: Optional[int] = None) -> CorrectionPlan:
        return self.plan_for(alpha, p, m)


def _no_plan(alpha, p, m):
    return CorrectionPlan()


# -- example1: D^a u = f(t), u = t^(p + a) ---------------------------------


def _ex1_build(alpha, p):
    c = gamma_fn(alpha + p + 1.0) / gamma_fn(p + 1.0)
    return Problem(
        0.0,
        lambda t, u: np.array([c * t**p]),
        [0.0],
        lipschitz_bound=0.0,
        force_batch=lambda t, U: (c * t**p)[:, None],
        state_independent=True,
        name="example1",
    )


def _ex1_exact(alpha, p):
    return lambda t: np.array([t ** (p + alpha)])


# -- example2: stiff 3x3 system ---------------------------------------------

EX2_P = np.array([[-1.0, 0.0, 0.001], [-0.0005, -0.0008, -0.0002], [0.001, 0.0, -0.001]])
EX2_S = np.array([[-0.006, 0.0, 0.002], [-0.001, -0.002, 0.0], [0.0, -0.005, -0.008]])
EX2_A = np.array([0.5, 0.8, 1.0, 1.0, 1.0, 1.0])


def _ex2_powers(alpha):
    return np.array([alpha, 2 * alpha, 1 + alpha, 5 * alpha, 2.0, 2.0 + alpha])


def _ex2_parts(alpha):
    sig = _ex2_powers(alpha)
    gam = np.array([gamma_fn(s + 1.0) / gamma_fn(s + 1.0 - alpha) for s in sig])

    def exact_batch(t):
        t = np.asarray(t, float)[:, None]
        terms = EX2_A * t**sig
        return terms.reshape(-1, 3, 2).sum(axis=2) + 1.0

    def g_batch(t):
        t = np.asarray(t, float)
        tt = t[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            dterms = np.where(sig > alpha, EX2_A * gam * tt ** (sig - alpha), 0.0)
        dterms = np.where(np.isclose(sig, alpha), EX2_A * gam, dterms)
        return dterms.reshape(-1, 3, 2).sum(axis=2) - exact_batch(t) @ (EX2_P + EX2_S).T

    return exact_batch, g_batch


def _ex2_build(alpha, p):
    _, g_batch = _ex2_parts(alpha)

    def batch(t, U):
        return U @ EX2_S.T + g_batch(t)

    return Problem(
        EX2_P,
        lambda t, u: batch(np.array([t]), np.asarray(u)[None, :])[0],
        [1.0, 1.0, 1.0],
        lipschitz_bound=float(np.abs(EX2_S).sum(axis=1).max()),
        force_batch=batch,
        name="example2",
    )


def _ex2_exact(alpha, p):
    exact_batch, _ = _ex2_parts(alpha)
    return lambda t: exact_batch(np.array([t]))[0]


def _ex2_plan(alpha, p, m):
    m = 3 if m is None else m
    sigma = (alpha, 2 * alpha, 1 + alpha)[:m]
    delta = (2 * alpha, 1 + alpha, 5 * alpha)[:m]
    return CorrectionPlan.from_sets(sigma, sorted(delta))


# -- case1: D^a u = -0.2 u, u0 = 1 -----------------------------------------


def _case1_build(alpha, p):
    return Problem(
        -0.2,
        lambda t, u: np.zeros(1),
        [1.0],
        lipschitz_bound=0.0,
        force_batch=lambda t, U: np.zeros((np.size(t), 1)),
        state_independent=True,
        name="case1",
    )


def _case1_exact(alpha, p):
    return lambda t: np.array([mittag_leffler(alpha, -0.2 * t**alpha)])


def _kalpha_plan(alpha, p, m):
    """Powers ``k alpha``; for ``p = 0`` the ``u`` family uses one power fewer."""
    m = 2 if m is None else m
    pw = tuple(k * alpha for k in range(1, m + 1))
    su = pw[: max(m - 1, 0)] if p == 0 else pw
    return CorrectionPlan(su, pw, pw, pw)


# -- case2: f = -0.1 u^2 + g with a quartic exact solution --------------------

CASE2_COEF = np.array([1.0, 1.0, 1.0, 1.0, 1.0])
CASE2_PRINTED_COEF = np.array([1.0, 1.0, 0.5, 1.0 / 3.0, 0.25])


def _case2_family(coef, name):
    coef = np.asarray(coef, dtype=float)
    n = np.arange(1, coef.size)

    def u(t):
        return np.polynomial.polynomial.polyval(t, coef)

    def g_for(alpha):
        dcoef = coef[1:] * np.array([gamma_fn(k + 1.0) / gamma_fn(k + 1.0 - alpha) for k in n])

        def g(t):
            t = np.asarray(t, float)
            du = (dcoef * t[..., None] ** (n - alpha)).sum(axis=-1)
            v = u(t)
            return du + v + 0.1 * v**2

        return g

    def build(alpha, p):
        g = g_for(alpha)
        return Problem(
            -1.0,
            lambda t, v: -0.1 * np.asarray(v) ** 2 + g(t),
            [coef[0]],
            lipschitz_bound=0.2 * float(np.abs(coef).sum()),
            force_batch=lambda t, U: -0.1 * U**2 + g(t)[:, None],
            name=name,
        )

    def exact(alpha, p):
        return lambda t: np.array([u(t)])

    return build, exact


_case2_build, _case2_exact = _case2_family(CASE2_COEF, "case2")


def case2_variant(coefficients=CASE2_PRINTED_COEF) -> RegisteredProblem:
    """``case2`` with another polynomial exact solution (ascending coefficients)."""
    build, exact = _case2_family(coefficients, "case2-variant")
    return RegisteredProblem("case2-variant", "case2 with custom polynomial solution", 1.0,
                             build, exact, _case2_plan, picard_tol=1e-7)


def _case2_plan(alpha, p, m):
    if p == 0 and m is None:
        return CorrectionPlan()
    m = 2 if m is None else m
    pw = tuple(sorted((1.0 - alpha, 1.0)))[:m]
    return CorrectionPlan.from_sets(pw, pw)


# -- case3: f = 0.01 u (1 - u^2) + 2 cos(2 pi t) -----------------------------


def _case3_build(alpha, p):
    def batch(t, U):
        return 0.01 * U * (1.0 - U**2) + 2.0 * np.cos(2.0 * np.pi * np.asarray(t))[:, None]

    return Problem(
        -1.0,
        lambda t, u: 0.01 * np.asarray(u) * (1.0 - np.asarray(u) ** 2) + 2.0 * np.cos(2.0 * np.pi * t),
        [1.0],
        force_batch=batch,
        name="case3",
    )


def _case3_plan(alpha, p, m):
    if p == 0 and m is None:
        return CorrectionPlan()
    m = 3 if m is None else m
    pw = (alpha, 2 * alpha, 1 + alpha)[:m]
    return CorrectionPlan.from_sets(pw, pw)


def _ex2_default(alpha, p, m):
    if p == 0 and m is None:
        return CorrectionPlan()
    return _ex2_plan(alpha, p, m)


def _case1_default(alpha, p, m):
    return _kalpha_plan(alpha, p, m)


_REGISTRY = (
    RegisteredProblem("example1", "linear FDE with source Gamma(a+p+1)/Gamma(p+1) t^p",
                      1.0, _ex1_build, _ex1_exact, _no_plan, picard_tol=1e-10),
    RegisteredProblem("example2", "stiff 3x3 linear system", 10.0, _ex2_build, _ex2_exact,
                      _ex2_default, picard_tol=5e-7),
    RegisteredProblem("case1", "relaxation, Mittag-Leffler solution", 40.0, _case1_build,
                      _case1_exact, _case1_default, picard_tol=1e-7),
    RegisteredProblem("case2", "quadratic nonlinearity, u = 1 + t + t^2 + t^3 + t^4", 1.0,
                      _case2_build, _case2_exact, _case2_plan, picard_tol=1e-7),
    RegisteredProblem("case3", "cubic nonlinearity with periodic forcing", 50.0,
                      _case3_build, None, _case3_plan, picard_tol=1e-6,
                      extra={"benchmark_h": 2.0**-11, "benchmark_m": 3}),
)


def registry() -> list:
    return list(_REGISTRY)


def problem_names() -> list:
    return [r.name for r in _REGISTRY]


def get_problem(name: str) -> RegisteredProblem:
    for r in _REGISTRY:
        if r.name == name:
            return r
    raise DomainError(f"unknown problem {name!r}; valid keys: {', '.join(problem_names())}")
