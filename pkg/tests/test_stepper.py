import numpy as np
import pytest

from fide import (
    CorrectionPlan,
    Problem,
    SolverParams,
    Trajectory,
    error_metrics,
    observed_order,
    solve_famm,
    solve_famm_corrected,
    solve_imex,
)
from fide.errors import DegenerateNormalizationError, DomainError, FideError
from fide.harness.registry import get_problem
from fide.specfun import gamma_fn


def ex1_error(alpha, p, h, plan=None):
    rp = get_problem("example1")
    par = SolverParams.over(1.0, h, alpha=alpha, p=p, plan=plan or CorrectionPlan())
    tr = solve_famm_corrected(rp.problem(alpha, p), par)
    return error_metrics(tr, rp.exact(alpha, p))[0]


def power_problem(alpha, sigma, lam):
    """``D^a u = lam u + f`` with exact solution ``t^sigma``."""
    c = gamma_fn(sigma + 1) / gamma_fn(sigma + 1 - alpha)
    return Problem(
        lam,
        lambda t, u: np.array([c * t ** (sigma - alpha) - lam * t**sigma]),
        [0.0],
        state_independent=True,
    )


def classical_imex(lam, f, u0, h, n, p):
    """IMEX Euler (p=0) or Crank-Nicolson/AB2 with an Euler-type first step (p=1)."""
    u = np.zeros(n + 1)
    u[0] = u0
    t = h * np.arange(n + 1)
    for k in range(n):
        if p == 0:
            u[k + 1] = (u[k] + h * f(t[k], u[k])) / (1 - h * lam)
        else:
            fk = f(t[k], u[k])
            ext = fk if k == 0 else 1.5 * fk - 0.5 * f(t[k - 1], u[k - 1])
            if k == 0:
                ext = fk
            u[k + 1] = (u[k] + 0.5 * h * lam * u[k] + h * ext) / (1 - 0.5 * h * lam)
    return u


class TestTrivial:
    @pytest.mark.parametrize("p", [0, 1])
    @pytest.mark.parametrize("solver", [solve_famm, solve_imex])
    def test_zero_rhs(self, solver, p):
        prob = Problem(0.0, lambda t, u: np.zeros(2), [1.5, -2.0])
        tr = solver(prob, SolverParams(alpha=0.6, p=p, h=0.1, n_steps=20))
        np.testing.assert_allclose(tr.states, np.tile([1.5, -2.0], (21, 1)), atol=1e-14)
        np.testing.assert_array_equal(tr.states[0], [1.5, -2.0])
        np.testing.assert_allclose(tr.times, 0.1 * np.arange(21))

    def test_empty_plan_agrees(self):
        rp = get_problem("case2")
        par = SolverParams.over(1.0, 2**-5, alpha=0.5, p=1, picard_tol=1e-12)
        a = solve_famm(rp.problem(0.5), par)
        b = solve_famm_corrected(rp.problem(0.5), par)
        np.testing.assert_array_equal(a.states, b.states)

    def test_famm_and_imex_agree_for_constant_force(self):
        prob = Problem(-0.7, lambda t, u: np.array([0.3]), [1.0])
        par = SolverParams(alpha=0.4, p=0, h=0.05, n_steps=40)
        np.testing.assert_allclose(solve_famm(prob, par).states, solve_imex(prob, par).states,
                                   rtol=0, atol=1e-15)


class TestExample1:
    def test_table_start(self):
        assert ex1_error(0.5, 0, 2**-3) == pytest.approx(9.7878e-03, rel=0.02)

    def test_table_second_order(self):
        errs = [ex1_error(0.9, 1, 2.0**-e) for e in (6, 7)]
        assert errs[1] == pytest.approx(1.7663e-06, rel=0.02)
        assert observed_order(errs)[0] == pytest.approx(2.0363, abs=0.05)

    @pytest.mark.parametrize("p", [0, 1])
    def test_history_correction_captures_solution(self, p):
        # u = t^(p + a) is the only non-smooth part, so one history power makes the scheme exact
        a = 0.9 if p == 0 else 0.1
        plan = CorrectionPlan((), (p + a,))
        errs = [ex1_error(a, p, 2.0**-e, plan) for e in range(3, 8)]
        assert max(errs) < 1e-12
        raw = [ex1_error(a, p, 2.0**-e) for e in range(3, 8)]
        assert min(raw) > 1e-8


class TestManufactured:
    @pytest.mark.parametrize("p", [0, 1])
    def test_power_solution_is_exact(self, p):
        a, s = 0.5, 0.8
        prob = power_problem(a, s, -1.0)
        plan = CorrectionPlan((s,), (s,), (s - a, s), (s - a, s))
        par = SolverParams.over(1.0, 2**-4, alpha=a, p=p, plan=plan, picard_tol=1e-13)
        for solver in (solve_famm_corrected, solve_imex):
            tr = solver(prob, par)
            assert np.abs(tr.states[:, 0] - tr.times**s).max() < 1e-7


class TestClassicalLimit:
    @pytest.mark.parametrize("p", [0, 1])
    def test_matches_classical_imex(self, p):
        lam = -2.0
        f = lambda t, u: np.sin(t) - 0.1 * u**2  # noqa: E731
        prob = Problem(lam, lambda t, u: np.atleast_1d(f(t, u[0])), [1.0])
        n, h = 64, 1.0 / 64
        tr = solve_imex(prob, SolverParams(alpha=1.0, p=p, h=h, n_steps=n))
        ref = classical_imex(lam, f, 1.0, h, n, p)
        np.testing.assert_allclose(tr.states[:, 0], ref, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("p", [0, 1])
    def test_order(self, p):
        lam = -1.0
        # u = exp(-t) + t^2, f(t) = 2t + t^2 on u' = -u + f
        prob = Problem(lam, lambda t, u: np.array([2 * t + t * t]), [1.0])
        exact = lambda t: np.array([np.exp(-t) + t * t])  # noqa: E731
        errs = []
        for n in (32, 64, 128):
            tr = solve_imex(prob, SolverParams(alpha=1.0, p=p, h=1.0 / n, n_steps=n))
            errs.append(error_metrics(tr, exact)[1])
        assert min(observed_order(errs)) == pytest.approx(p + 1, abs=0.1)


class TestMetrics:
    def traj(self):
        t = np.linspace(0, 1, 5)
        return Trajectory(t, (1 + t)[:, None].copy())

    def test_exact_gives_zero(self):
        assert error_metrics(self.traj(), lambda t: np.array([1 + t])) == (0.0, 0.0)

    def test_endpoint_offset(self):
        tr = self.traj()
        tr.states[-1] += 0.01
        e_end, e_glob = error_metrics(tr, lambda t: np.array([1 + t]))
        assert e_end == pytest.approx(0.01 / 2.0)
        assert e_glob == pytest.approx(0.01 / 2.0)

    def test_degenerate(self):
        with pytest.raises(DegenerateNormalizationError):
            error_metrics(self.traj(), lambda t: np.array([0.0]))

    def test_orders(self):
        assert observed_order([4e-3, 1e-3]) == pytest.approx([2.0])
        assert observed_order([2e-3, 1e-3]) == pytest.approx([1.0])
        with pytest.raises(DomainError):
            observed_order([1e-3])
        with pytest.raises(DomainError):
            observed_order([1e-3, 0.0])

    def test_table_column_orders(self):
        errs = [9.7878e-03, 5.0535e-03, 2.5658e-03, 1.2925e-03, 6.4866e-04]
        assert observed_order(errs) == pytest.approx([0.9537, 0.9779, 0.9892, 0.9947], abs=2e-4)


class TestParams:
    def test_validation(self):
        with pytest.raises(DomainError):
            SolverParams(alpha=0.0, p=0, h=0.1, n_steps=10)
        with pytest.raises(DomainError):
            SolverParams(alpha=0.5, p=2, h=0.1, n_steps=10)
        with pytest.raises(DomainError):
            SolverParams(alpha=0.5, p=0, h=0.1, n_steps=10, eps_circulant=1e-13)
        with pytest.raises(DomainError):
            SolverParams.over(1.0, 0.3, alpha=0.5, p=0)

    def test_over(self):
        par = SolverParams.over(10.0, 2**-3, alpha=0.5, p=0)
        assert par.n_steps == 80 and par.T == 10.0

    def test_problem_shapes(self):
        with pytest.raises(DomainError):
            Problem(np.eye(3), lambda t, u: u, [1.0, 2.0])

    def test_singular_step(self):
        a = 0.5
        h = 0.25
        lam = gamma_fn(a + 1) / h**a  # 1 - h^a beta_0 lam = 0
        prob = Problem(lam, lambda t, u: np.zeros(1), [1.0])
        with pytest.raises(FideError):
            solve_imex(prob, SolverParams(alpha=a, p=0, h=h, n_steps=4))
