import numpy as np
import pytest

from fide.errors import DomainError
from fide.stability import (
    StabilityQuery,
    boundary_locus,
    classify,
    is_stable,
    simulate_test_equation,
)
from stability_checks import inclusion_exceptions, simulation_agreement


class TestLocus:
    @pytest.mark.parametrize("p", [0, 1])
    @pytest.mark.parametrize("a", [0.2, 0.5, 0.9])
    @pytest.mark.parametrize("kappa", [0.0, 0.5, -0.3])
    def test_passes_through_origin(self, p, a, kappa):
        loc = boundary_locus(StabilityQuery(p, a, kappa, k_trunc=10_000, n_samples=256))
        assert loc.xi_angles[0] == 0.0
        assert abs(loc.h_hat[0]) <= 1e-8

    def test_classical_circle(self):
        loc = boundary_locus(StabilityQuery(0, 1.0, 0.0, n_samples=512))
        xi = np.exp(1j * loc.xi_angles)
        np.testing.assert_allclose(loc.h_hat, 1.0 - xi, atol=1e-12)

    def test_closed_curve(self):
        loc = boundary_locus(StabilityQuery(1, 0.6, 0.5))
        jump = np.abs(np.diff(np.append(loc.h_hat, loc.h_hat[0])))
        assert jump.max() < loc.diameter / 10

    def test_zero_denominator_flagged(self):
        # kappa = 1 puts 1 + kappa xi = 0 at xi = -1
        loc = boundary_locus(StabilityQuery(0, 0.5, 1.0, n_samples=64))
        assert not np.isfinite(loc.h_hat[32])
        assert np.isfinite(np.delete(loc.h_hat, 32)).all()

    @pytest.mark.parametrize("a", [0.5, 0.8])
    def test_truncation(self, a):
        ref = boundary_locus(StabilityQuery(0, a, 0.5)).h_hat
        d = [np.abs(boundary_locus(StabilityQuery(0, a, 0.5, k_trunc=k)).h_hat - ref).max()
             for k in (10**3, 10**4)]
        # the neglected tail shrinks like k^(-a)
        assert d[0] / d[1] == pytest.approx(10**a, rel=0.5)
        if a >= 0.8:
            assert d[1] < 1e-3

    def test_query_validation(self):
        with pytest.raises(DomainError):
            StabilityQuery(2, 0.5)
        with pytest.raises(DomainError):
            StabilityQuery(0, 0.5, n_samples=8)
        with pytest.raises(DomainError):
            StabilityQuery(0, 0.5, kappa=float("nan"))


class TestMembership:
    def test_unit_disk_interior_unstable(self):
        loc = boundary_locus(StabilityQuery(0, 1.0, 0.0, n_samples=512))
        assert is_stable(1.0, loc) is False
        assert is_stable(-1.0, loc) is True
        assert is_stable(3.0, loc) is True

    def test_origin_indeterminate(self):
        loc = boundary_locus(StabilityQuery(0, 0.5, 0.5))
        assert classify(0.0, loc) is None
        with pytest.raises(DomainError):
            is_stable(0.0, loc)

    @pytest.mark.parametrize("a", [0.3, 0.7])
    def test_deep_negative_stable(self, a):
        loc = boundary_locus(StabilityQuery(0, a, 0.5))
        assert is_stable(-1e6, loc)
        assert simulate_test_equation(-1e6, 0, a, 0.5, 10_000).max() <= 1.0 + 1e-12

    def test_deep_negative_p1_large_kappa(self):
        # the explicit part grows with kappa |h_hat| and wins far out on the axis
        loc = boundary_locus(StabilityQuery(1, 0.5, 0.5))
        assert is_stable(-1e6, loc) is False
        assert simulate_test_equation(-1e6, 1, 0.5, 0.5, 200).max() > 1e3

    @pytest.mark.parametrize("p", [0, 1])
    def test_simulation_agreement(self, p):
        frac, n = simulation_agreement(p, 0.5, 0.5, 10, seed=p)
        assert n == 20 and frac == 1.0

    def test_monotone_inclusion(self):
        bad, n = inclusion_exceptions(nx=20, ny=13)
        assert bad <= 0.01 * n


class TestSimulation:
    def test_zero_step(self):
        np.testing.assert_allclose(simulate_test_equation(0.0, 0, 0.5, 0.0, 50), 1.0,
                                   atol=1e-13)

    def test_backward_euler(self):
        u = simulate_test_equation(-1.0, 0, 1.0, 0.0, 10)
        np.testing.assert_allclose(u, 0.5 ** np.arange(11), rtol=0, atol=1e-13)

    def test_overflow_stops(self):
        u = simulate_test_equation(0.9, 0, 1.0, 0.0, 10_000)
        assert len(u) < 10_001 and u[-1] > 1e300

    def test_needs_steps(self):
        with pytest.raises(DomainError):
            simulate_test_equation(-1.0, 0, 0.5, 0.0, 1)

    @pytest.mark.parametrize("p", [0, 1])
    def test_numpy_twin(self, p):
        from fide.coeffs import adams_moulton, history_stencil, kernel_table
        from fide.stability import _simulate_nb, _simulate_np

        n, a = 300, 0.6
        st = history_stencil(kernel_table(a, 1.0, n + 2), p, n)
        cols = np.zeros((2, n))
        for j, c in enumerate(st.cols):
            cols[j] = c
        beta = np.zeros(2)
        beta[: p + 1] = adams_moulton(a, p).beta
        out = []
        for fn in (_simulate_nb, _simulate_np):
            u = np.zeros(n + 1, dtype=complex)
            u[0] = 1.0
            fn(cols, np.asarray(st.lag), st.j_first, st.prefactor, beta[0], beta[1], p,
               -0.7 + 0.4j, 0.5, n, u)
            out.append(u)
        np.testing.assert_allclose(out[0], out[1], rtol=1e-12, atol=1e-15)
