"""
Tests for the traveling-wave boundary-value solver and the minimal speed search
"""

import math

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import DomainTooSmall, InvalidParams
from core.models import NoMonotoneConnection, Params, WaveProfile
from core.services.model_core import spectral_exponents
from core.services.wave_solver import (
    MonotoneConnectionTest,
    TravelingWaveSystem,
    WaveGrid,
    WaveSolverFactory,
    shift_profile,
)
from tests.fixtures.factories import tanh_profile


class WaveGridTestCase(SimpleTestCase):
    """Grid helpers"""

    def test_with_spacing_keeps_node_at_zero(self):
        """Test that the grid is symmetric with an odd point count"""
        grid = WaveGrid.with_spacing(10.0, 0.3)
        self.assertEqual(grid.n % 2, 1)
        self.assertAlmostEqual(grid.h, 0.3)
        self.assertAlmostEqual(float(grid.xi[grid.n // 2]), 0.0)
        self.assertGreaterEqual(grid.L, 10.0)


class TravelingWaveSystemTestCase(SimpleTestCase):
    """Residual and Jacobian of the discretised wave equations"""

    def setUp(self):
        """Set up a small system"""
        self.p = Params(0.5, 1.5, 1.0, 1.0)
        self.grid = WaveGrid(20.0, 81)
        self.system = TravelingWaveSystem(1.8, self.p, self.grid)
        profile = tanh_profile(c=1.8, L=20.0, n=81)
        self.Y = np.concatenate([profile.U, profile.V])

    def test_jacobian_matches_finite_differences(self):
        """Test J against central differences of the residual"""
        J = self.system.jacobian(self.Y).toarray()
        eps = 1e-6
        for k in (0, 5, 40, 80, 81, 120, 161):
            step = np.zeros_like(self.Y)
            step[k] = eps
            column = (self.system.residual(self.Y + step) - self.system.residual(self.Y - step)) / (2 * eps)
            np.testing.assert_allclose(J[:, k], column, atol=1e-5)

    def test_phase_row(self):
        """Test that the phase row measures U(0) - 1/2"""
        R = self.system.residual(self.Y)
        self.assertAlmostEqual(R[self.grid.n - 1], 0.0, places=12)


class ConnectionTestTestCase(SimpleTestCase):
    """Existence predicate failure reasons"""

    def setUp(self):
        """Set up the predicate"""
        self.p = Params(0.5, 1.5, 1.0, 1.0)
        self.grid = WaveGrid(30.0, 601)
        self.test = MonotoneConnectionTest(self.p)
        self.profile = tanh_profile(L=30.0, n=601)

    def test_reasons(self):
        """Test the non-finite, box, monotonicity and sign failures"""
        U, V = np.array(self.profile.U), np.array(self.profile.V)
        bad = U.copy()
        bad[10] = np.nan
        self.assertEqual(self.test.failure_reason(1.8, bad, V, self.grid), 'non_finite')
        bad = U.copy()
        bad[10] = 1.2
        self.assertEqual(self.test.failure_reason(1.8, bad, V, self.grid), 'out_of_box')
        bad = U.copy()
        bad[400] = bad[399] + 0.01
        self.assertEqual(self.test.failure_reason(1.8, bad, V, self.grid), 'non_monotone')
        bad = U.copy()
        bad[-3:] = -1e-3
        self.assertIn(self.test.failure_reason(1.8, bad, V, self.grid), ('non_monotone', 'negative'))


class WaveSolverTestCase(SimpleTestCase):
    """Profile solves and the minimal speed search"""

    def setUp(self):
        """Set up the service and parameter sets"""
        self.service = WaveSolverFactory.create_wave_solver_service()
        self.linear = Params(0.5, 1.5, 1.0, 1.0)
        self.pushed = Params(0.9, 5.0, 1.0, 1.0)

    def test_profile_at_supercritical_speed(self):
        """Test a monotone profile with the phase condition at c = 1.8"""
        w = self.service.solve_wave_profile(1.8, self.linear, L=30.0, n=1201)
        self.assertIsInstance(w, WaveProfile)
        self.assertTrue(w.converged)
        mid = w.n // 2
        self.assertAlmostEqual(float(w.U[mid]), 0.5, places=6)
        self.assertLessEqual(float(np.max(np.diff(w.U))), 1e-6)
        self.assertGreaterEqual(float(np.min(np.diff(w.V))), -1e-6)
        self.assertGreater(w.U[0], 0.99)
        self.assertLess(w.U[-1], 1e-3)

    def test_discretization_order(self):
        """Test second-order convergence under grid refinement"""
        order = self.service.discretization_order(1.8, self.linear, L=30.0, n=601)
        self.assertGreaterEqual(order, 1.8)

    def test_domain_too_small(self):
        """Test that a domain that cannot resolve the fast decay is refused"""
        with self.assertRaises(DomainTooSmall):
            self.service.solve_wave_profile(1.8, self.linear, L=5.0, n=101)

    def test_rejects_weak_strong_parameters(self):
        """Test b < 1"""
        with self.assertRaises(InvalidParams):
            self.service.solve_wave_profile(1.8, Params(0.5, 0.5, 1.0, 1.0), L=30.0, n=601)

    def test_minimal_speed_linear_selection(self):
        """Test c* = 2 sqrt(1 - a) where the linear condition holds"""
        result = self.service.minimal_speed(self.linear, tol=1e-3, L=50.0, n=2501)
        self.assertLessEqual(abs(result.c_star - math.sqrt(2.0)), 5e-3)
        self.assertIsNotNone(result.profile)
        self.assertTrue(result.attempts)

    def test_minimal_speed_nonlinear_selection(self):
        """Test c* above 2 sqrt(1 - a) where the nonlinear condition holds"""
        result = self.service.minimal_speed(self.pushed, tol=1e-3, L=100.0, n=5001)
        self.assertGreaterEqual(result.c_star, 2.0 * math.sqrt(0.1) + 0.02)
        self.assertLessEqual(result.c_star, 2.0)
        below, above = result.bracket
        self.assertLessEqual(above - below, 1e-3 + 1e-12)
        self.assertEqual(result.profile.c, above)

        attempt = self.service.solve_wave_profile(below, self.pushed, L=100.0, n=5001,
                                                initial=result.profile)
        self.assertIsInstance(attempt, NoMonotoneConnection)
        self.assertIn(attempt.reason, ('stagnation', 'out_of_box', 'non_monotone', 'non_finite',
                                     'negative', 'negative_slow_mode'))

    def test_asymptotic_cases(self):
        """Test which exponent governs each tail at a supercritical speed"""
        w = self.service.solve_wave_profile(1.8, self.linear, L=40.0, n=2001)
        report = self.service.verify_asymptotics(w, self.linear)
        self.assertEqual(report.cases['u_plus'], 'lambda_u_plus')
        self.assertEqual(report.cases['v_plus'], 'forced_by_u')
        self.assertEqual(report.cases['u_minus'], 'forced_by_v')
        self.assertLess(report.relative_errors['u_plus'], 0.05)

    def test_u_tail_case_follows_the_speed(self):
        """Test that the fast exponent is predicted only for the pushed minimal wave"""
        w = tanh_profile(c=1.0, L=30.0, n=601)
        at_minimal = self.service.verify_asymptotics(w, self.pushed, c_star=1.0)
        self.assertEqual(at_minimal.cases['u_plus'], 'lambda_u_minus')
        self.assertEqual(at_minimal.predicted['u_plus'], spectral_exponents(1.0, self.pushed).lambda_u_minus)

        above_minimal = self.service.verify_asymptotics(w, self.pushed, c_star=0.9)
        self.assertEqual(above_minimal.cases['u_plus'], 'lambda_u_plus')
        unknown = self.service.verify_asymptotics(w, self.pushed)
        self.assertEqual(unknown.cases['u_plus'], 'lambda_u_plus')

    def test_u_tail_case_does_not_follow_the_fit(self):
        """Test that a tail decaying at the wrong rate is reported off prediction"""
        w = tanh_profile(c=1.0, L=30.0, n=601)
        e = spectral_exponents(1.0, self.pushed)
        report = self.service.verify_asymptotics(w, self.pushed, c_star=1.0)
        self.assertAlmostEqual(report.fitted_rate_u_plus, -1.0, delta=1e-3)
        expected = abs(-1.0 - e.lambda_u_minus) / abs(e.lambda_u_minus)
        self.assertAlmostEqual(report.relative_errors['u_plus'], expected, delta=1e-2)
        self.assertFalse(report.within_tolerance)

    def test_u_tail_case_at_the_linear_speed(self):
        """Test the double root at c = 2 sqrt(1 - a)"""
        w = tanh_profile(c=self.linear.linear_speed, L=30.0, n=601)
        report = self.service.verify_asymptotics(w, self.linear, c_star=self.linear.linear_speed)
        self.assertEqual(report.cases['u_plus'], 'defective')

    def test_asymptotics_equal_exponents(self):
        """Test the resonant case mu_u^+ = mu_v^+"""
        p = Params(0.5, 2.0, 1.0, 1.0)
        w = self.service.solve_wave_profile(1.8, p, L=40.0, n=2001)
        report = self.service.verify_asymptotics(w, p)
        self.assertTrue(report.cases['u_minus'].startswith('equal'))

    def test_shift_profile(self):
        """Test shifting by whole cells with end-state padding"""
        w = tanh_profile(L=10.0, n=101)
        shifted = shift_profile(w, 3)
        np.testing.assert_allclose(shifted.U[:-3], w.U[3:])
        self.assertEqual(shifted.U[-1], w.U[-1])
        back = shift_profile(w, -3)
        np.testing.assert_allclose(back.U[3:], w.U[:-3])
        self.assertEqual(back.U[0], w.U[0])
