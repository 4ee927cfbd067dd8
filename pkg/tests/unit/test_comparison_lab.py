"""
Tests for the sub/super-solution pairs, residual scans, ordering checks and
trajectory statements
"""

import math
from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ConfigError, Infeasible, NoShiftFound, OrderingViolated, SpecInvalid
from core.models import FieldState, Params, Region, Scenario, SimConfig, SolutionKind, SubSuperSpec
from core.services.comparison_lab import (
    ComparisonLabFactory,
    InteriorConvergenceCheck,
    OdeBoundCheck,
    SubSuperPair,
    WaveInterpolant,
    exact_wave_residual,
    mirrored,
)
from tests.fixtures.factories import small_grid, tanh_profile, trajectory_from


def bare_spec(kind=SolutionKind.SUB, zeta0=1.0):
    """The wave itself: no amplitudes, no phase drift"""
    return SubSuperSpec(alpha=0.5, mu=0.05, tau=0.0, p=0.0, q=0.0, zeta0=zeta0, x0=zeta0 + 10.0, kind=kind)


class WaveInterpolantTestCase(SimpleTestCase):
    """Profile interpolation with exponential tails"""

    def setUp(self):
        """Set up an interpolant of a synthetic profile"""
        self.w = tanh_profile(L=30.0, n=601)
        self.wave = WaveInterpolant(self.w)

    def test_matches_samples(self):
        """Test exact reproduction at the nodes"""
        U, V, _, _ = self.wave(np.asarray(self.w.xi_grid))
        np.testing.assert_allclose(U, self.w.U, atol=1e-14)
        np.testing.assert_allclose(V, self.w.V, atol=1e-14)

    def test_tails_continue_monotonically(self):
        """Test the exponential continuation beyond the sampled domain"""
        U, V, dU, dV = self.wave(np.array([30.0, 35.0, 40.0, -35.0]))
        self.assertGreater(U[0], U[1])
        self.assertGreater(U[1], U[2])
        self.assertGreater(U[2], 0.0)
        self.assertLess(dU[1], 0.0)
        self.assertGreater(dV[1], 0.0)
        self.assertGreater(U[3], 1.0 - 1e-12)


class SubSuperPairTestCase(SimpleTestCase):
    """Pair construction and evaluation"""

    def setUp(self):
        """Set up a service, a profile and a pushed-looking spec"""
        self.service = ComparisonLabFactory.create_comparison_service()
        self.p = Params(0.5, 1.5, 1.0, 1.0)
        self.w = tanh_profile(c=1.8, L=30.0, n=601)
        self.spec = SubSuperSpec(alpha=0.7, mu=0.05, tau=0.025, p=0.05, q=0.025, zeta0=1.0, x0=11.0)

    def test_kind_mismatch(self):
        """Test that the builders check the sub/super kind"""
        with self.assertRaises(SpecInvalid):
            self.service.build_super_pair(self.p, self.w, bare_spec(SolutionKind.SUB))
        with self.assertRaises(SpecInvalid):
            self.service.build_sub_pair(self.p, self.w, bare_spec(SolutionKind.SUPER))

    def test_alpha_outside_interval(self):
        """Test alpha outside (-lambda_u^+, -lambda_u^-)"""
        with self.assertRaises(SpecInvalid):
            self.service.build_sub_pair(self.p, self.w, replace(self.spec, alpha=2.0))

    def test_rates_must_be_ordered(self):
        """Test tau < mu below the admissible bound"""
        with self.assertRaises(SpecInvalid):
            self.service.build_sub_pair(self.p, self.w, replace(self.spec, tau=0.1))
        with self.assertRaises(SpecInvalid):
            self.service.build_sub_pair(self.p, self.w, replace(self.spec, mu=0.6, tau=0.1))

    def test_negative_amplitude(self):
        """Test the non-negative amplitudes"""
        with self.assertRaises(SpecInvalid):
            replace(self.spec, p=-0.1)

    def test_bare_wave_has_zero_residual(self):
        """Test that p = q = 0 reproduces the wave with N1 = N2 = 0"""
        pair = self.service.build_sub_pair(self.p, self.w, bare_spec())
        x = np.linspace(-20.0, 40.0, 601)
        N1, N2, _ = pair.residuals(5.0, x)
        np.testing.assert_allclose(N1, 0.0, atol=1e-15)
        np.testing.assert_allclose(N2, 0.0, atol=1e-15)

    def test_branches_meet_at_the_kink(self):
        """Test continuity of u across W = 1"""
        pair = self.service.build_sub_pair(self.p, self.w, self.spec)
        t = 7.0
        kink = pair.kink(t)
        on_w, flat = pair.branches(t, np.array([kink]))
        self.assertAlmostEqual(float(on_w[0]), float(flat[0]), places=12)
        left, _ = pair.evaluate(t, np.array([kink - 1e-7]))
        right, _ = pair.evaluate(t, np.array([kink + 1e-7]))
        self.assertAlmostEqual(float(left[0]), float(right[0]), places=6)

    def test_sub_lies_below_the_shifted_wave(self):
        """Test u_sub <= U and v_sup >= V at the same phase"""
        pair = self.service.build_sub_pair(self.p, self.w, self.spec)
        t = 3.0
        x = np.linspace(-20.0, 40.0, 301)
        u, v = pair.evaluate(t, x)
        zeta, _ = pair.zeta(t)
        U, V, _, _ = pair.wave(x - pair.c * t + zeta)
        self.assertTrue(np.all(u <= U + 1e-15))
        self.assertTrue(np.all(v >= V - 1e-15))

    def test_super_lies_above_the_shifted_wave(self):
        """Test u_sup >= U and v_sub <= V at the same phase"""
        pair = self.service.build_super_pair(self.p, self.w, replace(self.spec, kind=SolutionKind.SUPER))
        t = 3.0
        x = np.linspace(-20.0, 40.0, 301)
        u, v = pair.evaluate(t, x)
        zeta, _ = pair.zeta(t)
        U, V, _, _ = pair.wave(x - pair.c * t - zeta)
        self.assertTrue(np.all(u >= U - 1e-15))
        self.assertTrue(np.all(v <= V + 1e-15))

    def test_converges_to_the_translated_wave(self):
        """Test (u, v)(t) -> (U, V)(x - c t + zeta0) as t grows"""
        pair = self.service.build_sub_pair(self.p, self.w, self.spec)
        t = 500.0
        x = pair.c * t + np.linspace(-10.0, 10.0, 21)
        u, v = pair.evaluate(t, x)
        U, V, _, _ = pair.wave(x - pair.c * t + 1.0)
        np.testing.assert_allclose(u, U, atol=1e-5)
        np.testing.assert_allclose(v, V, atol=1e-5)

    def test_mirrored_pair(self):
        """Test that the mirrored pair is the unmirrored one evaluated at -x"""
        pair = SubSuperPair(self.p, self.w, self.spec)
        flipped = SubSuperPair(self.p, self.w, mirrored(self.spec))
        x = np.linspace(-10.0, 30.0, 41)
        u, v = pair.evaluate(4.0, x)
        u_m, v_m = flipped.evaluate(4.0, -x)
        np.testing.assert_allclose(u_m, u)
        np.testing.assert_allclose(v_m, v)
        self.assertEqual(flipped.kink(4.0), -pair.kink(4.0))

    def test_check_residuals_on_bare_wave(self):
        """Test that the bare wave passes its own residual check"""
        pair = self.service.build_sub_pair(self.p, self.w, bare_spec())
        region = Region(t_min=10.0, t_max=20.0, x_lo=-10.0, x_hi=10.0)
        report = self.service.check_residuals(pair, region, slack=1e-12)
        self.assertTrue(report.passed)
        self.assertEqual(report.T_star, 10.0)
        self.assertEqual(report.to_dict()['kind'], 'sub')
        self.assertIn('N1_max_W', report.branch_extrema)

    def test_linear_speed_is_infeasible(self):
        """Test that no pair is built at the linear speed"""
        w = tanh_profile(c=self.p.linear_speed)
        with self.assertRaises(Infeasible) as ctx:
            self.service.choose_parameters(self.p, w, SolutionKind.SUB)
        self.assertEqual(ctx.exception.details['binding'], 'alpha interval')


class SandwichTestCase(SimpleTestCase):
    """Ordering of a run between shifted pairs"""

    def setUp(self):
        """Set up a run that is the profile two units ahead of the pairs"""
        self.service = ComparisonLabFactory.create_comparison_service()
        self.p = Params(0.5, 1.5, 1.0, 1.0)
        self.w = tanh_profile(c=1.8, L=30.0, n=601)
        self.wave = WaveInterpolant(self.w)
        self.grid = small_grid(60.0, 0.1)
        self.sub = self.service.build_sub_pair(self.p, self.w, bare_spec(SolutionKind.SUB))
        self.super = self.service.build_super_pair(self.p, self.w, bare_spec(SolutionKind.SUPER))

    def _run(self, fields):
        return trajectory_from(fields, self.p, self.grid, np.arange(0.0, 21.0, 1.0))

    def test_shifts_found(self):
        """Test T* = 0 and the smallest super shift covering the lead"""
        def fields(t):
            U, V, _, _ = self.wave(self.grid.x - 1.8 * t - 2.0)
            return U, V
        result = self.service.check_sandwich(self._run(fields), self.sub, self.super, self.w, t_from=0.0, slack=1e-9)
        self.assertTrue(result.passed, result.details)
        self.assertEqual(result.details['T_star'], 0.0)
        self.assertEqual(result.details['T_star_star'], 2.0)

    def test_no_shift(self):
        """Test a run that never reaches the sub-solution"""
        def fields(t):
            return np.zeros(self.grid.n), np.ones(self.grid.n)
        result = self.service.check_sandwich(self._run(fields), self.sub, self.super, self.w, t_from=0.0, slack=1e-9)
        self.assertFalse(result.passed)
        self.assertEqual(result.error_code, 'NO_SHIFT_FOUND')
        self.assertIsNone(result.details['T_star'])
        self.assertIsNotNone(result.details['worst_location_sub'])

    def test_no_shift_raises_from_search(self):
        """Test NoShiftFound from the shift search itself"""
        def fields(t):
            return np.zeros(self.grid.n), np.ones(self.grid.n)
        with self.assertRaises(NoShiftFound) as ctx:
            self.service.find_sandwich_shifts(self._run(fields), self.sub, self.super, self.w, t_from=0.0, slack=1e-9)
        self.assertIsNone(ctx.exception.details['T_star'])
        self.assertEqual(ctx.exception.error_code, 'NO_SHIFT_FOUND')


class ComparisonPrincipleTestCase(SimpleTestCase):
    """Ordered pairs of runs"""

    def setUp(self):
        """Set up a short configuration"""
        self.service = ComparisonLabFactory.create_comparison_service()
        self.p = Params(0.5, 1.5, 1.0, 1.0)
        self.grid = small_grid(30.0, 0.1)
        self.cfg = SimConfig(params=self.p, grid=self.grid, dt=0.05, t_end=5.0, snapshot_stride=20,
                             ic_kind=Scenario.A)

    def _state(self, u_height, v_value):
        x = self.grid.x
        u = u_height * np.exp(-x ** 2 / 4.0)
        return FieldState(t=0.0, u=u, v=np.full(self.grid.n, v_value), grid=self.grid)

    def test_ordered_runs_stay_ordered(self):
        """Test u_low <= u_high and v_low >= v_high"""
        result = self.service.check_comparison_principle(self.cfg, self.cfg, self._state(0.5, 1.0),
                                                         self._state(1.0, 0.8))
        self.assertTrue(result.passed, result.details)
        self.assertEqual(result.details['snapshots'], 6)

    def test_unordered_initial_data(self):
        """Test that unordered initial data are refused"""
        with self.assertRaises(ConfigError):
            self.service.check_comparison_principle(self.cfg, self.cfg, self._state(1.0, 1.0),
                                                    self._state(0.5, 1.0))

    def test_mismatched_configurations(self):
        """Test that both runs must share grid and steps"""
        other = replace(self.cfg, dt=0.025)
        with self.assertRaises(ConfigError):
            self.service.check_comparison_principle(self.cfg, other)

    def test_ordering_violation_raises(self):
        """Test OrderingViolated when the upper run dips below the lower one"""
        times = np.arange(0.0, 3.0, 1.0)
        low = trajectory_from(lambda t: (0.6 * np.ones(self.grid.n), np.ones(self.grid.n)), self.p, self.grid, times)
        high = trajectory_from(lambda t: ((0.8 - 0.2 * t) * np.ones(self.grid.n), np.ones(self.grid.n)),
                               self.p, self.grid, times)
        with self.assertRaises(OrderingViolated) as ctx:
            self.service.assert_ordered(low, high)
        self.assertAlmostEqual(ctx.exception.details['max_u_excess'], 0.2)
        self.assertEqual(ctx.exception.details['worst_t'], 2.0)

    def test_ordered_trajectories(self):
        """Test the ordering details of two ordered runs"""
        times = np.arange(0.0, 3.0, 1.0)
        low = trajectory_from(lambda t: (0.5 * np.ones(self.grid.n), np.ones(self.grid.n)), self.p, self.grid, times)
        high = trajectory_from(lambda t: (np.ones(self.grid.n), 0.5 * np.ones(self.grid.n)), self.p, self.grid, times)
        details = self.service.assert_ordered(low, high)
        self.assertEqual(details['max_u_excess'], 0.0)
        self.assertEqual(details['snapshots'], 3)


class StatementChecksTestCase(SimpleTestCase):
    """Checks on observables of a single run"""

    def setUp(self):
        """Set up a grid and parameters"""
        self.p = Params(0.5, 1.5, 1.0, 1.0)
        self.grid = small_grid(10.0, 0.5)
        self.times = np.arange(0.0, 31.0, 1.0)

    def test_ode_bound_rate(self):
        """Test a sup excess decaying like exp(-t)"""
        def fields(t):
            return np.full(self.grid.n, 1.0 + 0.4 * math.exp(-t)), np.zeros(self.grid.n)
        result = OdeBoundCheck().check(trajectory_from(fields, self.p, self.grid, self.times))
        self.assertTrue(result.passed)
        self.assertAlmostEqual(result.details['rate'], 1.0, places=4)

    def test_ode_bound_slow_decay(self):
        """Test a sup excess decaying too slowly"""
        def fields(t):
            return np.full(self.grid.n, 1.0 + 0.4 * math.exp(-0.5 * t)), np.zeros(self.grid.n)
        result = OdeBoundCheck().check(trajectory_from(fields, self.p, self.grid, self.times))
        self.assertFalse(result.passed)
        self.assertEqual(result.error_code, 'BOUND_VIOLATED')

    def test_ode_bound_without_excess(self):
        """Test data that never exceed 1"""
        def fields(t):
            return np.full(self.grid.n, 0.5), np.zeros(self.grid.n)
        self.assertTrue(OdeBoundCheck().check(trajectory_from(fields, self.p, self.grid, self.times)).passed)

    def test_interior_convergence(self):
        """Test exponential decay of 1 - u and v at the origin"""
        def fields(t):
            return np.full(self.grid.n, 1.0 - 0.5 * math.exp(-0.5 * t)), np.full(self.grid.n, 0.5 * math.exp(-0.3 * t))
        result = InteriorConvergenceCheck().check(trajectory_from(fields, self.p, self.grid, self.times))
        self.assertTrue(result.passed, result.details)
        self.assertAlmostEqual(result.details['rate_1_minus_u'], 0.5, places=4)
        self.assertAlmostEqual(result.details['rate_v'], 0.3, places=4)

    def test_interior_convergence_stalled(self):
        """Test a run that stays away from (1, 0)"""
        def fields(t):
            return np.full(self.grid.n, 0.5), np.full(self.grid.n, 0.5)
        result = InteriorConvergenceCheck().check(trajectory_from(fields, self.p, self.grid, self.times))
        self.assertFalse(result.passed)
        self.assertEqual(result.error_code, 'INSUFFICIENT_DATA')


class LocalStabilityTestCase(SimpleTestCase):
    """Stability of the shifted wave along a run"""

    def setUp(self):
        """Set up a translated profile run"""
        self.service = ComparisonLabFactory.create_comparison_service()
        self.p = Params(0.5, 1.5, 1.0, 1.0)
        self.w = tanh_profile(c=1.8, L=30.0, n=601)
        self.wave = WaveInterpolant(self.w)
        self.grid = small_grid(60.0, 0.1)

    def test_translate_is_stable(self):
        """Test a run that is the profile itself"""
        def fields(t):
            U, V, _, _ = self.wave(self.grid.x - 1.8 * t + 20.0)
            return U, V
        run = trajectory_from(fields, self.p, self.grid, np.arange(0.0, 21.0, 1.0))
        result = self.service.check_local_stability(run, self.w, 1.8)
        self.assertTrue(result.passed, result.details)

    def test_never_close(self):
        """Test a run that never comes within eps of the wave"""
        def fields(t):
            U, _, _, _ = self.wave(self.grid.x - 1.8 * t + 20.0)
            return U, np.full(self.grid.n, 0.5)
        run = trajectory_from(fields, self.p, self.grid, np.arange(0.0, 21.0, 1.0))
        result = self.service.check_local_stability(run, self.w, 1.8)
        self.assertFalse(result.passed)
        self.assertEqual(result.error_code, 'STABILITY_VIOLATED')


class ExactWaveResidualTestCase(SimpleTestCase):
    """Fourth-order residual of a discrete profile"""

    def test_front_that_is_not_a_wave(self):
        """Test that a logistic front at the wrong speed leaves an O(1) residual"""
        w = tanh_profile(c=1.8)
        self.assertGreater(exact_wave_residual(w, Params(0.5, 1.5, 1.0, 1.0)), 0.1)
