"""
Comparison Lab
Explicit sub- and super-solutions built on the minimal wave, constructive
parameter choice, residual sign checks, sandwich and comparison-principle
checks, and statement-level checks on simulated trajectories
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.stats import linregress

from core.exceptions import ConfigError, Infeasible, NoShiftFound, OrderingViolated, SpecInvalid
from core.models import (
    FieldState,
    Params,
    Region,
    ResidualReport,
    SimConfig,
    SolutionKind,
    SubSuperSpec,
    Trajectory,
    WaveProfile,
)
from core.services.front_analysis import FrontAnalysisFactory
from core.services.model_core import is_pushed, reaction_terms, spectral_exponents
from core.services.pde_simulator import PdeSimulatorFactory
from core.utils.experiment_config import lab_default
from core.utils.result import CheckResult

logger = logging.getLogger(__name__)

MARGIN_CANDIDATES = (10.0, 20.0, 40.0, 80.0)
ACTIVATION_DOUBLINGS = 8


class WaveInterpolant:
    """
    Monotone cubic interpolation of a wave profile with exponential tails
    continued from the last two samples at either end.
    """

    def __init__(self, w: WaveProfile):
        self.c = w.c
        xi = np.asarray(w.xi_grid)
        U, V = np.asarray(w.U), np.asarray(w.V)
        self.xi_min, self.xi_max = float(xi[0]), float(xi[-1])
        self._U = PchipInterpolator(xi, U, extrapolate=False)
        self._V = PchipInterpolator(xi, V, extrapolate=False)
        self._dU = self._U.derivative()
        self._dV = self._V.derivative()
        h = float(xi[1] - xi[0])

        def rate(first: float, second: float) -> float:
            if first <= 0.0 or second <= 0.0:
                return 0.0
            return math.log(second / first) / h

        self.edges = {
            'U_right': (float(U[-1]), rate(U[-2], U[-1])),
            'Q_right': (float(1.0 - V[-1]), rate(1.0 - V[-2], 1.0 - V[-1])),
            'P_left': (float(1.0 - U[0]), -rate(1.0 - U[1], 1.0 - U[0])),
            'V_left': (float(V[0]), -rate(V[1], V[0])),
        }

    def __call__(self, xi: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        xi = np.asarray(xi, dtype=float)
        U, V = self._U(xi), self._V(xi)
        dU, dV = self._dU(xi), self._dV(xi)

        right = xi > self.xi_max
        if right.any():
            amp, k = self.edges['U_right']
            tail = amp * np.exp(k * (xi[right] - self.xi_max))
            U[right], dU[right] = tail, k * tail
            amp, k = self.edges['Q_right']
            gap = amp * np.exp(k * (xi[right] - self.xi_max))
            V[right], dV[right] = 1.0 - gap, -k * gap
        left = xi < self.xi_min
        if left.any():
            amp, k = self.edges['P_left']
            gap = amp * np.exp(k * (xi[left] - self.xi_min))
            U[left], dU[left] = 1.0 - gap, -k * gap
            amp, k = self.edges['V_left']
            tail = amp * np.exp(k * (xi[left] - self.xi_min))
            V[left], dV[left] = tail, k * tail
        return U, V, dU, dV


class SubSuperPair:
    """
    (u, v)(t, x) = (U(xi) + e P(t) min{W, 1}, V(xi) - e Q(t)) with
    xi = x - c t + s zeta(t), W = exp(-alpha (x - c t + x0)),
    e = -1, s = +1 for a sub-solution and e = +1, s = -1 for a super-solution.
    Mirrored pairs are evaluated at -x.
    """

    def __init__(self, p: Params, w: WaveProfile, spec: SubSuperSpec, interpolant: Optional[WaveInterpolant] = None):
        self.params = p
        self.spec = spec
        self.c = w.c
        self.wave = interpolant or WaveInterpolant(w)
        self.sign_e = -1.0 if spec.kind is SolutionKind.SUB else 1.0
        self.sign_s = 1.0 if spec.kind is SolutionKind.SUB else -1.0

    @property
    def kind(self) -> SolutionKind:
        return self.spec.kind

    def _frame(self, x: np.ndarray) -> np.ndarray:
        return -np.asarray(x, dtype=float) if self.spec.mirrored else np.asarray(x, dtype=float)

    def zeta(self, t: float) -> Tuple[float, float]:
        s = self.spec
        return s.zeta0 - math.exp(-s.tau * t), s.tau * math.exp(-s.tau * t)

    def amplitudes(self, t: float) -> Tuple[float, float]:
        decay = math.exp(-self.spec.mu * t)
        return self.spec.p * decay, self.spec.q * decay

    def kink(self, t: float) -> float:
        """Position where W = 1"""
        gamma = self.c * t - self.spec.x0
        return -gamma if self.spec.mirrored else gamma

    def weight(self, t: float, x: np.ndarray) -> np.ndarray:
        return np.exp(-self.spec.alpha * (self._frame(x) - self.c * t + self.spec.x0))

    def branches(self, t: float, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """u on the W branch and on the flat branch"""
        y = self._frame(x)
        zeta, _ = self.zeta(t)
        U, _, _, _ = self.wave(y - self.c * t + self.sign_s * zeta)
        P, _ = self.amplitudes(t)
        return U + self.sign_e * P * self.weight(t, x), U + self.sign_e * P

    def evaluate(self, t: float, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        y = self._frame(x)
        zeta, _ = self.zeta(t)
        U, V, _, _ = self.wave(y - self.c * t + self.sign_s * zeta)
        P, Q = self.amplitudes(t)
        m = np.minimum(self.weight(t, x), 1.0)
        return U + self.sign_e * P * m, V - self.sign_e * Q

    def residuals(self, t: float, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        N1 = u_t - u_xx - F(u, v) and N2 = v_t - d v_xx - G(u, v), with U'' and
        V'' replaced through the wave equations. Returns (N1, N2, on_W_branch).
        """
        p, s = self.params, self.spec
        y = self._frame(x)
        zeta, dzeta = self.zeta(t)
        U, V, dU, dV = self.wave(y - self.c * t + self.sign_s * zeta)
        P, Q = self.amplitudes(t)
        W = self.weight(t, x)
        on_w = W <= 1.0
        m = np.where(on_w, W, 1.0)
        curvature = np.where(on_w, s.alpha * self.c - s.alpha ** 2, 0.0)

        F0, G0 = reaction_terms(U, V, p)
        u = U + self.sign_e * P * m
        v = V - self.sign_e * Q
        F, G = reaction_terms(u, v, p)
        N1 = self.sign_s * dzeta * dU + F0 + self.sign_e * P * m * (curvature - s.mu) - F
        N2 = self.sign_s * dzeta * dV + G0 + self.sign_e * s.mu * Q - G
        return N1, N2, on_w


def exact_wave_residual(w: WaveProfile, p: Params) -> float:
    """Sup of the fourth-order residual of the wave equations on the discrete profile"""
    U, V, h, c = np.asarray(w.U), np.asarray(w.V), w.h, w.c

    def d1(f):
        return (-f[4:] + 8.0 * f[3:-1] - 8.0 * f[1:-3] + f[:-4]) / (12.0 * h)

    def d2(f):
        return (-f[4:] + 16.0 * f[3:-1] - 30.0 * f[2:-2] + 16.0 * f[1:-3] - f[:-4]) / (12.0 * h * h)

    F, G = reaction_terms(U[2:-2], V[2:-2], p)
    r_u = d2(U) + c * d1(U) + F
    r_v = p.d * d2(V) + c * d1(V) + G
    return float(max(np.max(np.abs(r_u)), np.max(np.abs(r_v))))


# =============================================================================
# INTERFACES (SOLID: Interface Segregation Principle)
# =============================================================================

class ITrajectoryCheck(ABC):
    """A statement checked on one simulated trajectory"""

    name: str = ''

    @abstractmethod
    def check(self, trajectory: Trajectory) -> CheckResult:
        pass


# =============================================================================
# CONCRETE IMPLEMENTATIONS (SOLID: Single Responsibility Principle)
# =============================================================================

class OdeBoundCheck(ITrajectoryCheck):
    """(sup u - 1)+ decays at least like exp(-0.9 t) once below 0.5"""

    name = 'ode_bound'

    def __init__(self, min_rate: float = 0.9):
        self.min_rate = min_rate

    def check(self, trajectory: Trajectory) -> CheckResult:
        times = np.array([obs['t'] for obs in trajectory.observables])
        excess = np.array([obs['excess_u'] for obs in trajectory.observables])
        mask = (excess > 1e-10) & (excess < 0.5)
        if not np.any(excess > 0.0):
            return CheckResult.ok(self.name, {'note': 'sup u never exceeds 1', 'rate': None})
        if mask.sum() < 3:
            return CheckResult.fail(self.name, 'too few samples with 1e-10 < (sup u - 1)+ < 0.5',
                                    'INSUFFICIENT_DATA', {'samples': int(mask.sum())})
        fit = linregress(times[mask], np.log(excess[mask]))
        rate = float(-fit.slope)
        details = {'rate': rate, 'min_rate': self.min_rate, 'samples': int(mask.sum())}
        if rate >= self.min_rate:
            return CheckResult.ok(self.name, details)
        return CheckResult.fail(self.name, f"excess decays at rate {rate:.3f}", 'BOUND_VIOLATED', details)


class InteriorConvergenceCheck(ITrajectoryCheck):
    """At x = 0, 1 - u and v decay exponentially"""

    name = 'interior_convergence'

    def __init__(self, window: Tuple[float, float] = (1e-10, 1e-2), min_samples: int = 5):
        self.window = window
        self.min_samples = min_samples

    def _rate(self, times: np.ndarray, values: np.ndarray) -> Tuple[Optional[float], int]:
        lo, hi = self.window
        mask = np.isfinite(values) & (values >= lo) & (values <= hi)
        if mask.sum() < self.min_samples:
            return None, int(mask.sum())
        fit = linregress(times[mask], np.log(values[mask]))
        return float(-fit.slope), int(mask.sum())

    def check(self, trajectory: Trajectory) -> CheckResult:
        times = np.array([obs['t'] for obs in trajectory.observables])
        gap_u = 1.0 - np.array([obs['u_at_0'] for obs in trajectory.observables])
        v = np.array([obs['v_at_0'] for obs in trajectory.observables])
        rate_u, n_u = self._rate(times, gap_u)
        rate_v, n_v = self._rate(times, v)
        details = {'rate_1_minus_u': rate_u, 'rate_v': rate_v, 'samples': [n_u, n_v]}
        if rate_u is None or rate_v is None:
            return CheckResult.fail(self.name, 'not enough samples in the decay window', 'INSUFFICIENT_DATA', details)
        if rate_u > 0.0 and rate_v > 0.0:
            return CheckResult.ok(self.name, details)
        return CheckResult.fail(self.name, 'non-positive decay rate at x = 0', 'NO_DECAY', details)


# =============================================================================
# SERVICE COMPOSER (SOLID: Open/Closed Principle)
# =============================================================================

class ComparisonLabService:
    """Builds sub/super pairs and runs the residual, ordering and statement checks"""

    def __init__(self, slack_factor: float = 10.0, activation_start: float = 10.0, t_span: float = 100.0,
                 half_width: float = 40.0, max_shift: float = 200.0, ordering_tol: float = 1e-8,
                 t_step: float = 1.0, x_step: float = 0.1):
        self.slack_factor = slack_factor
        self.activation_start = activation_start
        self.t_span = t_span
        self.half_width = half_width
        self.max_shift = max_shift
        self.ordering_tol = ordering_tol
        self.t_step = t_step
        self.x_step = x_step
        self.simulator = PdeSimulatorFactory.create_simulator_service()
        self.fronts = FrontAnalysisFactory.create_front_analysis_service()

    # -- construction -------------------------------------------------------

    @staticmethod
    def validate_spec(p: Params, c: float, s: SubSuperSpec) -> None:
        if s.p == 0.0 and s.q == 0.0:
            return  # the bare wave needs no conditions
        e = spectral_exponents(c, p)
        lo, hi = -e.lambda_u_plus, -e.lambda_u_minus
        if not lo < s.alpha < hi:
            raise SpecInvalid(f"alpha={s.alpha} outside ({lo:.6f}, {hi:.6f})",
                              {'alpha': s.alpha, 'interval': [lo, hi]})
        bound = min(1.0 - p.a, p.r * (p.b - 1.0), p.r / 2.0)
        if not s.tau < s.mu < bound:
            raise SpecInvalid(f"need tau < mu < {bound:.6f}, got tau={s.tau}, mu={s.mu}",
                              {'tau': s.tau, 'mu': s.mu, 'bound': bound})
        if s.margin <= 0.0:
            raise SpecInvalid(f"x0 - zeta0 must be positive, got {s.margin}", {'margin': s.margin})

    def build_sub_pair(self, p: Params, w: WaveProfile, s: SubSuperSpec) -> SubSuperPair:
        if s.kind is not SolutionKind.SUB:
            raise SpecInvalid("build_sub_pair needs a spec of kind 'sub'", {'kind': s.kind.value})
        self.validate_spec(p, w.c, s)
        return SubSuperPair(p, w, s)

    def build_super_pair(self, p: Params, w: WaveProfile, s: SubSuperSpec) -> SubSuperPair:
        if s.kind is not SolutionKind.SUPER:
            raise SpecInvalid("build_super_pair needs a spec of kind 'super'", {'kind': s.kind.value})
        self.validate_spec(p, w.c, s)
        return SubSuperPair(p, w, s)

    def build_pair(self, p: Params, w: WaveProfile, s: SubSuperSpec) -> SubSuperPair:
        if s.kind is SolutionKind.SUB:
            return self.build_sub_pair(p, w, s)
        return self.build_super_pair(p, w, s)

    # -- residuals ----------------------------------------------------------

    def slack(self, p: Params, w: WaveProfile) -> float:
        return self.slack_factor * exact_wave_residual(w, p) + 1e-12

    def standard_region(self, t_min: float) -> Region:
        return Region(t_min=t_min, t_max=t_min + self.t_span, x_lo=-self.half_width, x_hi=self.half_width)

    def _scan(self, pair: SubSuperPair, region: Region) -> Dict[str, float]:
        offsets = np.arange(region.x_lo, region.x_hi + 0.5 * self.x_step, self.x_step)
        extrema = {'N1_max_W': -np.inf, 'N1_min_W': np.inf, 'N1_max_flat': -np.inf, 'N1_min_flat': np.inf,
                   'N2_max': -np.inf, 'N2_min': np.inf}
        worst_at: Dict[str, Tuple[float, float]] = {}
        for t in np.arange(region.t_min, region.t_max + 0.5 * self.t_step, self.t_step):
            x = pair.c * t + offsets
            if pair.spec.mirrored:
                x = -x
            N1, N2, on_w = pair.residuals(float(t), x)
            for label, mask in (('W', on_w), ('flat', ~on_w)):
                if mask.any():
                    hi, lo = float(N1[mask].max()), float(N1[mask].min())
                    if hi > extrema[f'N1_max_{label}']:
                        extrema[f'N1_max_{label}'] = hi
                        worst_at[f'N1_max_{label}'] = (float(t), float(x[mask][np.argmax(N1[mask])]))
                    extrema[f'N1_min_{label}'] = min(extrema[f'N1_min_{label}'], lo)
            if N2.max() > extrema['N2_max']:
                extrema['N2_max'] = float(N2.max())
            if N2.min() < extrema['N2_min']:
                extrema['N2_min'] = float(N2.min())
                worst_at['N2_min'] = (float(t), float(x[np.argmin(N2)]))
        extrema = {key: (value if math.isfinite(value) else 0.0) for key, value in extrema.items()}
        extrema['worst_at'] = worst_at
        return extrema

    @staticmethod
    def _signs_hold(kind: SolutionKind, max_N1: float, min_N1: float, max_N2: float, min_N2: float,
                    slack: float) -> bool:
        if kind is SolutionKind.SUB:
            return max_N1 <= slack and min_N2 >= -slack
        return min_N1 >= -slack and max_N2 <= slack

    def residual_report(self, pair: SubSuperPair, region: Region, slack: float) -> ResidualReport:
        extrema = self._scan(pair, region)
        max_N1 = max(extrema['N1_max_W'], extrema['N1_max_flat'])
        min_N1 = min(extrema['N1_min_W'], extrema['N1_min_flat'])
        passed = self._signs_hold(pair.kind, max_N1, min_N1, extrema['N2_max'], extrema['N2_min'], slack)
        branch = {key: value for key, value in extrema.items() if key != 'worst_at'}
        branch.update({f'{key}_at': list(value) for key, value in extrema['worst_at'].items()})
        return ResidualReport(max_N1=max_N1, min_N1=min_N1, max_N2=extrema['N2_max'], min_N2=extrema['N2_min'],
                              region=region, T_star=region.t_min, slack=slack, passed=passed,
                              kind=pair.kind, branch_extrema=branch)

    def check_residuals(self, pair: SubSuperPair, region: Optional[Region] = None,
                        slack: Optional[float] = None, w: Optional[WaveProfile] = None) -> ResidualReport:
        """
        Sign check of N1, N2 on the region; when the signs fail, the
        activation time is doubled (region shifted in t) a fixed number of times.
        """
        if slack is None:
            slack = self.slack(pair.params, w) if w is not None else 1e-8
        region = region or self.standard_region(self.activation_start)
        t_start = max(region.t_min, 0.0)
        report = None
        for _ in range(ACTIVATION_DOUBLINGS + 1):
            candidate = Region(t_start, t_start + (region.t_max - region.t_min), region.x_lo, region.x_hi)
            report = self.residual_report(pair, candidate, slack)
            if report.passed:
                logger.info(f"{pair.kind.value}-solution signs hold from T={t_start:g} (slack {slack:.2e})")
                return report
            t_start = 2.0 * t_start if t_start > 0.0 else self.activation_start
        logger.warning(f"{pair.kind.value}-solution signs fail up to T={report.region.t_min:g}")
        return report

    # -- parameter choice ---------------------------------------------------

    def choose_parameters(self, p: Params, w: WaveProfile, kind: SolutionKind, mu_scale: float = 0.5,
                          mirrored: bool = False) -> Tuple[SubSuperSpec, ResidualReport]:
        """
        alpha at the midpoint of (-lambda_u^+, -lambda_u^-), mu a fraction of its
        admissible bound, tau = mu / 2, q = p / 2, and the smallest margin
        x0 - zeta0 from MARGIN_CANDIDATES meeting the tail inequality with
        factor 2 and passing the residual check.
        """
        p.require_strong_weak()
        c = w.c
        if not is_pushed(p, c, tol=1e-6):
            raise Infeasible(f"c={c} is the linear speed: the interval for alpha is empty",
                             {'binding': 'alpha interval', 'c': c})
        e = spectral_exponents(c, p)
        alpha = 0.5 * (-e.lambda_u_plus - e.lambda_u_minus)
        depth = (c * c - 4.0 * (1.0 - p.a)) / 4.0
        bounds = {'1-a': 1.0 - p.a, 'r(b-1)': p.r * (p.b - 1.0), 'r/2': p.r / 2.0, 'tail depth': depth}
        binding_mu = min(bounds, key=bounds.get)
        mu = mu_scale * bounds[binding_mu]
        tau = mu / 2.0
        amplitude_p = 0.1 * mu_scale
        amplitude_q = amplitude_p / 2.0
        zeta0 = 1.0

        if kind is SolutionKind.SUB:
            # q/2 (1 - 2 mu / r) >= 2 b p exp(-2 alpha M)
            needed = math.log(4.0 * p.b * amplitude_p / (0.5 * amplitude_q * (1.0 - 2.0 * mu / p.r))) / (2.0 * alpha)
        else:
            # q / 4 >= 2 b p exp(-2 alpha M)
            needed = math.log(8.0 * p.b * amplitude_p / amplitude_q) / (2.0 * alpha)

        slack = self.slack(p, w)
        last_report = None
        for margin in MARGIN_CANDIDATES:
            if margin < needed:
                continue
            spec = SubSuperSpec(alpha=alpha, mu=mu, tau=tau, p=amplitude_p, q=amplitude_q, zeta0=zeta0,
                                x0=zeta0 + margin, kind=kind, mirrored=mirrored)
            pair = self.build_pair(p, w, spec)
            report = self.check_residuals(pair, slack=slack)
            last_report = report
            if report.passed:
                logger.info(f"Chose {kind.value} spec: alpha={alpha:.4f} mu={mu:.4f} margin={margin:g} "
                            f"(mu bound: {binding_mu})")
                return spec, report
        binding = 'tail inequality' if last_report is None else 'residual signs'
        raise Infeasible(
            f"No margin in {MARGIN_CANDIDATES} satisfies the {kind.value}-solution inequalities with factor 2",
            {'binding': binding, 'needed_margin': needed, 'mu_bound': binding_mu,
             'report': last_report.to_dict() if last_report else None},
        )

    # -- ordering checks ----------------------------------------------------

    def _violation(self, trajectory: Trajectory, pair: SubSuperPair, shift: float, t_from: float,
                   x_mask: np.ndarray) -> Tuple[float, Optional[Tuple[float, float]]]:
        """Worst violation of the ordering between the run and the pair for one time shift"""
        times = trajectory.times
        index = {round(t, 9): k for k, t in enumerate(times)}
        x = trajectory.grid.x[x_mask]
        worst, where = -np.inf, None
        for s in trajectory.states:
            if s.t < t_from:
                continue
            if pair.kind is SolutionKind.SUB:
                # u(t + T*) >= u_sub(t), v(t + T*) <= v_sup(t)
                k = index.get(round(s.t + shift, 9))
                if k is None:
                    continue
                later = trajectory.states[k]
                u_pair, v_pair = pair.evaluate(s.t, x)
                gap = np.maximum(u_pair - np.asarray(later.u)[x_mask], np.asarray(later.v)[x_mask] - v_pair)
            else:
                # u(t) <= u_sup(t + T**), v(t) >= v_sub(t + T**)
                u_pair, v_pair = pair.evaluate(s.t + shift, x)
                gap = np.maximum(np.asarray(s.u)[x_mask] - u_pair, v_pair - np.asarray(s.v)[x_mask])
            j = int(np.argmax(gap))
            if gap[j] > worst:
                worst, where = float(gap[j]), (float(s.t), float(x[j]))
        return worst, where

    def find_sandwich_shifts(self, trajectory: Trajectory, sub_pair: SubSuperPair, super_pair: SubSuperPair,
                             w: WaveProfile, t_from: float = 50.0, slack: Optional[float] = None) -> Dict[str, object]:
        """Smallest shifts T*, T** in [0, max_shift] with the run ordered between the pairs"""
        if slack is None:
            cfg = trajectory.config
            curvature = float(np.max(np.abs(np.diff(np.asarray(w.U), 2)))) / w.h ** 2
            slack = self.slack_factor * (cfg.grid.h ** 2 + cfg.dt ** 2) * max(curvature, 1e-3)
        x = trajectory.grid.x
        mirrored = sub_pair.spec.mirrored
        x_mask = (x <= 0.0) if mirrored else (x >= 0.0)
        spacing = float(np.min(np.diff(trajectory.times))) if len(trajectory.times) > 1 else 1.0
        horizon = float(trajectory.times[-1])
        shifts = np.arange(0.0, min(self.max_shift, horizon - t_from) + 0.5 * spacing, spacing)

        found: Dict[str, Optional[float]] = {'T_star': None, 'T_star_star': None}
        worst: Dict[str, Tuple[float, Optional[Tuple[float, float]]]] = {}
        for key, pair in (('T_star', sub_pair), ('T_star_star', super_pair)):
            best = (np.inf, None)
            for shift in shifts:
                violation, where = self._violation(trajectory, pair, float(shift), t_from, x_mask)
                if violation < best[0]:
                    best = (violation, where)
                if violation <= slack:
                    found[key] = float(shift)
                    best = (violation, where)
                    break
            worst[key] = best

        details = {
            'T_star': found['T_star'],
            'T_star_star': found['T_star_star'],
            'slack': slack,
            'worst_violation_sub': worst['T_star'][0],
            'worst_location_sub': worst['T_star'][1],
            'worst_violation_super': worst['T_star_star'][0],
            'worst_location_super': worst['T_star_star'][1],
            'mirrored': mirrored,
        }
        if found['T_star'] is None or found['T_star_star'] is None:
            raise NoShiftFound(f"no shift up to {self.max_shift:g} orders the run between the pairs", details)
        return details

    def check_sandwich(self, trajectory: Trajectory, sub_pair: SubSuperPair, super_pair: SubSuperPair,
                       w: WaveProfile, t_from: float = 50.0, slack: Optional[float] = None) -> CheckResult:
        try:
            return CheckResult.ok('sandwich', self.find_sandwich_shifts(trajectory, sub_pair, super_pair,
                                                                        w, t_from, slack))
        except NoShiftFound as exc:
            return CheckResult.from_error('sandwich', exc)

    def assert_ordered(self, low: Trajectory, high: Trajectory) -> Dict[str, object]:
        """u_low <= u_high and v_low >= v_high at every snapshot, up to ordering_tol"""
        worst_u, worst_v, worst_t = 0.0, 0.0, None
        for s_low, s_high in zip(low.states, high.states):
            du = float(np.max(np.asarray(s_low.u) - np.asarray(s_high.u)))
            dv = float(np.max(np.asarray(s_high.v) - np.asarray(s_low.v)))
            if max(du, dv) > max(worst_u, worst_v):
                worst_t = s_low.t
            worst_u, worst_v = max(worst_u, du), max(worst_v, dv)
        details = {'max_u_excess': worst_u, 'max_v_deficit': worst_v, 'worst_t': worst_t,
                   'tolerance': self.ordering_tol, 'snapshots': len(low.states)}
        if worst_u > self.ordering_tol or worst_v > self.ordering_tol:
            logger.error(f"Ordering violated by {max(worst_u, worst_v):.3e} at t={worst_t}")
            raise OrderingViolated('ordering violated; dt may be too large', details)
        return details

    def check_comparison_principle(self, cfg_low: SimConfig, cfg_high: SimConfig,
                                   initial_low: Optional[FieldState] = None,
                                   initial_high: Optional[FieldState] = None) -> CheckResult:
        """Runs an ordered pair and checks that the ordering survives every snapshot"""
        if cfg_low.grid != cfg_high.grid or cfg_low.dt != cfg_high.dt or cfg_low.t_end != cfg_high.t_end:
            raise ConfigError("Comparison runs need identical grids and steps")
        initial_low = initial_low or self.simulator.make_initial_data(cfg_low.ic_kind, cfg_low.grid, cfg_low.shape)
        initial_high = initial_high or self.simulator.make_initial_data(cfg_high.ic_kind, cfg_high.grid, cfg_high.shape)
        if np.any(initial_low.u > initial_high.u) or np.any(initial_low.v < initial_high.v):
            raise ConfigError("Initial data are not ordered: need u_low <= u_high and v_low >= v_high")

        low = self.simulator.run(cfg_low, initial_low)
        high = self.simulator.run(cfg_high, initial_high)
        try:
            return CheckResult.ok('comparison_principle', self.assert_ordered(low, high))
        except OrderingViolated as exc:
            return CheckResult.from_error('comparison_principle', exc)

    # -- statement checks ---------------------------------------------------

    def check_ode_bound(self, trajectory: Trajectory) -> CheckResult:
        return OdeBoundCheck().check(trajectory)

    def check_interior_convergence(self, trajectory: Trajectory) -> CheckResult:
        return InteriorConvergenceCheck().check(trajectory)

    def check_local_stability(self, trajectory: Trajectory, w: WaveProfile, c: float,
                              eps_values: Sequence[float] = (0.05, 0.02), factor: float = 3.0) -> CheckResult:
        """Once within eps of a shifted wave, the run stays within factor * eps"""
        series = self.fronts.profile_convergence(trajectory, w, c)
        distance = np.asarray(series.sup_distance)
        outcomes: List[Dict[str, float]] = []
        passed = True
        for eps in eps_values:
            inside = np.nonzero(distance <= eps)[0]
            if inside.size == 0:
                outcomes.append({'eps': eps, 'entered_at': None, 'max_after': None})
                passed = False
                continue
            first = int(inside[0])
            after = float(np.max(distance[first:]))
            outcomes.append({'eps': eps, 'entered_at': float(series.times[first]), 'max_after': after})
            passed &= after <= factor * eps
        details = {'outcomes': outcomes, 'factor': factor}
        if passed:
            return CheckResult.ok('local_stability', details)
        return CheckResult.fail('local_stability', 'distance to the shifted wave left the factor * eps band',
                                'STABILITY_VIOLATED', details)


# =============================================================================
# FACTORY PATTERN (SOLID: Dependency Inversion Principle)
# =============================================================================

class ComparisonLabFactory:
    """Factory for comparison lab services"""

    @staticmethod
    def create_comparison_service() -> ComparisonLabService:
        return ComparisonLabService(
            slack_factor=float(lab_default('verify', 'slack_factor')),
            activation_start=float(lab_default('verify', 'activation_start')),
            t_span=float(lab_default('verify', 't_span')),
            half_width=float(lab_default('verify', 'half_width')),
            max_shift=float(lab_default('verify', 'max_shift')),
            ordering_tol=float(lab_default('verify', 'ordering_tol')),
        )


def build_sub_pair(p: Params, w: WaveProfile, s: SubSuperSpec) -> SubSuperPair:
    return ComparisonLabFactory.create_comparison_service().build_sub_pair(p, w, s)


def build_super_pair(p: Params, w: WaveProfile, s: SubSuperSpec) -> SubSuperPair:
    return ComparisonLabFactory.create_comparison_service().build_super_pair(p, w, s)


def choose_parameters(p: Params, w: WaveProfile, kind: SolutionKind) -> SubSuperSpec:
    spec, _ = ComparisonLabFactory.create_comparison_service().choose_parameters(p, w, kind)
    return spec


def check_residuals(pair: SubSuperPair, region: Optional[Region] = None, w: Optional[WaveProfile] = None) -> ResidualReport:
    return ComparisonLabFactory.create_comparison_service().check_residuals(pair, region, w=w)


def mirrored(spec: SubSuperSpec) -> SubSuperSpec:
    return replace(spec, mirrored=not spec.mirrored)
