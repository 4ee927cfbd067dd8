"""
Front Analysis
Level-set tracking, spreading-speed and logarithmic-drift fits, regime
detection for two-front invasions and convergence to wave profiles
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.stats import linregress

from core.exceptions import InsufficientData, NoFront
from core.models import (
    ConvergenceSeries,
    Direction,
    DriftFit,
    Params,
    SpeedCase,
    SpeedFit,
    SpeedRegime,
    Species,
    FrontTrace,
    Trajectory,
    WaveProfile,
)
from core.utils.experiment_config import lab_default
from core.utils.result import CheckResult

logger = logging.getLogger(__name__)

MIN_WINDOW_LENGTH = 20.0


def level_crossing(x: np.ndarray, values: np.ndarray, level: float,
                   direction: Direction = Direction.RIGHTMOST) -> float:
    """Linearly interpolated crossing of level; NaN when values never cross it"""
    shifted = np.asarray(values) - level
    crossing = np.nonzero(shifted[:-1] * shifted[1:] <= 0.0)[0]
    if crossing.size == 0:
        return float('nan')
    i = int(crossing[-1] if direction is Direction.RIGHTMOST else crossing[0])
    y0, y1 = shifted[i], shifted[i + 1]
    if y0 == y1:
        return float(x[i])
    return float(x[i] + (x[i + 1] - x[i]) * y0 / (y0 - y1))


@dataclass(frozen=True)
class RegimeReport:
    case_tag: SpeedCase
    predicted: Dict[str, Optional[float]]
    measured: Dict[str, Optional[float]]
    checks: Tuple[CheckResult, ...] = ()
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'case_tag': self.case_tag.value,
            'predicted': self.predicted,
            'measured': self.measured,
            'checks': [check.to_dict() for check in self.checks],
            'passed': self.passed,
            'details': self.details,
        }


class FrontAnalysisService:
    """Analyses immutable trajectories; every method is a pure function of its inputs"""

    def __init__(self, min_samples: int = 20, speed_tolerance: float = 0.03,
                 drift_window_start: float = 50.0, drift_tolerance: float = 0.3):
        self.min_samples = min_samples
        self.speed_tolerance = speed_tolerance
        self.drift_window_start = drift_window_start
        self.drift_tolerance = drift_tolerance

    def track_level_set(self, trajectory: Trajectory, species: Species, level: float = 0.5,
                        direction: Direction = Direction.RIGHTMOST) -> FrontTrace:
        if not 0.0 < level < 1.0:
            raise ValueError(f"Level must lie in (0, 1), got {level}")
        x = trajectory.grid.x
        positions = [level_crossing(x, s.species(species), level, direction) for s in trajectory.states]
        return FrontTrace(species=species, level=level, times=trajectory.times,
                          positions=np.array(positions), direction=direction)

    def _window(self, trace: FrontTrace, window: Tuple[float, float]) -> Tuple[np.ndarray, np.ndarray]:
        t0, t1 = window
        mask = (trace.times >= t0) & (trace.times <= t1) & trace.present
        count = int(mask.sum())
        if count < self.min_samples:
            raise InsufficientData(
                f"{count} front samples in [{t0}, {t1}], need {self.min_samples}",
                {'window': [t0, t1], 'samples': count},
            )
        return trace.times[mask], trace.positions[mask]

    def fit_speed(self, trace: FrontTrace, window: Tuple[float, float]) -> SpeedFit:
        if window[1] - window[0] < MIN_WINDOW_LENGTH:
            logger.warning(f"Speed window {window} is shorter than {MIN_WINDOW_LENGTH} time units")
        t, x = self._window(trace, window)
        fit = linregress(t, x)
        return SpeedFit(speed=float(fit.slope), intercept=float(fit.intercept), stderr=float(fit.stderr),
                        window=(float(window[0]), float(window[1])), samples=int(t.size))

    def fit_log_drift(self, trace: FrontTrace, c_fixed: float, window: Tuple[float, float]) -> DriftFit:
        """Least squares of c t - x(t) = kappa ln t - C"""
        if c_fixed <= 0.0:
            raise ValueError("c_fixed must be positive")
        if window[0] < self.drift_window_start:
            raise InsufficientData(
                f"Drift windows start at t >= {self.drift_window_start}, got {window[0]}",
                {'window': list(window)},
            )
        t, x = self._window(trace, window)
        lag = c_fixed * t - x
        fit = linregress(np.log(t), lag)
        kappa, C = float(fit.slope), float(-fit.intercept)
        residual = lag - (kappa * np.log(t) - C)
        return DriftFit(c_fixed=c_fixed, kappa=kappa, C=C, residual_sup=float(np.max(np.abs(residual))),
                        window=(float(window[0]), float(window[1])), samples=int(t.size))

    def _relative_check(self, name: str, measured: float, predicted: float, tolerance: float) -> CheckResult:
        details = {'measured': measured, 'predicted': predicted, 'tolerance': tolerance}
        if not math.isfinite(measured):
            return CheckResult.fail(name, 'front not measurable', 'REGIME_MISMATCH', details)
        error = abs(measured - predicted) / abs(predicted)
        details['relative_error'] = error
        if error <= tolerance:
            return CheckResult.ok(name, details)
        return CheckResult.fail(name, f"{name}: {measured:.4f} vs predicted {predicted:.4f}",
                                'REGIME_MISMATCH', details)

    def _safe_speed(self, trace: FrontTrace, window: Tuple[float, float]) -> float:
        try:
            return self.fit_speed(trace, window).speed
        except InsufficientData:
            return float('nan')

    def detect_regimes(self, trajectory: Trajectory, p: Params, regime: SpeedRegime,
                       window: Optional[Tuple[float, float]] = None, epsilon: float = 0.1) -> RegimeReport:
        t_end = float(trajectory.times[-1])
        if t_end < 300.0:
            logger.warning(f"Regime detection on a short run (t_end={t_end})")
        window = window or (t_end / 2.0, t_end)
        level = float(lab_default('tracking', 'level'))
        slow = self.track_level_set(trajectory, Species.U, level)
        fast = self.track_level_set(trajectory, Species.V, level)
        slow_speed = self._safe_speed(slow, window)
        fast_speed = self._safe_speed(fast, window)
        measured = {'slow_speed': slow_speed, 'fast_speed': fast_speed}
        predicted: Dict[str, Optional[float]] = {'c_u': regime.c_u, 'c_v': regime.c_v,
                                                 'c_star': regime.c_star, 'script_C': regime.script_C}
        checks = [CheckResult.ok('kpp_bound', {'fast_speed': fast_speed, 'bound': regime.c_v + 0.1})
                  if not (fast_speed > regime.c_v + 0.1)
                  else CheckResult.fail('kpp_bound', 'fast front outruns c_v + 0.1', 'REGIME_MISMATCH',
                                        {'fast_speed': fast_speed, 'bound': regime.c_v + 0.1})]
        final = trajectory.final
        x = final.grid.x
        details: Dict[str, Any] = {'window': list(window)}

        if regime.case_tag is SpeedCase.DEGENERATE:
            details['note'] = 'c_u = c_v: no classification claimed'
        elif regime.case_tag is SpeedCase.FASTER_U:
            sup_v = float(np.max(np.asarray(final.v)[x >= 0.0]))
            measured['sup_v_right'] = sup_v
            checks.append(CheckResult.ok('v_dies_out', {'sup_v_right': sup_v}) if sup_v < 0.01 else
                          CheckResult.fail('v_dies_out', f"sup v on x >= 0 is {sup_v:.4f}", 'REGIME_MISMATCH',
                                           {'sup_v_right': sup_v}))
            speed = self._safe_speed(self.track_level_set(trajectory, Species.U, level), window)
            checks.append(self._relative_check('u_speed', speed, regime.c_u, self.speed_tolerance))
        else:
            checks.append(self._relative_check('fast_speed', fast_speed, regime.c_v, self.speed_tolerance))
            checks.append(self._relative_check('slow_speed', slow_speed, regime.script_C, 0.05))
            lo, hi = (regime.script_C + epsilon) * final.t, (regime.c_v - epsilon) * final.t
            between = (x >= lo) & (x <= hi)
            plateau = float(np.min(np.asarray(final.v)[between])) if between.any() else float('nan')
            measured['v_plateau'] = plateau
            checks.append(CheckResult.ok('v_plateau', {'min_v': plateau}) if plateau >= 0.95 else
                          CheckResult.fail('v_plateau', f"v plateau minimum {plateau:.4f} below 0.95",
                                           'REGIME_MISMATCH', {'min_v': plateau, 'range': [lo, hi]}))
            if regime.case_tag is SpeedCase.SLOW_FRONT_C_STAR_STAR:
                closer = abs(slow_speed - regime.c_star_star) < abs(slow_speed - regime.c_star)
                name = 'closer_to_c_star_star'
                checks.append(CheckResult.ok(name, {'slow_speed': slow_speed}) if closer else
                              CheckResult.fail(name, 'slow front is closer to c* than to c_**',
                                               'REGIME_MISMATCH', {'slow_speed': slow_speed}))

        report = RegimeReport(regime.case_tag, predicted, measured, tuple(checks), details)
        logger.info(f"Regime {regime.case_tag.value}: slow={slow_speed:.4f} fast={fast_speed:.4f} "
                    f"passed={report.passed}")
        return report

    def profile_convergence(self, trajectory: Trajectory, w: WaveProfile, c: float,
                            window_speed: Optional[float] = None, t_min: float = 0.0) -> ConvergenceSeries:
        """
        Sup over the comparison window of |u - U| + |v - V| after aligning the
        u = 1/2 crossing with the profile's. The window is x >= 0, capped at
        x < window_speed * t when a speed is given.
        """
        if not w.converged:
            raise ValueError("profile_convergence needs a converged wave profile")
        x = trajectory.grid.x
        wave_front = level_crossing(w.xi_grid, w.U, 0.5, Direction.RIGHTMOST)
        times, distances, shifts = [], [], []
        for s in trajectory.states:
            if s.t < t_min:
                continue
            front = level_crossing(x, s.u, 0.5, Direction.RIGHTMOST)
            if not math.isfinite(front):
                raise NoFront(f"u never crosses 1/2 at t={s.t}", {'t': s.t})
            shift = front - wave_front - c * s.t
            xi = x - c * s.t - shift
            mask = x >= 0.0
            if window_speed is not None and s.t > 0.0:
                mask &= x < window_speed * s.t
            U = np.interp(xi[mask], w.xi_grid, w.U, left=1.0, right=0.0)
            V = np.interp(xi[mask], w.xi_grid, w.V, left=0.0, right=1.0)
            gap = np.abs(np.asarray(s.u)[mask] - U) + np.abs(np.asarray(s.v)[mask] - V)
            times.append(s.t)
            distances.append(float(gap.max()) if gap.size else float('nan'))
            shifts.append(shift)
        return ConvergenceSeries(times=np.array(times), sup_distance=np.array(distances), shifts=np.array(shifts))

    def check_log_drift(self, fit: DriftFit, reference_kappa: float,
                        tolerance: Optional[float] = None) -> CheckResult:
        """Fitted kappa against its prediction, relative tolerance"""
        tolerance = self.drift_tolerance if tolerance is None else tolerance
        check = self._relative_check('log_drift', fit.kappa, reference_kappa, tolerance)
        check.details.update(c_fixed=fit.c_fixed, C=fit.C, window=list(fit.window), samples=fit.samples)
        return check

    def check_convergence(self, series: ConvergenceSeries, threshold: float = 0.05, tail: float = 100.0,
                          floor: float = 1e-6) -> CheckResult:
        """
        Final sup-distance below threshold and no growth over the last tail
        time units; floor absorbs discretization-level wobble.
        """
        times, distance = np.asarray(series.times), np.asarray(series.sup_distance)
        if times.size < 2 or not np.all(np.isfinite(distance)):
            return CheckResult.fail('profile_convergence', 'no usable sup-distance samples',
                                    'INSUFFICIENT_DATA', {'samples': int(times.size)})
        start = int(np.searchsorted(times, times[-1] - tail))
        final, at_start = float(distance[-1]), float(distance[start])
        details = {'final_distance': final, 'tail_start': float(times[start]), 'distance_at_tail_start': at_start,
                   'threshold': threshold, 'final_shift': float(series.shifts[-1])}
        if final >= threshold:
            return CheckResult.fail('profile_convergence', f"sup distance {final:.3e} at t={times[-1]:g} "
                                                           f"is not below {threshold}", 'REGIME_MISMATCH', details)
        if final > at_start + floor:
            return CheckResult.fail('profile_convergence', f"sup distance grew from {at_start:.3e} to {final:.3e} "
                                                           f"over the last {tail:g} time units",
                                    'REGIME_MISMATCH', details)
        return CheckResult.ok('profile_convergence', details)


class FrontAnalysisFactory:
    """Factory for front analysis services"""

    @staticmethod
    def create_front_analysis_service() -> FrontAnalysisService:
        return FrontAnalysisService(
            min_samples=int(lab_default('tracking', 'min_samples')),
            speed_tolerance=float(lab_default('tracking', 'speed_tolerance')),
            drift_window_start=float(lab_default('tracking', 'drift_window_start')),
            drift_tolerance=float(lab_default('tracking', 'drift_tolerance')),
        )


def track_level_set(trajectory: Trajectory, species: Species, level: float = 0.5,
                    direction: Direction = Direction.RIGHTMOST) -> FrontTrace:
    return FrontAnalysisFactory.create_front_analysis_service().track_level_set(trajectory, species, level, direction)


def fit_speed(trace: FrontTrace, window: Tuple[float, float]) -> SpeedFit:
    return FrontAnalysisFactory.create_front_analysis_service().fit_speed(trace, window)


def fit_log_drift(trace: FrontTrace, c_fixed: float, window: Tuple[float, float]) -> DriftFit:
    return FrontAnalysisFactory.create_front_analysis_service().fit_log_drift(trace, c_fixed, window)


def detect_regimes(trajectory: Trajectory, p: Params, regime: SpeedRegime) -> RegimeReport:
    return FrontAnalysisFactory.create_front_analysis_service().detect_regimes(trajectory, p, regime)


def profile_convergence(trajectory: Trajectory, w: WaveProfile, c: float,
                        window_speed: Optional[float] = None) -> ConvergenceSeries:
    return FrontAnalysisFactory.create_front_analysis_service().profile_convergence(trajectory, w, c, window_speed)
