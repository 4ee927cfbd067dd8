"""
Experiment Harness
Orchestrates one run per subcommand: configuration, run directory, services,
verdicts, files and report. Parameter sweeps fan grid points out to a process
pool and merge the rows in grid order.
"""

from __future__ import annotations

import json
import logging
import math
import os
import platform
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Any, Callable, Dict, List, Optional, Tuple

import matplotlib
import numpy as np
import pandas as pd
import scipy
import structlog

import lv_lab
from core.exceptions import ConfigError, Infeasible, LabError
from core.models import (
    Direction,
    DriftFit,
    ExperimentKind,
    FieldState,
    FrontTrace,
    Grid1D,
    InitialShape,
    Params,
    RunManifest,
    Scenario,
    SimConfig,
    SolutionKind,
    Species,
    SpeedCase,
    SweepSpec,
    Trajectory,
    WaveProfile,
)
from core.services.comparison_lab import ComparisonLabService, exact_wave_residual
from core.services.front_analysis import FrontAnalysisFactory
from core.services.model_core import classify_determinacy, is_pushed, kan_on_interval, speed_regime
from core.services.pde_simulator import PdeSimulatorFactory
from core.services.reporting_engine import ReportingEngineFactory
from core.services.wave_solver import WaveSolverFactory
from core.utils.experiment_config import ExperimentConfig, lab_default
from core.utils.monitoring import StageTimer
from core.utils.repositories import FilesystemRunRepository, RunRepository, utc_now
from core.utils.result import CheckResult

logger = logging.getLogger(__name__)

RESULTS_FILE = 'data/results.json'
VERIFY_MODES = ('residuals', 'sandwich', 'comparison', 'statements', 'all')
SWEEP_COLUMNS = ['index', 'a', 'b', 'd', 'r', 'strong_weak', 'verdict', 'c_star', 'gap', 'case_tag',
                 'slow_speed', 'fast_speed', 'passed', 'error']


@dataclass
class ExperimentOutcome:
    """What run_cli needs: the run, its overall pass/fail and the one-line verdict"""
    manifest: RunManifest
    passed: bool
    summary: str
    results: Dict[str, Any] = field(default_factory=dict)


def library_versions() -> Dict[str, str]:
    return {
        'lv_lab': lv_lab.__version__,
        'python': platform.python_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'pandas': pd.__version__,
        'matplotlib': matplotlib.__version__,
    }


# =============================================================================
# CONFIG TRANSLATION
# =============================================================================

def wave_options(config: ExperimentConfig) -> Tuple[Optional[float], Optional[int], float]:
    tol = config.get_float('wave', 'tol', float(lab_default('wave', 'tol')))
    return config.get_float('wave', 'L'), config.get_int('wave', 'n'), tol


def simulation_config(config: ExperimentConfig, p: Params, scenario: Optional[Scenario] = None) -> SimConfig:
    simulator = PdeSimulatorFactory.create_simulator_service()
    t_end = config.get_float('simulation', 't_end', float(lab_default('simulation', 't_end')))
    h = config.get_float('simulation', 'h', float(lab_default('simulation', 'h')))
    if scenario is None:
        try:
            scenario = Scenario(config.get('simulation', 'scenario', 'A'))
        except ValueError as exc:
            raise ConfigError(f"Unknown scenario {config.get('simulation', 'scenario')!r}") from exc
    if config.get('simulation', 'boundary', 'neumann') != 'neumann':
        raise ConfigError("Only Neumann boundaries are supported", {'boundary': config.get('simulation', 'boundary')})

    defaults = InitialShape()
    shape = InitialShape(
        u_support=config.get_floats('simulation', 'u_support') or defaults.u_support,
        v_support=config.get_floats('simulation', 'v_support') or defaults.v_support,
        v_floor=config.get_float('simulation', 'v_floor', defaults.v_floor),
    )
    for name in ('u_support', 'v_support'):
        if len(getattr(shape, name)) != 2:
            raise ConfigError(f"[simulation] {name} needs two numbers")

    if config.has('simulation', 'x_min') or config.has('simulation', 'x_max'):
        x_min, x_max = config.get_float('simulation', 'x_min'), config.get_float('simulation', 'x_max')
        if x_min is None or x_max is None:
            raise ConfigError("[simulation] needs both x_min and x_max")
        grid = Grid1D.from_bounds(x_min, x_max, h)
    else:
        support = max(abs(v) for v in shape.u_support + shape.v_support)
        grid = simulator.auto_domain(p, t_end, support=support, h=h)
    return simulator.default_config(
        p, t_end, scenario, grid=grid,
        dt=config.get_float('simulation', 'dt'),
        snapshot_every=config.get_float('simulation', 'snapshot_every'),
        shape=shape,
    )


def sweep_spec(config: ExperimentConfig) -> SweepSpec:
    values = {name: config.get_floats('sweep', name) for name in ('a', 'b', 'd', 'r')}
    missing = [name for name, grid in values.items() if not grid]
    if missing:
        raise ConfigError(f"[sweep] needs value lists for {', '.join(missing)}", {'missing': missing})
    try:
        kind = ExperimentKind(config.get('sweep', 'kind', 'classify'))
    except ValueError as exc:
        raise ConfigError(f"Unknown sweep kind {config.get('sweep', 'kind')!r}") from exc
    template = {name: section for name, section in config.to_dict().items() if name not in ('sweep', 'params')}
    workers = config.get_int('sweep', 'max_workers', int(lab_default('sweep', 'max_workers')))
    return SweepSpec(values['a'], values['b'], values['d'], values['r'], kind, template, max(1, workers))


def comparison_service(config: ExperimentConfig) -> ComparisonLabService:
    '''Comparison lab with [verify] overrides on top of the laboratory defaults'''
    def value(key: str) -> float:
        return config.get_float('verify', key, float(lab_default('verify', key)))

    return ComparisonLabService(
        slack_factor=value('slack_factor'),
        activation_start=value('activation_start'),
        t_span=value('t_span'),
        half_width=value('half_width'),
        max_shift=value('max_shift'),
        ordering_tol=value('ordering_tol'),
    )


# =============================================================================
# RUN CONTEXT
# =============================================================================

class RunContext:
    """One run directory: registered writes, timings, verdicts and the bound logger"""

    def __init__(self, repository: RunRepository, manifest: RunManifest):
        self.repository = repository
        self.manifest = manifest
        self.timer = StageTimer()
        self.reporting = ReportingEngineFactory.create_reporting_engine()
        self.log = structlog.get_logger('core.harness').bind(run_id=manifest.run_id, command=manifest.command)

    def write_json(self, relative: str, data: Any) -> None:
        self.repository.write_json(self.manifest, relative, data)

    def write_csv(self, relative: str, rows: List[Dict[str, Any]], columns: List[str]) -> None:
        self.repository.write_with(self.manifest, relative,
                                   lambda path: self.reporting.exporter.export_csv(rows, columns, path))

    def plot(self, relative: str, draw: Callable[[Any], Any]) -> None:
        self.repository.write_with(self.manifest, relative, draw)

    def record(self, check: CheckResult) -> CheckResult:
        self.manifest.verdicts[check.name] = check.verdict
        self.log.info('check', check=check.name, verdict=check.verdict, error=check.error)
        return check

    def finish(self, results: Dict[str, Any]) -> None:
        self.manifest.timings = self.timer.as_dict()
        self.manifest.finished_at = utc_now()
        self.write_json(RESULTS_FILE, results)
        report_path = self.repository.register(self.manifest, 'report.md')
        report_path.write_text(self.reporting.renderer.render(self.manifest, results), encoding='utf-8')
        self.repository.save_manifest(self.manifest)
        self.log.info('run finished', verdicts=self.manifest.verdicts)


def _failure_entries(checks: List[CheckResult]) -> List[Dict[str, Any]]:
    entries = []
    for check in checks:
        if check.passed:
            continue
        details = check.details
        where = details.get('worst_location_sub') or details.get('worst_location_super') or details.get('worst_t')
        entries.append({'name': check.name, 'error': check.error, 'error_code': check.error_code,
                        'worst_location': where})
    return entries


def _finite(value: Optional[float]) -> Optional[float]:
    return value if value is not None and math.isfinite(value) else None


# =============================================================================
# SERVICE COMPOSER (SOLID: Open/Closed Principle)
# =============================================================================

class ExperimentHarness:
    """Runs one experiment per subcommand inside a fresh run directory"""

    def __init__(self, repository: Optional[RunRepository] = None):
        self.repository = repository or FilesystemRunRepository()
        self.waves = WaveSolverFactory.create_wave_solver_service()
        self.simulator = PdeSimulatorFactory.create_simulator_service()
        self.fronts = FrontAnalysisFactory.create_front_analysis_service()
        self.current: Optional[RunContext] = None

    def open_run(self, command: str, config: ExperimentConfig, p: Optional[Params]) -> RunContext:
        manifest = self.repository.create(command, config.config_hash,
                                          p.to_dict() if p is not None else None, library_versions())
        ctx = RunContext(self.repository, manifest)
        self.current = ctx
        self.repository.write_text(manifest, 'config.ini', config.render())
        ctx.log.info('run started', config_hash=manifest.config_hash)
        return ctx

    def run(self, command: str, config: ExperimentConfig) -> ExperimentOutcome:
        handlers = {
            'classify': self.classify,
            'wave': self.wave,
            'simulate': self.simulate,
            'track': self.track,
            'verify': self.verify,
            'sweep': self.sweep,
        }
        if command not in handlers:
            raise ConfigError(f"Unknown command {command!r}", {'command': command})
        return handlers[command](config)

    # -- classify -----------------------------------------------------------

    def classify(self, config: ExperimentConfig) -> ExperimentOutcome:
        p = config.params()
        p.require_strong_weak()
        ctx = self.open_run('classify', config, p)
        with ctx.timer.stage('classify'):
            verdict = classify_determinacy(p)
        ctx.manifest.verdicts['determinacy'] = verdict.verdict.value
        results = dict(verdict.to_dict(), params=p.to_dict(), interval=list(kan_on_interval(p.a)))
        ctx.write_json('data/classify.json', results)
        ctx.finish(results)
        summary = json.dumps({'run_id': ctx.manifest.run_id, 'verdict': verdict.verdict.value,
                              'firing_conditions': verdict.firing_conditions})
        return ExperimentOutcome(ctx.manifest, not verdict.data_error, summary, results)

    # -- wave ---------------------------------------------------------------

    def compute_minimal_wave(self, p: Params, config: ExperimentConfig):
        L, n, tol = wave_options(config)
        return self.waves.minimal_speed(p, tol=tol, L=L, n=n)

    def wave(self, config: ExperimentConfig) -> ExperimentOutcome:
        p = config.params()
        p.require_strong_weak()
        ctx = self.open_run('wave', config, p)
        with ctx.timer.stage('minimal_speed'):
            search = self.compute_minimal_wave(p, config)
        lo, hi = kan_on_interval(p.a)
        checks = [ctx.record(
            CheckResult.ok('kan_on_interval', {'c_star': search.c_star, 'interval': [lo, hi]})
            if lo - 1e-12 <= search.c_star <= hi + 1e-12 else
            CheckResult.fail('kan_on_interval', 'c* outside [2 sqrt(1-a), 2]', 'INVALID_INTERVAL',
                             {'c_star': search.c_star, 'interval': [lo, hi]}))]
        regime = speed_regime(p, search.c_star)
        results: Dict[str, Any] = {
            'search': search.to_dict(),
            'pushed': is_pushed(p, search.c_star),
            'regime': regime.to_dict(),
            'key_numbers': {'c_star': search.c_star, 'linear_speed': lo,
                            'gap': search.c_star - lo},
        }

        w = search.profile
        if w is not None:
            ctx.write_csv('data/profile.csv', ctx.reporting.exporter.profile_rows(w), ['xi', 'U', 'V'])
            ctx.plot('plots/profile.svg', lambda path: ctx.reporting.plotter.profile(w, path))
            if config.get('wave', 'asymptotics', 'false').lower() == 'true':
                with ctx.timer.stage('asymptotics'):
                    try:
                        report = self.waves.verify_asymptotics(w, p, search.c_star)
                        results['asymptotics'] = report.to_dict()
                        check = CheckResult.ok('asymptotics', report.relative_errors) if report.within_tolerance \
                            else CheckResult.fail('asymptotics', 'tail rates off the linearized exponents',
                                                  'RATE_MISMATCH', report.relative_errors)
                    except LabError as exc:
                        check = CheckResult.from_error('asymptotics', exc)
                checks.append(ctx.record(check))

        ctx.write_json('data/wave.json', results)
        results['failures'] = _failure_entries(checks)
        ctx.finish(results)
        passed = all(check.passed for check in checks)
        summary = json.dumps({'run_id': ctx.manifest.run_id, 'c_star': search.c_star,
                              'pushed': results['pushed'], 'passed': passed})
        return ExperimentOutcome(ctx.manifest, passed, summary, results)

    # -- simulate -----------------------------------------------------------

    def _initial_state(self, cfg: SimConfig, p: Params, config: ExperimentConfig) -> Optional[FieldState]:
        if cfg.ic_kind is not Scenario.WAVE:
            return None
        w = self.compute_minimal_wave(p, config).profile
        return self.simulator.wave_initial_data(w, cfg.grid, shift=0.0)

    def _write_trajectory(self, ctx: RunContext, trajectory: Trajectory) -> None:
        rows = ctx.reporting.exporter.trajectory_rows(trajectory)
        ctx.write_csv('data/observables.csv', rows, list(rows[0].keys()))
        final = trajectory.final
        ctx.write_csv('data/final_state.csv',
                      [{'x': float(x), 'u': float(u), 'v': float(v)} for x, u, v in zip(final.grid.x, final.u, final.v)],
                      ['x', 'u', 'v'])
        ctx.plot('plots/snapshots.svg', lambda path: ctx.reporting.plotter.snapshots(trajectory, path))

    def simulate(self, config: ExperimentConfig) -> ExperimentOutcome:
        p = config.params()
        cfg = simulation_config(config, p)
        ctx = self.open_run('simulate', config, p)
        with ctx.timer.stage('simulate'):
            try:
                trajectory = self.simulator.run(cfg, self._initial_state(cfg, p, config))
                check = CheckResult.ok('simulation', {'warnings': list(trajectory.warnings)})
            except LabError as exc:
                trajectory, check = None, CheckResult.from_error('simulation', exc)
        checks = [ctx.record(check)]
        results: Dict[str, Any] = {'config': {'dt': cfg.dt, 'h': cfg.grid.h, 't_end': cfg.t_end,
                                              'x_min': cfg.grid.x_min, 'x_max': cfg.grid.x_max,
                                              'scenario': cfg.ic_kind.value}}
        if trajectory is not None:
            checks.append(ctx.record(self.simulator.check_positivity(trajectory)))
            self._write_trajectory(ctx, trajectory)
            last = trajectory.observables[-1]
            results['warnings'] = list(trajectory.warnings)
            results['key_numbers'] = {'sup_u': last['sup_u'], 'sup_v': last['sup_v'], 'front_u': last['front_u'],
                                      'max_projected': checks[-1].details['max_projected']}
        results['failures'] = _failure_entries(checks)
        ctx.finish(results)
        passed = all(item.passed for item in checks)
        summary = json.dumps({'run_id': ctx.manifest.run_id, 'simulation': check.verdict, 'passed': passed,
                              'warnings': len(results.get('warnings', []))})
        return ExperimentOutcome(ctx.manifest, passed, summary, results)

    # -- track --------------------------------------------------------------

    def _window(self, config: ExperimentConfig, t_end: float) -> Tuple[float, float]:
        start = config.get_float('tracking', 'window_start', float(lab_default('tracking', 'window_start')))
        end = config.get_float('tracking', 'window_end', float(lab_default('tracking', 'window_end')))
        if end > t_end:
            start, end = min(start, t_end / 2.0), t_end
        return start, end

    def track(self, config: ExperimentConfig) -> ExperimentOutcome:
        p = config.params()
        p.require_strong_weak()
        cfg = simulation_config(config, p)
        ctx = self.open_run('track', config, p)
        with ctx.timer.stage('minimal_speed'):
            search = self.compute_minimal_wave(p, config)
        c_star = search.c_star
        regime = speed_regime(p, c_star)
        with ctx.timer.stage('simulate'):
            trajectory = self.simulator.run(cfg, self._initial_state(cfg, p, config))
        self._write_trajectory(ctx, trajectory)
        checks: List[CheckResult] = [ctx.record(self.simulator.check_positivity(trajectory))]

        level = config.get_float('tracking', 'level', float(lab_default('tracking', 'level')))
        direction = Direction(config.get('tracking', 'direction', Direction.RIGHTMOST.value))
        window = self._window(config, cfg.t_end)
        traces = [self.fronts.track_level_set(trajectory, species, level, direction)
                  for species in (Species.U, Species.V)]
        ctx.write_csv('data/fronts.csv', ctx.reporting.exporter.trace_rows(traces), ['t', 'u_front', 'v_front'])
        ctx.plot('plots/fronts.svg', lambda path: ctx.reporting.plotter.fronts(
            traces, path, {'c_star': c_star, 'c_v': p.c_v}))

        key_numbers: Dict[str, Any] = {'c_star': c_star, 'c_v': p.c_v}
        results: Dict[str, Any] = {'regime': regime.to_dict(), 'window': list(window)}
        with ctx.timer.stage('analysis'):
            if cfg.ic_kind is Scenario.B:
                report = self.fronts.detect_regimes(trajectory, p, regime, window)
                results['regimes'] = report.to_dict()
                checks.extend(ctx.record(check) for check in report.checks)
                key_numbers.update({k: v for k, v in report.measured.items() if _finite(v) is not None})
                drift = self._drift(traces, regime, p, window)
                if drift is not None:
                    trace, fit, reference = drift
                    check = ctx.record(self.fronts.check_log_drift(fit, reference))
                    checks.append(check)
                    results['drift'] = dict(fit.to_dict(), reference_kappa=reference, verdict=check.verdict)
                    key_numbers.update(kappa=fit.kappa, reference_kappa=reference)
                    ctx.plot('plots/drift.svg', lambda path: ctx.reporting.plotter.drift(trace, fit, path, reference))
            else:
                try:
                    fit = self.fronts.fit_speed(traces[0], window)
                    key_numbers['u_speed'] = fit.speed
                    error = abs(fit.speed - c_star) / c_star
                    tolerance = float(lab_default('tracking', 'speed_tolerance'))
                    details = {'measured': fit.speed, 'c_star': c_star, 'relative_error': error}
                    check = CheckResult.ok('front_speed', details) if error <= tolerance else \
                        CheckResult.fail('front_speed', f"u front moves at {fit.speed:.4f}, c* = {c_star:.4f}",
                                         'REGIME_MISMATCH', details)
                except LabError as exc:
                    check = CheckResult.from_error('front_speed', exc)
                checks.append(ctx.record(check))
                if search.profile is not None:
                    check = self._convergence(ctx, trajectory, search.profile, p, results, key_numbers)
                    if check is not None:
                        checks.append(ctx.record(check))

        ctx.write_json('data/track.json', results)
        results.update(key_numbers=key_numbers, failures=_failure_entries(checks), warnings=list(trajectory.warnings))
        ctx.finish(results)
        passed = all(check.passed for check in checks)
        summary = json.dumps({'run_id': ctx.manifest.run_id, 'case': regime.case_tag.value, 'passed': passed})
        return ExperimentOutcome(ctx.manifest, passed, summary, results)

    def _drift(self, traces, regime, p: Params,
               window: Tuple[float, float]) -> Optional[Tuple[FrontTrace, DriftFit, float]]:
        """Log-delay fit of the fast front against its linear speed, with the predicted kappa"""
        if regime.case_tag is SpeedCase.DEGENERATE:
            return None
        faster_u = regime.case_tag is SpeedCase.FASTER_U
        trace, c_fixed = (traces[0], regime.c_u) if faster_u else (traces[1], regime.c_v)
        start = max(window[0], float(lab_default('tracking', 'drift_window_start')))
        try:
            fit = self.fronts.fit_log_drift(trace, c_fixed, (start, window[1]))
        except LabError as exc:
            logger.warning(f"Drift fit skipped: {exc.message}")
            return None
        return trace, fit, 3.0 / c_fixed if faster_u else 3.0 * p.d / c_fixed

    def _convergence(self, ctx: RunContext, trajectory: Trajectory, w: WaveProfile, p: Params,
                     results: Dict[str, Any], key_numbers: Dict[str, Any]) -> Optional[CheckResult]:
        """Sup-distance to the realigned minimal wave; graded only when the wave is pushed"""
        try:
            series = self.fronts.profile_convergence(trajectory, w, w.c)
        except LabError as exc:
            return CheckResult.from_error('profile_convergence', exc)
        ctx.write_csv('data/convergence.csv', ctx.reporting.exporter.convergence_rows(series),
                      ['t', 'sup_distance', 'shift'])
        ctx.plot('plots/convergence.svg', lambda path: ctx.reporting.plotter.convergence(
            series.times, series.sup_distance, path))
        check = self.fronts.check_convergence(
            series,
            threshold=float(lab_default('tracking', 'convergence_threshold')),
            tail=float(lab_default('tracking', 'convergence_tail')),
        )
        results['convergence'] = dict(check.details, verdict=check.verdict)
        key_numbers['sup_distance'] = check.details.get('final_distance')
        if not is_pushed(p, w.c):
            logger.info(f"Profile convergence at the linear speed {w.c:.6f} is recorded, not graded")
            return None
        return check

    # -- verify -------------------------------------------------------------

    def verify(self, config: ExperimentConfig) -> ExperimentOutcome:
        p = config.params()
        p.require_strong_weak()
        mode = config.get('verify', 'mode', 'all')
        if mode not in VERIFY_MODES:
            raise ConfigError(f"[verify] mode must be one of {VERIFY_MODES}", {'mode': mode})
        ctx = self.open_run('verify', config, p)
        comparison = comparison_service(config)
        with ctx.timer.stage('minimal_speed'):
            w = self.compute_minimal_wave(p, config).profile
        checks: List[CheckResult] = []
        results: Dict[str, Any] = {'mode': mode, 'key_numbers': {'c_star': w.c}}
        wanted = set(VERIFY_MODES[:-1]) if mode == 'all' else {mode}

        specs: Dict[SolutionKind, Any] = {}
        if wanted & {'residuals', 'sandwich'}:
            with ctx.timer.stage('residuals'):
                results['key_numbers']['exact_wave_residual'] = exact_wave_residual(w, p)
                for kind in (SolutionKind.SUB, SolutionKind.SUPER):
                    name = f'residuals_{kind.value}'
                    try:
                        spec, report = comparison.choose_parameters(p, w, kind)
                        specs[kind] = spec
                        ctx.write_json(f'data/{name}.json', {'spec': spec.to_dict(), 'report': report.to_dict()})
                        check = CheckResult.ok(name, report.to_dict())
                    except Infeasible as exc:
                        check = CheckResult.from_error(name, exc)
                    if 'residuals' in wanted:
                        checks.append(ctx.record(check))

        trajectory = None
        if wanted & {'sandwich', 'statements'}:
            cfg = simulation_config(config, p, Scenario.A)
            with ctx.timer.stage('simulate'):
                trajectory = self.simulator.run(cfg)
            self._write_trajectory(ctx, trajectory)

        if 'sandwich' in wanted:
            with ctx.timer.stage('sandwich'):
                if len(specs) == 2:
                    sub = comparison.build_sub_pair(p, w, specs[SolutionKind.SUB])
                    sup = comparison.build_super_pair(p, w, specs[SolutionKind.SUPER])
                    check = comparison.check_sandwich(trajectory, sub, sup, w)
                else:
                    check = CheckResult.fail('sandwich', 'no admissible sub/super-solution pair', 'INFEASIBLE')
                checks.append(ctx.record(check))

        if 'comparison' in wanted:
            with ctx.timer.stage('comparison'):
                low = simulation_config(config, p, Scenario.A)
                high = SimConfig(params=p, grid=low.grid, dt=low.dt, t_end=low.t_end,
                                 snapshot_stride=low.snapshot_stride, ic_kind=Scenario.B, shape=low.shape,
                                 implicit_startup_steps=low.implicit_startup_steps)
                checks.append(ctx.record(comparison.check_comparison_principle(low, high)))

        if 'statements' in wanted:
            with ctx.timer.stage('statements'):
                checks.append(ctx.record(comparison.check_ode_bound(self._excess_run(trajectory.config))))
                checks.append(ctx.record(comparison.check_interior_convergence(trajectory)))
                checks.append(ctx.record(comparison.check_local_stability(trajectory, w, w.c)))

        results['checks'] = [check.to_dict() for check in checks]
        results['failures'] = _failure_entries(checks)
        ctx.finish(results)
        passed = all(check.passed for check in checks)
        summary = json.dumps({'run_id': ctx.manifest.run_id, 'mode': mode, 'passed': passed,
                              'checks': {check.name: check.verdict for check in checks}})
        return ExperimentOutcome(ctx.manifest, passed, summary, results)

    def _excess_run(self, cfg: SimConfig) -> Trajectory:
        """Short run from Scenario-A data with u raised above 1 so the ODE bound is visible"""
        base = self.simulator.make_initial_data(Scenario.A, cfg.grid, cfg.shape)
        short = SimConfig(params=cfg.params, grid=cfg.grid, dt=cfg.dt, t_end=min(cfg.t_end, 30.0),
                          snapshot_stride=max(1, int(round(0.5 / cfg.dt))), ic_kind=Scenario.A, shape=cfg.shape,
                          implicit_startup_steps=cfg.implicit_startup_steps)
        initial = FieldState(t=0.0, u=1.5 * np.asarray(base.u), v=np.asarray(base.v), grid=cfg.grid)
        return self.simulator.run(short, initial)

    # -- sweep --------------------------------------------------------------

    def sweep(self, config: ExperimentConfig) -> ExperimentOutcome:
        spec = sweep_spec(config)
        ctx = self.open_run('sweep', config, None)
        points = spec.points()
        tasks = [(index, params.to_dict(), spec.kind.value, spec.template) for index, params in points]
        ctx.log.info('sweep started', points=len(tasks), workers=spec.max_workers, kind=spec.kind.value)
        with ctx.timer.stage('sweep'):
            if spec.max_workers > 1 and len(tasks) > 1:
                with Pool(min(spec.max_workers, len(tasks)), initializer=_init_worker) as pool:
                    rows = pool.map(sweep_point, tasks)
            else:
                rows = [sweep_point(task) for task in tasks]
        rows = sorted(rows, key=lambda row: row['index'])

        ctx.write_csv('data/sweep.csv', rows, SWEEP_COLUMNS)
        frame = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
        ctx.plot('plots/regime_map.svg', lambda path: ctx.reporting.plotter.regime_map(frame, path))
        failed = [row['index'] for row in rows if row['error']]
        ctx.manifest.verdicts['sweep'] = 'PASS' if not failed else 'FAIL'
        results = {
            'kind': spec.kind.value,
            'points': len(rows),
            'failed_points': failed,
            'regime_map': 'plots/regime_map.svg',
            'key_numbers': {'points': len(rows), 'failed': len(failed)},
        }
        if failed:
            results['failures'] = [{'name': f"point {row['index']}", 'error': row['error']}
                                   for row in rows if row['error']]
        ctx.finish(results)
        summary = json.dumps({'run_id': ctx.manifest.run_id, 'points': len(rows), 'failed': len(failed)})
        return ExperimentOutcome(ctx.manifest, not failed, summary, results)

    # -- report -------------------------------------------------------------

    def report(self, run_id: str) -> str:
        manifest = self.repository.get_manifest(run_id)
        results_path = self.repository.path_for(run_id, RESULTS_FILE)
        results = json.loads(results_path.read_text(encoding='utf-8')) if results_path.is_file() else {}
        text = ReportingEngineFactory.create_reporting_engine().renderer.render(manifest, results)
        self.repository.write_text(manifest, 'report.md', text)
        self.repository.save_manifest(manifest)
        return text


# =============================================================================
# SWEEP WORKERS
# =============================================================================

def _init_worker() -> None:
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'lv_lab.settings')


def sweep_point(task: Tuple[int, Dict[str, float], str, Dict[str, Dict[str, str]]]) -> Dict[str, Any]:
    """One grid point, computed without touching the run directory"""
    index, values, kind, template = task
    p = Params(**values)
    row: Dict[str, Any] = {column: None for column in SWEEP_COLUMNS}
    row.update(index=index, strong_weak=p.strong_weak, error='', **values)
    if not p.strong_weak:
        row['error'] = 'outside 0 < a < 1 < b'
        return row

    config = ExperimentConfig.from_mapping(template)
    waves = WaveSolverFactory.create_wave_solver_service()
    try:
        row['verdict'] = classify_determinacy(p).verdict.value
        if kind == ExperimentKind.CLASSIFY.value:
            row['passed'] = True
            return row

        L, n, tol = wave_options(config)
        search = waves.minimal_speed(p, tol=tol, L=L, n=n)
        row.update(c_star=search.c_star, gap=search.c_star - p.linear_speed)
        regime = speed_regime(p, search.c_star)
        row['case_tag'] = regime.case_tag.value
        if kind == ExperimentKind.WAVE.value:
            row['passed'] = True
            return row

        fronts = FrontAnalysisFactory.create_front_analysis_service()
        simulator = PdeSimulatorFactory.create_simulator_service()
        if kind == ExperimentKind.VERIFY.value:
            comparison = comparison_service(config)
            reports = [comparison.choose_parameters(p, search.profile, k)[1]
                       for k in (SolutionKind.SUB, SolutionKind.SUPER)]
            row['passed'] = all(report.passed for report in reports)
            return row

        scenario = Scenario.B if kind == ExperimentKind.TRACK.value else Scenario.A
        cfg = simulation_config(config, p, scenario)
        trajectory = simulator.run(cfg)
        window = (min(float(lab_default('tracking', 'window_start')), cfg.t_end / 2.0), cfg.t_end)
        if kind == ExperimentKind.TRACK.value:
            report = fronts.detect_regimes(trajectory, p, regime, window)
            row.update(slow_speed=_finite(report.measured.get('slow_speed')),
                       fast_speed=_finite(report.measured.get('fast_speed')), passed=report.passed)
        else:
            trace = fronts.track_level_set(trajectory, Species.U)
            row.update(slow_speed=fronts.fit_speed(trace, window).speed, passed=True)
    except LabError as exc:
        row['error'] = f'{exc.error_code}: {exc.message}'
        logger.warning(f"Sweep point {index} failed: {row['error']}")
    return row


# =============================================================================
# FACTORY PATTERN (SOLID: Dependency Inversion Principle)
# =============================================================================

class ExperimentHarnessFactory:
    """Factory for the experiment harness"""

    @staticmethod
    def create_harness(runs_root: Optional[str] = None) -> ExperimentHarness:
        return ExperimentHarness(FilesystemRunRepository(runs_root))
