"""
PDE Simulator
Strang-split integrator for the competition-diffusion Cauchy problem on a
large interval with homogeneous Neumann ends
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import solve_banded

from core.exceptions import Blowup, ConfigError, SupportOutOfDomain
from core.models import (
    Anchor,
    ComovingProfile,
    Direction,
    FieldState,
    Grid1D,
    InitialShape,
    Params,
    Scenario,
    SimConfig,
    Trajectory,
    WaveProfile,
)
from core.services.front_analysis import level_crossing
from core.services.model_core import reaction_terms
from core.utils.experiment_config import lab_default
from core.utils.result import CheckResult

logger = logging.getLogger(__name__)

SUPPORT_MARGIN_FRACTION = 0.2


# =============================================================================
# INTERFACES (SOLID: Interface Segregation Principle)
# =============================================================================

class IReactionStep(ABC):

    @abstractmethod
    def advance(self, u: np.ndarray, v: np.ndarray, p: Params, dt: float) -> Tuple[np.ndarray, np.ndarray]:
        pass


class IDiffusionStep(ABC):

    @abstractmethod
    def advance(self, w: np.ndarray, diffusivity: float, h: float, dt: float, theta: float) -> np.ndarray:
        pass


# =============================================================================
# CONCRETE IMPLEMENTATIONS (SOLID: Single Responsibility Principle)
# =============================================================================

class RungeKuttaReaction(IReactionStep):
    """Classical RK4 for the pointwise kinetics u' = F, v' = G"""

    def advance(self, u, v, p, dt):
        k1u, k1v = reaction_terms(u, v, p)
        k2u, k2v = reaction_terms(u + 0.5 * dt * k1u, v + 0.5 * dt * k1v, p)
        k3u, k3v = reaction_terms(u + 0.5 * dt * k2u, v + 0.5 * dt * k2v, p)
        k4u, k4v = reaction_terms(u + dt * k3u, v + dt * k3v, p)
        u_new = u + dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        v_new = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        return u_new, v_new


class ThetaDiffusion(IDiffusionStep):
    """
    (I - theta dt D A) w_new = (I + (1 - theta) dt D A) w with A the
    second-difference matrix and Neumann ghost points folded into the end rows.
    theta = 1/2 is Crank-Nicolson, theta = 1 backward Euler.
    """

    def __init__(self):
        self._banded: Dict[Tuple[int, float, float, float, float], np.ndarray] = {}

    @staticmethod
    def laplacian(w: np.ndarray, h: float) -> np.ndarray:
        lap = np.empty_like(w)
        lap[1:-1] = w[2:] - 2.0 * w[1:-1] + w[:-2]
        lap[0] = 2.0 * (w[1] - w[0])
        lap[-1] = 2.0 * (w[-2] - w[-1])
        return lap / (h * h)

    def _matrix(self, n: int, diffusivity: float, h: float, dt: float, theta: float) -> np.ndarray:
        key = (n, diffusivity, h, dt, theta)
        if key not in self._banded:
            k = theta * dt * diffusivity / (h * h)
            ab = np.zeros((3, n))
            ab[0, 1:] = -k
            ab[0, 1] = -2.0 * k
            ab[1, :] = 1.0 + 2.0 * k
            ab[2, :-1] = -k
            ab[2, n - 2] = -2.0 * k
            self._banded[key] = ab
        return self._banded[key]

    def advance(self, w, diffusivity, h, dt, theta):
        rhs = w + (1.0 - theta) * dt * diffusivity * self.laplacian(w, h) if theta < 1.0 else w
        ab = self._matrix(w.size, diffusivity, h, dt, theta)
        return solve_banded((1, 1), ab, rhs, check_finite=False)


class StrangSplittingIntegrator:
    """Half reaction step, full diffusion step per species, half reaction step"""

    def __init__(self, reaction: IReactionStep, diffusion: IDiffusionStep, blowup_bound: float = 10.0):
        self.reaction = reaction
        self.diffusion = diffusion
        self.blowup_bound = blowup_bound

    def step(self, s: FieldState, cfg: SimConfig, theta: float = 0.5,
             t_new: Optional[float] = None) -> Tuple[FieldState, float]:
        """Returns the new state and the most negative value projected to zero"""
        p, h, dt = cfg.params, cfg.grid.h, cfg.dt
        u, v = self.reaction.advance(np.asarray(s.u), np.asarray(s.v), p, 0.5 * dt)
        u = self.diffusion.advance(u, 1.0, h, dt, theta)
        v = self.diffusion.advance(v, p.d, h, dt, theta)
        u, v = self.reaction.advance(u, v, p, 0.5 * dt)

        t_new = s.t + dt if t_new is None else t_new
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise Blowup(f"Non-finite values at t={t_new:.4f}", {'t': t_new})
        peak = max(np.max(np.abs(u)), np.max(np.abs(v)))
        if peak > self.blowup_bound:
            raise Blowup(f"Solution magnitude {peak:.3g} exceeds {self.blowup_bound} at t={t_new:.4f}",
                         {'t': t_new, 'peak': float(peak)})

        lowest = min(float(u.min()), float(v.min()), 0.0)
        if lowest < 0.0:
            u, v = np.maximum(u, 0.0), np.maximum(v, 0.0)
        return FieldState(t=t_new, u=u, v=v, grid=s.grid), lowest


class InitialDataBuilder:
    """Scenario A and B initial data with linear ramps over a few cells"""

    @staticmethod
    def smoothed_indicator(x: np.ndarray, support: Tuple[float, float], width: float) -> np.ndarray:
        lo, hi = support
        if width <= 0.0:
            return ((x >= lo) & (x <= hi)).astype(float)
        return np.clip(np.minimum(x - lo, hi - x) / width + 0.5, 0.0, 1.0)

    @staticmethod
    def _check_support(support: Tuple[float, float], grid: Grid1D, what: str) -> None:
        lo, hi = support
        margin = SUPPORT_MARGIN_FRACTION * grid.length
        if lo >= hi or lo - grid.x_min < margin or grid.x_max - hi < margin:
            raise SupportOutOfDomain(
                f"{what} support [{lo}, {hi}] needs a margin of {margin:.3g} inside "
                f"[{grid.x_min}, {grid.x_max}]",
                {'support': [lo, hi], 'domain': [grid.x_min, grid.x_max], 'margin': margin},
            )

    def build(self, kind: Scenario, grid: Grid1D, shape: InitialShape) -> FieldState:
        if kind is Scenario.WAVE:
            raise ConfigError("Wave initial data is built from a profile, see wave_initial_data")
        if not 0.0 < shape.u_height <= 1.0:
            raise ConfigError(f"u0 must be non-trivial with values in [0, 1], got height {shape.u_height}",
                              {'u_height': shape.u_height})
        self._check_support(shape.u_support, grid, 'u0')

        x = grid.x
        width = shape.ramp_cells * grid.h
        u0 = shape.u_height * self.smoothed_indicator(x, shape.u_support, width)

        if kind is Scenario.A:
            if not 0.0 < shape.v_floor <= 1.0:
                raise ConfigError(f"Scenario A needs a lower bound 0 < v_floor <= 1, got {shape.v_floor}",
                                  {'v_floor': shape.v_floor})
            bump = shape.v_height * self.smoothed_indicator(x, shape.v_support, width)
            v0 = np.maximum(shape.v_floor, np.minimum(bump, 1.0))
        else:
            if not 0.0 < shape.v_height <= 1.0:
                raise ConfigError(f"v0 must be non-trivial with values in [0, 1], got height {shape.v_height}",
                                  {'v_height': shape.v_height})
            self._check_support(shape.v_support, grid, 'v0')
            v0 = shape.v_height * self.smoothed_indicator(x, shape.v_support, width)

        if not np.any(u0 > 0.0):
            raise ConfigError("u0 vanishes on the grid; widen the support or refine h")
        return FieldState(t=0.0, u=u0, v=v0, grid=grid)


# =============================================================================
# SERVICE COMPOSER (SOLID: Open/Closed Principle)
# =============================================================================

class PdeSimulatorService:
    """Initial data, stepping, full runs with observables, comoving views"""

    def __init__(self, integrator: StrangSplittingIntegrator, initial_data: InitialDataBuilder,
                 level: float = 0.5, boundary_warning_fraction: float = 0.1,
                 positivity_tolerance: float = 1e-10):
        self.integrator = integrator
        self.initial_data = initial_data
        self.level = level
        self.boundary_warning_fraction = boundary_warning_fraction
        self.positivity_tolerance = positivity_tolerance

    def make_initial_data(self, kind: Scenario, grid: Grid1D, shape: Optional[InitialShape] = None) -> FieldState:
        return self.initial_data.build(kind, grid, shape or InitialShape())

    def step(self, s: FieldState, cfg: SimConfig, theta: float = 0.5) -> FieldState:
        state, _ = self.integrator.step(s, cfg, theta)
        return state

    def auto_domain(self, p: Params, t_end: float, support: Optional[float] = None,
                    h: Optional[float] = None) -> Grid1D:
        """Symmetric domain wide enough that no front reaches an end by t_end"""
        support = float(lab_default('simulation', 'support')) if support is None else support
        h = float(lab_default('simulation', 'h')) if h is None else h
        margin = float(lab_default('simulation', 'domain_margin'))
        fastest = max(p.c_u, p.c_v) + 1.0
        half = support + fastest * t_end + margin
        half = max(half, support / (1.0 - 2.0 * SUPPORT_MARGIN_FRACTION) + h)
        cells = int(math.ceil(half / h))
        return Grid1D.from_bounds(-cells * h, cells * h, h)

    def default_config(self, p: Params, t_end: float, scenario: Scenario = Scenario.A,
                       grid: Optional[Grid1D] = None, dt: Optional[float] = None,
                       snapshot_every: Optional[float] = None,
                       shape: Optional[InitialShape] = None) -> SimConfig:
        if dt is None:
            # reaction accuracy sets the step; faster kinetics or diffusion get a smaller one
            dt = float(lab_default('simulation', 'dt')) / max(1.0, p.r / 2.0, p.d / 2.0)
        grid = grid or self.auto_domain(p, t_end)
        every = float(lab_default('simulation', 'snapshot_every')) if snapshot_every is None else snapshot_every
        return SimConfig(
            params=p,
            grid=grid,
            dt=dt,
            t_end=t_end,
            snapshot_stride=max(1, int(round(every / dt))),
            ic_kind=scenario,
            shape=shape or InitialShape(),
            implicit_startup_steps=int(lab_default('simulation', 'implicit_startup_steps')),
        )

    def _observe(self, s: FieldState, lowest: float) -> Dict[str, float]:
        x = s.grid.x
        u, v = np.asarray(s.u), np.asarray(s.v)
        inside = s.grid.x_min <= 0.0 <= s.grid.x_max
        return {
            't': s.t,
            'sup_u': float(u.max()),
            'sup_v': float(v.max()),
            'excess_u': max(float(u.max()) - 1.0, 0.0),
            'excess_v': max(float(v.max()) - 1.0, 0.0),
            'u_at_0': float(np.interp(0.0, x, u)) if inside else float('nan'),
            'v_at_0': float(np.interp(0.0, x, v)) if inside else float('nan'),
            'front_u': level_crossing(x, u, self.level, Direction.RIGHTMOST),
            'front_u_left': level_crossing(x, u, self.level, Direction.LEFTMOST),
            'front_v': level_crossing(x, v, self.level, Direction.RIGHTMOST),
            'min_projected': lowest,
        }

    def _boundary_warnings(self, obs: Dict[str, float], grid: Grid1D, seen: set) -> List[str]:
        edge = self.boundary_warning_fraction * grid.length
        found = []
        for key in ('front_u', 'front_u_left', 'front_v'):
            position = obs[key]
            if key in seen or not math.isfinite(position):
                continue
            if position - grid.x_min < edge or grid.x_max - position < edge:
                seen.add(key)
                message = f"FrontNearBoundary: {key} at x={position:.2f}, t={obs['t']:.2f}"
                logger.warning(message)
                found.append(message)
        return found

    def run(self, cfg: SimConfig, initial: Optional[FieldState] = None) -> Trajectory:
        if initial is None:
            if cfg.ic_kind is Scenario.WAVE:
                raise ConfigError("Scenario 'wave' needs explicit initial data")
            initial = self.make_initial_data(cfg.ic_kind, cfg.grid, cfg.shape)

        state, lowest = initial, 0.0
        states = [initial]
        observables = [self._observe(initial, 0.0)]
        warnings: List[str] = []
        seen: set = set()
        n_steps = cfg.n_steps
        logger.info(f"Running {n_steps} steps on {cfg.grid.n} points (dt={cfg.dt}, h={cfg.grid.h})")

        for index in range(1, n_steps + 1):
            theta = 1.0 if index <= cfg.implicit_startup_steps else 0.5
            # time from the step count keeps snapshot times exact multiples of dt
            state, projected = self.integrator.step(state, cfg, theta, t_new=index * cfg.dt)
            lowest = min(lowest, projected)
            if index % cfg.snapshot_stride == 0 or index == n_steps:
                obs = self._observe(state, lowest)
                states.append(state)
                observables.append(obs)
                warnings.extend(self._boundary_warnings(obs, cfg.grid, seen))
                lowest = 0.0
                logger.debug(f"t={state.t:.2f} sup_u={obs['sup_u']:.6f} front_u={obs['front_u']:.3f}")

        if any(obs['min_projected'] < -self.positivity_tolerance for obs in observables):
            warnings.append("PositivityProjection: negative values beyond round-off were projected to zero")
        return Trajectory(config=cfg, states=tuple(states), observables=tuple(observables),
                          warnings=tuple(warnings))

    def check_positivity(self, trajectory: Trajectory, tolerance: Optional[float] = None) -> CheckResult:
        """Fails when the projection onto u, v >= 0 removed more than round-off"""
        tolerance = self.positivity_tolerance if tolerance is None else tolerance
        worst, worst_t = 0.0, None
        for obs in trajectory.observables:
            projected = -float(obs.get('min_projected', 0.0))
            if projected > worst:
                worst, worst_t = projected, obs['t']
        details = {'max_projected': worst, 'worst_t': worst_t, 'tolerance': tolerance}
        if worst <= tolerance:
            return CheckResult.ok('positivity', details)
        k = trajectory.config.dt / trajectory.grid.h ** 2 * max(1.0, trajectory.config.params.d)
        return CheckResult.fail('positivity', f"projected {worst:.3e} onto u, v >= 0 at t={worst_t} "
                                              f"(diffusion number {k:.3g})",
                                'POSITIVITY_VIOLATED', details)

    @staticmethod
    def comoving_extract(s: FieldState, c: float, anchor: Anchor = Anchor.ORIGIN, shift: float = 0.0,
                         xi_grid: Optional[np.ndarray] = None, level: float = 0.5) -> ComovingProfile:
        x = s.grid.x
        if anchor is Anchor.FRONT:
            front = level_crossing(x, np.asarray(s.u), level, Direction.RIGHTMOST)
            offset = (front - c * s.t if math.isfinite(front) else 0.0) + shift
        else:
            offset = shift
        xi = x - c * s.t - offset
        if xi_grid is None:
            return ComovingProfile(t=s.t, c=c, offset=offset, xi=xi, u=s.u, v=s.v)
        u = np.interp(xi_grid, xi, s.u, left=np.nan, right=np.nan)
        v = np.interp(xi_grid, xi, s.v, left=np.nan, right=np.nan)
        return ComovingProfile(t=s.t, c=c, offset=offset, xi=xi_grid, u=u, v=v)

    @staticmethod
    def wave_initial_data(w: WaveProfile, grid: Grid1D, shift: float = 0.0, v_floor: float = 1e-6,
                          left_cut: Optional[float] = None) -> FieldState:
        """
        (U, V)(x - shift) restricted to the Scenario-A class: u is cut off on
        the far left and where the profile underflows, v is lifted to v_floor.
        """
        x = grid.x
        xi = x - shift
        U = np.interp(xi, w.xi_grid, w.U, left=1.0, right=0.0)
        V = np.interp(xi, w.xi_grid, w.V, left=0.0, right=1.0)
        ahead = xi > w.L
        U[ahead] = np.asarray(w.U)[-1] * np.exp(
            (np.log(max(w.U[-1], 1e-300)) - np.log(max(w.U[-2], 1e-300))) / w.h * (xi[ahead] - w.L)
        )
        U[U < 1e-14] = 0.0

        left_cut = grid.x_min + SUPPORT_MARGIN_FRACTION * grid.length if left_cut is None else left_cut
        ramp = np.clip((x - left_cut) / (2.0 * grid.h), 0.0, 1.0)
        return FieldState(t=0.0, u=U * ramp, v=np.maximum(V, v_floor), grid=grid)


# =============================================================================
# FACTORY PATTERN (SOLID: Dependency Inversion Principle)
# =============================================================================

class PdeSimulatorFactory:
    """Factory for simulator services"""

    @staticmethod
    def create_simulator_service() -> PdeSimulatorService:
        integrator = StrangSplittingIntegrator(
            RungeKuttaReaction(),
            ThetaDiffusion(),
            blowup_bound=float(lab_default('simulation', 'blowup_bound')),
        )
        return PdeSimulatorService(
            integrator,
            InitialDataBuilder(),
            level=float(lab_default('tracking', 'level')),
            boundary_warning_fraction=float(lab_default('simulation', 'boundary_warning_fraction')),
            positivity_tolerance=float(lab_default('simulation', 'positivity_tolerance')),
        )


def make_initial_data(kind: Scenario, grid: Grid1D, shape: Optional[InitialShape] = None) -> FieldState:
    return PdeSimulatorFactory.create_simulator_service().make_initial_data(kind, grid, shape)


def step(s: FieldState, cfg: SimConfig) -> FieldState:
    return PdeSimulatorFactory.create_simulator_service().step(s, cfg)


def run(cfg: SimConfig, initial: Optional[FieldState] = None) -> Trajectory:
    return PdeSimulatorFactory.create_simulator_service().run(cfg, initial)


def comoving_extract(s: FieldState, c: float, anchor: Anchor = Anchor.ORIGIN, shift: float = 0.0,
                     xi_grid: Optional[np.ndarray] = None) -> ComovingProfile:
    return PdeSimulatorService.comoving_extract(s, c, anchor, shift, xi_grid)


def auto_domain(p: Params, t_end: float, support: Optional[float] = None, h: Optional[float] = None) -> Grid1D:
    return PdeSimulatorFactory.create_simulator_service().auto_domain(p, t_end, support, h)


def wave_initial_data(w: WaveProfile, grid: Grid1D, shift: float = 0.0, v_floor: float = 1e-6) -> FieldState:
    return PdeSimulatorService.wave_initial_data(w, grid, shift, v_floor)
