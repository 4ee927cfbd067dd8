"""
Domain value types for the competition-diffusion laboratory.

All types are immutable. Array-valued fields hold numpy arrays that callers
must treat as read-only; constructors copy and freeze them.
"""

from __future__ import annotations

import itertools
import math
import numbers
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from cuid2 import Cuid

from core.exceptions import InvalidParams, SpecInvalid


def generate_cuid() -> str:
    return Cuid().generate()


def _frozen(values: Any) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


class SpeedCase(Enum):
    """Spreading regime of a Scenario-B invasion"""
    FASTER_U = 'FasterU'
    DEGENERATE = 'Degenerate'
    SLOW_FRONT_C_STAR = 'SlowFrontCStar'
    SLOW_FRONT_C_STAR_STAR = 'SlowFrontCStarStar'


class Verdict(Enum):
    LINEAR_SUFFICIENT = 'LinearSufficient'
    NONLINEAR_SUFFICIENT = 'NonlinearSufficient'
    INCONCLUSIVE = 'Inconclusive'


class Scenario(Enum):
    """Initial-data classes"""
    A = 'A'  # u compactly supported, v bounded below by a positive constant
    B = 'B'  # both compactly supported
    WAVE = 'wave'  # traveling wave with v lifted to the Scenario-A class


class Species(Enum):
    U = 'u'
    V = 'v'


class Direction(Enum):
    RIGHTMOST = 'rightmost'
    LEFTMOST = 'leftmost'


class Anchor(Enum):
    ORIGIN = 'origin'
    FRONT = 'front'


class SolutionKind(Enum):
    SUB = 'sub'
    SUPER = 'super'


class ExperimentKind(Enum):
    SIMULATE = 'simulate'
    WAVE = 'wave'
    CLASSIFY = 'classify'
    TRACK = 'track'
    VERIFY = 'verify'


# =============================================================================
# MODEL
# =============================================================================

@dataclass(frozen=True)
class Params:
    """Positive model constants (a, b, d, r)"""
    a: float
    b: float
    d: float
    r: float

    def __post_init__(self):
        for name in ('a', 'b', 'd', 'r'):
            value = getattr(self, name)
            if (isinstance(value, bool) or not isinstance(value, numbers.Real)
                    or not math.isfinite(value) or value <= 0):
                raise InvalidParams(f"Parameter {name} must be a positive finite number, got {value!r}",
                                    {'parameter': name, 'value': value})
            object.__setattr__(self, name, float(value))

    @property
    def strong_weak(self) -> bool:
        return 0.0 < self.a < 1.0 < self.b

    @property
    def c_u(self) -> float:
        return 2.0

    @property
    def c_v(self) -> float:
        return 2.0 * math.sqrt(self.r * self.d)

    @property
    def linear_speed(self) -> float:
        return 2.0 * math.sqrt(1.0 - self.a) if self.a < 1.0 else float('nan')

    def require_strong_weak(self) -> None:
        if not self.strong_weak:
            raise InvalidParams(
                f"Parameters violate 0 < a < 1 < b: a={self.a}, b={self.b}",
                {'a': self.a, 'b': self.b},
            )

    def to_dict(self) -> Dict[str, float]:
        return {'a': self.a, 'b': self.b, 'd': self.d, 'r': self.r}


@dataclass(frozen=True)
class SpectralExponents:
    c: float
    lambda_u_minus: float
    lambda_u_plus: float
    lambda_v_minus: float
    lambda_v_plus: float
    mu_u_minus: float
    mu_u_plus: float
    mu_v_minus: float
    mu_v_plus: float

    def to_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass(frozen=True)
class SpeedRegime:
    c_u: float
    c_v: float
    c_star: float
    c_star_star: Optional[float]
    script_C: Optional[float]
    case_tag: SpeedCase
    f_c_star: Optional[float] = None

    @property
    def fast_speed(self) -> float:
        return max(self.c_u, self.c_v)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'c_u': self.c_u,
            'c_v': self.c_v,
            'c_star': self.c_star,
            'c_star_star': self.c_star_star,
            'script_C': self.script_C,
            'f_c_star': self.f_c_star,
            'case_tag': self.case_tag.value,
        }


@dataclass(frozen=True)
class DeterminacyVerdict:
    llw_holds: bool
    huang_holds: bool
    ao_nonlinear_holds: bool
    verdict: Verdict
    data_error: bool = False

    @property
    def firing_conditions(self) -> List[str]:
        names = []
        if self.llw_holds:
            names.append('llw')
        if self.huang_holds:
            names.append('huang')
        if self.ao_nonlinear_holds:
            names.append('ao_nonlinear')
        return names

    def to_dict(self) -> Dict[str, Any]:
        return {
            'llw_holds': self.llw_holds,
            'huang_holds': self.huang_holds,
            'ao_nonlinear_holds': self.ao_nonlinear_holds,
            'verdict': self.verdict.value,
            'firing_conditions': self.firing_conditions,
            'data_error': self.data_error,
        }


# =============================================================================
# TRAVELING WAVES
# =============================================================================

@dataclass(frozen=True, eq=False)
class WaveProfile:
    c: float
    xi_grid: np.ndarray = field(repr=False)
    U: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    converged: bool = True
    iterations: int = 0

    def __post_init__(self):
        for name in ('xi_grid', 'U', 'V'):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if not (self.xi_grid.shape == self.U.shape == self.V.shape):
            raise ValueError("WaveProfile arrays must share one shape")

    @property
    def h(self) -> float:
        return float(self.xi_grid[1] - self.xi_grid[0])

    @property
    def L(self) -> float:
        return float(self.xi_grid[-1])

    @property
    def n(self) -> int:
        return int(self.xi_grid.size)


@dataclass(frozen=True)
class NoMonotoneConnection:
    """Returned instead of a profile when no monotone wave exists at speed c"""
    c: float
    reason: str
    iterations: int = 0
    detail: str = ''

    converged = False


@dataclass(frozen=True)
class WaveAsymptoticsReport:
    c: float
    fitted_rate_u_plus: float
    fitted_rate_v_plus: float
    fitted_rate_v_minus: float
    fitted_rate_u_minus: float
    predicted: Dict[str, float]
    cases: Dict[str, str]
    amplitudes: Dict[str, float]
    relative_errors: Dict[str, float]
    tolerance: float = 0.05

    @property
    def within_tolerance(self) -> bool:
        return all(err <= self.tolerance for err in self.relative_errors.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            'c': self.c,
            'fitted': {
                'u_plus': self.fitted_rate_u_plus,
                'v_plus': self.fitted_rate_v_plus,
                'v_minus': self.fitted_rate_v_minus,
                'u_minus': self.fitted_rate_u_minus,
            },
            'predicted': self.predicted,
            'cases': self.cases,
            'amplitudes': self.amplitudes,
            'relative_errors': self.relative_errors,
            'within_tolerance': self.within_tolerance,
        }


# =============================================================================
# SIMULATION
# =============================================================================

@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    h: float
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"Grid needs at least 3 points, got {self.n}")
        if not math.isclose(self.x_max - self.x_min, (self.n - 1) * self.h, rel_tol=1e-9, abs_tol=1e-9):
            raise ValueError("Grid invariant x_max - x_min = (n - 1) h violated")

    @classmethod
    def from_bounds(cls, x_min: float, x_max: float, h: float) -> "Grid1D":
        n = int(round((x_max - x_min) / h)) + 1
        return cls(x_min=float(x_min), x_max=float(x_min + (n - 1) * h), h=float(h), n=n)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(self.n)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min


@dataclass(frozen=True, eq=False)
class FieldState:
    t: float
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    grid: Grid1D = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'u', _frozen(self.u))
        object.__setattr__(self, 'v', _frozen(self.v))
        if self.u.shape != (self.grid.n,) or self.v.shape != (self.grid.n,):
            raise ValueError("FieldState arrays must match the grid")

    def species(self, which: Species) -> np.ndarray:
        return self.u if which is Species.U else self.v


@dataclass(frozen=True)
class InitialShape:
    """Shape parameters of the initial data"""
    u_support: Tuple[float, float] = (-5.0, 5.0)
    v_support: Tuple[float, float] = (-5.0, 5.0)
    u_height: float = 1.0
    v_height: float = 1.0
    v_floor: float = 1.0
    ramp_cells: int = 2


@dataclass(frozen=True)
class SimConfig:
    params: Params
    grid: Grid1D
    dt: float
    t_end: float
    snapshot_stride: int = 20
    ic_kind: Scenario = Scenario.A
    boundary: str = 'neumann'
    shape: InitialShape = field(default_factory=InitialShape)
    implicit_startup_steps: int = 4

    def __post_init__(self):
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be at least 1")
        if self.boundary != 'neumann':
            raise ValueError(f"Unsupported boundary condition: {self.boundary}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True, eq=False)
class ComovingProfile:
    """Samples of one snapshot over xi = x - c t - offset"""
    t: float
    c: float
    offset: float
    xi: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ('xi', 'u', 'v'):
            object.__setattr__(self, name, _frozen(getattr(self, name)))


@dataclass(frozen=True)
class Trajectory:
    config: SimConfig
    states: Tuple[FieldState, ...]
    observables: Tuple[Dict[str, float], ...] = ()
    warnings: Tuple[str, ...] = ()

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def final(self) -> FieldState:
        return self.states[-1]

    @property
    def grid(self) -> Grid1D:
        return self.config.grid


# =============================================================================
# FRONTS
# =============================================================================

@dataclass(frozen=True, eq=False)
class FrontTrace:
    species: Species
    level: float
    times: np.ndarray = field(repr=False)
    positions: np.ndarray = field(repr=False)  # NaN where the level set is absent
    direction: Direction = Direction.RIGHTMOST

    def __post_init__(self):
        object.__setattr__(self, 'times', _frozen(self.times))
        object.__setattr__(self, 'positions', _frozen(self.positions))
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("FrontTrace times must be strictly increasing")

    @property
    def present(self) -> np.ndarray:
        return np.isfinite(self.positions)


@dataclass(frozen=True)
class SpeedFit:
    speed: float
    intercept: float
    stderr: float
    window: Tuple[float, float]
    samples: int

    def to_dict(self) -> Dict[str, Any]:
        return {'speed': self.speed, 'intercept': self.intercept, 'stderr': self.stderr,
                'window': list(self.window), 'samples': self.samples}


@dataclass(frozen=True)
class DriftFit:
    c_fixed: float
    kappa: float
    C: float
    residual_sup: float
    window: Tuple[float, float]
    samples: int

    def to_dict(self) -> Dict[str, Any]:
        return {'c_fixed': self.c_fixed, 'kappa': self.kappa, 'C': self.C,
                'residual_sup': self.residual_sup, 'window': list(self.window),
                'samples': self.samples}


@dataclass(frozen=True, eq=False)
class ConvergenceSeries:
    """Sup-distance between a run and a shifted wave, per snapshot"""
    times: np.ndarray = field(repr=False)
    sup_distance: np.ndarray = field(repr=False)
    shifts: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ('times', 'sup_distance', 'shifts'):
            object.__setattr__(self, name, _frozen(getattr(self, name)))


# =============================================================================
# SUB/SUPER-SOLUTIONS
# =============================================================================

@dataclass(frozen=True)
class SubSuperSpec:
    alpha: float
    mu: float
    tau: float
    p: float
    q: float
    zeta0: float
    x0: float
    kind: SolutionKind = SolutionKind.SUB
    mirrored: bool = False

    def __post_init__(self):
        for name in ('alpha', 'mu', 'tau', 'p', 'q', 'zeta0', 'x0'):
            if not math.isfinite(getattr(self, name)):
                raise SpecInvalid(f"{name} must be finite", {'field': name})
        if self.p < 0 or self.q < 0:
            raise SpecInvalid("Amplitudes p, q must be non-negative", {'p': self.p, 'q': self.q})
        if self.tau < 0 or self.mu < 0:
            raise SpecInvalid("Rates tau, mu must be non-negative", {'tau': self.tau, 'mu': self.mu})

    @property
    def margin(self) -> float:
        """x0 - zeta0, the tail anchor distance"""
        return self.x0 - self.zeta0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'alpha': self.alpha, 'mu': self.mu, 'tau': self.tau, 'p': self.p, 'q': self.q,
            'zeta0': self.zeta0, 'x0': self.x0, 'kind': self.kind.value, 'mirrored': self.mirrored,
        }


@dataclass(frozen=True)
class Region:
    """(t, x) rectangle in the comoving frame: x ranges over [c t + x_lo, c t + x_hi]"""
    t_min: float
    t_max: float
    x_lo: float
    x_hi: float


@dataclass(frozen=True)
class ResidualReport:
    max_N1: float
    min_N1: float
    max_N2: float
    min_N2: float
    region: Region
    T_star: float
    slack: float
    passed: bool
    kind: SolutionKind
    branch_extrema: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'max_N1': self.max_N1, 'min_N1': self.min_N1,
            'max_N2': self.max_N2, 'min_N2': self.min_N2,
            'region': {'t_min': self.region.t_min, 't_max': self.region.t_max,
                       'x_lo': self.region.x_lo, 'x_hi': self.region.x_hi},
            'T_star': self.T_star, 'slack': self.slack, 'pass': self.passed,
            'kind': self.kind.value, 'branch_extrema': self.branch_extrema,
        }


# =============================================================================
# HARNESS
# =============================================================================

@dataclass
class RunManifest:
    run_id: str
    command: str
    config_hash: str
    params: Optional[Dict[str, float]]
    versions: Dict[str, str]
    created_at: str
    finished_at: Optional[str] = None
    files: List[str] = field(default_factory=list)
    verdicts: Dict[str, str] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'run_id': self.run_id,
            'command': self.command,
            'config_hash': self.config_hash,
            'params': self.params,
            'versions': self.versions,
            'created_at': self.created_at,
            'finished_at': self.finished_at,
            'files': sorted(self.files),
            'verdicts': self.verdicts,
            'timings': self.timings,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunManifest":
        return cls(
            run_id=data['run_id'],
            command=data.get('command', ''),
            config_hash=data['config_hash'],
            params=data.get('params'),
            versions=data.get('versions', {}),
            created_at=data.get('created_at', ''),
            finished_at=data.get('finished_at'),
            files=list(data.get('files', [])),
            verdicts=dict(data.get('verdicts', {})),
            timings=dict(data.get('timings', {})),
        )


@dataclass(frozen=True)
class SweepSpec:
    a_values: Tuple[float, ...]
    b_values: Tuple[float, ...]
    d_values: Tuple[float, ...]
    r_values: Tuple[float, ...]
    kind: ExperimentKind = ExperimentKind.CLASSIFY
    template: Dict[str, Dict[str, str]] = field(default_factory=dict)
    max_workers: int = 1

    def points(self) -> List[Tuple[int, Params]]:
        """Grid points in grid order (a slowest, r fastest)"""
        combos = itertools.product(self.a_values, self.b_values, self.d_values, self.r_values)
        return [(index, Params(a, b, d, r)) for index, (a, b, d, r) in enumerate(combos)]

    @staticmethod
    def flags(points: Sequence[Tuple[int, Params]]) -> Dict[int, bool]:
        """Grid index -> whether the point satisfies 0 < a < 1 < b"""
        return {index: params.strong_weak for index, params in points}
