"""
Traveling Wave Solver
Finite-difference boundary-value solver for monotone waves (U, V)(x - ct),
minimal speed search by bisection with continuation, and tail-rate fits
"""

from __future__ import annotations

import logging
import math
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import MatrixRankWarning, spsolve
from scipy.stats import linregress

from core.exceptions import (
    DomainTooSmall,
    IllConditioned,
    PredicateNonMonotone,
    WindowTooShort,
)
from core.models import NoMonotoneConnection, Params, SpectralExponents, WaveAsymptoticsReport, WaveProfile
from core.services.model_core import is_pushed, kan_on_interval, spectral_exponents
from core.utils.experiment_config import lab_default

logger = logging.getLogger(__name__)

WaveResult = Union[WaveProfile, NoMonotoneConnection]

BOX = (-0.05, 1.05)
MONOTONE_TOL = 1e-6
POSITIVITY_TOL = 1e-9
SLOW_MODE_TOL = 1e-6
LINEARIZATION_TOL = 2e-2
DECAY_TARGET = 1e-12
TAIL_WINDOW = (1e-8, 1e-3)
MIN_TAIL_SAMPLES = 20


@dataclass(frozen=True)
class WaveGrid:
    L: float
    n: int

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.n - 1)

    @property
    def xi(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n)

    @classmethod
    def with_spacing(cls, L: float, h: float) -> "WaveGrid":
        half = int(math.ceil(L / h))
        return cls(L=half * h, n=2 * half + 1)


@dataclass
class NewtonOutcome:
    Y: np.ndarray
    iterations: int
    converged: bool
    reason: str = ''


@dataclass(frozen=True)
class MinimalSpeedResult:
    c_star: float
    bracket: Tuple[float, float]
    profile: Optional[WaveProfile] = None
    attempts: Tuple[Tuple[float, bool], ...] = ()
    grid: Optional[WaveGrid] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            'c_star': self.c_star,
            'bracket': list(self.bracket),
            'attempts': [{'c': c, 'exists': exists} for c, exists in self.attempts],
            'L': self.grid.L if self.grid else None,
            'n': self.grid.n if self.grid else None,
        }


# =============================================================================
# INTERFACES (SOLID: Interface Segregation Principle)
# =============================================================================

class INonlinearSystem(ABC):
    """Square nonlinear system F(Y) = 0 with a sparse Jacobian"""

    @abstractmethod
    def residual(self, Y: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def jacobian(self, Y: np.ndarray) -> sp.csc_matrix:
        pass


class INewtonSolver(ABC):

    @abstractmethod
    def solve(self, system: INonlinearSystem, Y0: np.ndarray) -> NewtonOutcome:
        pass


class IConnectionTest(ABC):
    """Decides whether a converged iterate is a monotone connection"""

    @abstractmethod
    def failure_reason(self, c: float, U: np.ndarray, V: np.ndarray, grid: WaveGrid) -> Optional[str]:
        pass


# =============================================================================
# CONCRETE IMPLEMENTATIONS (SOLID: Single Responsibility Principle)
# =============================================================================

class TravelingWaveSystem(INonlinearSystem):
    """
    Centered differences of
        U'' + c U' + U(1 - U - aV) = 0,  d V'' + c V' + r V(1 - V - bU) = 0
    on [-L, L] with unknowns Y = [U_0..U_{n-1}, V_0..V_{n-1}].

    Rows: U at -L projects out the mode of 1-U that grows towards -inf,
    V at -L likewise for V, V at +L removes the growing mode of 1-V,
    and the last U row is the phase condition U(0) = 1/2. Each Robin row
    carries the forcing of the other species so the truncation is exact to
    linear order.
    """

    def __init__(self, c: float, p: Params, grid: WaveGrid):
        self.c = c
        self.p = p
        self.grid = grid
        self.n = grid.n
        self.h = grid.h
        self.exponents = spectral_exponents(c, p)
        e = self.exponents

        # 1-U forced by V near -inf
        self.beta_left = -p.a / (e.mu_v_plus - e.mu_u_minus)

        # 1-V forced by U near +inf: rhs = alpha_u U + alpha_p U'
        def forcing(lam: float) -> float:
            return -p.r * p.b / (p.d * (lam - e.lambda_v_plus))

        gap = e.lambda_u_plus - e.lambda_u_minus
        if gap > 1e-8:
            g_plus, g_minus = forcing(e.lambda_u_plus), forcing(e.lambda_u_minus)
            self.alpha_p = (g_plus - g_minus) / gap
            self.alpha_u = (-e.lambda_u_minus * g_plus + e.lambda_u_plus * g_minus) / gap
        else:
            # defective node: U ~ (A xi + B) exp(-c xi / 2)
            lam0 = -c / 2.0
            g0 = forcing(lam0)
            dg0 = p.r * p.b / (p.d * (lam0 - e.lambda_v_plus) ** 2)
            self.alpha_p = dg0
            self.alpha_u = g0 - lam0 * dg0

        xi = grid.xi
        j = int(np.searchsorted(xi, 0.0, side='right')) - 1
        j = min(max(j, 0), self.n - 2)
        self.phase_index = j
        self.phase_weight = (0.0 - xi[j]) / self.h

    def residual(self, Y: np.ndarray) -> np.ndarray:
        n, h, c, p = self.n, self.h, self.c, self.p
        e = self.exponents
        U, V = Y[:n], Y[n:]
        R = np.empty(2 * n)
        d2, d1 = 1.0 / (h * h), c / (2.0 * h)

        Ui, Vi = U[1:-1], V[1:-1]
        R[1:n - 1] = (d2 * (U[2:] - 2.0 * Ui + U[:-2]) + d1 * (U[2:] - U[:-2])
                      + Ui * (1.0 - Ui - p.a * Vi))
        R[n + 1:2 * n - 1] = (p.d * d2 * (V[2:] - 2.0 * Vi + V[:-2]) + d1 * (V[2:] - V[:-2])
                              + p.r * Vi * (1.0 - Vi - p.b * Ui))

        dU_left = (-3.0 * U[0] + 4.0 * U[1] - U[2]) / (2.0 * h)
        dV_left = (-3.0 * V[0] + 4.0 * V[1] - V[2]) / (2.0 * h)
        dU_right = (3.0 * U[-1] - 4.0 * U[-2] + U[-3]) / (2.0 * h)
        dV_right = (3.0 * V[-1] - 4.0 * V[-2] + V[-3]) / (2.0 * h)

        R[0] = -dU_left - e.mu_u_plus * (1.0 - U[0]) - self.beta_left * V[0]
        R[n] = dV_left - e.mu_v_plus * V[0]
        R[2 * n - 1] = (-dV_right - e.lambda_v_minus * (1.0 - V[-1])
                        - self.alpha_u * U[-1] - self.alpha_p * dU_right)
        j, w = self.phase_index, self.phase_weight
        R[n - 1] = (1.0 - w) * U[j] + w * U[j + 1] - 0.5
        return R

    def jacobian(self, Y: np.ndarray) -> sp.csc_matrix:
        n, h, c, p = self.n, self.h, self.c, self.p
        e = self.exponents
        U, V = Y[:n], Y[n:]
        d2, d1 = 1.0 / (h * h), c / (2.0 * h)
        k = 1.0 / (2.0 * h)

        i = np.arange(1, n - 1)
        Ui, Vi = U[1:-1], V[1:-1]
        rows: List[np.ndarray] = []
        cols: List[np.ndarray] = []
        vals: List[np.ndarray] = []

        def put(r, cidx, v):
            rows.append(np.atleast_1d(r))
            cols.append(np.atleast_1d(cidx))
            vals.append(np.broadcast_to(np.atleast_1d(v), np.atleast_1d(r).shape).astype(float))

        # U block interior
        put(i, i - 1, d2 - d1)
        put(i, i + 1, d2 + d1)
        put(i, i, -2.0 * d2 + 1.0 - 2.0 * Ui - p.a * Vi)
        put(i, n + i, -p.a * Ui)
        # V block interior
        put(n + i, n + i - 1, p.d * d2 - d1)
        put(n + i, n + i + 1, p.d * d2 + d1)
        put(n + i, n + i, -2.0 * p.d * d2 + p.r * (1.0 - 2.0 * Vi - p.b * Ui))
        put(n + i, i, -p.r * p.b * Vi)

        # U at -L
        put(0, 0, 3.0 * k + e.mu_u_plus)
        put(0, 1, -4.0 * k)
        put(0, 2, k)
        put(0, n, -self.beta_left)
        # V at -L
        put(n, n, -3.0 * k - e.mu_v_plus)
        put(n, n + 1, 4.0 * k)
        put(n, n + 2, -k)
        # V at +L
        last = 2 * n - 1
        put(last, 2 * n - 1, -3.0 * k + e.lambda_v_minus)
        put(last, 2 * n - 2, 4.0 * k)
        put(last, 2 * n - 3, -k)
        put(last, n - 1, -self.alpha_u - 3.0 * k * self.alpha_p)
        put(last, n - 2, 4.0 * k * self.alpha_p)
        put(last, n - 3, -k * self.alpha_p)
        # phase row
        j, w = self.phase_index, self.phase_weight
        put(n - 1, j, 1.0 - w)
        put(n - 1, j + 1, w)

        J = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(2 * n, 2 * n),
        )
        return J.tocsc()


class DampedNewtonSolver(INewtonSolver):
    """Newton iteration with step halving on the residual norm"""

    def __init__(self, max_iterations: int = 50, tol: float = 1e-9, step_tol: float = 1e-13,
                 regularization_retries: int = 3, divergence_bound: float = 10.0):
        self.max_iterations = max_iterations
        self.tol = tol
        self.step_tol = step_tol
        self.regularization_retries = regularization_retries
        self.divergence_bound = divergence_bound

    def _linear_solve(self, J: sp.csc_matrix, rhs: np.ndarray) -> np.ndarray:
        shift = 0.0
        scale = abs(J).max()
        for attempt in range(self.regularization_retries + 1):
            matrix = J if shift == 0.0 else (J + shift * sp.identity(J.shape[0], format='csc'))
            with warnings.catch_warnings():
                warnings.simplefilter('error', MatrixRankWarning)
                try:
                    delta = spsolve(matrix, rhs)
                except (MatrixRankWarning, RuntimeError) as exc:
                    logger.debug(f"Sparse solve failed (attempt {attempt}): {exc}")
                    delta = None
            if delta is not None and np.all(np.isfinite(delta)):
                return delta
            shift = scale * (1e-12 if shift == 0.0 else 100.0 * shift / scale)
        raise IllConditioned("Newton Jacobian is singular after all retries",
                             {'retries': self.regularization_retries})

    def solve(self, system: INonlinearSystem, Y0: np.ndarray) -> NewtonOutcome:
        Y = np.array(Y0, dtype=float)
        F = system.residual(Y)
        norm = np.linalg.norm(F)
        for iteration in range(1, self.max_iterations + 1):
            if np.max(np.abs(F)) <= self.tol:
                return NewtonOutcome(Y, iteration - 1, True)
            delta = self._linear_solve(system.jacobian(Y), -F)

            step = 1.0
            while step >= 1.0 / 64.0:
                trial = Y + step * delta
                F_trial = system.residual(trial)
                norm_trial = np.linalg.norm(F_trial)
                if np.isfinite(norm_trial) and norm_trial < (1.0 - 1e-4 * step) * norm:
                    break
                step /= 2.0
            Y, F, norm = trial, F_trial, norm_trial

            if not np.all(np.isfinite(Y)):
                return NewtonOutcome(Y, iteration, False, 'non_finite')
            if np.max(np.abs(Y)) > self.divergence_bound:
                return NewtonOutcome(Y, iteration, False, 'out_of_box')
            if step * np.max(np.abs(delta)) <= self.step_tol and np.max(np.abs(F)) <= 1e3 * self.tol:
                return NewtonOutcome(Y, iteration, True)
        converged = np.max(np.abs(F)) <= self.tol
        return NewtonOutcome(Y, self.max_iterations, converged, '' if converged else 'stagnation')


class MonotoneConnectionTest(IConnectionTest):
    """
    Box, monotonicity and positivity checks, plus the sign of the slow
    decay mode of U in the linear tail: a negative coefficient means U
    crosses zero beyond the truncated domain.
    """

    def __init__(self, p: Params):
        self.p = p

    def failure_reason(self, c: float, U: np.ndarray, V: np.ndarray, grid: WaveGrid) -> Optional[str]:
        if not (np.all(np.isfinite(U)) and np.all(np.isfinite(V))):
            return 'non_finite'
        lo, hi = BOX
        if U.min() < lo or V.min() < lo or U.max() > hi or V.max() > hi:
            return 'out_of_box'
        if np.max(np.diff(U)) > MONOTONE_TOL or np.min(np.diff(V)) < -MONOTONE_TOL:
            return 'non_monotone'
        if U.min() < -POSITIVITY_TOL or V.min() < -POSITIVITY_TOL:
            return 'negative'
        fraction = self.slow_mode_fraction(c, U, grid)
        if fraction is not None and fraction < -SLOW_MODE_TOL:
            return 'negative_slow_mode'
        return None

    def slow_mode_fraction(self, c: float, U: np.ndarray, grid: WaveGrid) -> Optional[float]:
        """Share of the slow discrete mode in U at the start of the linear tail"""
        h, a = grid.h, self.p.a
        # rho^2 (1/h^2 + c/2h) + rho ((1-a) - 2/h^2) + (1/h^2 - c/2h) = 0
        A2 = 1.0 / (h * h) + c / (2.0 * h)
        A1 = (1.0 - a) - 2.0 / (h * h)
        A0 = 1.0 / (h * h) - c / (2.0 * h)
        disc = A1 * A1 - 4.0 * A2 * A0
        if disc <= 0.0:
            return None
        root = math.sqrt(disc)
        rho_slow, rho_fast = (-A1 + root) / (2.0 * A2), (-A1 - root) / (2.0 * A2)
        if rho_slow - rho_fast < 1e-3 * h:
            return None  # too close to the defective node to separate the modes

        right = np.arange(U.size) > U.size // 2
        below = np.nonzero(right & (U < TAIL_WINDOW[0]))[0]
        j = int(below[0]) - 1 if below.size else U.size - 2
        j = max(j, U.size // 2 + 1)
        if j + 1 >= U.size:
            return None
        # U_j = A + B, U_{j+1} = A rho_slow + B rho_fast (modes measured from node j)
        slow = (U[j + 1] - rho_fast * U[j]) / (rho_slow - rho_fast)
        return float(slow / U[j]) if U[j] != 0.0 else None


class TailFitter:
    """Log-linear least squares on a tail window"""

    def fit(self, xi: np.ndarray, y: np.ndarray, side: str, model: str = 'exp') -> Dict[str, float]:
        lo, hi = TAIL_WINDOW
        mask = (y >= lo) & (y <= hi) & ((xi > 0) if side == 'right' else (xi < 0))
        count = int(mask.sum())
        if count < MIN_TAIL_SAMPLES:
            raise WindowTooShort(f"Only {count} samples in the {side} tail window",
                                 {'side': side, 'samples': count})
        X = xi[mask]
        Y = np.log(y[mask])
        if model == 'xi_exp':
            Y = Y - np.log(np.abs(X))
        fit = linregress(X, Y)
        residual = float(np.sqrt(np.mean((Y - (fit.slope * X + fit.intercept)) ** 2)))
        return {'rate': float(fit.slope), 'amplitude': float(math.exp(fit.intercept)),
                'residual': residual, 'samples': count}


class WaveProfileSolver:
    """Solves the boundary-value problem at a fixed speed"""

    def __init__(self, newton: INewtonSolver, connection_test_cls=MonotoneConnectionTest):
        self.newton = newton
        self.connection_test_cls = connection_test_cls

    @staticmethod
    def initial_guess(grid: WaveGrid, initial: Optional[WaveProfile] = None) -> np.ndarray:
        xi = grid.xi
        if initial is None:
            U0 = 0.5 * (1.0 - np.tanh(0.5 * xi))
            V0 = 1.0 - U0
        elif initial.n == grid.n and math.isclose(initial.L, grid.L):
            U0, V0 = np.array(initial.U), np.array(initial.V)
        else:
            U0 = np.interp(xi, initial.xi_grid, initial.U, left=initial.U[0], right=initial.U[-1])
            V0 = np.interp(xi, initial.xi_grid, initial.V, left=initial.V[0], right=initial.V[-1])
        return np.concatenate([U0, V0])

    def solve(self, c: float, p: Params, grid: WaveGrid,
              initial: Optional[WaveProfile] = None) -> WaveResult:
        p.require_strong_weak()
        e = spectral_exponents(c, p)
        if math.exp(e.lambda_u_minus * grid.L) >= DECAY_TARGET:
            raise DomainTooSmall(
                f"L={grid.L} does not resolve exp(lambda_u^- L) < {DECAY_TARGET} at c={c}",
                {'L': grid.L, 'c': c, 'lambda_u_minus': e.lambda_u_minus},
            )

        system = TravelingWaveSystem(c, p, grid)
        outcome = self.newton.solve(system, self.initial_guess(grid, initial))
        n = grid.n
        U, V = outcome.Y[:n], outcome.Y[n:]
        if not outcome.converged:
            logger.debug(f"No connection at c={c:.8f}: {outcome.reason} after {outcome.iterations} iterations")
            return NoMonotoneConnection(c=c, reason=outcome.reason, iterations=outcome.iterations)

        reason = self.connection_test_cls(p).failure_reason(c, U, V, grid)
        if reason:
            logger.debug(f"No monotone connection at c={c:.8f}: {reason}")
            return NoMonotoneConnection(c=c, reason=reason, iterations=outcome.iterations)

        edges = {'1-U(-L)': 1.0 - U[0], 'V(-L)': V[0], 'U(L)': U[-1], '1-V(L)': 1.0 - V[-1]}
        worst = max(edges, key=lambda key: abs(edges[key]))
        if abs(edges[worst]) > LINEARIZATION_TOL:
            raise DomainTooSmall(
                f"{worst}={edges[worst]:.3g} is outside the linear regime at c={c}",
                {'L': grid.L, 'c': c, 'edge': worst, 'value': float(edges[worst])},
            )
        return WaveProfile(c=c, xi_grid=grid.xi, U=U, V=V, converged=True, iterations=outcome.iterations)


class MinimalSpeedSearch:
    """
    Bisection for c* over [2 sqrt(1-a), 2] with existence of a monotone
    connection as the predicate. Each trial speed is warm-started from the nearest
    converged profile above them.
    """

    def __init__(self, profile_solver: WaveProfileSolver, scan_points: int = 9, max_domain_growth: int = 3):
        self.profile_solver = profile_solver
        self.scan_points = scan_points
        self.max_domain_growth = max_domain_growth

    def _attempt(self, c: float, p: Params, state: Dict[str, object]) -> Optional[WaveProfile]:
        grid: WaveGrid = state['grid']
        for _ in range(self.max_domain_growth + 1):
            try:
                result = self.profile_solver.solve(c, p, grid, state.get('warm'))
            except DomainTooSmall as exc:
                grid = WaveGrid.with_spacing(1.5 * grid.L, grid.h)
                logger.warning(f"Growing wave domain to L={grid.L:.1f}: {exc.message}")
                state['grid'] = grid
                continue
            state['log'].append((c, isinstance(result, WaveProfile)))
            if isinstance(result, WaveProfile):
                state['warm'] = result
                return result
            return None
        raise DomainTooSmall(f"Domain growth limit reached at c={c}", {'c': c, 'L': grid.L})

    def _scan(self, p: Params, lo: float, hi: float, state: Dict[str, object]) -> List[Tuple[float, Optional[WaveProfile]]]:
        speeds = np.linspace(hi, lo, self.scan_points)
        results = []
        for c in speeds:
            results.append((float(c), self._attempt(float(c), p, state)))
        return sorted(results, key=lambda item: item[0])

    @staticmethod
    def _flips(results: List[Tuple[float, Optional[WaveProfile]]]) -> int:
        flags = [profile is not None for _, profile in results]
        return sum(1 for left, right in zip(flags, flags[1:]) if left != right)

    def search(self, p: Params, tol: float, grid: WaveGrid) -> MinimalSpeedResult:
        p.require_strong_weak()
        lo, hi = kan_on_interval(p.a)
        state: Dict[str, object] = {'grid': grid, 'warm': None, 'log': []}

        results = self._scan(p, lo, hi, state)
        if self._flips(results) > 1 or results[-1][1] is None:
            refined = WaveGrid(L=state['grid'].L, n=2 * state['grid'].n - 1)
            logger.warning(f"Existence predicate flips on the coarse scan; retrying with n={refined.n}")
            state.update({'grid': refined, 'warm': None})
            results = self._scan(p, lo, hi, state)
            if self._flips(results) > 1 or results[-1][1] is None:
                raise PredicateNonMonotone(
                    "Wave existence is not monotone in c across the Kan-on interval",
                    {'attempts': [(c, prof is not None) for c, prof in results]},
                )

        if results[0][1] is not None:
            logger.info(f"Wave exists at the linear speed {lo:.6f}: linear selection")
            return MinimalSpeedResult(lo, (lo, lo), results[0][1], tuple(state['log']), state['grid'])

        first = next(index for index, (_, prof) in enumerate(results) if prof is not None)
        below, above = results[first - 1][0], results[first][0]
        best = results[first][1]
        while above - below > tol:
            mid = 0.5 * (below + above)
            state['warm'] = best
            profile = self._attempt(mid, p, state)
            if profile is None:
                below = mid
            else:
                above, best = mid, profile
            logger.debug(f"Bisection bracket [{below:.10f}, {above:.10f}]")

        c_star = min(max(above, lo), hi)
        logger.info(f"Minimal speed c*={c_star:.8f} (bracket width {above - below:.2e})")
        return MinimalSpeedResult(c_star, (below, above), best, tuple(state['log']), state['grid'])


class AsymptoticsVerifier:
    """Compares fitted tail rates with the linearized exponents"""

    def __init__(self, fitter: TailFitter, tolerance: float = 0.05):
        self.fitter = fitter
        self.tolerance = tolerance

    def _ordered_case(self, xi: np.ndarray, y: np.ndarray, side: str, own: float, forced: float,
                      forced_name: str) -> Tuple[Dict[str, float], float, str]:
        """Tail of a species driven by its own mode and the other species' mode"""
        if math.isclose(own, forced, rel_tol=1e-3):
            plain = self.fitter.fit(xi, y, side, 'exp')
            resonant = self.fitter.fit(xi, y, side, 'xi_exp')
            if resonant['residual'] <= plain['residual']:
                return resonant, own, 'equal:xi_exp'
            return plain, own, 'equal:exp'
        # the exponent closer to zero dominates the tail
        dominant_is_forced = abs(forced) < abs(own)
        fit = self.fitter.fit(xi, y, side, 'exp')
        if dominant_is_forced:
            return fit, forced, f'forced_by_{forced_name}'
        return fit, own, 'own_mode'

    def _u_tail_case(self, w: WaveProfile, p: Params, e: SpectralExponents,
                     c_star: Optional[float]) -> str:
        """The pushed minimal wave decays at the fast rate, every other wave at the slow one"""
        # the root gap is sqrt of round-off at c = 2 sqrt(1 - a)
        if e.lambda_u_plus - e.lambda_u_minus < 1e-6:
            return 'defective'
        if c_star is not None and is_pushed(p, c_star) and math.isclose(w.c, c_star, rel_tol=1e-9):
            return 'lambda_u_minus'
        return 'lambda_u_plus'

    def verify(self, w: WaveProfile, p: Params, c_star: Optional[float] = None) -> WaveAsymptoticsReport:
        """Tail fits against the exponents the speed selects; c_star marks the minimal wave"""
        e: SpectralExponents = spectral_exponents(w.c, p)
        xi, U, V = np.asarray(w.xi_grid), np.asarray(w.U), np.asarray(w.V)

        u_case = self._u_tail_case(w, p, e, c_star)
        if u_case == 'defective':
            u_fit = self.fitter.fit(xi, U, 'right', 'xi_exp')
            u_rate = e.lambda_u_plus
        else:
            u_fit = self.fitter.fit(xi, U, 'right', 'exp')
            u_rate = getattr(e, u_case)

        v_fit, v_rate, v_case = self._ordered_case(xi, 1.0 - V, 'right', e.lambda_v_minus, u_rate, 'u')
        vm_fit = self.fitter.fit(xi, V, 'left', 'exp')
        um_fit, um_rate, um_case = self._ordered_case(xi, 1.0 - U, 'left', e.mu_u_plus, e.mu_v_plus, 'v')

        predicted = {'u_plus': u_rate, 'v_plus': v_rate, 'v_minus': e.mu_v_plus, 'u_minus': um_rate}
        fitted = {'u_plus': u_fit['rate'], 'v_plus': v_fit['rate'],
                  'v_minus': vm_fit['rate'], 'u_minus': um_fit['rate']}
        errors = {key: abs(fitted[key] - predicted[key]) / abs(predicted[key]) for key in predicted}
        report = WaveAsymptoticsReport(
            c=w.c,
            fitted_rate_u_plus=fitted['u_plus'],
            fitted_rate_v_plus=fitted['v_plus'],
            fitted_rate_v_minus=fitted['v_minus'],
            fitted_rate_u_minus=fitted['u_minus'],
            predicted=predicted,
            cases={'u_plus': u_case, 'v_plus': v_case, 'v_minus': 'own_mode', 'u_minus': um_case},
            amplitudes={'u_plus': u_fit['amplitude'], 'v_plus': v_fit['amplitude'],
                        'v_minus': vm_fit['amplitude'], 'u_minus': um_fit['amplitude']},
            relative_errors=errors,
            tolerance=self.tolerance,
        )
        if not report.within_tolerance:
            logger.warning(f"Tail rates off prediction at c={w.c:.6f}: {errors}")
        return report


# =============================================================================
# SERVICE COMPOSER (SOLID: Open/Closed Principle)
# =============================================================================

class WaveSolverService:
    """Composes profile solves, the minimal speed search and tail fits"""

    def __init__(self, profile_solver: WaveProfileSolver, search: MinimalSpeedSearch,
                 verifier: AsymptoticsVerifier):
        self.profile_solver = profile_solver
        self.search = search
        self.verifier = verifier

    @staticmethod
    def default_grid(p: Params, c: Optional[float] = None, L: Optional[float] = None,
                     n: Optional[int] = None) -> WaveGrid:
        L_default = float(lab_default('wave', 'L'))
        n_default = int(lab_default('wave', 'n'))
        if L is not None and n is not None:
            return WaveGrid(float(L), int(n))
        h = 2.0 * L_default / (n_default - 1)
        if L is None:
            slowest = c if c is not None else p.linear_speed
            rate = abs(spectral_exponents(slowest, p).lambda_u_minus)
            L = max(L_default, 1.05 * math.log(1.0 / DECAY_TARGET) / rate)
        if n is None:
            return WaveGrid.with_spacing(float(L), h)
        return WaveGrid(float(L), int(n))

    def solve_wave_profile(self, c: float, p: Params, L: Optional[float] = None, n: Optional[int] = None,
                           initial: Optional[WaveProfile] = None) -> WaveResult:
        return self.profile_solver.solve(c, p, self.default_grid(p, c, L, n), initial)

    def minimal_speed(self, p: Params, tol: Optional[float] = None, L: Optional[float] = None,
                      n: Optional[int] = None) -> MinimalSpeedResult:
        tol = float(lab_default('wave', 'tol')) if tol is None else tol
        return self.search.search(p, tol, self.default_grid(p, None, L, n))

    def verify_asymptotics(self, w: WaveProfile, p: Params,
                           c_star: Optional[float] = None) -> WaveAsymptoticsReport:
        if not w.converged:
            raise ValueError("verify_asymptotics needs a converged profile")
        return self.verifier.verify(w, p, c_star)

    def discretization_order(self, c: float, p: Params, L: float, n: int) -> float:
        """Observed order from solutions on n, 2n-1 and 4n-3 points"""
        profiles = []
        for level in range(3):
            points = (n - 1) * 2 ** level + 1
            result = self.profile_solver.solve(c, p, WaveGrid(L, points), profiles[-1] if profiles else None)
            if not isinstance(result, WaveProfile):
                raise IllConditioned(f"Refinement solve failed at n={points}: {result.reason}")
            profiles.append(result)

        def gap(coarse: WaveProfile, fine: WaveProfile) -> float:
            return float(max(np.max(np.abs(coarse.U - fine.U[::2])), np.max(np.abs(coarse.V - fine.V[::2]))))

        e1, e2 = gap(profiles[0], profiles[1]), gap(profiles[1], profiles[2])
        return math.log2(e1 / e2)


def shift_profile(w: WaveProfile, cells: int) -> WaveProfile:
    """Translate the samples by whole cells, padding with the end states"""
    U, V = np.asarray(w.U), np.asarray(w.V)
    if cells > 0:
        U = np.concatenate([U[cells:], np.full(cells, U[-1])])
        V = np.concatenate([V[cells:], np.full(cells, V[-1])])
    elif cells < 0:
        U = np.concatenate([np.full(-cells, U[0]), U[:cells]])
        V = np.concatenate([np.full(-cells, V[0]), V[:cells]])
    return WaveProfile(c=w.c, xi_grid=w.xi_grid, U=U, V=V, converged=w.converged)


# =============================================================================
# FACTORY PATTERN (SOLID: Dependency Inversion Principle)
# =============================================================================

class WaveSolverFactory:
    """Factory for wave solver services"""

    @staticmethod
    def create_wave_solver_service() -> WaveSolverService:
        newton = DampedNewtonSolver(
            max_iterations=int(lab_default('wave', 'max_newton_iterations')),
            tol=float(lab_default('wave', 'newton_tol')),
        )
        profile_solver = WaveProfileSolver(newton)
        search = MinimalSpeedSearch(profile_solver, scan_points=int(lab_default('wave', 'scan_points')))
        verifier = AsymptoticsVerifier(TailFitter(), tolerance=float(lab_default('wave', 'rate_tolerance')))
        return WaveSolverService(profile_solver, search, verifier)


def solve_wave_profile(c: float, p: Params, L: Optional[float] = None, n: Optional[int] = None,
                       initial: Optional[WaveProfile] = None) -> WaveResult:
    return WaveSolverFactory.create_wave_solver_service().solve_wave_profile(c, p, L, n, initial)


def minimal_speed(p: Params, tol: Optional[float] = None, L: Optional[float] = None,
                  n: Optional[int] = None) -> MinimalSpeedResult:
    return WaveSolverFactory.create_wave_solver_service().minimal_speed(p, tol, L, n)


def verify_asymptotics(w: WaveProfile, p: Params, c_star: Optional[float] = None) -> WaveAsymptoticsReport:
    return WaveSolverFactory.create_wave_solver_service().verify_asymptotics(w, p, c_star)
