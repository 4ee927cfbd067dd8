"""
Model Core
Reaction terms, closed-form spectral and speed quantities, the slow-front
speed selector and the determinacy classifier of the strong-weak system
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from typing import List, Tuple, Union

import numpy as np

from core.exceptions import DiscriminantNegative, DomainError, InvalidInterval
from core.models import (
    DeterminacyVerdict,
    Params,
    SpectralExponents,
    SpeedCase,
    SpeedRegime,
    Verdict,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Relative slack when a discriminant that is zero in exact arithmetic comes out negative.
ROUNDOFF = 1e-12


def _root(value: float, scale: float, what: str) -> float:
    if value >= 0.0:
        return math.sqrt(value)
    if value >= -ROUNDOFF * max(1.0, abs(scale)):
        return 0.0
    raise DiscriminantNegative(f"Negative discriminant in {what}: {value:.6g}", {'discriminant': value})


def reaction_terms(u: ArrayLike, v: ArrayLike, p: Params) -> Tuple[ArrayLike, ArrayLike]:
    """F = u(1 - u - a v), G = r v (1 - v - b u)"""
    F = u * (1.0 - u - p.a * v)
    G = p.r * v * (1.0 - v - p.b * u)
    return F, G


def kan_on_interval(a: float) -> Tuple[float, float]:
    return 2.0 * math.sqrt(1.0 - a), 2.0


def spectral_exponents(c: float, p: Params) -> SpectralExponents:
    root_u = _root(c * c - 4.0 * (1.0 - p.a), c * c, 'lambda_u')
    root_v = math.sqrt(c * c + 4.0 * p.r * p.d)
    root_mu_u = math.sqrt(c * c + 4.0)
    root_mu_v = _root(c * c + 4.0 * p.r * p.d * (p.b - 1.0), c * c, 'mu_v')
    return SpectralExponents(
        c=c,
        lambda_u_minus=(-c - root_u) / 2.0,
        lambda_u_plus=(-c + root_u) / 2.0,
        lambda_v_minus=(-c - root_v) / (2.0 * p.d),
        lambda_v_plus=(-c + root_v) / (2.0 * p.d),
        mu_u_minus=(-c - root_mu_u) / 2.0,
        mu_u_plus=(-c + root_mu_u) / 2.0,
        mu_v_minus=(-c - root_mu_v) / (2.0 * p.d),
        mu_v_plus=(-c + root_mu_v) / (2.0 * p.d),
    )


def aux_f(c: float, a: float) -> float:
    """f(c) = c - sqrt(c^2 - 4(1-a)) + 2 sqrt(a), decreasing on c >= 2 sqrt(1-a)"""
    return c - _root(c * c - 4.0 * (1.0 - a), c * c, 'aux_f') + 2.0 * math.sqrt(a)


def aux_f_inverse(c_prime: float, a: float) -> float:
    floor = 2.0 * math.sqrt(a)
    if c_prime <= floor:
        raise DomainError(f"f^-1 undefined for c'={c_prime} <= 2 sqrt(a)={floor}",
                          {'c_prime': c_prime, 'a': a})
    ceiling = aux_f(2.0 * math.sqrt(1.0 - a), a)
    if c_prime > ceiling * (1.0 + ROUNDOFF):
        raise DomainError(f"c'={c_prime} lies above the range of f (max {ceiling})",
                          {'c_prime': c_prime, 'a': a})
    return c_prime / 2.0 - math.sqrt(a) + 2.0 * (1.0 - a) / (c_prime - floor)


def accelerated_speed(p: Params) -> float:
    """c_** = f^-1(2 sqrt(rd)) in its closed form"""
    s = math.sqrt(p.r * p.d)
    return s - math.sqrt(p.a) + (1.0 - p.a) / (s - math.sqrt(p.a))


def speed_regime(p: Params, c_star: float) -> SpeedRegime:
    p.require_strong_weak()
    lo, hi = kan_on_interval(p.a)
    if not (lo - ROUNDOFF <= c_star <= hi + ROUNDOFF):
        raise InvalidInterval(f"c*={c_star} outside the interval [{lo}, {hi}]",
                              {'c_star': c_star, 'interval': [lo, hi]})

    c_u, c_v = p.c_u, p.c_v
    if math.isclose(c_v, c_u, rel_tol=ROUNDOFF, abs_tol=ROUNDOFF):
        return SpeedRegime(c_u, c_v, c_star, None, None, SpeedCase.DEGENERATE)
    if c_v < c_u:
        return SpeedRegime(c_u, c_v, c_star, None, None, SpeedCase.FASTER_U)

    f_c_star = aux_f(c_star, p.a)
    if c_v >= f_c_star:
        return SpeedRegime(c_u, c_v, c_star, None, c_star, SpeedCase.SLOW_FRONT_C_STAR, f_c_star)

    c_star_star = accelerated_speed(p)
    if not (c_star < c_star_star < hi):
        raise InvalidInterval(
            f"c_**={c_star_star} not inside (c*, 2) = ({c_star}, {hi})",
            {'c_star': c_star, 'c_star_star': c_star_star},
        )
    return SpeedRegime(c_u, c_v, c_star, c_star_star, c_star_star,
                       SpeedCase.SLOW_FRONT_C_STAR_STAR, f_c_star)


def capital_lambda(c: float, c_prime: float, a: float) -> Tuple[float, float]:
    """Leading-edge exponents (Lambda(c, c'), lambda(c))"""
    if c_prime < c * (1.0 - ROUNDOFF):
        raise DomainError(f"c'={c_prime} must not be below c={c}", {'c': c, 'c_prime': c_prime})
    lambda_small = (c - _root(c * c - 4.0 * (1.0 - a), c * c, 'lambda')) / 2.0
    inner = c_prime * c_prime - 4.0 * lambda_small * (c_prime - c) - 4.0
    Lambda = (c_prime - _root(inner, c_prime * c_prime, 'Lambda')) / 2.0
    return Lambda, lambda_small


def leading_edge_ansatz(t: float, x: ArrayLike, c2: float, c_tilde: float, a: float) -> ArrayLike:
    """u ~ exp(-lambda(c2)(x - c2 t)) exp(-Lambda(c2, c~)(x - c~ t)) ahead of both fronts"""
    Lambda, lambda_small = capital_lambda(c2, c_tilde, a)
    return np.exp(-lambda_small * (x - c2 * t)) * np.exp(-Lambda * (x - c_tilde * t))


def is_pushed(p: Params, c_star: float, tol: float = 1e-3) -> bool:
    return c_star > p.linear_speed + tol


def ode_upper_bounds(t: ArrayLike, M: float, r: float) -> Tuple[ArrayLike, ArrayLike]:
    return 1.0 + M * np.exp(-t), 1.0 + M * np.exp(-r * t)


# =============================================================================
# INTERFACES (SOLID: Interface Segregation Principle)
# =============================================================================

class IDeterminacyCondition(ABC):
    """A sufficient condition for linear or nonlinear speed selection"""

    name: str = ''
    selects: Verdict = Verdict.INCONCLUSIVE

    @abstractmethod
    def holds(self, p: Params) -> bool:
        pass


# =============================================================================
# CONCRETE IMPLEMENTATIONS (SOLID: Single Responsibility Principle)
# =============================================================================

class LewisLiWeinbergerCondition(IDeterminacyCondition):
    name = 'llw'
    selects = Verdict.LINEAR_SUFFICIENT

    def holds(self, p: Params) -> bool:
        return 0.0 < p.d < 2.0 and p.r * (p.a * p.b - 1.0) <= (2.0 - p.d) * (1.0 - p.a)


class HuangCondition(IDeterminacyCondition):
    name = 'huang'
    selects = Verdict.LINEAR_SUFFICIENT

    def holds(self, p: Params) -> bool:
        # the second argument of the max is negative (or singular at d = 1) for d <= 2
        if p.d <= 2.0:
            threshold = p.a
        else:
            threshold = max(p.a, (p.d - 2.0) / (2.0 * abs(p.d - 1.0)))
        return ((2.0 - p.d) * (1.0 - p.a) + p.r) / (p.r * p.b) >= threshold


class AlhasanatOuCondition(IDeterminacyCondition):
    name = 'ao_nonlinear'
    selects = Verdict.NONLINEAR_SUFFICIENT

    def holds(self, p: Params) -> bool:
        return ((p.d + 2.0) * (1.0 - p.a) + p.r) / (p.r * p.b) < 1.0 - 2.0 * (1.0 - p.a)


# =============================================================================
# BUSINESS RULE COMPOSER (SOLID: Open/Closed Principle)
# =============================================================================

class DeterminacyClassifier:
    """Evaluates every sufficient condition and combines them into a verdict"""

    def __init__(self, conditions: List[IDeterminacyCondition]):
        self.conditions = conditions

    def classify(self, p: Params) -> DeterminacyVerdict:
        p.require_strong_weak()
        fired = {condition.name: condition.holds(p) for condition in self.conditions}
        linear = any(fired[c.name] for c in self.conditions if c.selects is Verdict.LINEAR_SUFFICIENT)
        nonlinear = any(fired[c.name] for c in self.conditions if c.selects is Verdict.NONLINEAR_SUFFICIENT)

        data_error = linear and nonlinear
        if data_error:
            logger.error(f"Linear and nonlinear sufficient conditions both hold for {p.to_dict()}")
            verdict = Verdict.INCONCLUSIVE
        elif linear:
            verdict = Verdict.LINEAR_SUFFICIENT
        elif nonlinear:
            verdict = Verdict.NONLINEAR_SUFFICIENT
        else:
            verdict = Verdict.INCONCLUSIVE

        return DeterminacyVerdict(
            llw_holds=fired.get('llw', False),
            huang_holds=fired.get('huang', False),
            ao_nonlinear_holds=fired.get('ao_nonlinear', False),
            verdict=verdict,
            data_error=data_error,
        )


# =============================================================================
# FACTORY PATTERN (SOLID: Dependency Inversion Principle)
# =============================================================================

class ModelCoreFactory:
    """Factory for model classifiers"""

    @staticmethod
    def create_determinacy_classifier() -> DeterminacyClassifier:
        return DeterminacyClassifier([
            LewisLiWeinbergerCondition(),
            HuangCondition(),
            AlhasanatOuCondition(),
        ])


def classify_determinacy(p: Params) -> DeterminacyVerdict:
    return ModelCoreFactory.create_determinacy_classifier().classify(p)
