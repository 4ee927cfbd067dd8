"""
Test data factories: random strong-weak parameters and synthetic profiles
"""

import factory
import numpy as np
from factory import fuzzy

from core.models import FieldState, Grid1D, Params, RunManifest, SimConfig, Trajectory, WaveProfile, generate_cuid

DEFAULT_SEED = 20240501


class ParamsFactory(factory.Factory):
    """Parameters satisfying 0 < a < 1 < b"""

    class Meta:
        model = Params

    a = fuzzy.FuzzyFloat(0.1, 0.85)
    b = fuzzy.FuzzyFloat(1.2, 5.0)
    d = fuzzy.FuzzyFloat(0.5, 2.0)
    r = fuzzy.FuzzyFloat(0.5, 2.0)


def strong_weak_samples(count, seed=DEFAULT_SEED):
    factory.random.reseed_random(seed)
    return ParamsFactory.build_batch(count)


def tanh_profile(c=1.8, L=30.0, n=601):
    """Monotone front-like profile; not a solution of the wave equations"""
    xi = np.linspace(-L, L, n)
    U = 0.5 * (1.0 - np.tanh(0.5 * xi))
    return WaveProfile(c=c, xi_grid=xi, U=U, V=1.0 - U)


def trajectory_from(fields, params, grid, times, dt=0.05):
    """Trajectory whose snapshots are fields(t) -> (u, v) at the given times"""
    states, observables = [], []
    for t in times:
        u, v = fields(float(t))
        states.append(FieldState(t=float(t), u=u, v=v, grid=grid))
        observables.append({
            't': float(t),
            'sup_u': float(np.max(u)),
            'sup_v': float(np.max(v)),
            'excess_u': max(float(np.max(u)) - 1.0, 0.0),
            'excess_v': max(float(np.max(v)) - 1.0, 0.0),
            'u_at_0': float(np.interp(0.0, grid.x, u)),
            'v_at_0': float(np.interp(0.0, grid.x, v)),
        })
    stride = max(1, int(round((times[1] - times[0]) / dt))) if len(times) > 1 else 1
    cfg = SimConfig(params=params, grid=grid, dt=dt, t_end=float(times[-1]), snapshot_stride=stride)
    return Trajectory(config=cfg, states=tuple(states), observables=tuple(observables))


def small_grid(half_width=40.0, h=0.1):
    return Grid1D.from_bounds(-half_width, half_width, h)


class RunManifestFactory(factory.Factory):
    """Manifest of a finished run, as the repository would have written it"""

    class Meta:
        model = RunManifest

    run_id = factory.LazyFunction(generate_cuid)
    command = factory.Faker('random_element', elements=('classify', 'wave', 'simulate', 'track', 'verify'))
    config_hash = factory.Faker('hexify', text='^' * 16)
    params = factory.LazyFunction(lambda: ParamsFactory.build().to_dict())
    versions = factory.LazyFunction(lambda: {'numpy': np.__version__})
    created_at = factory.Faker('iso8601')
    finished_at = factory.Faker('iso8601')
