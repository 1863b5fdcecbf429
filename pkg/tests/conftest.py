import numpy as np
import pytest

from kgplab.radial import RadialFunction, RadialGrid, gaussian_profile, normalize_profile
from kgplab.sweep import run_sweep
from kgplab.townes import shoot_q


@pytest.fixture(scope="session")
def grid():
    """Default production grid: N=4096, R=30, quadratic grading."""
    return RadialGrid.graded(4096, 30.0, 2.0)


@pytest.fixture(scope="session")
def coarse_grid():
    return RadialGrid.graded(512, 20.0, 2.0)


@pytest.fixture(scope="session")
def ground_state(grid):
    return shoot_q(grid)


@pytest.fixture(scope="session")
def critical_sweep(ground_state):
    """p=1, a=a*, 12 points from 1e-1 down to 1e-4 in the blow-up frame."""
    b_list = list(np.geomspace(1e-1, 1e-4, 12))
    return run_sweep(ground_state, 1.0, b_list)


@pytest.fixture(scope="session")
def supercritical_sweeps(ground_state):
    b_list = list(np.geomspace(1e-1, 1e-5, 12))
    return {ratio: run_sweep(ground_state, 1.0, b_list, a_ratio=ratio)
            for ratio in (1.5, 2.0)}


def bump_profile(grid, seed, n_bumps=8):
    """Smooth random radial profile: a seeded mix of Gaussian bumps, unit mass."""
    rng = np.random.default_rng(seed)
    r = grid.nodes
    values = np.zeros_like(r)
    for _ in range(n_bumps):
        amp = rng.normal()
        center = rng.uniform(0.0, 8.0)
        width = rng.uniform(0.4, 2.5)
        values += amp * np.exp(-0.5 * ((r - center) / width) ** 2)
    return normalize_profile(RadialFunction(grid, values))


@pytest.fixture()
def gaussian(grid):
    return gaussian_profile(grid)
