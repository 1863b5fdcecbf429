import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgplab.radial import (
    RadialGrid,
    gaussian_profile,
    kinetic,
    mass,
    normalize_profile,
    quartic,
    rescale_profile,
    singular_moment,
)
from kgplab.townes import BracketError, classify_amplitude, gn_defect, moment, shoot_q

from conftest import bump_profile

# values derived once from the shooting/bisection oracle on the default grid
# (amplitude bisection to 1e-12 cross-checked by the three-way identity)
Q_ORIGIN = 2.2062008646503273
A_STAR = 11.700896524577304
M_HALF = 1.2586828801236414
M_ONE = 1.9216734945070977
M_THREEHALF = 4.2612110038302635


def test_amplitude_classification_brackets():
    # the bisection oracle: small amplitudes bottom out, large ones cross zero
    assert classify_amplitude(2.0, 30.0) == "diverge"
    assert classify_amplitude(2.5, 30.0) == "cross"


def test_q_origin_bracket(ground_state):
    assert 2.206 <= ground_state.q_origin <= 2.207
    assert ground_state.q_origin == pytest.approx(Q_ORIGIN, abs=1e-9)
    assert ground_state.bracket_width <= 1e-12


def test_a_star_value(ground_state):
    assert ground_state.a_star == pytest.approx(11.7008, abs=1e-3)
    assert ground_state.a_star == pytest.approx(A_STAR, abs=1e-6)


def test_three_way_consistency(ground_state):
    assert ground_state.consistency_spread <= 1e-6


def test_profile_positive_decreasing(ground_state):
    q = ground_state.q.values
    assert np.all(q > 0)
    assert np.all(np.diff(q) < 0)
    assert q[-1] < 1e-9 * q[0]  # exponentially small at the boundary


def test_q0_normalization(ground_state):
    assert abs(mass(ground_state.q0) - 1.0) <= 1e-10


def test_q0_grid_identities(ground_state):
    # grid quadrature reproduces the normalized identities to its own accuracy
    assert kinetic(ground_state.q0) == pytest.approx(1.0, abs=1e-5)
    assert quartic(ground_state.q0) == pytest.approx(2.0 / ground_state.a_star, rel=1e-5)


def test_tail_match_quality(ground_state):
    assert ground_state.tail_match_error < 1e-5


def test_bad_bracket_raises(grid):
    with pytest.raises(BracketError):
        shoot_q(grid, bracket=(2.3, 2.5))  # lower end already crosses
    with pytest.raises(BracketError):
        shoot_q(grid, bracket=(1.5, 2.0))  # upper end diverges


def test_shoot_rejects_bad_tol(grid):
    with pytest.raises(ValueError):
        shoot_q(grid, tol=0.0)


# -- moments ------------------------------------------------------------------


def test_moment_values(ground_state):
    assert moment(ground_state, 0.5) == pytest.approx(M_HALF, abs=1e-6)
    assert moment(ground_state, 1.0) == pytest.approx(M_ONE, abs=1e-6)
    assert moment(ground_state, 1.5) == pytest.approx(M_THREEHALF, abs=1e-6)


def test_moment_small_p_recovers_mass(ground_state):
    assert moment(ground_state, 1e-6) == pytest.approx(1.0, abs=1e-5)


def test_moment_continuity(ground_state):
    # dominated continuity in the exponent, not monotonicity
    assert abs(moment(ground_state, 1.0) - moment(ground_state, 1.0 + 1e-6)) < 1e-4


def test_moment_domain(ground_state):
    for bad in (0.0, 2.0, -1.0):
        with pytest.raises(ValueError):
            moment(ground_state, bad)


def test_moment_matches_grid_quadrature(ground_state):
    # independent route: singular-weight quadrature of the sampled profile
    grid_value = singular_moment(ground_state.q0, 1.0)
    assert grid_value == pytest.approx(moment(ground_state, 1.0), rel=1e-5)


def test_moment_two_resolutions(ground_state):
    gs_fine = shoot_q(RadialGrid.graded(8192, 30.0, 2.0))
    assert moment(gs_fine, 1.0) == pytest.approx(moment(ground_state, 1.0), rel=1e-5)
    assert singular_moment(gs_fine.q0, 1.0) == pytest.approx(
        moment(ground_state, 1.0), rel=1e-5)


# -- the optimal-constant inequality -----------------------------------------


def test_gn_defect_vanishes_at_ground_state(ground_state):
    d = gn_defect(ground_state.q0, ground_state.a_star)
    assert abs(d) <= 1e-6


def test_gn_defect_gaussian(grid, ground_state):
    g = normalize_profile(gaussian_profile(grid))
    expected = 1.0 - ground_state.a_star / (4 * math.pi)
    assert gn_defect(g, ground_state.a_star) == pytest.approx(expected, abs=1e-3)
    assert expected == pytest.approx(0.0689, abs=2e-4)


def test_gn_defect_requires_normalization(ground_state):
    doubled = ground_state.q0.with_values(2.0 * ground_state.q0.values)
    with pytest.raises(ValueError):
        gn_defect(doubled, ground_state.a_star)


@pytest.mark.parametrize("eps", [0.5, 1.0, 2.0])
def test_gn_defect_dilation_invariance(ground_state, eps):
    # the defect is scale-free at the optimal constant: eps^2 * (defect at q0)
    u = normalize_profile(rescale_profile(ground_state.q0, eps))
    assert abs(gn_defect(u, ground_state.a_star)) <= 5e-6


@given(seed=st.integers(0, 10_000))
@settings(max_examples=50, deadline=None)
def test_gn_defect_nonnegative_random(seed):
    grid = RadialGrid.graded(1024, 25.0, 2.0)
    gs = _cached_coarse_gs(grid)
    u = bump_profile(grid, seed=seed)
    assert gn_defect(u, gs.a_star) >= -1e-6


_COARSE_GS = {}


def _cached_coarse_gs(grid):
    key = (grid.n, grid.r_max)
    if key not in _COARSE_GS:
        _COARSE_GS[key] = shoot_q(grid)
    return _COARSE_GS[key]
