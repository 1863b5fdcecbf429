import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gamma as gamma_fn

from kgplab.radial import (
    RadialFunction,
    RadialGrid,
    gaussian_profile,
    h1_distance,
    kinetic,
    load_profile_csv,
    mass,
    normalize_profile,
    profile_from_json,
    profile_to_json,
    quartic,
    rescale_profile,
    save_profile_csv,
    singular_moment,
)

from conftest import bump_profile


# -- grid construction and weights ------------------------------------------


def test_nodes_strictly_increasing(grid):
    assert grid.nodes[0] == 0.0
    assert np.all(np.diff(grid.nodes) > 0)
    assert grid.r_max == 30.0


def test_grid_rejects_bad_nodes():
    with pytest.raises(ValueError):
        RadialGrid(np.linspace(0, 10, 8))  # too few
    with pytest.raises(ValueError):
        RadialGrid(np.linspace(1, 10, 32))  # missing r=0
    nodes = np.linspace(0, 10, 32)
    nodes[5] = nodes[4]
    with pytest.raises(ValueError):
        RadialGrid(nodes)


def test_plain_weights_exact_for_constant(grid):
    total = grid.plain_weights.sum()
    assert total == pytest.approx(grid.r_max**2 / 2, rel=1e-14)
    assert np.all(grid.plain_weights >= 0)


@pytest.mark.parametrize("p", [0.25, 0.5, 1.0, 1.5, 1.9])
def test_singular_weights_exact_for_constant(grid, p):
    total = grid.singular_weights(p).sum()
    expected = grid.r_max ** (2 - p) / (2 - p)
    assert total == pytest.approx(expected, rel=1e-12)
    assert np.all(grid.singular_weights(p) >= 0)


@given(p=st.floats(0.1, 1.9), slope=st.floats(-2, 2), offset=st.floats(-1, 1))
@settings(max_examples=25, deadline=None)
def test_singular_weights_exact_for_linear(p, slope, offset):
    # exact per-cell integration of the weight against linear interpolants
    grid = RadialGrid.graded(64, 5.0, 2.0)
    f = offset + slope * grid.nodes
    r_max = grid.r_max
    exact = offset * r_max ** (2 - p) / (2 - p) + slope * r_max ** (3 - p) / (3 - p)
    assert grid.singular_weights(p) @ f == pytest.approx(exact, rel=1e-12, abs=1e-14)


def test_singular_weight_domain(grid):
    for bad in (0.0, 2.0, -1.0, 2.5):
        with pytest.raises(ValueError):
            grid.singular_weights(bad)


# -- integral operations -----------------------------------------------------


def test_mass_zero_function(grid):
    assert mass(RadialFunction(grid, np.zeros(grid.n))) == 0.0


def test_mass_gaussian(gaussian):
    assert mass(gaussian) == pytest.approx(1.0, abs=1e-5)


def test_mass_quadratic_homogeneity(gaussian):
    doubled = gaussian.with_values(2.0 * gaussian.values)
    assert mass(doubled) == pytest.approx(4.0 * mass(gaussian), rel=1e-14)


def test_kinetic_constant_is_zero(grid):
    # zero up to the rounding noise of the assembled quadratic form
    const = RadialFunction(grid, np.ones(grid.n))
    assert abs(kinetic(const)) < 1e-9


def test_kinetic_gaussian(gaussian):
    assert kinetic(gaussian) == pytest.approx(1.0, abs=1e-5)


def test_kinetic_scaling(gaussian):
    assert kinetic(rescale_profile(gaussian, 2.0)) == pytest.approx(
        4.0 * kinetic(gaussian), rel=1e-6)


def test_kinetic_refinement_order():
    # error in kinetic(gaussian) must shrink at least quadratically as N doubles
    errors = []
    for n in (1024, 2048, 4096):
        g = gaussian_profile(RadialGrid.graded(n, 30.0, 2.0))
        errors.append(abs(kinetic(g) - 1.0))
    assert errors[0] / errors[1] > 3.5
    assert errors[1] / errors[2] > 3.5


def test_quartic_gaussian(gaussian):
    assert quartic(gaussian) == pytest.approx(1.0 / (2 * math.pi), rel=1e-5)


def test_quartic_zero(grid):
    assert quartic(RadialFunction(grid, np.zeros(grid.n))) == 0.0


@pytest.mark.parametrize("p", [0.5, 1.0, 1.5])
def test_singular_moment_gaussian(gaussian, p):
    assert singular_moment(gaussian, p) == pytest.approx(gamma_fn(1 - p / 2), rel=1e-5)


def test_singular_moment_gaussian_coulomb(gaussian):
    assert singular_moment(gaussian, 1.0) == pytest.approx(math.sqrt(math.pi), rel=1e-5)


def test_singular_moment_domain(gaussian):
    for bad in (0.0, 2.0, -0.5):
        with pytest.raises(ValueError):
            singular_moment(gaussian, bad)


@given(eps=st.floats(0.5, 2.0), p=st.sampled_from([0.5, 1.0, 1.5]))
@settings(max_examples=20, deadline=None)
def test_singular_moment_dilation_law(eps, p):
    grid = RadialGrid.graded(2048, 30.0, 2.0)
    g = gaussian_profile(grid)
    scaled = rescale_profile(g, eps)
    assert singular_moment(scaled, p) == pytest.approx(
        eps**p * singular_moment(g, p), rel=1e-4)


# -- rescaling ---------------------------------------------------------------


def test_rescale_identity(gaussian):
    out = rescale_profile(gaussian, 1.0)
    assert np.array_equal(out.values, gaussian.values)


def test_rescale_preserves_mass(gaussian):
    # limited by the quadrature error of the narrower profile, not interpolation
    assert mass(rescale_profile(gaussian, 3.0)) == pytest.approx(mass(gaussian), rel=2e-5)


def test_rescale_composition(gaussian):
    via_two = rescale_profile(rescale_profile(gaussian, 1.3), 0.7)
    direct = rescale_profile(gaussian, 1.3 * 0.7)
    assert np.max(np.abs(via_two.values - direct.values)) < 1e-8


def test_rescale_rejects_unresolved_support(grid):
    # a profile still of unit size near r_max cannot be spread further
    wide = RadialFunction(grid, 1.0 / (1.0 + grid.nodes))
    with pytest.raises(ValueError, match="support"):
        rescale_profile(wide, 0.05)


def test_rescale_rejects_nonpositive(gaussian):
    with pytest.raises(ValueError):
        rescale_profile(gaussian, 0.0)


# -- H1 distance -------------------------------------------------------------


def test_h1_distance_zero_iff_equal(grid, gaussian):
    assert h1_distance(gaussian, gaussian) == 0.0
    other = gaussian.with_values(gaussian.values * 1.000001)
    assert h1_distance(gaussian, other) > 0.0


def test_h1_distance_symmetry(grid):
    u = bump_profile(grid, seed=1)
    v = bump_profile(grid, seed=2)
    assert h1_distance(u, v) == pytest.approx(h1_distance(v, u), rel=1e-12)


@given(seeds=st.tuples(st.integers(0, 500), st.integers(501, 1000), st.integers(1001, 1500)))
@settings(max_examples=15, deadline=None)
def test_h1_triangle_inequality(seeds):
    grid = RadialGrid.graded(512, 20.0, 2.0)
    u, v, w = (bump_profile(grid, seed=s) for s in seeds)
    assert h1_distance(u, w) <= h1_distance(u, v) + h1_distance(v, w) + 1e-12


def test_h1_grid_mismatch(grid, coarse_grid):
    u = gaussian_profile(grid)
    v = gaussian_profile(coarse_grid)
    with pytest.raises(ValueError):
        h1_distance(u, v)


# -- construction and serialization ------------------------------------------


def test_profile_shape_mismatch(grid):
    with pytest.raises(ValueError):
        RadialFunction(grid, np.zeros(grid.n - 1))


def test_profile_rejects_nonfinite(grid):
    values = np.zeros(grid.n)
    values[10] = np.nan
    with pytest.raises(ValueError):
        RadialFunction(grid, values)


def test_normalize_profile(grid):
    u = bump_profile(grid, seed=7)
    assert mass(u) == pytest.approx(1.0, abs=1e-13)
    with pytest.raises(ValueError):
        normalize_profile(RadialFunction(grid, np.zeros(grid.n)))


def test_csv_roundtrip_bit_exact(tmp_path, coarse_grid):
    u = bump_profile(coarse_grid, seed=3)
    path = tmp_path / "profile.csv"
    save_profile_csv(u, path)
    back = load_profile_csv(path)
    assert np.array_equal(back.values, u.values)
    assert np.array_equal(back.grid.nodes, u.grid.nodes)


def test_csv_header_check(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y\n1,2\n")
    with pytest.raises(ValueError):
        load_profile_csv(path)


def test_json_roundtrip_bit_exact(coarse_grid):
    u = bump_profile(coarse_grid, seed=4)
    back = profile_from_json(profile_to_json(u))
    assert np.array_equal(back.values, u.values)
    assert np.array_equal(back.grid.nodes, u.grid.nodes)
