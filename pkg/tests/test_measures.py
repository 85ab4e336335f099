import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import ndtr

from entropic_transport.errors import GridMismatch, NegativeDensity, ZeroMass
from entropic_transport.measures import (
    DiscreteMeasure,
    GaussianMeasure,
    GridDensity1D,
    GridDensity2D,
    ReferenceMeasure,
    density_from_json,
    moment2,
    normalize,
    restrict,
)
from entropic_transport.potentials import HomogeneousPotential

GAMMA = ReferenceMeasure.gaussian(1)


def test_grid_density_is_normalized():
    mu = GridDensity1D(0.0, 2.0, 4, [1.0, 1.0, 3.0, 3.0])
    assert mu.mass() == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(mu.masses, [0.125, 0.125, 0.375, 0.375])
    np.testing.assert_allclose(mu.centers, [0.25, 0.75, 1.25, 1.75])
    np.testing.assert_allclose(mu.cdf_edges, [0, 0.125, 0.25, 0.625, 1.0])


def test_grid_density_rejects_bad_input():
    with pytest.raises(NegativeDensity):
        GridDensity1D(0, 1, 3, [1.0, -1.0, 1.0])
    with pytest.raises(ZeroMass):
        GridDensity1D(0, 1, 3, [0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        GridDensity1D(0, 1, 3, [1.0, np.nan, 1.0])


def test_tiny_values_are_clamped():
    mu = GridDensity1D(0, 1, 3, [1.0, 1e-320, 1.0])
    assert mu.values[1] == 0.0


def test_values_are_read_only():
    mu = GridDensity1D(0, 1, 2, [1.0, 1.0])
    with pytest.raises(ValueError):
        mu.values[0] = 3.0


def test_csv_and_json_round_trip(tmp_path):
    mu = GaussianMeasure.scalar(0.3, 0.5).tabulate(-5, 5, 64)
    mu.to_csv(tmp_path / "mu.csv")
    back = GridDensity1D.from_csv(tmp_path / "mu.csv")
    assert back.same_grid(mu)
    np.testing.assert_allclose(back.values, mu.values, rtol=1e-15)
    again = density_from_json(mu.to_json())
    np.testing.assert_allclose(again.values, mu.values, rtol=1e-15)
    nu = GridDensity2D((-1, 1, -2, 2), np.ones((4, 8)))
    twin = density_from_json(nu.to_json())
    assert twin.same_grid(nu)


def test_is_even():
    assert GaussianMeasure.scalar(0, 2).tabulate(-8, 8, 256).is_even()
    assert not GaussianMeasure.scalar(0.5, 2).tabulate(-8, 8, 256).is_even()


def test_grid_density_2d_mass_and_points():
    mu = GridDensity2D((0, 2, 0, 1), np.ones((4, 2)))
    assert mu.cell_area == pytest.approx(0.25)
    assert mu.points.shape == (4, 2, 2)
    assert mu.mass() == pytest.approx(1.0)
    # mean of the uniform law on [0, 2] x [0, 1]
    assert mu.integrate(lambda p: p[..., 0]) == pytest.approx(1.0)


def test_gaussian_validation():
    with pytest.raises(ValueError):
        GaussianMeasure([0, 0], [[1, 2], [2, 1]])
    g = GaussianMeasure.standard(2)
    assert g.pdf(np.zeros(2)) == pytest.approx(1 / (2 * np.pi))


@pytest.mark.parametrize("var", [0.25, 1.0, 4.0])
def test_gaussian_moment2_matches_grid(var):
    g = GaussianMeasure.scalar(0.0, var)
    s = np.sqrt(var)
    grid = g.tabulate(-8 * s, 8 * s, 2048)
    assert abs(moment2(grid) - moment2(g)) <= 1e-4


def test_discrete_measure_weights():
    m = DiscreteMeasure(np.zeros((3, 2)), [0.25, 0.5, 0.25])
    assert m.weights.sum() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        DiscreteMeasure(np.zeros((3, 2)), [1, 2, 1])
    u = DiscreteMeasure.uniform(np.arange(5.0))
    np.testing.assert_allclose(u.weights, 0.2)
    with pytest.raises(ValueError):
        DiscreteMeasure(np.zeros((2, 1)), [1, -1])


@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
def test_reference_normalizer(p):
    V = HomogeneousPotential.radial(p, 1)
    nu = ReferenceMeasure.from_potential(V)
    assert nu.numeric_mass() == pytest.approx(1.0, abs=1e-6)
    # closed form and quadrature agree
    assert nu.log_normalizer == pytest.approx(-np.log(V.integral_exp_neg()), abs=1e-6)


def test_reference_normalizer_2d():
    nu = ReferenceMeasure.from_potential(HomogeneousPotential.radial(4.0, 2))
    # 2 pi int_0^inf r exp(-r^4/4) dr, by scipy quad
    assert nu.log_normalizer == pytest.approx(-np.log(5.568327996833366), abs=1e-6)


def test_standard_gaussian_reference():
    assert GAMMA.is_standard_gaussian
    assert GAMMA.log_normalizer == pytest.approx(-0.5 * np.log(2 * np.pi))
    assert GAMMA.numeric_mass() == pytest.approx(1.0, abs=1e-6)


def test_restrict_mass():
    mu, mass = restrict(GAMMA, (-1.0, 1.0), (-8.0, 8.0, 4096), return_mass=True)
    assert mu.mass() == pytest.approx(1.0, abs=1e-8)
    # cell ends at -1 and 1 fall on edges: midpoint error only
    assert mass == pytest.approx(2 * ndtr(1.0) - 1, abs=1e-6)


def test_restrict_2d_callable():
    grid = ((-4.0, 4.0, -4.0, 4.0), (200, 200))
    nu = ReferenceMeasure.gaussian(2)
    mu, mass = restrict(nu, lambda x: np.hypot(x[..., 0], x[..., 1]) <= 1.0, grid, return_mass=True)
    assert mu.mass() == pytest.approx(1.0, abs=1e-8)
    assert mass == pytest.approx(1 - np.exp(-0.5), abs=2e-3)


def test_restrict_empty_raises():
    with pytest.raises(ZeroMass):
        restrict(GAMMA, (3.0, 3.0001), (-8.0, 8.0, 64))


@given(
    a=st.floats(0.1, 3.0),
    b=st.floats(0.1, 3.0),
    grow=st.floats(0.0, 2.0),
)
def test_restrict_nesting(a, b, grow):
    grid = (-8.0, 8.0, 1024)
    mu, m_small = restrict(GAMMA, (-a, b), grid, return_mass=True)
    _, m_big = restrict(GAMMA, (-a - grow, b + grow), grid, return_mass=True)
    assert m_small <= m_big
    assert mu.mass() == pytest.approx(1.0, abs=1e-8)


def test_normalize():
    mu = normalize([1.0, 3.0], 0.0, 1.0)
    np.testing.assert_allclose(mu.values, [0.5, 1.5])
    with pytest.raises(NegativeDensity):
        normalize([-1.0, 2.0], 0, 1)


def test_same_grid():
    a = GridDensity1D(0, 1, 4, np.ones(4))
    b = GridDensity1D(0, 1, 8, np.ones(8))
    assert not a.same_grid(b)
    assert a.same_grid(GridDensity1D(0, 1, 4, np.arange(1.0, 5.0)))
