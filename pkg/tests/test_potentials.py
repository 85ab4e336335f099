import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entropic_transport.potentials import ConvexBodySupport, HomogeneousPotential

ps = st.floats(1.2, 6.0)
coords = st.floats(-3.0, 3.0).filter(lambda v: abs(v) > 1e-3)


def _bodies():
    hexagon = [(np.cos(a), np.sin(a)) for a in np.linspace(0, 2 * np.pi, 6, endpoint=False)]
    return [
        ConvexBodySupport.ball(0.8, 2),
        ConvexBodySupport.polygon(np.array(hexagon) * [1.5, 0.7], smoothing=8),
    ]


@given(p=ps, lam=st.floats(0.1, 5.0), x=coords, y=coords, which=st.integers(0, 1))
def test_homogeneity(p, lam, x, y, which):
    V = HomogeneousPotential(p, _bodies()[which])
    pt = np.array([x, y])
    assert V(lam * pt) == pytest.approx(lam**p * V(pt), rel=1e-10)


@given(p=ps, x=coords, y=coords, which=st.integers(0, 1))
def test_euler_identity(p, x, y, which):
    V = HomogeneousPotential(p, _bodies()[which])
    pt = np.array([x, y])
    assert np.dot(V.grad(pt), pt) == pytest.approx(p * V(pt), rel=1e-9)


@given(p=ps, x=coords, y=coords, which=st.integers(0, 1))
def test_hessian_maps_position_to_gradient(p, x, y, which):
    # hess V . x = (p - 1) grad V and <(hess V)^-1 grad V, grad V> = p V / (p - 1)
    V = HomogeneousPotential(p, _bodies()[which])
    pt = np.array([x, y])
    H, g = V.hess(pt), V.grad(pt)
    np.testing.assert_allclose(H @ pt, (p - 1) * g, rtol=1e-7, atol=1e-9 * (1 + np.abs(g).max()))
    dual = g @ np.linalg.solve(H, g)
    assert dual == pytest.approx(p / (p - 1) * V(pt), rel=1e-6)


@given(x=coords, y=coords, which=st.integers(0, 1))
def test_hessian_symmetric_and_matches_finite_differences(x, y, which):
    V = HomogeneousPotential(3.0, _bodies()[which])
    pt = np.array([x, y])
    H = V.hess(pt)
    np.testing.assert_allclose(H, H.T, atol=1e-12)
    np.testing.assert_allclose(H, V.hess_fd(pt), rtol=1e-4, atol=1e-6 * (1 + np.abs(H).max()))


def test_support_function_positive_and_one_homogeneous():
    for body in _bodies():
        u = np.stack([np.cos(np.linspace(0, 2 * np.pi, 100)), np.sin(np.linspace(0, 2 * np.pi, 100))], -1)
        h = body(u)
        assert np.all(h > 0)
        np.testing.assert_allclose(body(3.0 * u), 3.0 * h, rtol=1e-12)


def test_interval_support():
    K = ConvexBodySupport.interval(1.0, 2.0)  # [-1, 2]
    np.testing.assert_allclose(K(np.array([[1.0], [-1.0], [0.5]])), [2.0, 1.0, 1.0])


def test_gaussian_potential():
    V = HomogeneousPotential.gaussian(2)
    assert V.is_standard_gaussian
    assert V(np.array([3.0, 4.0])) == pytest.approx(12.5)
    np.testing.assert_allclose(V.hess(np.zeros(2)), np.eye(2))


def test_radial_potential_and_normalizer():
    V = HomogeneousPotential.radial(1.5, 2)
    assert V(np.array([0.0, 2.0])) == pytest.approx(2.0**1.5 / 1.5)
    # 2 pi int_0^inf r exp(-r^1.5 / 1.5) dr, by scipy quad
    assert V.integral_exp_neg() == pytest.approx(6.42271201477188, rel=1e-10)
    assert HomogeneousPotential.radial(4.0, 1).integral_exp_neg() == pytest.approx(2.5636933520410397, rel=1e-10)


def test_invalid_p():
    for p in (1.0, 0.5, np.inf):
        with pytest.raises(ValueError):
            HomogeneousPotential(p, ConvexBodySupport.ball(1.0, 1))
