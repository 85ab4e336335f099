import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entropic_transport import families as F
from entropic_transport.errors import NotEven, Unsupported
from entropic_transport.functionals import fisher_information, relative_entropy
from entropic_transport.gamma import (
    GridFunction,
    carre_du_champ,
    coefficients,
    entropy_derivatives_along,
    gamma2,
    gamma2_bochner,
    gamma2_inequality_check,
    ibp_residual,
    is_strongly_log_concave,
    ou_evolve,
    ou_generator,
    s_n_membership,
)
from entropic_transport.measures import GaussianMeasure, ReferenceMeasure
from entropic_transport.potentials import HomogeneousPotential
from entropic_transport.transport import interpolate, velocity_potential

GAMMA = ReferenceMeasure.gaussian(1)
GRID = (-8.0, 8.0, 4096)

EVEN_TESTS = {
    "x2": lambda x: x**2 / 2,
    "x4": lambda x: x**4,
    "cos": np.cos,
    "x2+x4": lambda x: x**2 + x**4 / 10,
    "logcosh": lambda x: np.log(np.cosh(x)),
    "bump": lambda x: np.exp(-(x**2)),
    "x6": lambda x: x**6 / 30,
    "cosh": lambda x: np.cosh(x / 2),
    "sqrt": lambda x: np.sqrt(1 + x * x),
    "x2cos": lambda x: x * x * np.cos(x),
}


def _tv(a, b):
    return 0.5 * np.sum(np.abs(a.masses - b.masses))


def test_grid_function_derivatives_exact_on_quadratics():
    f = GridFunction.sample(lambda x: 3 * x * x - x + 1, GRID)
    np.testing.assert_allclose(f.grad(), 6 * f.x - 1, atol=1e-9)
    np.testing.assert_allclose(f.hess(), 6.0, atol=1e-6)


def test_carre_du_champ_and_generator():
    f = GridFunction.sample(np.sin, GRID)
    g = GridFunction.sample(lambda x: x**3, GRID)
    x = f.x
    np.testing.assert_allclose(carre_du_champ(f, g).values, np.cos(x) * 3 * x * x, rtol=1e-5, atol=1e-4)
    np.testing.assert_allclose(ou_generator(f).values, -np.sin(x) - x * np.cos(x), rtol=1e-5, atol=1e-4)


def test_integration_by_parts():
    grid = (-6.0, 6.0, 4096)
    f = GridFunction.sample(lambda x: np.exp(-x * x) * np.cos(x), grid)
    g = GridFunction.sample(lambda x: np.exp(-0.5 * x * x) * x, grid)
    assert ibp_residual(f, g) <= 1e-3


def test_bochner_identity():
    f = GridFunction.sample(lambda x: np.sin(x) + x**3 / 10, (-6.0, 6.0, 4096))
    a, b = gamma2(f).values, gamma2_bochner(f).values
    inner = slice(8, -8)
    scale = np.max(np.abs(a[inner]))
    assert np.max(np.abs(a[inner] - b[inner])) <= 1e-2 * scale


def test_gamma2_equality_case():
    mu = GAMMA.tabulate(*GRID)
    assert abs(gamma2_inequality_check(lambda x: x * x / 2, mu, 1.0)) <= 1e-9


@pytest.mark.parametrize(
    "label, mu",
    [
        ("gamma", GAMMA.tabulate(-8.0, 8.0, 4096)),
        ("trunc1", F.truncated_gaussian(1.0)),
        ("half", GaussianMeasure.scalar(0, 0.5).tabulate(-8.0, 8.0, 4096)),
    ],
)
def test_gamma2_inequality_on_even_functions(label, mu):
    margins = [gamma2_inequality_check(u, mu, 1.0) for u in EVEN_TESTS.values()]
    assert min(margins) >= -1e-3


def test_gamma2_inequality_grid_mismatch():
    u = GridFunction.sample(np.cos, (-4.0, 4.0, 128))
    with pytest.raises(ValueError):
        gamma2_inequality_check(u, GAMMA.tabulate(*GRID), 1.0)


# ---------------------------------------------------------------------------
# OU semigroup


@pytest.mark.parametrize("s2, t", [(0.25, 0.3), (4.0, 1.0)])
def test_ou_gaussian_closed_form(s2, t):
    L = 8.0 * max(1.0, np.sqrt(s2))
    mu = GaussianMeasure.scalar(0, s2).tabulate(-L, L, 4096)
    out = ou_evolve(mu, t)
    var = 1 + np.exp(-2 * t) * (s2 - 1)
    ref = GaussianMeasure.scalar(0, var).tabulate(-L, L, 4096)
    assert _tv(out, ref) <= 1e-5


def test_ou_semigroup_property():
    mu = F.truncated_gaussian(1.0, n_cells=2048)
    two = ou_evolve(ou_evolve(mu, 0.2), 0.3)
    one = ou_evolve(mu, 0.5)
    assert _tv(two, one) <= 1e-4


def test_ou_preserves_evenness():
    mu = F.truncated_gaussian(1.5, n_cells=2048)
    out = ou_evolve(mu, 0.4)
    np.testing.assert_allclose(out.values, out.values[::-1], rtol=1e-9, atol=0)


def test_ou_tails_are_relatively_accurate():
    # far tails must carry the right values, not cancellation noise
    mu = GaussianMeasure.scalar(0, 0.25).tabulate(-8, 8, 4096)
    out = ou_evolve(mu, 0.3)
    ref = GaussianMeasure.scalar(0, 1 + np.exp(-0.6) * (0.25 - 1)).tabulate(-8, 8, 4096)
    assert np.all(out.values > 0)
    np.testing.assert_allclose(np.log(out.values), np.log(ref.values), atol=1e-3)


def test_ou_mehler_cross_check():
    mu = F.tilted_gaussian(lambda x: 0.2 * x**4, n_cells=2048)
    a = ou_evolve(mu, 0.3)
    b = ou_evolve(mu, 0.3, method="mehler")
    assert _tv(a, b) <= 1e-4


def test_ou_rejects_bad_arguments():
    mu = F.gaussian_density(1.0, n_cells=256)
    assert ou_evolve(mu, 0.0) is mu
    with pytest.raises(ValueError):
        ou_evolve(mu, -1.0)
    with pytest.raises(ValueError):
        ou_evolve(mu, 1.0, method="heat")


def test_de_bruijn_identity():
    mu = F.smoothed_truncated_gaussian(1.0, 0.05, 2048)
    t, dt = 0.3, 1e-3
    Dp = relative_entropy(ou_evolve(mu, t + dt), GAMMA)
    Dm = relative_entropy(ou_evolve(mu, t - dt), GAMMA)
    I = fisher_information(ou_evolve(mu, t), GAMMA)
    assert -(Dp - Dm) / (2 * dt) == pytest.approx(I, rel=5e-2)


# ---------------------------------------------------------------------------
# entropy along geodesics


def test_entropy_derivatives_match_finite_differences():
    mu0 = F.gaussian_density(0.6)
    mu1 = F.tilted_gaussian(lambda x: 0.3 * x**4)
    path = interpolate(mu0, mu1, 65)
    d = entropy_derivatives_along(path, velocity_potential(path))
    D = np.array([relative_entropy(path.measure(k), GAMMA) for k in range(65)])
    t = path.t_grid
    fd1 = np.gradient(D, t, edge_order=2)
    assert np.max(np.abs(d[:, 0] - fd1)) <= 1e-2 * np.max(np.abs(d[:, 0]))
    fd2 = (D[2:] - 2 * D[1:-1] + D[:-2]) / (t[1] - t[0]) ** 2
    assert np.max(np.abs(d[1:-1, 1] - fd2)) <= 2e-2 * np.max(np.abs(d[:, 1]))


def test_entropy_derivatives_gaussian_path():
    g0, g1 = GaussianMeasure.scalar(0.5, 0.3), GaussianMeasure.scalar(-1.0, 2.0)
    path = interpolate(g0, g1, 33)
    d = entropy_derivatives_along(path, velocity_potential(path))
    t = path.t_grid
    m, s = 0.5 - 1.5 * t, np.sqrt(0.3) + (np.sqrt(2.0) - np.sqrt(0.3)) * t
    dm, ds = -1.5, np.sqrt(2.0) - np.sqrt(0.3)
    # D = -log s + (s^2 + m^2)/2 - 1/2 along the path
    np.testing.assert_allclose(d[:, 0], -ds / s + s * ds + m * dm, rtol=1e-10)
    np.testing.assert_allclose(d[:, 1], ds**2 / s**2 + ds**2 + dm**2, rtol=1e-10)


def test_entropy_derivatives_need_gaussian_reference():
    path = interpolate(F.gaussian_density(0.6, n_cells=256), F.gaussian_density(1.0, n_cells=256), 5)
    nu = ReferenceMeasure.from_potential(HomogeneousPotential.radial(3.0, 1))
    with pytest.raises(Unsupported):
        entropy_derivatives_along(path, velocity_potential(path), nu)


# ---------------------------------------------------------------------------
# odd Poincare constant and log-concavity


def test_poincare_constants():
    assert s_n_membership(GAMMA.tabulate(*GRID)).constant == pytest.approx(1.0, abs=1e-4)
    wide = GaussianMeasure.scalar(0, 4.0).tabulate(-32.0, 32.0, 8192)
    res = s_n_membership(wide)
    assert res.constant == pytest.approx(4.0, rel=1e-4)
    assert not res.member
    # odd functions on [-1, 1] under a near-uniform weight: constant close to 4/pi^2 or below 1/3
    trunc = s_n_membership(F.truncated_gaussian(1.0))
    assert trunc.member
    assert trunc.constant < 0.41


def test_poincare_witness_and_gaussian_shortcut():
    res = s_n_membership(GaussianMeasure([0.0, 0.0], np.diag([0.5, 2.0])))
    assert res.constant == pytest.approx(2.0)
    assert not res.member
    r = s_n_membership(GAMMA.tabulate(*GRID))
    x = np.linspace(-1, 1, 5)
    np.testing.assert_allclose(r.witness(x), -r.witness(-x), atol=1e-9)


def test_poincare_requires_even_measure():
    with pytest.raises(NotEven):
        s_n_membership(GaussianMeasure.scalar(0.5, 1.0).tabulate(*GRID))


def test_strong_log_concavity():
    assert is_strongly_log_concave(F.gaussian_density(0.7))
    assert is_strongly_log_concave(F.truncated_gaussian(1.0))
    assert not is_strongly_log_concave(F.gaussian_density(1.5))


# ---------------------------------------------------------------------------
# distortion coefficients


@given(n=st.floats(0.5, 20.0), theta=st.floats(0.0, 1.0), t=st.floats(0.0, 1.0))
def test_coefficient_identities(n, theta, t):
    co = coefficients(n)
    th = theta * co.theta_max * 0.99
    assert co.c(th) ** 2 + (co.k * co.s(th)) ** 2 == pytest.approx(1.0, abs=1e-12)
    assert co.sigma(1.0, th) == pytest.approx(1.0, rel=1e-12)
    assert co.sigma(0.0, th) == pytest.approx(0.0, abs=1e-12)
    # sigma_t(theta) >= t, with equality as theta -> 0
    assert co.sigma(t, th) >= t - 1e-12


@given(n=st.floats(0.5, 20.0), t=st.floats(0.0, 1.0))
def test_coefficient_small_theta_limit(n, t):
    co = coefficients(n)
    assert co.sigma(t, 1e-10) == pytest.approx(t, abs=1e-12)
    assert co.sigma(t, 2e-8) == pytest.approx(co.s(t * 2e-8) / co.s(2e-8), rel=1e-6, abs=1e-15)


def test_coefficient_blow_up():
    co = coefficients(2.0)
    assert co.theta_max == pytest.approx(np.pi)
    assert co.sigma(0.5, np.pi) == np.inf
    with pytest.raises(ValueError):
        coefficients(0.0)
