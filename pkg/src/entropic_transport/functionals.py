"""Entropy-type functionals of measures and their derivatives along geodesics.

Grid densities are integrated with the midpoint rule, piecewise-uniform
interpolants exactly (3-point Gauss-Legendre per piece), and Gaussians in
closed form or by Gauss-Hermite quadrature.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import SupportViolation, Unsupported
from .measures import GaussianMeasure, GridDensity1D, GridDensity2D, ReferenceMeasure
from .potentials import ConvexBodySupport, HomogeneousPotential  # noqa: F401  (re-export)
from .transport import _GL_NODES, _GL_WEIGHTS, GeodesicPath, PiecewiseUniform, VelocityPotential

JUMP_RATIO = 1e-6


def _points(mu):
    return mu.centers if isinstance(mu, GridDensity1D) else mu.points


def _gauss_nodes(g: GaussianMeasure, order: int = 24):
    """Tensor Gauss-Hermite nodes and weights for expectations under g."""
    z, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / w.sum()
    d = g.dim
    Z = np.stack(np.meshgrid(*[z] * d, indexing="ij"), -1).reshape(-1, d)
    W = np.prod(np.stack(np.meshgrid(*[w] * d, indexing="ij"), -1).reshape(-1, d), axis=1)
    L = np.linalg.cholesky(g.covariance)
    return g.mean + Z @ L.T, W


def _expect(mu, fn) -> float:
    if isinstance(mu, PiecewiseUniform):
        return mu.integrate(fn)
    if isinstance(mu, GaussianMeasure):
        x, w = _gauss_nodes(mu)
        return float(np.sum(w * fn(x[:, 0] if mu.dim == 1 else x)))
    return mu.integrate(fn)


# ---------------------------------------------------------------------------


def entropy(mu) -> float:
    """Shannon entropy -int f log f dx, with 0 log 0 = 0."""
    if isinstance(mu, PiecewiseUniform):
        return mu.entropy()
    if isinstance(mu, GaussianMeasure):
        _, logdet = np.linalg.slogdet(mu.covariance)
        return float(0.5 * (mu.dim * np.log(2 * np.pi * np.e) + logdet))
    f = mu.values
    pos = f > 0
    return float(-np.sum(f[pos] * np.log(f[pos])) * (mu.masses[pos].sum() / f[pos].sum()))


def relative_entropy(mu, nu: ReferenceMeasure, *, allow_infinite: bool = False) -> float:
    """D(mu || nu) = -h(mu) + int V dmu - c.

    Computed in log space so that tails where e^{-V} underflows still contribute.
    If mu charges a region where V is infinite the value is +inf: returned when
    ``allow_infinite`` is set, otherwise :class:`SupportViolation` is raised.
    """
    if isinstance(mu, GaussianMeasure) and nu.is_standard_gaussian:
        _, logdet = np.linalg.slogdet(mu.covariance)
        S = mu.covariance
        return float(0.5 * (np.trace(S) + mu.mean @ mu.mean - mu.dim - logdet))
    if isinstance(mu, (PiecewiseUniform, GaussianMeasure)):
        energy = _expect(mu, nu.potential)
        return float(-entropy(mu) + energy - nu.log_normalizer)
    f = mu.values
    pos = f > 0
    V = nu.potential(_points(mu))[pos]
    if not np.all(np.isfinite(V)):
        if allow_infinite:
            return float("inf")
        raise SupportViolation("mu charges a set where the reference density vanishes")
    cell = mu.masses[pos].sum() / f[pos].sum()
    return float(np.sum(f[pos] * (np.log(f[pos]) + V - nu.log_normalizer)) * cell)


def _one_sided_derivative(L, pos, h, axis):
    """Derivative of L along ``axis`` on the positive set, one-sided at its edges.

    Returns the derivative and a mask of cells whose value is reliable.
    """
    n = L.shape[axis]

    def sh(a, k, fill):
        out = np.full_like(a, fill)
        src = [slice(None)] * a.ndim
        dst = [slice(None)] * a.ndim
        if k > 0:
            src[axis], dst[axis] = slice(k, None), slice(None, n - k)
        else:
            src[axis], dst[axis] = slice(None, n + k), slice(-k, None)
        out[tuple(dst)] = a[tuple(src)]
        return out

    Lz = np.where(pos, L, 0.0)
    p1, m1 = sh(pos, 1, False), sh(pos, -1, False)
    p2, m2 = sh(pos, 2, False), sh(pos, -2, False)
    L1, Lm1, L2, Lm2 = sh(Lz, 1, 0.0), sh(Lz, -1, 0.0), sh(Lz, 2, 0.0), sh(Lz, -2, 0.0)
    d = np.zeros_like(L)
    central = pos & p1 & m1
    fwd = pos & ~m1 & p1 & p2
    bwd = pos & ~p1 & m1 & m2
    d[central] = ((L1 - Lm1) / (2 * h))[central]
    d[fwd] = ((-3 * Lz + 4 * L1 - L2) / (2 * h))[fwd]
    d[bwd] = ((3 * Lz - 4 * Lm1 + Lm2) / (2 * h))[bwd]
    return d, central | fwd | bwd


def _has_jump(f, pos):
    """Positive cell adjacent to a zero cell (or the grid boundary) with non-negligible density."""
    thresh = JUMP_RATIO * f.max()
    big = f > thresh
    for axis in range(f.ndim):
        n = f.shape[axis]
        for end in (0, n - 1):
            if np.take(big, end, axis=axis).any():
                return True
        a = np.take(pos, np.arange(n - 1), axis=axis)
        b = np.take(pos, np.arange(1, n), axis=axis)
        ba = np.take(big, np.arange(n - 1), axis=axis)
        bb = np.take(big, np.arange(1, n), axis=axis)
        if np.any(ba & ~b) or np.any(bb & ~a):
            return True
    return False


def fisher_information(mu, gamma: ReferenceMeasure | None = None) -> float:
    """I(mu || nu) = int |grad log(dmu/dnu)|^2 dmu.

    Densities with a jump (e.g. a restriction to a body) give ``inf``; this is a
    sentinel value, not an error.
    """
    if gamma is None:
        gamma = ReferenceMeasure.gaussian(mu.dim)
    if isinstance(mu, GaussianMeasure) and gamma.is_standard_gaussian:
        S = mu.covariance
        R = np.eye(mu.dim) - np.linalg.inv(S)
        return float(np.trace(R @ S @ R) + mu.mean @ mu.mean)
    if isinstance(mu, GaussianMeasure):
        P = np.linalg.inv(mu.covariance)

        def integrand(x):
            x = np.asarray(x).reshape(len(x), mu.dim)
            g = -(x - mu.mean) @ P + gamma.potential.grad(x)
            return np.sum(g * g, axis=-1)

        return _expect(mu, integrand)
    if isinstance(mu, PiecewiseUniform):
        return float("inf")
    f = mu.values
    pos = f > 0
    if _has_jump(f, pos):
        return float("inf")
    L = np.where(pos, np.log(np.where(pos, f, 1.0)), 0.0)
    pts = _points(mu)
    gradV = gamma.potential.grad(pts)
    if isinstance(mu, GridDensity1D):
        d, ok = _one_sided_derivative(L, pos, mu.dx, 0)
        score2 = (d + gradV[..., 0]) ** 2
    else:
        xlo, xhi, ylo, yhi = mu.bounds
        nx, ny = mu.resolution
        dx, okx = _one_sided_derivative(L, pos, (xhi - xlo) / nx, 0)
        dy, oky = _one_sided_derivative(L, pos, (yhi - ylo) / ny, 1)
        ok = okx & oky
        score2 = (dx + gradV[..., 0]) ** 2 + (dy + gradV[..., 1]) ** 2
    return float(np.sum(np.where(ok, score2 * mu.masses, 0.0)))


class Energy(NamedTuple):
    value: float
    in_S: bool


def potential_energy(mu, V: HomogeneousPotential, tol: float = 1e-6) -> Energy:
    """int V dmu, with the flag ``int V dmu <= n / p`` (n = dimension of V)."""
    val = _expect(mu, V)
    return Energy(float(val), bool(val <= V.dim / V.p * (1 + tol) + tol))


def renyi_A(mu, n_dim: int) -> float:
    """int f^(1 - 1/n) dx over the support of f."""
    if n_dim < 1:
        raise ValueError("n_dim must be >= 1")
    e = 1.0 - 1.0 / n_dim
    if isinstance(mu, PiecewiseUniform):
        return float(np.sum(mu.widths * (mu.mass / mu.widths) ** e))
    f = mu.values
    pos = f > 0
    cell = mu.masses[pos].sum() / f[pos].sum()
    return float(np.sum(f[pos] ** e) * cell)


class RadialCheck(NamedTuple):
    decreasing: bool
    euler_integral: float
    worst_log_excess: float


def _log_interp_1d(mu: GridDensity1D, x):
    """Linear interpolation of log f at x; -inf where a neighbour cell is empty or x is off-grid."""
    u = (x - mu.lo) / mu.dx - 0.5
    i = np.floor(u).astype(int)
    w = u - i
    n = mu.n_cells
    f = mu.values
    inside = (i >= 0) & (i + 1 < n)
    i0 = np.clip(i, 0, n - 1)
    i1 = np.clip(i + 1, 0, n - 1)
    both = inside & (f[i0] > 0) & (f[i1] > 0)
    with np.errstate(divide="ignore"):
        lf = np.log(f)
    out = np.full(x.shape, -np.inf)
    out[both] = ((1 - w) * lf[i0] + w * lf[i1])[both]
    return out


def _log_interp_2d(mu: GridDensity2D, x):
    from scipy.interpolate import RegularGridInterpolator

    f = mu.values
    with np.errstate(divide="ignore"):
        lf = np.where(f > 0, np.log(np.where(f > 0, f, 1.0)), -1e300)
    interp = RegularGridInterpolator(mu.axes, lf, bounds_error=False, fill_value=-1e300)
    out = interp(x)
    return np.where(out < -1e299, -np.inf, out)


def radial_monotonicity_check(mu, nu: ReferenceMeasure, lambdas=(1.1, 1.5, 2.0), tol: float = 1e-3) -> RadialCheck:
    """Sampled test of x -> (dmu/dnu)(x) being radially non-increasing.

    For every positive cell centre x and each lambda, compares log f(lam x),
    obtained by linear interpolation of log-density, with log f(x).  Excesses up
    to ``tol`` are tolerated as interpolation error.  Also returns
    ``int <grad V, x> dmu``.
    """
    pts = _points(mu)
    f = mu.values
    pos = f > 0
    V = nu.potential
    logf = np.full(f.shape, -np.inf)
    logf[pos] = np.log(f[pos]) + V(pts)[pos]
    worst = -np.inf
    for lam in lambdas:
        y = lam * pts
        if isinstance(mu, GridDensity1D):
            ly = _log_interp_1d(mu, y)
        else:
            ly = _log_interp_2d(mu, y)
        with np.errstate(invalid="ignore"):
            ly = ly + V(y)
            diff = np.where(pos & np.isfinite(ly), ly - logf, -np.inf)
        worst = max(worst, float(diff.max()))
    g = V.grad(pts)
    xs = pts[..., None] if isinstance(mu, GridDensity1D) else pts
    euler = float(np.sum(np.sum(g * xs, axis=-1) * mu.masses))
    return RadialCheck(bool(worst <= tol), euler, worst)


# ---------------------------------------------------------------------------
# derivatives along geodesics


def _path_nodes(path: GeodesicPath, vel: VelocityPotential, k: int):
    """Quadrature nodes, weights, velocity and velocity slope for mu_{t_k} (1-D)."""
    p = path.measure(k)
    c = path.coupling
    x = p.a[:, None] + p.widths[:, None] * _GL_NODES
    v = c.va[:, None] + (c.vb - c.va)[:, None] * _GL_NODES
    dv = ((c.vb - c.va) / p.widths)[:, None] * np.ones_like(_GL_NODES)
    w = p.mass[:, None] * _GL_WEIGHTS
    return x, w, v, dv


def energy_derivatives(path: GeodesicPath, vel: VelocityPotential, V: HomogeneousPotential) -> np.ndarray:
    """Rows (dV/dt, d2V/dt2) of t -> int V dmu_t on the path's time grid.

    Uses int <grad V, grad theta> dmu_t and int <hess V grad theta, grad theta> dmu_t.
    """
    if path.kind == "1d":
        out = []
        for k in range(path.t_grid.size):
            x, w, v, _ = _path_nodes(path, vel, k)
            g = V.grad(x)[..., 0]
            H = V.hess(x)[..., 0, 0]
            out.append((np.sum(w * g * v), np.sum(w * H * v * v)))
        return np.array(out)
    if path.kind == "gaussian":
        out = []
        for k, t in enumerate(path.t_grid):
            x, w = _gauss_nodes(path.measure(k))
            v = vel.grad_at(t, x)
            g = V.grad(x)
            H = V.hess(x)
            first = np.sum(w * np.sum(g * v, axis=-1))
            second = np.sum(w * np.einsum("ni,nij,nj->n", v, H, v))
            out.append((first, second))
        return np.array(out)
    raise Unsupported("energy derivatives need a 1-D or Gaussian path")


def dual_energy(mu, V: HomogeneousPotential) -> float:
    """int <(hess V)^-1 grad V, grad V> dmu, evaluated pointwise."""

    def integrand(x):
        g = V.grad(x)
        H = V.hess(x)
        if g.shape[-1] == 1:
            return np.divide(g[..., 0] ** 2, H[..., 0, 0], out=np.zeros(g.shape[:-1]), where=H[..., 0, 0] > 0)
        return np.einsum("...i,...i->...", g, np.linalg.solve(H, g[..., None])[..., 0])

    return _expect(mu, integrand)


def path_values(path: GeodesicPath, fn) -> np.ndarray:
    return np.array([fn(path.measure(k)) for k in range(path.t_grid.size)])


# ---------------------------------------------------------------------------


@dataclass
class FunctionalReport:
    h: float | None = None
    D: float | None = None
    I: float | None = None  # noqa: E741
    V_energy: float | None = None
    renyi_A: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> str:
        def clean(v):
            if isinstance(v, float) and not np.isfinite(v):
                return str(v)
            return v

        d = {k: clean(v) for k, v in asdict(self).items()}
        return json.dumps(d, sort_keys=True)


def report(mu, nu: ReferenceMeasure | None = None, V: HomogeneousPotential | None = None, n_dim: int | None = None):
    """Evaluate every applicable functional of a grid density."""
    r = FunctionalReport(h=entropy(mu))
    if nu is not None:
        r.D = relative_entropy(mu, nu, allow_infinite=True)
        if nu.is_standard_gaussian:
            r.I = fisher_information(mu, nu)
    if V is not None:
        r.V_energy = potential_energy(mu, V).value
    if n_dim is not None:
        r.renyi_A = renyi_A(mu, n_dim)
    if hasattr(mu, "values"):
        r.diagnostics = {"mass_error": abs(mu.mass() - 1.0), "empty_cells": int(np.sum(mu.values == 0))}
    return r
