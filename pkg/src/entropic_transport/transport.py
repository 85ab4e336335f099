"""Quadratic-cost optimal transport: 1-D quantile maps, Gaussian maps, discrete couplings,
displacement interpolation and velocity potentials.

One-dimensional measures are handled through a single representation,
:class:`PiecewiseUniform`: a sorted list of pieces ``[a_j, b_j]`` each carrying
mass ``m_j`` spread uniformly.  A grid density is the special case where the
pieces are the grid cells.  The quantile function of such a measure is linear
on each piece, so monotone rearrangement between two of them is exact once
the mass breakpoints of both are merged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linprog
from scipy.special import logsumexp

from .errors import NonMonotoneMap, NoConvergence, Unsupported
from .measures import DiscreteMeasure, GaussianMeasure, GridDensity1D

DEFAULT_TIMES = 33
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(3)
_GL_NODES = 0.5 * (_GL_NODES + 1)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


# ---------------------------------------------------------------------------
# 1-D piecewise-uniform measures


@dataclass(frozen=True, eq=False)
class PiecewiseUniform:
    a: np.ndarray
    b: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        a, b, m = (np.asarray(v, dtype=float) for v in (self.a, self.b, self.mass))
        keep = m > 0
        a, b, m = a[keep], b[keep], m[keep]
        if np.any(b <= a):
            raise ValueError("pieces must have positive width")
        if np.any(a[1:] < b[:-1] - 1e-12 * (1 + np.abs(b[:-1]))):
            raise NonMonotoneMap("pieces overlap or are out of order")
        m = m / m.sum()
        for name, v in (("a", a), ("b", b), ("mass", m)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def from_grid(cls, mu: GridDensity1D):
        e = mu.edges
        return cls(e[:-1], e[1:], mu.masses)

    @property
    def breaks(self):
        """Cumulative mass at the left end of each piece and the total (length K + 1)."""
        S = np.concatenate([[0.0], np.cumsum(self.mass)])
        return S / S[-1]

    @property
    def widths(self):
        return self.b - self.a

    @property
    def support(self):
        return float(self.a[0]), float(self.b[-1])

    def quantile(self, s):
        """Left-continuous quantile function."""
        s = np.asarray(s, dtype=float)
        S = self.breaks
        j = np.clip(np.searchsorted(S, s, side="left") - 1, 0, self.mass.size - 1)
        u = np.clip((s - S[j]) / self.mass[j], 0.0, 1.0)
        return self.a[j] + u * self.widths[j]

    def cdf(self, x):
        xp = np.column_stack([self.a, self.b]).ravel()
        S = self.breaks
        yp = np.column_stack([S[:-1], S[1:]]).ravel()
        return np.interp(x, xp, yp, left=0.0, right=1.0)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        j = np.clip(np.searchsorted(self.b, x, side="left"), 0, self.mass.size - 1)
        inside = (x >= self.a[j]) & (x <= self.b[j])
        return np.where(inside, self.mass[j] / self.widths[j], 0.0)

    def integrate(self, g) -> float:
        """Exact for polynomials of degree <= 5 on each piece."""
        x = self.a[:, None] + self.widths[:, None] * _GL_NODES
        return float(np.sum(self.mass[:, None] * _GL_WEIGHTS * g(x)))

    def entropy(self) -> float:
        return float(np.sum(self.mass * np.log(self.widths / self.mass)))

    def moment2(self) -> float:
        return self.integrate(lambda x: x * x)

    def to_grid(self, lo: float, hi: float, n_cells: int) -> GridDensity1D:
        """Exact cell averages on a uniform grid."""
        e = np.linspace(lo, hi, n_cells + 1)
        F = self.cdf(e)
        return GridDensity1D(lo, hi, n_cells, np.diff(F) / (e[1] - e[0]))


def as_pieces(mu) -> PiecewiseUniform:
    if isinstance(mu, PiecewiseUniform):
        return mu
    if isinstance(mu, GridDensity1D):
        return PiecewiseUniform.from_grid(mu)
    raise Unsupported(f"not a 1-D measure: {type(mu).__name__}")


@dataclass(frozen=True, eq=False)
class QuantileCoupling:
    """Monotone coupling of two piecewise-uniform measures on merged mass breakpoints.

    On the j-th mass interval ``[s_j, s_{j+1}]`` both quantile functions are
    linear; ``x0a, x0b`` and ``x1a, x1b`` are their end values.
    """

    ds: np.ndarray
    x0a: np.ndarray
    x0b: np.ndarray
    x1a: np.ndarray
    x1b: np.ndarray

    @classmethod
    def between(cls, mu0, mu1):
        p0, p1 = as_pieces(mu0), as_pieces(mu1)
        S0, S1 = p0.breaks, p1.breaks
        S = np.unique(np.concatenate([S0, S1]))
        sa, sb = S[:-1], S[1:]
        keep = sb > sa
        sa, sb = sa[keep], sb[keep]
        mid = 0.5 * (sa + sb)

        def ends(p, Sp):
            j = np.clip(np.searchsorted(Sp, mid, side="right") - 1, 0, p.mass.size - 1)
            ua = np.clip((sa - Sp[j]) / p.mass[j], 0.0, 1.0)
            ub = np.clip((sb - Sp[j]) / p.mass[j], 0.0, 1.0)
            return p.a[j] + ua * p.widths[j], p.a[j] + ub * p.widths[j]

        x0a, x0b = ends(p0, S0)
        x1a, x1b = ends(p1, S1)
        # slivers from round-off (a few ulps wide) carry ~1e-16 mass; drop them so
        # that every interpolated piece keeps a positive width
        def wide(xa, xb):
            return xb - xa > 8 * np.finfo(float).eps * np.maximum(np.abs(xa), np.abs(xb))

        ok = wide(x0a, x0b) & wide(x1a, x1b)
        return cls((sb - sa)[ok], x0a[ok], x0b[ok], x1a[ok], x1b[ok])

    def w2_squared(self) -> float:
        da, db = self.x0a - self.x1a, self.x0b - self.x1b
        return float(np.sum(self.ds * (da * da + da * db + db * db)) / 3.0)

    def at(self, t: float) -> PiecewiseUniform:
        a = (1 - t) * self.x0a + t * self.x1a
        b = (1 - t) * self.x0b + t * self.x1b
        return PiecewiseUniform(a, b, self.ds)

    @property
    def va(self):
        return self.x1a - self.x0a

    @property
    def vb(self):
        return self.x1b - self.x0b


def w2_1d(mu0, mu1) -> float:
    """Quadratic Wasserstein distance between two 1-D densities via their quantile functions."""
    return float(np.sqrt(max(QuantileCoupling.between(mu0, mu1).w2_squared(), 0.0)))


@dataclass(frozen=True, eq=False)
class Quantile1DMap:
    """Monotone rearrangement ``T = Q1 o F0`` between 1-D grid densities."""

    source: GridDensity1D
    target: GridDensity1D
    T: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.T is None:
            T = self(self.source.centers)
        else:
            T = np.asarray(self.T, dtype=float)
        # only the values on the support matter
        on = self.source.values > 0
        if np.any(np.diff(T[on]) < -1e-12 * (1 + np.abs(T[on][1:]))):
            raise NonMonotoneMap("transport map decreases on the support of the source")
        T = T.copy()
        T.setflags(write=False)
        object.__setattr__(self, "T", T)

    def __call__(self, x):
        s = as_pieces(self.source).cdf(x)
        return as_pieces(self.target).quantile(s)

    def derivative(self, x):
        """T'(x) = rho0(x) / rho1(T(x)) on the support of the source."""
        rho0 = as_pieces(self.source).density(x)
        rho1 = as_pieces(self.target).density(self(x))
        return np.divide(rho0, rho1, out=np.zeros_like(rho0), where=rho1 > 0)


# ---------------------------------------------------------------------------
# Gaussians


def _sym_sqrt(S, inverse=False):
    w, U = np.linalg.eigh(S)
    w = np.maximum(w, 0.0)
    d = 1 / np.sqrt(w) if inverse else np.sqrt(w)
    return (U * d) @ U.T


@dataclass(frozen=True, eq=False)
class GaussianMap:
    A: np.ndarray
    b: np.ndarray

    @classmethod
    def between(cls, g0: GaussianMeasure, g1: GaussianMeasure):
        r0 = _sym_sqrt(g0.covariance)
        ri = _sym_sqrt(g0.covariance, inverse=True)
        A = ri @ _sym_sqrt(r0 @ g1.covariance @ r0) @ ri
        A = 0.5 * (A + A.T)
        return cls(A, g1.mean - A @ g0.mean)

    def __call__(self, x):
        return np.asarray(x) @ self.A.T + self.b

    def push(self, g: GaussianMeasure, t: float = 1.0) -> GaussianMeasure:
        """Law of ``((1 - t) I + t T)(X)`` for ``X ~ g``."""
        d = g.dim
        Mt = (1 - t) * np.eye(d) + t * self.A
        cov = Mt @ g.covariance @ Mt.T
        return GaussianMeasure(Mt @ g.mean + t * self.b, 0.5 * (cov + cov.T))


def w2_gaussian(g0: GaussianMeasure, g1: GaussianMeasure) -> float:
    r0 = _sym_sqrt(g0.covariance)
    cross = np.trace(_sym_sqrt(r0 @ g1.covariance @ r0))
    dm = g0.mean - g1.mean
    w2 = dm @ dm + np.trace(g0.covariance) + np.trace(g1.covariance) - 2 * cross
    return float(np.sqrt(max(w2, 0.0)))


# ---------------------------------------------------------------------------
# discrete


def _sq_cost(x, y):
    return np.sum((x[:, None, :] - y[None, :, :]) ** 2, axis=-1)


@dataclass(frozen=True, eq=False)
class DiscreteCoupling:
    pi: np.ndarray
    source: DiscreteMeasure
    target: DiscreteMeasure
    tol: float = 1e-9

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        if pi.shape != (self.source.weights.size, self.target.weights.size):
            raise ValueError("coupling shape does not match the marginals")
        if np.any(pi < -self.tol):
            raise ValueError("coupling has negative entries")
        pi = np.maximum(pi, 0.0)
        err = self.marginal_error_of(pi)
        if err > self.tol:
            raise ValueError(f"marginal error {err:.3g} exceeds {self.tol:.3g}")
        pi.setflags(write=False)
        object.__setattr__(self, "pi", pi)

    def marginal_error_of(self, pi):
        return float(
            max(
                np.abs(pi.sum(axis=1) - self.source.weights).max(),
                np.abs(pi.sum(axis=0) - self.target.weights).max(),
            )
        )

    @property
    def cost(self) -> float:
        return float(np.sum(self.pi * _sq_cost(self.source.points, self.target.points)))

    def at(self, t: float) -> DiscreteMeasure:
        i, j = np.nonzero(self.pi > 0)
        pts = (1 - t) * self.source.points[i] + t * self.target.points[j]
        w = self.pi[i, j]
        return DiscreteMeasure(pts, w / w.sum())


def exact_coupling(mu0: DiscreteMeasure, mu1: DiscreteMeasure, max_points: int = 64) -> DiscreteCoupling:
    """Optimal coupling by linear programming (HiGHS)."""
    n, m = mu0.weights.size, mu1.weights.size
    if max(n, m) > max_points:
        raise ValueError(f"exact solver limited to {max_points} points per side")
    C = _sq_cost(mu0.points, mu1.points)
    rows = np.kron(np.eye(n), np.ones((1, m)))
    cols = np.kron(np.ones((1, n)), np.eye(m))
    A_eq = np.vstack([rows, cols])[:-1]  # one constraint is redundant
    b_eq = np.concatenate([mu0.weights, mu1.weights])[:-1]
    res = linprog(C.ravel(), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise NoConvergence(f"LP solver failed: {res.message}")
    pi = res.x.reshape(n, m)
    # polish the marginals against solver round-off
    pi = np.maximum(pi, 0.0)
    pi *= (mu0.weights / np.maximum(pi.sum(axis=1), 1e-300))[:, None]
    return DiscreteCoupling(pi, mu0, mu1)


def sinkhorn(
    mu0: DiscreteMeasure,
    mu1: DiscreteMeasure,
    eps: float | None = None,
    max_iter: int = 20000,
    tol: float = 1e-9,
) -> DiscreteCoupling:
    """Entropic optimal coupling by log-domain Sinkhorn iterations with eps-scaling.

    ``eps`` defaults to ``1e-2`` times the largest pairwise cost.  The annealing
    schedule halves eps from the cost scale down to the target; ``max_iter``
    bounds the iterations spent at the final eps.
    """
    C = _sq_cost(mu0.points, mu1.points)
    scale = max(float(C.max()), 1e-300)
    if eps is None:
        eps = 1e-2 * scale
    if eps <= 0:
        raise ValueError("eps must be positive")
    la, lb = np.log(mu0.weights), np.log(mu1.weights)
    f = np.zeros_like(la)
    g = np.zeros_like(lb)
    schedule = [eps]
    while schedule[-1] < scale:
        schedule.append(2 * schedule[-1])
    schedule = schedule[::-1]
    err = np.inf
    for k, e in enumerate(schedule):
        last = k == len(schedule) - 1
        iters = max_iter if last else 200
        for it in range(iters):
            f = -e * logsumexp((g[None, :] - C) / e + lb[None, :], axis=1)
            g = -e * logsumexp((f[:, None] - C) / e + la[:, None], axis=0)
            if last and it % 10 == 0:
                P = np.exp((f[:, None] + g[None, :] - C) / e + la[:, None] + lb[None, :])
                err = np.abs(P.sum(axis=1) - mu0.weights).max()
                if err < tol:
                    break
    P = np.exp((f[:, None] + g[None, :] - C) / eps + la[:, None] + lb[None, :])
    err = max(np.abs(P.sum(axis=1) - mu0.weights).max(), np.abs(P.sum(axis=0) - mu1.weights).max())
    if err >= tol:
        raise NoConvergence(f"Sinkhorn marginal error {err:.3g} after {max_iter} iterations")
    return DiscreteCoupling(P, mu0, mu1, tol=max(tol, 1e-9))


# ---------------------------------------------------------------------------
# displacement interpolation


def _time_grid(times):
    if times is None:
        times = DEFAULT_TIMES
    if np.isscalar(times):
        return np.linspace(0.0, 1.0, int(times))
    t = np.asarray(times, dtype=float)
    if np.any(np.diff(t) <= 0) or t[0] < 0 or t[-1] > 1:
        raise ValueError("time grid must increase inside [0, 1]")
    return t


@dataclass(frozen=True, eq=False)
class GeodesicPath:
    """Displacement interpolation between two measures on a time grid.

    ``kind`` is ``"1d"``, ``"gaussian"`` or ``"discrete"``.  For 1-D paths the
    interpolants are exact piecewise-uniform measures; :meth:`density` rebins
    them onto a grid.
    """

    mu0: object
    mu1: object
    transport: object
    t_grid: np.ndarray
    kind: str
    coupling: QuantileCoupling | None = field(default=None, repr=False)

    def measure(self, k: int):
        return self.measure_at(self.t_grid[k])

    def measure_at(self, t: float):
        if self.kind == "1d":
            return self.coupling.at(t)
        if self.kind == "gaussian":
            return self.transport.push(self.mu0, t)
        return self.transport.at(t)

    @property
    def measures(self):
        return [self.measure(k) for k in range(self.t_grid.size)]

    def default_grid(self):
        g0, g1 = self.mu0, self.mu1
        if g0.same_grid(g1):
            return g0.lo, g0.hi, g0.n_cells
        return min(g0.lo, g1.lo), max(g0.hi, g1.hi), max(g0.n_cells, g1.n_cells)

    def density(self, k: int, grid=None) -> GridDensity1D:
        if self.kind != "1d":
            raise Unsupported("grid densities exist only for 1-D paths")
        lo, hi, n = grid or self.default_grid()
        return self.measure(k).to_grid(lo, hi, n)

    def w2(self) -> float:
        if self.kind == "1d":
            return float(np.sqrt(self.coupling.w2_squared()))
        if self.kind == "gaussian":
            return w2_gaussian(self.mu0, self.mu1)
        return float(np.sqrt(self.transport.cost))

    def to_bundle(self, directory, stem: str = "path") -> dict:
        """Write per-time densities (1-D) or parameters and a JSON index; return the index."""
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        refs = []
        for k, t in enumerate(self.t_grid):
            if self.kind == "1d":
                name = f"{stem}_t{k:03d}.csv"
                self.density(k).to_csv(out / name)
                refs.append(name)
            elif self.kind == "gaussian":
                g = self.measure(k)
                refs.append({"mean": g.mean.tolist(), "covariance": g.covariance.tolist()})
            else:
                m = self.measure(k)
                refs.append({"points": m.points.tolist(), "weights": m.weights.tolist()})
        index = {
            "kind": self.kind,
            "t_grid": self.t_grid.tolist(),
            "densities": refs,
            "w2": self.w2(),
        }
        if self.kind in ("1d", "gaussian"):
            vel = velocity_potential(self)
            index["diagnostics"] = {"hj_residual": vel.hj_residual()}
        (out / f"{stem}.json").write_text(json.dumps(index, indent=2, sort_keys=True))
        return index


def interpolate(mu0, mu1, times=None, transport=None) -> GeodesicPath:
    """Displacement interpolation ``mu_t = ((1 - t) I + t T)_# mu0`` on a time grid.

    Parameters
    ----------
    mu0, mu1 : GridDensity1D, GaussianMeasure or DiscreteMeasure
        Endpoints (both of the same kind).
    times : int or array_like, optional
        Number of uniform times in [0, 1] (default 33) or an explicit grid.
    transport : optional
        Precomputed transport; a :class:`Quantile1DMap` is checked for monotonicity.
    """
    t = _time_grid(times)
    if isinstance(mu0, GridDensity1D) and isinstance(mu1, GridDensity1D):
        if transport is None:
            transport = Quantile1DMap(mu0, mu1)
        elif isinstance(transport, Quantile1DMap):
            on = transport.source.values > 0
            if np.any(np.diff(transport.T[on]) < 0):
                raise NonMonotoneMap("supplied 1-D map is not monotone")
        return GeodesicPath(mu0, mu1, transport, t, "1d", QuantileCoupling.between(mu0, mu1))
    if isinstance(mu0, GaussianMeasure) and isinstance(mu1, GaussianMeasure):
        return GeodesicPath(mu0, mu1, transport or GaussianMap.between(mu0, mu1), t, "gaussian")
    if isinstance(mu0, DiscreteMeasure) and isinstance(mu1, DiscreteMeasure):
        if transport is None:
            small = max(mu0.weights.size, mu1.weights.size) <= 64
            transport = exact_coupling(mu0, mu1) if small else sinkhorn(mu0, mu1)
        return GeodesicPath(mu0, mu1, transport, t, "discrete")
    raise Unsupported(f"cannot interpolate {type(mu0).__name__} and {type(mu1).__name__}")


# ---------------------------------------------------------------------------
# velocity potentials


class VelocityPotential:
    """Potential theta_t with v_t = grad theta_t along a 1-D or Gaussian path.

    In 1-D the velocity is linear on each interpolant piece, so theta_t is
    piecewise quadratic.  The additive constant follows the Lagrangian relation
    ``theta_t(x_t) = theta_0(x_0) + t |v|^2 / 2`` along trajectories, anchored
    at the median, which makes ``theta`` solve the Hamilton-Jacobi equation.
    For Gaussian paths ``theta_t(y) = y.B_t y / 2 + beta_t.y + kappa_t``.
    """

    def __init__(self, path: GeodesicPath):
        if path.kind not in ("1d", "gaussian"):
            raise Unsupported("velocity potentials need a 1-D or Gaussian path")
        self.path = path
        self.kind = path.kind
        if self.kind == "gaussian":
            A, b = path.transport.A, path.transport.b
            self._A, self._b = A, b
            self._lam, U = np.linalg.eigh(A)
            self._c = U.T @ b

    @property
    def t_grid(self):
        return self.path.t_grid

    # 1-D helpers -------------------------------------------------------
    def _pieces(self, t):
        c = self.path.coupling
        return c.at(t), c.va, c.vb

    def _theta_knots(self, t):
        p, va, vb = self._pieces(t)
        # theta at the left end of every piece by integrating v (linear across gaps)
        inc = p.widths * (va + vb) / 2
        gap = np.concatenate([[0.0], (p.a[1:] - p.b[:-1]) * (vb[:-1] + va[1:]) / 2])
        left = np.cumsum(gap + np.concatenate([[0.0], inc[:-1]]))
        # anchor: trajectory through the median mass level
        c = self.path.coupling
        s = np.concatenate([[0.0], np.cumsum(c.ds)])
        j = min(np.searchsorted(s, 0.5, side="right") - 1, c.ds.size - 1)
        u = (0.5 - s[j]) / c.ds[j]
        x_med = p.a[j] + u * p.widths[j]
        v_med = va[j] + u * (vb[j] - va[j])
        theta_here = left[j] + (x_med - p.a[j]) * (va[j] + v_med) / 2
        return p, va, vb, left + (t * v_med**2 / 2 - theta_here)

    def _locate(self, p, x):
        x = np.asarray(x, dtype=float)
        j = np.clip(np.searchsorted(p.a, x, side="right") - 1, 0, p.mass.size - 1)
        return x, j

    def grad_at(self, t, x):
        if self.kind == "gaussian":
            return self._grad_gauss(t, x)
        p, va, vb = self._pieces(t)
        x, j = self._locate(p, x)
        slope = (vb[j] - va[j]) / p.widths[j]
        return va[j] + slope * (x - p.a[j])

    def hess_at(self, t, x):
        if self.kind == "gaussian":
            return np.broadcast_to(self._B(t), np.shape(x)[:-1] + self._A.shape).copy()
        p, va, vb = self._pieces(t)
        x, j = self._locate(p, x)
        return (vb[j] - va[j]) / p.widths[j]

    def value_at(self, t, x):
        if self.kind == "gaussian":
            x = np.asarray(x, dtype=float)
            B, beta = self._B(t), self._beta(t)
            return 0.5 * np.einsum("...i,ij,...j->...", x, B, x) + x @ beta + self._kappa(t)
        p, va, vb, left = self._theta_knots(t)
        x, j = self._locate(p, x)
        dx = x - p.a[j]
        slope = (vb[j] - va[j]) / p.widths[j]
        return left[j] + va[j] * dx + 0.5 * slope * dx * dx

    def grad(self, k, x):
        return self.grad_at(self.t_grid[k], x)

    def hess(self, k, x):
        return self.hess_at(self.t_grid[k], x)

    def value(self, k, x):
        return self.value_at(self.t_grid[k], x)

    def tabulate(self, k, grid=None):
        """theta_t on the cell centres of the path's grid (1-D)."""
        lo, hi, n = grid or self.path.default_grid()
        x = lo + (np.arange(n) + 0.5) * (hi - lo) / n
        return self.value(k, x)

    # Gaussian closed forms ----------------------------------------------
    def _M(self, t):
        return (1 - t) * np.eye(self._A.shape[0]) + t * self._A

    def _B(self, t):
        return (self._A - np.eye(self._A.shape[0])) @ np.linalg.inv(self._M(t))

    def _beta(self, t):
        return np.linalg.solve(self._M(t), self._b)

    def _kappa(self, t):
        return -0.5 * float(np.sum(self._c**2 * t / (1 + t * (self._lam - 1))))

    def _grad_gauss(self, t, x):
        return np.asarray(x, dtype=float) @ self._B(t).T + self._beta(t)

    # diagnostics -------------------------------------------------------
    def hj_residual(self, dt: float = 1e-4, samples: int = 64) -> float:
        """Max over interior grid times of |d theta/dt + |grad theta|^2/2|, relative to max |v|^2/2.

        Evaluated at mass quantiles of mu_t by central differences in time.
        """
        worst, scale = 0.0, 1e-300
        for t in self.t_grid:
            if t - dt < 0 or t + dt > 1:
                continue
            x = self._sample_points(t, samples)
            dth = (self.value_at(t + dt, x) - self.value_at(t - dt, x)) / (2 * dt)
            g = self.grad_at(t, x)
            g2 = g * g if self.kind == "1d" else np.sum(g * g, axis=-1)
            worst = max(worst, float(np.max(np.abs(dth + g2 / 2))))
            scale = max(scale, float(np.max(g2 / 2)))
        return worst / scale if scale > 1e-300 else worst

    def _sample_points(self, t, samples):
        if self.kind == "1d":
            s = (np.arange(samples) + 0.5) / samples
            return self.path.measure_at(t).quantile(s)
        g = self.path.measure_at(t)
        rng = np.random.default_rng(0)
        return rng.multivariate_normal(g.mean, g.covariance, size=samples)

    def continuity_residual(self, phi, dphi, dt: float = 1e-4) -> float:
        """Max over interior times of |d/dt int phi dmu_t - int <grad phi, v_t> dmu_t| (1-D)."""
        if self.kind != "1d":
            raise Unsupported("weak continuity check implemented for 1-D paths")
        worst = 0.0
        for t in self.t_grid:
            if t - dt < 0 or t + dt > 1:
                continue
            lhs = (self.path.measure_at(t + dt).integrate(phi) - self.path.measure_at(t - dt).integrate(phi)) / (2 * dt)
            rhs = self.path.measure_at(t).integrate(lambda x: dphi(x) * self.grad_at(t, x))
            worst = max(worst, abs(lhs - rhs))
        return worst


def velocity_potential(path: GeodesicPath) -> VelocityPotential:
    return VelocityPotential(path)
