"""Ornstein-Uhlenbeck Gamma-calculus on grids, OU evolution of densities, and the
trigonometric distortion coefficients used by the dimensional Gaussian inequalities."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import ndtr

from .errors import NotEven, Unsupported
from .measures import TINY, GaussianMeasure, GridDensity1D, ReferenceMeasure
from .transport import _GL_NODES, _GL_WEIGHTS, GeodesicPath, VelocityPotential


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Function sampled at the cell centres of a uniform 1-D grid.

    Derivatives use second-order central differences inside and second-order
    one-sided stencils at the two ends.
    """

    lo: float
    hi: float
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 3:
            raise ValueError("need at least 3 samples")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, fn: Callable, grid):
        """``grid`` is a GridDensity1D or a (lo, hi, n_cells) triple."""
        lo, hi, n = (grid.lo, grid.hi, grid.n_cells) if isinstance(grid, GridDensity1D) else grid
        x = lo + (np.arange(n) + 0.5) * (hi - lo) / n
        return cls(lo, hi, fn(x))

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def dx(self) -> float:
        return (self.hi - self.lo) / self.n

    @property
    def x(self):
        return self.lo + (np.arange(self.n) + 0.5) * self.dx

    def _new(self, values):
        return GridFunction(self.lo, self.hi, values)

    def grad(self):
        return np.gradient(self.values, self.dx, edge_order=2)

    def hess(self):
        return np.gradient(self.grad(), self.dx, edge_order=2)

    def __add__(self, other):
        return self._new(self.values + (other.values if isinstance(other, GridFunction) else other))

    def __mul__(self, c):
        return self._new(self.values * c)

    __rmul__ = __mul__


def _second_derivative(f: GridFunction):
    """Three-point second difference (exact on quadratics, also at the ends)."""
    v, h = f.values, f.dx
    d2 = np.empty_like(v)
    d2[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / h**2
    if v.size >= 4:
        d2[0] = (2 * v[0] - 5 * v[1] + 4 * v[2] - v[3]) / h**2
        d2[-1] = (2 * v[-1] - 5 * v[-2] + 4 * v[-3] - v[-4]) / h**2
    else:
        d2[0], d2[-1] = d2[1], d2[-2]
    return d2


def carre_du_champ(f: GridFunction, g: GridFunction | None = None) -> GridFunction:
    g = f if g is None else g
    return f._new(f.grad() * g.grad())


def ou_generator(f: GridFunction) -> GridFunction:
    """L f = f'' - x f'."""
    return f._new(_second_derivative(f) - f.x * f.grad())


def gamma2(f: GridFunction) -> GridFunction:
    """Gamma_2(f) = |f''|^2 + |f'|^2 for the OU operator."""
    return f._new(_second_derivative(f) ** 2 + f.grad() ** 2)


def gamma2_bochner(f: GridFunction) -> GridFunction:
    """Gamma_2 via its definition L(Gamma(f))/2 - Gamma(f, L f), by nested stencils."""
    return ou_generator(carre_du_champ(f)) * 0.5 + carre_du_champ(f, ou_generator(f)) * -1.0


def ibp_residual(f: GridFunction, g: GridFunction, mu: GridDensity1D | None = None) -> float:
    """|int Gamma(f, g) dgamma + int f L g dgamma|, midpoint rule against gamma on f's grid."""
    if mu is None:
        mu = ReferenceMeasure.gaussian(1).tabulate(f.lo, f.hi, f.n)
    w = mu.masses
    return float(abs(np.sum(carre_du_champ(f, g).values * w) + np.sum(f.values * ou_generator(g).values * w)))


# ---------------------------------------------------------------------------
# derivatives of the entropy along geodesics


def entropy_derivatives_along(path: GeodesicPath, vel: VelocityPotential, nu: ReferenceMeasure | None = None):
    """Rows (dD/dt, d2D/dt2) for D(mu_t || gamma): -int L theta dmu_t and int Gamma_2(theta) dmu_t."""
    if nu is not None and not nu.is_standard_gaussian:
        raise Unsupported("entropy derivatives are implemented for the standard Gaussian reference")
    out = []
    if path.kind == "1d":
        c = path.coupling
        for k in range(path.t_grid.size):
            p = path.measure(k)
            x = p.a[:, None] + p.widths[:, None] * _GL_NODES
            v = c.va[:, None] + (c.vb - c.va)[:, None] * _GL_NODES
            d2 = ((c.vb - c.va) / p.widths)[:, None]
            w = p.mass[:, None] * _GL_WEIGHTS
            Ltheta = d2 - x * v
            out.append((-np.sum(w * Ltheta), np.sum(w * (d2 * d2 + v * v))))
        return np.array(out)
    if path.kind == "gaussian":
        for k, t in enumerate(path.t_grid):
            g = path.measure(k)
            B, beta = vel._B(t), vel._beta(t)
            m, S = g.mean, g.covariance
            E_Ltheta = np.trace(B) - (np.trace(B @ S) + m @ B @ m + m @ beta)
            E_v2 = np.trace(B @ S @ B.T) + np.sum((B @ m + beta) ** 2)
            out.append((-E_Ltheta, np.sum(B * B) + E_v2))
        return np.array(out)
    raise Unsupported("entropy derivatives need a 1-D or Gaussian path")


# ---------------------------------------------------------------------------
# odd-function Poincare constant


class PoincareResult(NamedTuple):
    member: bool
    constant: float
    witness: Callable


def _odd_basis(scale, omega, n_poly=6, n_trig=6):
    """Odd basis functions and derivatives: (x/scale)^(2k+1) and sin(j omega x)."""
    funcs = []
    for k in range(n_poly):
        q = 2 * k + 1
        funcs.append((lambda x, q=q: (x / scale) ** q, lambda x, q=q: q * (x / scale) ** (q - 1) / scale))
    for j in range(1, n_trig + 1):
        funcs.append((lambda x, j=j: np.sin(j * omega * x), lambda x, j=j: j * omega * np.cos(j * omega * x)))
    return funcs


def s_n_membership(mu, tol: float = 1e-3, n_poly: int = 6, n_trig: int = 6) -> PoincareResult:
    """Largest ratio int f^2 dmu / int |f'|^2 dmu over a finite odd basis.

    The basis holds odd monomials up to degree 11 and ``n_trig`` odd sines, so
    the estimate is a lower bound for the true constant: a ``member`` flag of
    True means "not refuted at this basis", never a certificate.
    """
    if isinstance(mu, GaussianMeasure):
        if np.max(np.abs(mu.mean)) > 1e-12:
            raise NotEven("Gaussian is not centred")
        lam, U = np.linalg.eigh(mu.covariance)
        e = U[:, -1]
        c = float(lam[-1])
        return PoincareResult(c <= 1 + tol, c, lambda x, e=e: np.asarray(x).reshape(-1, e.size) @ e)
    if not isinstance(mu, GridDensity1D):
        raise Unsupported("grid membership test is 1-D")
    if not mu.is_even():
        raise NotEven("density is not symmetric about 0")
    x = mu.centers
    w = mu.masses
    R = float(np.max(np.abs(x[mu.values > 0]))) + mu.dx / 2
    scale = np.sqrt(max(np.sum(w * x * x), 1e-300))
    basis = _odd_basis(scale, np.pi / (2 * R), n_poly, n_trig)
    F = np.array([f(x) for f, _ in basis])
    G = np.array([g(x) for _, g in basis])
    A = (F * w) @ F.T
    B = (G * w) @ G.T
    # reduce to the well-conditioned part of B
    lb, Ub = np.linalg.eigh(B)
    keep = lb > 1e-12 * lb.max()
    P = Ub[:, keep] / np.sqrt(lb[keep])
    lam, Z = np.linalg.eigh(P.T @ A @ P)
    coef = P @ Z[:, -1]
    const = float(lam[-1])

    def witness(y, coef=coef):
        return sum(c * f(np.asarray(y, dtype=float)) for c, (f, _) in zip(coef, basis))

    return PoincareResult(const <= 1 + tol, const, witness)


def gamma2_inequality_check(u, mu: GridDensity1D, n_dim: float) -> float:
    """int Gamma_2(u) dmu - 2 int Gamma(u) dmu - (1/n) (int L u dmu)^2.

    ``u`` is a GridFunction on mu's grid or a callable sampled there.
    """
    if callable(u) and not isinstance(u, GridFunction):
        u = GridFunction.sample(u, mu)
    if u.n != mu.n_cells or not np.isclose(u.lo, mu.lo) or not np.isclose(u.hi, mu.hi):
        raise ValueError("u must live on the grid of mu")
    w = mu.masses
    lhs = np.sum(gamma2(u).values * w)
    g = np.sum(carre_du_champ(u).values * w)
    Lu = np.sum(ou_generator(u).values * w)
    return float(lhs - 2 * g - Lu * Lu / n_dim)


# ---------------------------------------------------------------------------
# OU evolution


def _psi(z):
    return z * ndtr(z) + np.exp(-0.5 * z * z) / np.sqrt(2 * np.pi)


def ou_evolve(mu: GridDensity1D, t: float, method: str = "exact", chunk: int = 256) -> GridDensity1D:
    """Law at time t of the OU process started from mu, on mu's grid.

    ``exact`` treats every cell as a uniform block and pushes it through
    ``X_t = e^{-t} X + sqrt(1 - e^{-2t}) Z`` exactly, giving the cell masses of
    the result in closed form.  ``mehler`` applies the Mehler formula to
    f = dmu/dgamma with 129-node Gauss-Hermite quadrature.  Both renormalize
    the mass that leaves the grid.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return mu
    if method == "mehler":
        return _ou_mehler(mu, t)
    if method != "exact":
        raise ValueError(f"unknown method {method!r}")
    a = np.exp(-t)
    sig = np.sqrt(-np.expm1(-2 * t))
    e = mu.edges
    # cell j contributes m_j (sig/w) [Psi((e - a e_j)/sig) - Psi((e - a e_{j+1})/sig)];
    # neighbouring cells share an edge, so regroup by edge with weights m_j - m_{j-1}
    #
    # Psi(z) = max(z, 0) + Psi(-|z|).  The first part sums in closed form (by
    # parts, sum_j c_j max(e - a e_j, 0) = m_k (e - a e_k) + a dx M_k with k
    # the last edge below e / a and M_k the mass left of cell k), and is
    # exactly constant beyond the support; the second part is tiny far from
    # the source.  Splitting them avoids cancellation in the tails.
    m = mu.masses
    c = np.diff(np.concatenate([[0.0], m, [0.0]]))
    live = np.flatnonzero(c != 0)
    G = np.zeros(e.size)
    for s in range(0, live.size, chunk):
        idx = live[s : s + chunk]
        z = (e[:, None] - a * e[None, idx]) / sig
        G += _psi(-np.abs(z)) @ c[idx]
    k = np.searchsorted(a * e, e, side="left") - 1
    mk = np.where((k >= 0) & (k < m.size), m[np.clip(k, 0, m.size - 1)], 0.0)
    Mk = np.concatenate([[0.0], np.cumsum(m)])[np.clip(k, 0, m.size)]
    lin = np.where(k >= 0, mk * (e - a * e[np.clip(k, 0, e.size - 1)]) + a * mu.dx * Mk, 0.0) / sig
    masses = np.maximum((np.diff(G) + np.diff(lin)) * sig / (a * mu.dx), 0.0)
    return GridDensity1D(mu.lo, mu.hi, mu.n_cells, masses / mu.dx)


def _ou_mehler(mu: GridDensity1D, t: float, nodes: int = 129) -> GridDensity1D:
    x = mu.centers
    logphi = -0.5 * x * x - 0.5 * np.log(2 * np.pi)
    with np.errstate(divide="ignore"):
        logf = np.where(mu.values > 0, np.log(np.maximum(mu.values, TINY)) - logphi, -np.inf)
    y, wy = np.polynomial.hermite_e.hermegauss(nodes)
    wy = wy / wy.sum()
    a, s = np.exp(-t), np.sqrt(-np.expm1(-2 * t))
    pts = a * x[:, None] + s * y[None, :]
    # interpolate log f linearly; zero outside the grid or next to empty cells
    u = (pts - mu.lo) / mu.dx - 0.5
    i = np.floor(u).astype(int)
    frac = u - i
    ok = (i >= 0) & (i + 1 < mu.n_cells)
    i0, i1 = np.clip(i, 0, mu.n_cells - 1), np.clip(i + 1, 0, mu.n_cells - 1)
    with np.errstate(invalid="ignore"):
        lf = (1 - frac) * logf[i0] + frac * logf[i1]
    lf = np.where(ok & np.isfinite(lf), lf, -np.inf)
    Pf = np.exp(lf) @ wy
    return GridDensity1D(mu.lo, mu.hi, mu.n_cells, Pf * np.exp(logphi))


def is_strongly_log_concave(mu: GridDensity1D, tol: float | None = None) -> bool:
    """Second differences of log(dmu/dgamma) are <= tol on the interior of the support.

    Cell averaging adds about dx**2 / 12 per averaging pass to the second
    derivative of the log-density, so the default ``tol`` is ``1e-6 + dx**2 / 4``.
    """
    if tol is None:
        tol = 1e-6 + mu.dx**2 / 4
    f = mu.values
    pos = f > 0
    x = mu.centers
    lf = np.where(pos, np.log(np.where(pos, f, 1.0)) + 0.5 * x * x, 0.0)
    inner = pos[2:] & pos[1:-1] & pos[:-2]
    d2 = (lf[2:] - 2 * lf[1:-1] + lf[:-2]) / mu.dx**2
    # support must be an interval for log-concavity
    idx = np.flatnonzero(pos)
    contiguous = idx.size == 0 or idx[-1] - idx[0] + 1 == idx.size
    return bool(contiguous and np.all(d2[inner] <= tol))


# ---------------------------------------------------------------------------
# distortion coefficients


@dataclass(frozen=True)
class CoefficientSet:
    """Distortion coefficients for the dimension parameter n.

    s(theta) = sqrt(n/2) sin(sqrt(2/n) theta), c(theta) = cos(sqrt(2/n) theta),
    sigma_t(theta) = s(t theta) / s(theta) below sqrt(n/2) pi and +inf beyond.
    """

    n: float

    def __post_init__(self):
        if not self.n > 0:
            raise ValueError("n must be positive")

    @property
    def k(self) -> float:
        return np.sqrt(2.0 / self.n)

    @property
    def theta_max(self) -> float:
        return np.sqrt(self.n / 2.0) * np.pi

    def s(self, theta):
        return np.sin(self.k * np.asarray(theta, dtype=float)) / self.k

    def c(self, theta):
        return np.cos(self.k * np.asarray(theta, dtype=float))

    def sigma(self, t, theta):
        t = np.asarray(t, dtype=float)
        theta = np.asarray(theta, dtype=float)
        small = np.abs(theta) < 1e-8
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = self.s(t * theta) / self.s(theta)
        # Taylor limit sin(kt th)/sin(k th) -> t (1 + k^2 th^2 (1 - t^2)/6)
        lim = t * (1 + self.k**2 * theta**2 * (1 - t * t) / 6)
        out = np.where(small, lim, ratio)
        out = np.where(np.abs(theta) >= self.theta_max, np.inf, out)
        return out[()] if out.ndim == 0 else out


def coefficients(n_dim: float) -> CoefficientSet:
    return CoefficientSet(float(n_dim))
