"""Probability measures: grid densities, Gaussians, point clouds and reference measures.

Grids are uniform and cell-centred; every integral is a midpoint sum.  Density
values below ``TINY`` are clamped to zero, and ``0 log 0 = 0`` throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import NegativeDensity, ZeroMass
from .potentials import HomogeneousPotential, as_points

TINY = 1e-300
#: half-width of the working box used for Gaussian-reference experiments
WORKING_RADIUS = 8.0


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_values(values):
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        raise NegativeDensity("density values must be finite")
    if np.any(v < 0):
        raise NegativeDensity("density has negative values")
    return np.where(v < TINY, 0.0, v)


@dataclass(frozen=True)
class GridDensity1D:
    """Density tabulated at the centres of ``n_cells`` equal cells of [lo, hi]."""

    lo: float
    hi: float
    n_cells: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError("need hi > lo")
        v = _check_values(self.values)
        if v.shape != (self.n_cells,):
            raise ValueError(f"expected {self.n_cells} values, got shape {v.shape}")
        mass = v.sum() * (self.hi - self.lo) / self.n_cells
        if mass < TINY:
            raise ZeroMass("density has no mass")
        object.__setattr__(self, "values", _readonly(v / mass))

    @property
    def dim(self) -> int:
        return 1

    @property
    def dx(self) -> float:
        return (self.hi - self.lo) / self.n_cells

    @cached_property
    def edges(self):
        return np.linspace(self.lo, self.hi, self.n_cells + 1)

    @cached_property
    def centers(self):
        return self.lo + (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def masses(self):
        return self.values * self.dx

    @cached_property
    def cdf_edges(self):
        F = np.concatenate([[0.0], np.cumsum(self.masses)])
        return F / F[-1]

    def mass(self) -> float:
        return float(self.values.sum() * self.dx)

    def integrate(self, g) -> float:
        """Midpoint-rule value of int g dmu for a callable or tabulated g."""
        gv = g(self.centers) if callable(g) else np.asarray(g)
        return float(np.sum(gv * self.masses))

    def same_grid(self, other) -> bool:
        return (
            isinstance(other, GridDensity1D)
            and self.n_cells == other.n_cells
            and np.isclose(self.lo, other.lo)
            and np.isclose(self.hi, other.hi)
        )

    def is_even(self, tol: float = 1e-6) -> bool:
        if not np.isclose(self.lo, -self.hi):
            return False
        v = self.values
        return bool(np.max(np.abs(v - v[::-1])) <= tol * max(v.max(), 1.0))

    # serialization ------------------------------------------------------
    def to_csv(self, path):
        header = f"lo={self.lo!r} hi={self.hi!r} n_cells={self.n_cells}"
        np.savetxt(path, self.values, header=header, fmt="%.17g")

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            first = fh.readline().lstrip("#").split()
        meta = dict(item.split("=") for item in first)
        values = np.loadtxt(path, ndmin=1)
        return cls(float(meta["lo"]), float(meta["hi"]), int(meta["n_cells"]), values)

    def to_json(self) -> dict:
        return {"bounds": [self.lo, self.hi], "resolution": [self.n_cells], "values": self.values.tolist()}


@dataclass(frozen=True)
class GridDensity2D:
    """Density on a rectangle ``bounds = (xlo, xhi, ylo, yhi)``; ``values[i, j]`` sits at (x_i, y_j)."""

    bounds: tuple
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        xlo, xhi, ylo, yhi = map(float, self.bounds)
        if not (xhi > xlo and yhi > ylo):
            raise ValueError("degenerate bounds")
        object.__setattr__(self, "bounds", (xlo, xhi, ylo, yhi))
        v = _check_values(self.values)
        if v.ndim != 2:
            raise ValueError("values must be a matrix")
        mass = v.sum() * self.cell_area
        if mass < TINY:
            raise ZeroMass("density has no mass")
        object.__setattr__(self, "values", _readonly(v / mass))

    @property
    def dim(self) -> int:
        return 2

    @property
    def resolution(self):
        return np.shape(self.values)

    @property
    def cell_area(self) -> float:
        xlo, xhi, ylo, yhi = self.bounds
        nx, ny = np.shape(self.values)
        return (xhi - xlo) / nx * (yhi - ylo) / ny

    @cached_property
    def axes(self):
        xlo, xhi, ylo, yhi = self.bounds
        nx, ny = self.resolution
        hx, hy = (xhi - xlo) / nx, (yhi - ylo) / ny
        return xlo + (np.arange(nx) + 0.5) * hx, ylo + (np.arange(ny) + 0.5) * hy

    @cached_property
    def points(self):
        X, Y = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([X, Y], axis=-1)

    @property
    def masses(self):
        return self.values * self.cell_area

    def mass(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def integrate(self, g) -> float:
        gv = g(self.points) if callable(g) else np.asarray(g)
        return float(np.sum(gv * self.masses))

    def same_grid(self, other) -> bool:
        return (
            isinstance(other, GridDensity2D)
            and self.resolution == other.resolution
            and np.allclose(self.bounds, other.bounds)
        )

    def to_json(self) -> dict:
        return {"bounds": list(self.bounds), "resolution": list(self.resolution), "values": self.values.tolist()}


def density_from_json(obj):
    if isinstance(obj, (str, Path)):
        obj = json.loads(Path(obj).read_text())
    bounds, res, values = obj["bounds"], obj["resolution"], obj["values"]
    if len(res) == 1:
        return GridDensity1D(bounds[0], bounds[1], int(res[0]), np.asarray(values))
    return GridDensity2D(tuple(bounds), np.asarray(values).reshape(res))


@dataclass(frozen=True)
class GaussianMeasure:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.mean, dtype=float))
        c = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if c.shape != (m.size, m.size):
            raise ValueError("covariance shape does not match mean")
        if np.max(np.abs(c - c.T)) > 1e-12:
            raise ValueError("covariance must be symmetric")
        if np.linalg.eigvalsh(c).min() <= 0:
            raise ValueError("covariance must be positive definite")
        object.__setattr__(self, "mean", _readonly(m))
        object.__setattr__(self, "covariance", _readonly(0.5 * (c + c.T)))

    @classmethod
    def standard(cls, dim: int = 1):
        return cls(np.zeros(dim), np.eye(dim))

    @classmethod
    def scalar(cls, mean: float, var: float):
        return cls([mean], [[var]])

    @property
    def dim(self) -> int:
        return self.mean.size

    def pdf(self, x):
        x = as_points(x, self.dim)
        d = x - self.mean
        prec = np.linalg.inv(self.covariance)
        _, logdet = np.linalg.slogdet(self.covariance)
        q = np.einsum("...i,ij,...j->...", d, prec, d)
        return np.exp(-0.5 * q - 0.5 * logdet - 0.5 * self.dim * np.log(2 * np.pi))

    def tabulate(self, lo=None, hi=None, n_cells=4096, radius=8.0):
        """Tabulate on a 1-D grid; default window is mean +- radius standard deviations."""
        if self.dim != 1:
            raise ValueError("tabulate is 1-D; use tabulate_2d")
        if lo is None:
            s = np.sqrt(self.covariance[0, 0])
            lo, hi = self.mean[0] - radius * s, self.mean[0] + radius * s
        c = lo + (np.arange(n_cells) + 0.5) * (hi - lo) / n_cells
        return GridDensity1D(lo, hi, n_cells, self.pdf(c))

    def tabulate_2d(self, bounds, resolution):
        xlo, xhi, ylo, yhi = bounds
        nx, ny = resolution
        x = xlo + (np.arange(nx) + 0.5) * (xhi - xlo) / nx
        y = ylo + (np.arange(ny) + 0.5) * (yhi - ylo) / ny
        X, Y = np.meshgrid(x, y, indexing="ij")
        return GridDensity2D(bounds, self.pdf(np.stack([X, Y], -1)))


@dataclass(frozen=True)
class DiscreteMeasure:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (p.shape[0],):
            raise ValueError("one weight per point")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        if abs(w.sum() - 1) > 1e-12:
            raise ValueError("weights must sum to 1")
        object.__setattr__(self, "points", _readonly(p))
        object.__setattr__(self, "weights", _readonly(w))

    @classmethod
    def uniform(cls, points):
        p = np.asarray(points, dtype=float)
        return cls(p, np.full(len(p), 1.0 / len(p)))

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class ReferenceMeasure:
    """nu with d nu = exp(-V + c) dx for a p-homogeneous V."""

    potential: HomogeneousPotential
    log_normalizer: float

    @property
    def dim(self) -> int:
        return self.potential.dim

    @classmethod
    def gaussian(cls, dim: int = 1):
        return cls(HomogeneousPotential.gaussian(dim), -0.5 * dim * np.log(2 * np.pi))

    @classmethod
    def from_potential(cls, potential: HomogeneousPotential, cells: int | None = None):
        """Compute c by midpoint quadrature on a box where V exceeds 60 outside."""
        return cls(potential, _log_normalizer(potential, cells))

    @property
    def is_standard_gaussian(self) -> bool:
        return self.potential.is_standard_gaussian

    def log_density(self, x):
        return -self.potential(x) + self.log_normalizer

    def density(self, x):
        return np.exp(self.log_density(x))

    def working_radius(self, level: float = 60.0) -> float:
        if self.is_standard_gaussian:
            return WORKING_RADIUS
        return self.potential.level_radius(level)

    def tabulate(self, lo=None, hi=None, n_cells=4096):
        if self.dim != 1:
            raise ValueError("1-D only; use tabulate_2d")
        if lo is None:
            hi = self.working_radius()
            lo = -hi
        c = lo + (np.arange(n_cells) + 0.5) * (hi - lo) / n_cells
        return GridDensity1D(lo, hi, n_cells, self.density(c))

    def tabulate_2d(self, bounds, resolution):
        xlo, xhi, ylo, yhi = bounds
        nx, ny = resolution
        x = xlo + (np.arange(nx) + 0.5) * (xhi - xlo) / nx
        y = ylo + (np.arange(ny) + 0.5) * (yhi - ylo) / ny
        X, Y = np.meshgrid(x, y, indexing="ij")
        return GridDensity2D(bounds, self.density(np.stack([X, Y], -1)))

    def numeric_mass(self, cells: int | None = None) -> float:
        return float(np.exp(self.log_normalizer - _log_normalizer(self.potential, cells)))


def _log_normalizer(potential: HomogeneousPotential, cells=None) -> float:
    d = potential.dim
    R = potential.level_radius(60.0)
    if d == 1:
        n = cells or 200_001
        h = 2 * R / n
        x = -R + (np.arange(n) + 0.5) * h
        total = np.exp(-potential(x)).sum() * h
    elif d == 2:
        n = cells or 2001
        h = 2 * R / n
        ax = -R + (np.arange(n) + 0.5) * h
        total = 0.0
        for row in np.array_split(np.arange(n), 16):
            X, Y = np.meshgrid(ax[row], ax, indexing="ij")
            total += np.exp(-potential(np.stack([X, Y], -1))).sum()
        total *= h * h
    else:
        raise NotImplementedError("quadrature normalizer implemented for d <= 2")
    return float(-np.log(total))


# operations ---------------------------------------------------------------


def normalize(values, lo=None, hi=None, *, bounds=None):
    """Normalize a non-negative table into a 1-D or 2-D grid density."""
    v = np.asarray(values, dtype=float)
    if np.any(v < 0):
        raise NegativeDensity("density has negative values")
    if v.ndim == 1:
        return GridDensity1D(lo, hi, v.size, v)
    return GridDensity2D(bounds, v)


def restrict(nu: ReferenceMeasure, K, grid, *, return_mass=False):
    """Density of nu_K on ``grid`` (a grid density, a (lo, hi, n) triple or a (bounds, res) pair).

    ``K`` is a boolean mask over the grid cells, a callable indicator of points,
    or for 1-D an interval ``(a, b)``.  Membership is decided at cell centres.
    """
    if isinstance(grid, GridDensity1D) or (isinstance(grid, tuple) and len(grid) == 3):
        if isinstance(grid, GridDensity1D):
            lo, hi, n = grid.lo, grid.hi, grid.n_cells
        else:
            lo, hi, n = grid
        x = lo + (np.arange(n) + 0.5) * (hi - lo) / n
        if isinstance(K, tuple):
            mask = (x >= K[0]) & (x <= K[1])
        elif callable(K):
            mask = np.asarray(K(x), dtype=bool)
        else:
            mask = np.asarray(K, dtype=bool)
        w = np.where(mask, nu.density(x), 0.0)
        mass = w.sum() * (hi - lo) / n
        if mass < TINY:
            raise ZeroMass("nu(K) underflows")
        out = GridDensity1D(lo, hi, n, w)
    else:
        if isinstance(grid, GridDensity2D):
            bounds, res = grid.bounds, grid.resolution
        else:
            bounds, res = grid
        xlo, xhi, ylo, yhi = bounds
        x = xlo + (np.arange(res[0]) + 0.5) * (xhi - xlo) / res[0]
        y = ylo + (np.arange(res[1]) + 0.5) * (yhi - ylo) / res[1]
        pts = np.stack(np.meshgrid(x, y, indexing="ij"), -1)
        mask = np.asarray(K(pts) if callable(K) else K, dtype=bool)
        w = np.where(mask, nu.density(pts), 0.0)
        mass = w.sum() * (xhi - xlo) / res[0] * (yhi - ylo) / res[1]
        if mass < TINY:
            raise ZeroMass("nu(K) underflows")
        out = GridDensity2D(bounds, w)
    return (out, float(mass)) if return_mass else out


def moment2(mu) -> float:
    """Second moment int |x|^2 d mu."""
    if isinstance(mu, GaussianMeasure):
        return float(mu.mean @ mu.mean + np.trace(mu.covariance))
    if isinstance(mu, DiscreteMeasure):
        return float(np.sum(mu.weights * np.sum(mu.points ** 2, axis=1)))
    if isinstance(mu, GridDensity1D):
        return mu.integrate(lambda x: x * x)
    if isinstance(mu, GridDensity2D):
        return mu.integrate(lambda p: np.sum(p * p, axis=-1))
    if hasattr(mu, "moment2"):
        return mu.moment2()
    raise TypeError(f"unsupported measure {type(mu).__name__}")
