"""Star bodies in the plane, rasterized Minkowski averages and reference-measure volumes.

All rasters live on a :class:`Lattice`: an origin-centred square grid whose cell
centres are the points ``h * (i, j)`` with ``-M <= i, j <= M``.  Because the
centres form an additive group, the Minkowski sum of two rasters is again a set
of lattice points, and it is computed exactly (as a discrete sumset) by an FFT
convolution of the two indicator arrays.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np
from scipy import ndimage, special
from scipy.signal import fftconvolve

from .errors import GridMismatch
from .measures import ReferenceMeasure

DEFAULT_HALF_CELLS = 512


@dataclass(frozen=True)
class Lattice:
    """Square grid of ``2 * half_cells + 1`` cells per side with spacing ``h``.

    Parameters
    ----------
    h : float
        Cell width.
    half_cells : int
        Number of cells on each side of the central cell.
    """

    h: float
    half_cells: int = DEFAULT_HALF_CELLS

    @classmethod
    def covering(cls, radius: float, half_cells: int = DEFAULT_HALF_CELLS, margin: float = 1.02):
        """Lattice whose outermost centres sit at ``margin * radius``."""
        return cls(margin * radius / half_cells, half_cells)

    @property
    def size(self) -> int:
        return 2 * self.half_cells + 1

    @property
    def half_width(self) -> float:
        return self.h * self.half_cells

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    @cached_property
    def axis(self):
        return self.h * np.arange(-self.half_cells, self.half_cells + 1)

    @cached_property
    def points(self):
        X, Y = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.stack([X, Y], axis=-1)

    @cached_property
    def polar(self):
        X, Y = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.hypot(X, Y), np.mod(np.arctan2(Y, X), 2 * np.pi)

    def index_of(self, x):
        """Nearest lattice index pairs for points ``x`` of shape (..., 2)."""
        return np.rint(np.asarray(x) / self.h).astype(int) + self.half_cells


@dataclass(frozen=True, eq=False)
class StarBody2D:
    """Star body described by its radial function on a uniform angle grid.

    Parameters
    ----------
    radial : array_like, shape (m,)
        Values ``rho(2 pi i / m)``; ``rho`` is extended periodically and linearly.
    lattice : Lattice, optional
        Working grid for the raster.  Defaults to a lattice just covering the body.
    allow_zero : bool
        Permit directions with ``rho = 0`` (the origin is then not interior).
    """

    radial: np.ndarray
    lattice: Lattice | None = None
    allow_zero: bool = False

    def __post_init__(self):
        r = np.array(self.radial, dtype=float)
        if r.ndim != 1 or r.size < 3:
            raise ValueError("radial function needs at least 3 angles")
        if not np.all(np.isfinite(r)) or np.any(r < 0):
            raise ValueError("radial values must be finite and non-negative")
        if not self.allow_zero and np.any(r == 0):
            raise ValueError("zero radial value; pass allow_zero=True to permit it")
        r.setflags(write=False)
        object.__setattr__(self, "radial", r)
        if self.lattice is None:
            object.__setattr__(self, "lattice", Lattice.covering(max(r.max(), 1e-12)))

    @property
    def m(self) -> int:
        return self.radial.size

    @property
    def angles(self):
        return 2 * np.pi * np.arange(self.m) / self.m

    def radius_at(self, theta):
        th = np.mod(np.asarray(theta, dtype=float), 2 * np.pi)
        return np.interp(th, np.append(self.angles, 2 * np.pi), np.append(self.radial, self.radial[0]))

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        r = np.hypot(x[..., 0], x[..., 1])
        return r <= self.radius_at(np.arctan2(x[..., 1], x[..., 0]))

    def scaled(self, lam: float) -> "StarBody2D":
        return StarBody2D(lam * self.radial, self.lattice, self.allow_zero or lam == 0)

    def on(self, lattice: Lattice) -> "StarBody2D":
        return StarBody2D(self.radial, lattice, self.allow_zero)

    def rasterize(self, scale: float = 1.0, closed: bool = False):
        """Boolean indicator of ``scale * K`` at the lattice centres.

        With ``closed`` the body is first inflated radially by half a cell
        diagonal, so every centre within ``h / sqrt(2)`` of the body is kept.
        """
        r, th = self.lattice.polar
        pad = self.lattice.h / np.sqrt(2) if closed else 0.0
        return r <= scale * self.radius_at(th) + pad

    @cached_property
    def raster(self):
        out = self.rasterize()
        out.setflags(write=False)
        return out

    def to_json(self) -> dict:
        return {"angles_m": self.m, "radial_values": self.radial.tolist()}

    @classmethod
    def from_json(cls, obj, lattice=None):
        if isinstance(obj, (str, Path)):
            obj = json.loads(Path(obj).read_text())
        r = np.asarray(obj["radial_values"], dtype=float)
        if r.size != int(obj["angles_m"]):
            raise ValueError("angles_m does not match the number of radial values")
        return cls(r, lattice)


@dataclass(frozen=True, eq=False)
class MinkowskiAverage:
    """Rasterized ``(1 - t) K0 + t K1`` together with its one-cell erosion."""

    t: float
    raster: np.ndarray = field(repr=False)
    lattice: Lattice = field(repr=False)
    truncated: bool = False

    @cached_property
    def eroded(self):
        return ndimage.binary_erosion(self.raster)


def _crop(mask):
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    return mask[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1].astype(float), rows[0], cols[0]


def dilate(a, b):
    """Discrete sumset of two lattice rasters of equal shape (centred at the middle cell).

    Returns the sumset clipped to the lattice and whether clipping removed points.
    """
    if a.shape != b.shape:
        raise GridMismatch(f"raster shapes differ: {a.shape} vs {b.shape}")
    n = a.shape[0]
    M = n // 2
    out = np.zeros_like(a, dtype=bool)
    if not a.any() or not b.any():
        return out, False
    ca, ia, ja = _crop(a)
    cb, ib, jb = _crop(b)
    s = fftconvolve(ca, cb) > 0.5
    i0, j0 = ia + ib - M, ja + jb - M
    si, sj = s.shape
    lo_i, lo_j = max(i0, 0), max(j0, 0)
    hi_i, hi_j = min(i0 + si, n), min(j0 + sj, n)
    out[lo_i:hi_i, lo_j:hi_j] = s[lo_i - i0 : hi_i - i0, lo_j - j0 : hi_j - j0]
    return out, bool(out.sum() != s.sum())


def minkowski_average(K0: StarBody2D, K1: StarBody2D, t: float) -> MinkowskiAverage:
    """Rasterized Minkowski average of two star bodies sharing a lattice.

    The scaled bodies ``(1 - t) K0`` and ``t K1`` are rasterized closed and
    their lattice sumset is returned.  If ``x + y`` is a lattice point with
    ``x`` in ``(1 - t) K0`` and ``y`` in ``t K1``, the lattice point ``a``
    nearest to ``x`` and ``b = x + y - a`` both lie within half a diagonal of
    their bodies, so the sumset contains every lattice point of the true
    average: it can only err outward.
    """
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    if K0.lattice != K1.lattice:
        raise GridMismatch("bodies are rasterized on different lattices")
    a = K0.rasterize(1 - t, closed=True)
    b = K1.rasterize(t, closed=True)
    s, cut = dilate(a, b)
    return MinkowskiAverage(float(t), s, K0.lattice, cut)


@lru_cache(maxsize=16)
def _cell_weights(nu: ReferenceMeasure, lattice: Lattice):
    w = np.exp(nu.log_density(lattice.points)) * lattice.cell_area
    w.setflags(write=False)
    return w


def body_measure(nu: ReferenceMeasure, K, lattice: Lattice | None = None) -> float:
    """Midpoint-rule value of ``nu(K)`` over a raster.

    ``K`` may be a boolean raster (then ``lattice`` is required), a
    :class:`StarBody2D` or a :class:`MinkowskiAverage`.
    """
    if isinstance(K, StarBody2D):
        K, lattice = K.raster, K.lattice
    elif isinstance(K, MinkowskiAverage):
        K, lattice = K.raster, K.lattice
    if lattice is None:
        raise ValueError("a bare raster needs its lattice")
    K = np.asarray(K, dtype=bool)
    if K.shape != (lattice.size, lattice.size):
        raise GridMismatch("raster does not match the lattice")
    return float(np.sum(_cell_weights(nu, lattice), where=K))


def exact_body_measure(nu: ReferenceMeasure, K: StarBody2D, per_interval: int = 64) -> float:
    """``nu(K)`` by polar integration for radial potentials ``V = r^p V(u)``.

    The radial integral has the closed form
    ``(1/p) V(u)^(-2/p) Gamma(2/p) P(2/p, rho^p V(u))`` with ``P`` the
    regularized lower incomplete gamma function; the angular integral is a
    periodic trapezoid sum on a refinement of the body's angle grid.
    """
    if nu.dim != 2:
        raise ValueError("planar reference measure required")
    p = nu.potential.p
    th = np.linspace(0, 2 * np.pi, K.m * per_interval, endpoint=False)
    u = np.stack([np.cos(th), np.sin(th)], axis=1)
    Vu = nu.potential(u)
    rho = K.radius_at(th)
    s = 2.0 / p
    radial = special.gamma(s) * special.gammainc(s, rho**p * Vu) * Vu ** (-s) / p
    return float(np.exp(nu.log_normalizer) * radial.mean() * 2 * np.pi)


def random_star_body(
    seed: int,
    m: int = 64,
    smoothness: float = 2.0,
    *,
    amplitude: float = 0.25,
    base_radius: float = 1.0,
    lattice: Lattice | None = None,
) -> StarBody2D:
    """Seeded star body with log-radial function given by decaying random Fourier modes.

    ``log rho = sum_k z_k * amplitude * (1 + k)^(-smoothness) * cos(k theta + phi_k)``
    for ``1 <= k < m / 2``.  Large ``smoothness`` drives the body towards a disc.
    """
    if m < 16:
        raise ValueError("need m >= 16 angles")
    rng = np.random.default_rng(seed)
    k = np.arange(1, m // 2)
    z = rng.standard_normal(k.size)
    phase = rng.uniform(0, 2 * np.pi, k.size)
    theta = 2 * np.pi * np.arange(m) / m
    with np.errstate(under="ignore"):
        coef = amplitude * z * (1.0 + k) ** (-float(smoothness))
    log_rho = np.cos(np.outer(theta, k) + phase) @ coef
    return StarBody2D(base_radius * np.exp(log_rho), lattice)


def write_pgm(path, raster):
    """Write a boolean raster as a binary PGM (white = inside); row 0 is the top (largest y)."""
    img = np.where(np.asarray(raster, dtype=bool).T[::-1], 255, 0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(img.tobytes())
