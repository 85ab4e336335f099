"""Seeded generators of 1-D test measures used by the verification suites."""

from __future__ import annotations

import numpy as np

from .gamma import ou_evolve
from .measures import GaussianMeasure, GridDensity1D, ReferenceMeasure, restrict

GRID = (-8.0, 8.0, 4096)


def _grid(n_cells=None, lo=None, hi=None):
    return (GRID[0] if lo is None else lo, GRID[1] if hi is None else hi, n_cells or GRID[2])


def gaussian_density(scale: float, mean: float = 0.0, n_cells=None, lo=None, hi=None) -> GridDensity1D:
    """Law of mean + scale * Z tabulated on the working grid."""
    lo, hi, n = _grid(n_cells, lo, hi)
    return GaussianMeasure.scalar(mean, scale * scale).tabulate(lo, hi, n)


def tilted_gaussian(W, n_cells=None, lo=None, hi=None) -> GridDensity1D:
    """Density proportional to phi(x) exp(-W(x))."""
    lo, hi, n = _grid(n_cells, lo, hi)
    x = lo + (np.arange(n) + 0.5) * (hi - lo) / n
    logf = -0.5 * x * x - W(x)
    return GridDensity1D(lo, hi, n, np.exp(logf - logf.max()))


def truncated_gaussian(a: float, b: float | None = None, n_cells=None, lo=None, hi=None) -> GridDensity1D:
    """Standard Gaussian restricted to [-a, b] (b defaults to a)."""
    lo, hi, n = _grid(n_cells, lo, hi)
    return restrict(ReferenceMeasure.gaussian(1), (-a, a if b is None else b), (lo, hi, n))


def smoothed_truncated_gaussian(a: float, tau: float, n_cells=None) -> GridDensity1D:
    """gamma restricted to [-a, a], then run through the OU flow for time tau (finite Fisher information)."""
    return ou_evolve(truncated_gaussian(a, n_cells=n_cells), tau)


def even_strongly_log_concave_family(n_cells=None):
    """25 even 1-D measures whose density relative to gamma is log-concave, as (label, density) pairs."""
    out = []
    for s in (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0):
        out.append((f"gauss-scale-{s}", gaussian_density(s, n_cells=n_cells)))
    for a, tau in ((0.5, 0.05), (1.0, 0.02), (1.0, 0.05), (1.5, 0.02), (2.0, 0.02), (2.0, 0.1), (3.0, 0.05), (0.75, 0.1)):
        out.append((f"trunc-{a}-ou-{tau}", smoothed_truncated_gaussian(a, tau, n_cells=n_cells)))
    for c in (0.05, 0.2, 1.0, 3.0):
        out.append((f"quartic-{c}", tilted_gaussian(lambda x, c=c: c * x**4, n_cells=n_cells)))
    for c in (0.5, 2.0, 5.0, 10.0):
        out.append((f"logcosh-{c}", tilted_gaussian(lambda x, c=c: c * np.log(np.cosh(x)), n_cells=n_cells)))
    return out


def radially_decreasing_density(rng: np.random.Generator, n_cells=None) -> tuple[str, GridDensity1D]:
    """Random 1-D density whose ratio to gamma is non-increasing along rays from 0."""
    kind = rng.integers(3)
    if kind == 0:
        a, b = rng.uniform(0.3, 3.0, size=2)
        return f"trunc[-{a:.3f},{b:.3f}]", truncated_gaussian(a, b, n_cells=n_cells)
    if kind == 1:
        s = rng.uniform(0.3, 1.0)
        return f"gauss-scale-{s:.3f}", gaussian_density(s, n_cells=n_cells)
    cl, cr = rng.uniform(0.0, 2.0, size=2)
    q = rng.uniform(1.0, 3.0)
    return (
        f"tilt-{cl:.3f}-{cr:.3f}-{q:.3f}",
        tilted_gaussian(lambda x: np.where(x < 0, cl, cr) * np.abs(x) ** q, n_cells=n_cells),
    )


def random_density(rng: np.random.Generator, n_cells=None) -> tuple[str, GridDensity1D]:
    """Random mixture of two Gaussians or a uniform block; any shape, for entropy concavity tests."""
    lo, hi, n = _grid(n_cells)
    x = lo + (np.arange(n) + 0.5) * (hi - lo) / n
    if rng.random() < 0.3:
        a = rng.uniform(-4, 2)
        b = a + rng.uniform(0.5, 3)
        return f"unif[{a:.3f},{b:.3f}]", GridDensity1D(lo, hi, n, ((x >= a) & (x <= b)).astype(float))
    m = rng.uniform(-3, 3, size=2)
    s = rng.uniform(0.3, 1.2, size=2)
    w = rng.uniform(0.2, 0.8)
    f = w * np.exp(-0.5 * ((x - m[0]) / s[0]) ** 2) / s[0] + (1 - w) * np.exp(-0.5 * ((x - m[1]) / s[1]) ** 2) / s[1]
    return f"mix({m[0]:.2f},{s[0]:.2f};{m[1]:.2f},{s[1]:.2f};{w:.2f})", GridDensity1D(lo, hi, n, f)
