"""Batch checks of the transport and entropy inequalities, each producing margins.

Every check returns a :class:`VerificationResult` whose margins are arranged so
that a non-negative margin means the inequality holds.  The verdict is "pass"
exactly when the smallest margin is at least ``-tolerance``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import families
from .errors import InfiniteFisher, PreconditionViolation, ThetaOverflow
from .functionals import entropy, fisher_information, radial_monotonicity_check, relative_entropy
from .gamma import coefficients, is_strongly_log_concave, ou_evolve
from .geometry import Lattice, StarBody2D, body_measure, minkowski_average, random_star_body
from .measures import GaussianMeasure, GridDensity1D, GridDensity2D, ReferenceMeasure, restrict
from .potentials import HomogeneousPotential
from .transport import GeodesicPath, interpolate, w2_1d, w2_gaussian

BASE_TOL = 1e-3

TAGS = {
    "bm": "dimensional-brunn-minkowski",
    "concavity": "entropy-displacement-concavity",
    "cd0n": "entropic-cd(0,n)",
    "conv2n": "gaussian-(2,n)-convexity",
    "hwi": "dimensional-hwi",
    "lsi": "improved-log-sobolev",
    "talagrand": "improved-talagrand",
    "ou-decay": "ou-entropy-decay",
    "sharpness": "sharpness-limit",
    "variational": "restriction-entropy-variational",
    "entropy-route": "support-containment-entropy-route",
}


@dataclass
class VerificationResult:
    name: str
    tag: str
    parameters: dict
    cases: list
    margins: np.ndarray
    tolerance: float
    expected: str = "pass"
    caveats: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.margins = np.asarray(self.margins, dtype=float)

    @property
    def min_margin(self) -> float:
        return float(np.min(self.margins)) if self.margins.size else float("inf")

    @property
    def verdict(self) -> str:
        return "pass" if self.min_margin >= -self.tolerance else "fail"

    @property
    def as_expected(self) -> bool:
        return self.verdict == self.expected

    def to_dict(self) -> dict:
        return _jsonable(
            {
                "name": self.name,
                "tag": self.tag,
                "parameters": self.parameters,
                "cases": self.cases,
                "margins": self.margins,
                "min_margin": self.min_margin,
                "tolerance": self.tolerance,
                "verdict": self.verdict,
                "expected": self.expected,
                "as_expected": self.as_expected,
                "caveats": self.caveats,
                "extra": self.extra,
            }
        )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def second_differences(t, g):
    """Three-point divided second differences (estimates of g'') at interior nodes."""
    t = np.asarray(t, dtype=float)
    g = np.asarray(g, dtype=float)
    left = (g[1:-1] - g[:-2]) / (t[1:-1] - t[:-2])
    right = (g[2:] - g[1:-1]) / (t[2:] - t[1:-1])
    return 2 * (right - left) / (t[2:] - t[:-2])


def _as_cases(mu):
    if isinstance(mu, (list, tuple)) and mu and isinstance(mu[0], tuple):
        return list(mu)
    if isinstance(mu, (list, tuple)):
        return [(f"case-{i}", m) for i, m in enumerate(mu)]
    return [("mu", mu)]


def _gamma_like(mu):
    """Standard Gaussian in the same representation (and on the same grid) as mu."""
    if isinstance(mu, GaussianMeasure):
        return GaussianMeasure.standard(mu.dim)
    return ReferenceMeasure.gaussian(1).tabulate(mu.lo, mu.hi, mu.n_cells)


def _w2(a, b):
    if isinstance(a, GaussianMeasure):
        return w2_gaussian(a, b)
    return w2_1d(a, b)


def _path_relative_entropies(path: GeodesicPath, nu: ReferenceMeasure):
    return np.array([relative_entropy(path.measure(k), nu) for k in range(path.t_grid.size)])


# ---------------------------------------------------------------------------
# Brunn-Minkowski for star bodies


def bm_averages(K0: StarBody2D, K1: StarBody2D, t_grid):
    return [minkowski_average(K0, K1, float(t)) for t in t_grid]


def check_bm_star_bodies(
    nu: ReferenceMeasure,
    K0: StarBody2D,
    K1: StarBody2D,
    t_grid=tuple(np.arange(1, 10) / 10),
    n: int = 2,
    averages=None,
    name: str = "bm",
) -> VerificationResult:
    """Margins nu(avg_t)^a - [(1-t) nu(K0)^a + t nu(K1)^a], a = (p-1)/(p n).

    ``margins`` use the dilated raster of the average; ``extra['erosion_margins']``
    use its one-cell erosion.  Their gap, raised to the power a, is the
    rasterization bracket; the tolerance is the larger of 1e-3 times the scale and
    that bracket.
    """
    p = nu.potential.p
    a = (p - 1) / (p * n)
    if averages is None:
        averages = bm_averages(K0, K1, t_grid)
    v0, v1 = body_measure(nu, K0), body_measure(nu, K1)
    dil, ero = [], []
    for t, avg in zip(t_grid, averages):
        rhs = (1 - t) * v0**a + t * v1**a
        dil.append(body_measure(nu, avg) ** a - rhs)
        ero.append(body_measure(nu, avg.eroded, avg.lattice) ** a - rhs)
    dil, ero = np.array(dil), np.array(ero)
    bracket = float(np.max(dil - ero))
    scale = max(v0**a, v1**a)
    caveats = ["dilated rasters can only enlarge the average; erosion margins bracket the truth"]
    if any(avg.truncated for avg in averages):
        caveats.append("Minkowski average clipped by the lattice")
    return VerificationResult(
        name,
        TAGS["bm"],
        {"p": p, "n": n, "exponent": a, "lattice_cells": K0.lattice.size},
        [float(t) for t in t_grid],
        dil,
        max(BASE_TOL * scale, bracket),
        caveats=caveats,
        extra={"erosion_margins": ero, "bracket_width": bracket, "nu_K0": v0, "nu_K1": v1},
    )


def bm_pair(seed: int, half_cells: int = 512):
    """The seeded random star-body pair used by the sweep, on a shared lattice."""
    rng = np.random.default_rng(seed)
    r0, r1 = rng.uniform(0.6, 1.6, size=2)
    K0 = random_star_body(int(rng.integers(2**31)), base_radius=r0)
    K1 = random_star_body(int(rng.integers(2**31)), base_radius=r1)
    lat = Lattice.covering(max(K0.radial.max(), K1.radial.max()), half_cells)
    return K0.on(lat), K1.on(lat)


def radial_reference(p: float, dim: int = 2) -> ReferenceMeasure:
    V = HomogeneousPotential.radial(p, dim)
    return ReferenceMeasure(V, -np.log(V.integral_exp_neg()))


def bm_sweep(seed: int = 0, pairs: int = 100, ps=(1.5, 2.0, 4.0), t_grid=tuple(np.arange(1, 10) / 10), half_cells: int = 512):
    """BM checks on seeded random pairs; the rasterized averages are shared across p."""
    rng = np.random.default_rng(seed)
    seeds = rng.integers(2**31, size=pairs)
    refs = {p: radial_reference(p) for p in ps}
    results = []
    for i, s in enumerate(seeds):
        K0, K1 = bm_pair(int(s), half_cells)
        avgs = bm_averages(K0, K1, t_grid)
        for p in ps:
            r = check_bm_star_bodies(refs[p], K0, K1, t_grid, averages=avgs, name=f"bm-pair{i}-p{p}")
            r.parameters["pair_seed"] = int(s)
            results.append(r)
    return results


def check_bm_entropy_route(p: float, intervals0, intervals1, t_grid=None, grid=families.GRID) -> VerificationResult:
    """Support containment on the line: nu(avg_t)^a >= exp(-a D(mu_t || nu)) for mu_i = nu restricted to K_i.

    Bodies are intervals [-l, r] with l, r > 0; the Minkowski average is exact,
    and the reference measure is exp(-|x|^p / p + c).
    """
    from scipy.special import gammainc

    V = HomogeneousPotential.radial(p, 1)
    nu = ReferenceMeasure(V, -np.log(V.integral_exp_neg()))
    a = (p - 1) / p

    def mass(l, r):
        # nu([-l, r]) in closed form via the regularized incomplete gamma function
        s = 1.0 / p
        return 0.5 * (gammainc(s, l**p / p) + gammainc(s, r**p / p))

    # snap the ends to cell edges so the restricted grid densities cover exactly [-l, r]
    lo, hi, n = grid
    dx = (hi - lo) / n
    (l0, r0), (l1, r1) = [(dx * round(l / dx), dx * round(r / dx)) for l, r in (intervals0, intervals1)]
    mu0 = restrict(nu, (-l0, r0), grid)
    mu1 = restrict(nu, (-l1, r1), grid)
    path = interpolate(mu0, mu1, t_grid)
    D = _path_relative_entropies(path, nu)
    geo = np.array([mass((1 - t) * l0 + t * l1, (1 - t) * r0 + t * r1) ** a for t in path.t_grid])
    margins = geo - np.exp(-a * D)
    return VerificationResult(
        "entropy-route",
        TAGS["entropy-route"],
        {"p": p, "K0": [-l0, r0], "K1": [-l1, r1]},
        path.t_grid.tolist(),
        margins,
        BASE_TOL,
    )


# ---------------------------------------------------------------------------
# displacement concavity


def check_displacement_concavity(nu: ReferenceMeasure, path: GeodesicPath, a: float, strict: bool = False) -> VerificationResult:
    """Concavity of g(t) = exp(-a D(mu_t || nu)) via divided second differences.

    Margins are -g''(t_k); tolerance 1e-3 max|g|.  Endpoints must have densities
    radially non-increasing relative to nu; a failed precondition is recorded as
    a caveat (or raised with ``strict``).
    """
    D = _path_relative_entropies(path, nu)
    g = np.exp(-a * D)
    margins = -second_differences(path.t_grid, g)
    caveats = []
    pre = {}
    for label, mu in (("mu0", path.mu0), ("mu1", path.mu1)):
        if isinstance(mu, GaussianMeasure):
            mu = mu.tabulate(n_cells=4096)
        chk = radial_monotonicity_check(mu, nu)
        pre[label] = {"radially_decreasing": chk.decreasing, "euler_integral": chk.euler_integral}
        if not chk.decreasing:
            caveats.append(f"{label} is not radially decreasing relative to the reference")
    result = VerificationResult(
        "concavity",
        TAGS["concavity"],
        {"exponent": a},
        path.t_grid.tolist(),
        margins,
        BASE_TOL * float(np.max(np.abs(g))),
        caveats=caveats,
        extra={"D": D, "g": g, "precondition": pre},
    )
    if strict and caveats:
        err = PreconditionViolation("; ".join(caveats))
        err.result = result
        raise err
    return result


def check_entropic_cd0n(path: GeodesicPath, n_dim: float) -> VerificationResult:
    """Concavity of exp(h(mu_t) / n) along the path."""
    h = np.array([entropy(path.measure(k)) for k in range(path.t_grid.size)])
    g = np.exp(h / n_dim)
    margins = -second_differences(path.t_grid, g)
    return VerificationResult(
        "cd0n",
        TAGS["cd0n"],
        {"n": n_dim},
        path.t_grid.tolist(),
        margins,
        BASE_TOL * float(np.max(np.abs(g))),
        extra={"h": h, "g": g},
    )


# ---------------------------------------------------------------------------
# Gaussian dimensional inequalities


def check_2n_convexity_global(mu, n_dim: float, mu1=None, times=None) -> VerificationResult:
    """exp(-D(mu_t)/n) >= sigma_{1-t}(W) exp(-D(mu_0)/n) + sigma_t(W) exp(-D(mu_1)/n).

    The path runs from ``mu`` to ``mu1`` (default: gamma in the same
    representation).  ``extra['plain_margins']`` holds the weaker version with
    coefficients (1 - t, t).
    """
    nu = ReferenceMeasure.gaussian(mu.dim)
    end = _gamma_like(mu) if mu1 is None else mu1
    path = interpolate(mu, end, times)
    W = path.w2()
    co = coefficients(n_dim)
    if W >= co.theta_max:
        raise ThetaOverflow(f"W2 = {W:.4g} exceeds sqrt(n/2) pi = {co.theta_max:.4g}")
    D = _path_relative_entropies(path, nu)
    e = np.exp(-D / n_dim)
    t = path.t_grid
    margins = e - (co.sigma(1 - t, W) * e[0] + co.sigma(t, W) * e[-1])
    plain = e - ((1 - t) * e[0] + t * e[-1])
    return VerificationResult(
        "conv2n",
        TAGS["conv2n"],
        {"n": n_dim, "W2": W},
        t.tolist(),
        margins,
        BASE_TOL,
        extra={"plain_margins": plain, "D": D},
    )


def _gauss_stats(mu):
    """D, I relative to gamma and W2 to gamma."""
    nu = ReferenceMeasure.gaussian(mu.dim)
    return relative_entropy(mu, nu), fisher_information(mu, nu), _w2(mu, _gamma_like(mu))


def check_hwi(mu, n_dim: float, orientation: str = "mu-gamma") -> VerificationResult:
    """exp(D(mu0)/n - D(mu1)/n) <= c(W) + s(W) sqrt(I(mu0)) / n for each case.

    ``orientation`` "mu-gamma" sets (mu0, mu1) = (mu, gamma); "gamma-mu" swaps them.
    Cases whose mu0 has infinite Fisher information are skipped with a caveat.
    """
    if orientation not in ("mu-gamma", "gamma-mu"):
        raise ValueError("orientation must be 'mu-gamma' or 'gamma-mu'")
    co = coefficients(n_dim)
    labels, margins, caveats, rows = [], [], [], []
    for label, mu_ in _as_cases(mu):
        D, I, W = _gauss_stats(mu_)
        if orientation == "mu-gamma":
            D0, D1, I0 = D, 0.0, I
        else:
            D0, D1, I0 = 0.0, D, 0.0
        if not np.isfinite(I0):
            caveats.append(f"{label}: infinite Fisher information, skipped")
            continue
        lhs = np.exp((D0 - D1) / n_dim)
        rhs = co.c(W) + co.s(W) * np.sqrt(I0) / n_dim
        labels.append(label)
        margins.append(rhs - lhs)
        rows.append({"D": D, "I": I, "W2": W, "lhs": lhs, "rhs": rhs})
    if not labels:
        raise InfiniteFisher("every case has infinite Fisher information")
    return VerificationResult(
        f"hwi[{orientation}]", TAGS["hwi"], {"n": n_dim, "orientation": orientation}, labels, margins, BASE_TOL, caveats=caveats, extra={"rows": rows}
    )


def lsi_terms(D: float, I: float, n: float):
    return 4 * D, 2 * n * np.expm1(2 * D / n), I


def talagrand_terms(W: float, D: float, n: float):
    k = np.sqrt(2.0 / n)
    if k * W >= np.pi / 2:
        return W * W, np.inf, D
    return W * W, -n * np.log(np.cos(k * W)), D


def check_lsi(mu, n_dim: float, expected: str = "pass") -> VerificationResult:
    """4D <= 2n(exp(2D/n) - 1) <= I; margin per case is the smaller of the two gaps."""
    labels, margins, rows, caveats = [], [], [], []
    for label, mu_ in _as_cases(mu):
        nu = ReferenceMeasure.gaussian(mu_.dim)
        D, I = relative_entropy(mu_, nu), fisher_information(mu_, nu)
        a, b, c = lsi_terms(D, I, n_dim)
        if not np.isfinite(I):
            caveats.append(f"{label}: infinite Fisher information")
        labels.append(label)
        margins.append(min(b - a, c - b))
        rows.append({"4D": a, "middle": b, "I": c, "4D/I": a / c if c > 0 else np.inf})
    return VerificationResult("lsi", TAGS["lsi"], {"n": n_dim}, labels, margins, BASE_TOL, expected, caveats, {"rows": rows})


def check_talagrand(mu, n_dim: float, expected: str = "pass") -> VerificationResult:
    """W^2 <= -n log cos(sqrt(2/n) W) <= D; margin per case is the smaller gap."""
    labels, margins, rows, caveats = [], [], [], []
    for label, mu_ in _as_cases(mu):
        nu = ReferenceMeasure.gaussian(mu_.dim)
        D, W = relative_entropy(mu_, nu), _w2(mu_, _gamma_like(mu_))
        a, b, c = talagrand_terms(W, D, n_dim)
        if not np.isfinite(b):
            caveats.append(f"{label}: W2 beyond the log-cos range")
        labels.append(label)
        margins.append(min(b - a, c - b))
        rows.append({"W2^2": a, "middle": b, "D": c})
    return VerificationResult("talagrand", TAGS["talagrand"], {"n": n_dim}, labels, margins, BASE_TOL, expected, caveats, {"rows": rows})


def check_ou_decay(mu, t_grid=(0.1, 0.5, 1.0, 2.0)) -> VerificationResult:
    """D(P*_t mu) <= exp(-4t) D(mu) for every case and time."""
    nu = ReferenceMeasure.gaussian(1)
    labels, margins, caveats = [], [], []
    for label, mu_ in _as_cases(mu):
        if isinstance(mu_, GaussianMeasure):
            s2 = float(mu_.covariance[0, 0])
            evolve = lambda t, s2=s2: GaussianMeasure.scalar(0.0, 1 + np.exp(-2 * t) * (s2 - 1))  # noqa: E731
            slc = s2 <= 1
        else:
            evolve = lambda t, m=mu_: ou_evolve(m, t)  # noqa: E731
            slc = is_strongly_log_concave(mu_) and mu_.is_even()
        if not slc:
            caveats.append(f"{label}: not even strongly log-concave")
        D0 = relative_entropy(mu_, nu)
        for t in t_grid:
            labels.append(f"{label}@t={t}")
            margins.append(np.exp(-4 * t) * D0 - relative_entropy(evolve(t), nu))
    return VerificationResult("ou-decay", TAGS["ou-decay"], {"t_grid": list(t_grid)}, labels, margins, BASE_TOL, caveats=caveats)


def sharpness_ratios(s: float, n: float = 1.0):
    """Chain ratios for mu = law of sZ: I/middle and middle/4D (log-Sobolev), D/middle and middle/W^2 (Talagrand)."""
    D = -np.log(s) + s * s / 2 - 0.5
    I = (s * s - 1) ** 2 / (s * s)
    W = abs(s - 1)
    a, b, c = lsi_terms(D, I, n)
    x, y, z = talagrand_terms(W, D, n)
    return {"lsi_upper": c / b, "lsi_lower": b / a, "talagrand_upper": z / y, "talagrand_lower": y / x}


def check_sharpness_limits(t_scales=(0.9, 0.99, 0.999), tol: float = 1e-3) -> VerificationResult:
    """Chain ratios tend to 1 as the scale s tends to 1.

    Margins: ``tol - |ratio - 1|`` at the last scale for every ratio; the gaps
    at the first scale, which must be positive; and for each ratio the observed
    order of ``ratio - 1`` in ``1 - s`` between the last two scales, which must
    be within 0.1 of a positive integer (the excess is a smooth tangency, not
    a slower power law).
    """
    table = {s: sharpness_ratios(s) for s in t_scales}
    last, prev, first = t_scales[-1], t_scales[-2], t_scales[0]
    labels, margins, orders = [], [], {}
    for key, r in table[last].items():
        labels.append(f"{key}@{last}")
        margins.append(tol - abs(r - 1))
    for key, r in table[first].items():
        labels.append(f"{key}-gap@{first}")
        margins.append(r - 1)
    for key in table[last]:
        order = np.log((table[prev][key] - 1) / (table[last][key] - 1)) / np.log((1 - prev) / (1 - last))
        orders[key] = order
        labels.append(f"{key}-order")
        margins.append(min(0.1 - abs(order - round(order)), order - 0.9))
    return VerificationResult(
        "sharpness", TAGS["sharpness"], {"t_scales": list(t_scales)}, labels, margins, 0.0, extra={"ratios": table, "orders": orders}
    )


# ---------------------------------------------------------------------------
# variational principle for restrictions


def check_variational_principle(nu: ReferenceMeasure, K, grid, competitors: int = 20, seed: int = 0, amplitude: float = 0.5):
    """D(nu_K || nu) = -log nu(K), and D(mu || nu) > D(nu_K || nu) for perturbations mu of nu_K inside K.

    ``K`` is a star body (2-D, rasterized on its lattice; ``grid`` ignored) or an
    interval (1-D, ``grid`` is (lo, hi, n)).  Margins: ``1e-4 - |D + log nu(K)|``
    then ``D(mu) - D(nu_K)`` for each competitor.
    """
    rng = np.random.default_rng(seed)
    if isinstance(K, StarBody2D):
        lat = K.lattice
        hw = lat.half_width + lat.h / 2
        bounds = (-hw, hw, -hw, hw)
        muK, mass = restrict(nu, K.raster, (bounds, (lat.size, lat.size)), return_mass=True)
        mass_b = body_measure(nu, K)
        pts = muK.points
    else:
        muK, mass = restrict(nu, K, grid, return_mass=True)
        mass_b = mass
        pts = muK.centers[:, None]
    D = relative_entropy(muK, nu)
    margins = [1e-4 - abs(D + np.log(mass_b))]
    labels = ["identity"]
    for j in range(competitors):
        k = rng.normal(size=(3, pts.shape[-1]))
        phase = rng.uniform(0, 2 * np.pi, 3)
        bump = sum(np.cos(pts @ k[i] + phase[i]) for i in range(3)) / 3
        pert = muK.values * (1 + amplitude * rng.uniform(0.2, 1.0) * bump)
        if isinstance(muK, GridDensity2D):
            comp = GridDensity2D(muK.bounds, pert)
        else:
            comp = GridDensity1D(muK.lo, muK.hi, muK.n_cells, pert)
        margins.append(relative_entropy(comp, nu) - D)
        labels.append(f"competitor-{j}")
    return VerificationResult(
        "variational",
        TAGS["variational"],
        {"competitors": competitors, "seed": seed},
        labels,
        margins,
        0.0,
        extra={"D": D, "nu_K": mass_b},
    )
