"""End-to-end acceptance criteria, one test per criterion.

Each test records a one-line verdict that is printed in the terminal summary.
"""

import time

import numpy as np
import pytest

from entropic_transport import families as F
from entropic_transport import verify as V
from entropic_transport.functionals import fisher_information, relative_entropy
from entropic_transport.gamma import (
    GridFunction,
    gamma2,
    gamma2_bochner,
    gamma2_inequality_check,
    ibp_residual,
    ou_evolve,
)
from entropic_transport.geometry import Lattice, random_star_body
from entropic_transport.measures import GaussianMeasure, ReferenceMeasure
from entropic_transport.transport import interpolate, w2_1d

GAMMA = ReferenceMeasure.gaussian(1)
TOL = 1e-3
RESULTS = {}


def record(n, ok, detail):
    RESULTS[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    assert ok, RESULTS[n]


def _tz(t, n_cells=4096):
    L = 8.5 * max(1.0, t)
    return F.gaussian_density(t, lo=-L, hi=L, n_cells=n_cells)


@pytest.fixture(scope="module")
def family():
    return F.even_strongly_log_concave_family()


def test_criterion_01_closed_forms():
    worst, slowest = 0.0, 0.0
    for t in (0.25, 0.5, 0.9, 1.1, 2.0, 10.0):
        start = time.perf_counter()
        mu = _tz(t)
        L = mu.hi
        gam = F.gaussian_density(1.0, lo=-L, hi=L)
        D, I, W = relative_entropy(mu, GAMMA), fisher_information(mu, GAMMA), w2_1d(mu, gam)
        slowest = max(slowest, time.perf_counter() - start)
        exact = (-np.log(t) + t * t / 2 - 0.5, (t * t - 1) ** 2 / (t * t), abs(t - 1))
        for got, want in zip((D, I, W), exact):
            worst = max(worst, abs(got - want) / want)
    record(1, worst <= 1e-4 and slowest < 1.0, f"max relative error {worst:.2e}, slowest t {slowest:.3f}s")


def test_criterion_02_improved_lsi(family):
    start = time.perf_counter()
    good = V.check_lsi(family, 1.0)
    bad = [V.check_lsi([(f"{t}Z", _tz(t))], 1.0, expected="fail") for t in (2.0, 10.0)]
    ratio = bad[1].extra["rows"][0]["4D/I"]
    elapsed = time.perf_counter() - start
    ok = good.verdict == "pass" and len(good.cases) == 25 and all(b.verdict == "fail" for b in bad) and elapsed < 30
    record(2, ok, f"family min margin {good.min_margin:.2e}; 2Z, 10Z fail; 4D/I at 10Z = {ratio:.3f}; {elapsed:.1f}s")


def test_criterion_03_improved_talagrand(family):
    start = time.perf_counter()
    good = V.check_talagrand(family, 1.0)
    bad = V.check_talagrand([("2Z", _tz(2.0))], 1.0, expected="fail")
    row = bad.extra["rows"][0]
    elapsed = time.perf_counter() - start
    ok = (
        good.verdict == "pass"
        and bad.verdict == "fail"
        and abs(row["middle"] - 1.858) < 1e-3
        and abs(row["D"] - 0.807) < 1e-3
        and elapsed < 30
    )
    record(3, ok, f"family min margin {good.min_margin:.2e}; 2Z middle {row['middle']:.4f} > D {row['D']:.4f}; {elapsed:.1f}s")


def test_criterion_04_hwi_and_sharpness():
    cases = [(f"{s}Z", GaussianMeasure.scalar(0, s * s)) for s in (0.25, 0.5, 0.75, 0.9, 1.0)]
    cases2 = [("diag", GaussianMeasure([0, 0], np.diag([0.25, 1.0]))), ("diag2", GaussianMeasure([0, 0], np.diag([0.5, 0.8])))]
    runs = [V.check_hwi(cases, 1.0, o) for o in ("mu-gamma", "gamma-mu")]
    runs += [V.check_hwi(cases2, 2.0, o) for o in ("mu-gamma", "gamma-mu")]
    sharp = V.check_sharpness_limits(tol=1e-3)
    worst_ratio = max(abs(r - 1) for r in sharp.extra["ratios"][0.999].values())
    ok = all(r.min_margin >= -TOL for r in runs) and sharp.verdict == "pass"
    record(4, ok, f"HWI min margin {min(r.min_margin for r in runs):.2e}; max |ratio - 1| at 0.999 = {worst_ratio:.1e}")


def test_criterion_05_brunn_minkowski():
    start = time.perf_counter()
    results = V.bm_sweep(seed=7, pairs=100, ps=(1.5, 2.0, 4.0), half_cells=512)
    elapsed = time.perf_counter() - start
    dil = min(float(np.min(r.margins)) for r in results)
    ero_ok = all(np.all(r.extra["erosion_margins"] >= -r.extra["bracket_width"]) for r in results)
    bracket = max(r.extra["bracket_width"] for r in results)
    ok = len(results) == 300 and dil >= 0 and ero_ok and bracket < 2e-3 and elapsed < 600
    record(5, ok, f"300 checks; min dilation margin {dil:.2e}; max bracket {bracket:.2e}; {elapsed:.0f}s")


def test_criterion_06_displacement_concavity():
    rng = np.random.default_rng(6)
    worst = np.inf
    for _ in range(20):
        (_, m0), (_, m1) = F.radially_decreasing_density(rng), F.radially_decreasing_density(rng)
        r = V.check_displacement_concavity(GAMMA, interpolate(m0, m1), 0.5)
        assert not r.caveats
        worst = min(worst, r.min_margin / r.tolerance)
    counter = V.check_displacement_concavity(GAMMA, interpolate(GaussianMeasure.scalar(0, 1), GaussianMeasure.scalar(0, 4)), 1.0)
    positive = float(np.max(-counter.margins))
    record(6, worst >= -1 and positive > 0, f"worst margin/tolerance {worst:.3f} over 20 pairs; counterexample max g'' = {positive:.3f}")


def test_criterion_07_entropic_cd0n():
    rng = np.random.default_rng(7)
    worst = np.inf
    for _ in range(20):
        (_, m0), (_, m1) = F.random_density(rng), F.random_density(rng)
        r = V.check_entropic_cd0n(interpolate(m0, m1), 1.0)
        worst = min(worst, r.min_margin / r.tolerance)
    gauss = V.check_entropic_cd0n(interpolate(GaussianMeasure.scalar(0, 1), GaussianMeasure.scalar(0, 4)), 1.0)
    eq = float(np.max(np.abs(gauss.margins)))
    record(7, worst >= -1 and eq <= 1e-4, f"worst margin/tolerance {worst:.3f} over 20 pairs; Gaussian |g''| <= {eq:.1e}")


def test_criterion_08_gamma_calculus():
    grid = (-6.0, 6.0, 4096)
    f = GridFunction.sample(lambda x: np.exp(-x * x) * np.cos(x), grid)
    g = GridFunction.sample(lambda x: np.exp(-0.5 * x * x) * x, grid)
    ibp = ibp_residual(f, g)
    h = GridFunction.sample(lambda x: np.sin(x) + x**3 / 10, grid)
    a, b = gamma2(h).values[8:-8], gamma2_bochner(h).values[8:-8]
    bochner = float(np.max(np.abs(a - b)) / np.max(np.abs(a)))
    tests = [
        lambda x: x**2 / 2,
        lambda x: x**4,
        np.cos,
        lambda x: x**2 + x**4 / 10,
        lambda x: np.log(np.cosh(x)),
        lambda x: np.exp(-(x**2)),
        lambda x: x**6 / 30,
        lambda x: np.cosh(x / 2),
        lambda x: np.sqrt(1 + x * x),
        lambda x: x * x * np.cos(x),
    ]
    measures = [GAMMA.tabulate(-8.0, 8.0, 4096), F.truncated_gaussian(1.0), GaussianMeasure.scalar(0, 0.5).tabulate(-8.0, 8.0, 4096)]
    margin = min(gamma2_inequality_check(u, m, 1.0) for m in measures for u in tests)
    equality = abs(gamma2_inequality_check(tests[0], measures[0], 1.0))
    ok = ibp <= 1e-3 and bochner <= 1e-2 and margin >= -1e-3 and equality <= 1e-9
    record(8, ok, f"IBP {ibp:.1e}; Bochner {bochner:.1e}; Gamma2 min margin {margin:.2e}; equality case {equality:.1e}")


def test_criterion_09_ou_decay(family):
    decay = V.check_ou_decay(family)
    mu = F.truncated_gaussian(1.0, n_cells=2048)
    semi = 0.5 * np.sum(np.abs(ou_evolve(ou_evolve(mu, 0.2), 0.3).masses - ou_evolve(mu, 0.5).masses))
    sm = F.smoothed_truncated_gaussian(1.0, 0.05, 2048)
    t, dt = 0.3, 1e-3
    dD = (relative_entropy(ou_evolve(sm, t + dt), GAMMA) - relative_entropy(ou_evolve(sm, t - dt), GAMMA)) / (2 * dt)
    I = fisher_information(ou_evolve(sm, t), GAMMA)
    debruijn = abs(-dD - I) / I
    ok = decay.min_margin >= -TOL and semi <= 1e-4 and debruijn <= 5e-2 and not decay.caveats
    record(9, ok, f"decay min margin {decay.min_margin:.2e} ({len(decay.cases)} cases); semigroup TV {semi:.1e}; de Bruijn {debruijn:.1e}")


def test_criterion_10_variational_principle():
    nu = ReferenceMeasure.gaussian(2)
    worst_id, worst_gap = 0.0, np.inf
    for seed in range(10):
        K = random_star_body(seed)
        K = K.on(Lattice.covering(K.radial.max(), 256))
        r = V.check_variational_principle(nu, K, None, seed=seed)
        worst_id = max(worst_id, abs(r.extra["D"] + np.log(r.extra["nu_K"])))
        worst_gap = min(worst_gap, float(np.min(r.margins[1:])))
    record(10, worst_id <= 1e-4 and worst_gap > 0, f"max |D + log nu(K)| {worst_id:.1e}; min competitor gap {worst_gap:.2e}")
