"""Command-line front end.

    entropic-transport compute relent --mu gauss:0:0.25 --nu gauss:0:1
    entropic-transport verify lsi --preset paper-examples

Exit codes: 0 success, 1 computation error, 2 parse/validation error,
3 a verification verdict differs from its expectation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import families as F
from . import verify as V
from .errors import EntropicTransportError
from .functionals import entropy, fisher_information, relative_entropy
from .gamma import ou_evolve
from .geometry import Lattice, random_star_body
from .measures import GaussianMeasure, GridDensity1D, ReferenceMeasure, density_from_json
from .potentials import ConvexBodySupport, HomogeneousPotential
from .reporting import dumps, write_metadata, write_suite
from .transport import interpolate, w2_1d

OUTDIR_ENV = "ENTROPIC_TRANSPORT_OUTDIR"
SUITES = ("bm", "concavity", "cd0n", "conv2n", "hwi", "lsi", "talagrand", "ou-decay", "sharpness", "variational")
PRESETS = ("paper-examples", "smoke", "full")
EXIT_OK, EXIT_COMPUTE, EXIT_USAGE, EXIT_MISMATCH = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# measure mini-language


def parse_measure(text: str):
    """``gauss:mean:var``, ``unif:a:b``, ``trunc-gauss:a:b`` or ``grid:<file>`` (CSV or JSON)."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "grid":
            path = Path(rest)
            if not path.exists():
                raise UsageError(f"no such file: {rest}")
            return density_from_json(path) if path.suffix == ".json" else GridDensity1D.from_csv(path)
        a, b = (float(v) for v in rest.split(":"))
    except ValueError as exc:
        raise UsageError(f"cannot parse measure {text!r}: {exc}") from None
    if kind == "gauss":
        if b <= 0:
            raise UsageError("variance must be positive")
        return GaussianMeasure.scalar(a, b)
    if kind in ("unif", "trunc-gauss"):
        if not b > a:
            raise UsageError("need a < b")
        return (kind, a, b)
    raise UsageError(f"unknown measure kind {kind!r}")


def parse_reference(text: str) -> ReferenceMeasure:
    """``gauss:0:var`` (centred Gaussian) or ``radial:p`` (V = |x|^p / p)."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "gauss":
            m, var = (float(v) for v in rest.split(":"))
            if m != 0 or var <= 0:
                raise UsageError("reference Gaussian must be centred with positive variance")
            if var == 1:
                return ReferenceMeasure.gaussian(1)
            pot = HomogeneousPotential(2.0, ConvexBodySupport.ball(1 / np.sqrt(2 * var), 1))
            return ReferenceMeasure(pot, -0.5 * np.log(2 * np.pi * var))
        if kind == "radial":
            pot = HomogeneousPotential.radial(float(rest), 1)
            return ReferenceMeasure(pot, -np.log(pot.integral_exp_neg()))
    except ValueError as exc:
        raise UsageError(f"cannot parse reference {text!r}: {exc}") from None
    raise UsageError(f"reference must be gauss:0:var or radial:p, got {text!r}")


def _extent(m):
    if isinstance(m, GaussianMeasure):
        s = float(np.sqrt(m.covariance[0, 0]))
        return float(m.mean[0]) - 8 * max(s, 1.0), float(m.mean[0]) + 8 * max(s, 1.0)
    if isinstance(m, GridDensity1D):
        return m.lo, m.hi
    _, a, b = m
    return min(a, -8.0), max(b, 8.0)


def _default_grid(measures, n_cells=4096):
    grids = [m for m in measures if isinstance(m, GridDensity1D)]
    if grids:
        g = grids[0]
        return g.lo, g.hi, g.n_cells
    ext = [_extent(m) for m in measures]
    # integer ends keep dyadic interval endpoints on cell edges
    return float(np.floor(min(e[0] for e in ext))), float(np.ceil(max(e[1] for e in ext))), n_cells


def tabulate(m, grid) -> GridDensity1D:
    lo, hi, n = grid
    if isinstance(m, GridDensity1D):
        if (m.lo, m.hi, m.n_cells) != (lo, hi, n):
            raise UsageError("grid inputs must share one grid")
        return m
    if isinstance(m, GaussianMeasure):
        return m.tabulate(lo, hi, n)
    kind, a, b = m
    x = lo + (np.arange(n) + 0.5) * (hi - lo) / n
    inside = (x >= a) & (x <= b)
    if kind == "unif":
        return GridDensity1D(lo, hi, n, inside.astype(float))
    return GridDensity1D(lo, hi, n, np.where(inside, np.exp(-0.5 * x * x), 0.0))


def _parse_grid(text):
    if text is None:
        return None
    try:
        lo, hi, n = text.split(":")
        return float(lo), float(hi), int(n)
    except ValueError:
        raise UsageError(f"grid must be lo:hi:n, got {text!r}") from None


# ---------------------------------------------------------------------------
# compute


def cmd_compute(args) -> int:
    mu = parse_measure(args.mu)
    others = [mu]
    target = None
    if args.op in ("w2", "interp"):
        if args.nu is None:
            raise UsageError(f"{args.op} needs --nu")
        target = parse_measure(args.nu)
        others.append(target)
    grid = _parse_grid(args.grid) or _default_grid(others)
    mu_g = tabulate(mu, grid)
    prov = {"inputs": {"mu": args.mu, "nu": args.nu}, "resolution": list(grid), "tolerance": "midpoint rule, O(h^2)"}
    out_dir = _out_dir(args)
    if args.op == "w2":
        value = w2_1d(mu_g, tabulate(target, grid))
    elif args.op == "entropy":
        value = entropy(mu_g)
    elif args.op == "relent":
        value = relative_entropy(mu_g, parse_reference(args.nu or "gauss:0:1"), allow_infinite=True)
    elif args.op == "fisher":
        ref = parse_reference(args.nu or "gauss:0:1")
        if not ref.is_standard_gaussian:
            raise UsageError("Fisher information is taken relative to gauss:0:1")
        value = fisher_information(mu_g, ref)
    elif args.op == "interp":
        path = interpolate(mu_g, tabulate(target, grid), args.times)
        index = path.to_bundle(out_dir, args.stem)
        prov["bundle"] = str(Path(out_dir) / f"{args.stem}.json")
        print(dumps({"w2": index["w2"], "provenance": prov}), end="")
        return EXIT_OK
    elif args.op == "ou-evolve":
        res = ou_evolve(mu_g, args.t)
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        dest = Path(out_dir) / f"{args.stem}.csv"
        res.to_csv(dest)
        value = relative_entropy(res, ReferenceMeasure.gaussian(1))
        prov["density_file"] = str(dest)
        prov["reports"] = "relative entropy to gauss:0:1 of the evolved density"
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(args.op)
    print(_fmt_value(value))
    print(dumps({"provenance": prov}), end="")
    return EXIT_OK


def _fmt_value(v: float) -> str:
    if not np.isfinite(v):
        return str(v)
    v = 0.0 if abs(v) < 1e-12 else v
    return f"{v:.10g}"


# ---------------------------------------------------------------------------
# verify


@dataclass
class ExperimentConfig:
    suite: str = "all"
    preset: str = "paper-examples"
    n: float = 1.0
    p: list = field(default_factory=lambda: [1.5, 2.0, 4.0])
    half_cells: int = 512
    grid_cells: int = 4096
    times: int = 33
    pairs: int = 100
    pairs_1d: int = 20
    seed: int = 7
    out: str | None = None
    threads: int | None = None
    tolerance: float | None = None

    def validate(self):
        if self.suite not in SUITES + ("all",):
            raise UsageError(f"unknown suite {self.suite!r}")
        if self.preset not in PRESETS:
            raise UsageError(f"unknown preset {self.preset!r}")
        if not self.n > 0:
            raise UsageError("n must be positive")
        if not self.p or any(not 1 < float(q) < np.inf for q in self.p):
            raise UsageError("every p must lie in (1, inf)")
        for name in ("half_cells", "grid_cells", "pairs", "pairs_1d"):
            if int(getattr(self, name)) < 1:
                raise UsageError(f"{name} must be positive")
        if self.times < 5:
            raise UsageError("times must be at least 5")
        if self.threads is not None and self.threads < 1:
            raise UsageError("threads must be positive")
        if self.tolerance is not None and self.tolerance < 0:
            raise UsageError("tolerance must be non-negative")
        return self

    @classmethod
    def from_mapping(cls, data: dict):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)


PRESET_SIZES = {
    "paper-examples": {"pairs": 2, "pairs_1d": 3, "half_cells": 256, "grid_cells": 4096},
    "smoke": {"pairs": 3, "pairs_1d": 5, "half_cells": 256, "grid_cells": 2048},
    "full": {"pairs": 100, "pairs_1d": 20, "half_cells": 512, "grid_cells": 4096},
}


def _expect(results, expected):
    for r in results:
        r.expected = expected
    return results


def _tz(t, n_cells):
    L = 8.5 * max(1.0, t)
    return F.gaussian_density(t, lo=-L, hi=L, n_cells=n_cells)


def jobs_for(suite: str, cfg: ExperimentConfig):
    """Ordered list of (label, thunk) pairs; each thunk returns a list of results."""
    n_cells = cfg.grid_cells
    gamma = ReferenceMeasure.gaussian(1)
    fam = lambda: F.even_strongly_log_concave_family(n_cells)  # noqa: E731
    jobs = []
    if suite == "bm":
        rng = np.random.default_rng(cfg.seed)
        seeds = rng.integers(2**31, size=cfg.pairs)
        refs = {float(p): V.radial_reference(float(p)) for p in cfg.p}
        t_grid = tuple(np.arange(1, 10) / 10)

        def pair_job(i, s):
            K0, K1 = V.bm_pair(int(s), cfg.half_cells)
            avgs = V.bm_averages(K0, K1, t_grid)
            return [V.check_bm_star_bodies(refs[p], K0, K1, t_grid, averages=avgs, name=f"bm-pair{i}-p{p}") for p in refs]

        def special_job():
            K = random_star_body(cfg.seed, base_radius=0.8)
            K = K.on(Lattice.covering(2 * K.radial.max(), cfg.half_cells))
            out = [V.check_bm_star_bodies(V.radial_reference(2.0), K, K, t_grid, name="bm-equal-bodies")]
            out.append(V.check_bm_star_bodies(V.radial_reference(2.0), K, K.scaled(2.0), t_grid, name="bm-dilate-2"))
            out.append(V.check_bm_entropy_route(2.0, (1.0, 0.5), (0.3, 2.0), cfg.times))
            return out

        jobs.append(("bm-special", special_job))
        jobs += [(f"bm-pair{i}", lambda i=i, s=s: pair_job(i, s)) for i, s in enumerate(seeds)]
    elif suite == "concavity":

        def base():
            a = 1 / (2 * cfg.n)
            p1 = interpolate(F.truncated_gaussian(1, n_cells=n_cells), F.truncated_gaussian(2, n_cells=n_cells), cfg.times)
            p2 = interpolate(GaussianMeasure.scalar(0, 1), GaussianMeasure.scalar(0, 4), cfg.times)
            r1 = V.check_displacement_concavity(gamma, p1, a)
            r2 = V.check_displacement_concavity(gamma, p2, 1 / cfg.n)
            r2.name, r2.expected = "concavity-gaussian-counterexample", "fail"
            return [r1, r2]

        def rand():
            rng = np.random.default_rng(cfg.seed)
            out = []
            for i in range(cfg.pairs_1d):
                (l0, m0), (l1, m1) = F.radially_decreasing_density(rng, n_cells), F.radially_decreasing_density(rng, n_cells)
                r = V.check_displacement_concavity(gamma, interpolate(m0, m1, cfg.times), 1 / (2 * cfg.n))
                r.name, r.parameters["endpoints"] = f"concavity-random-{i}", [l0, l1]
                out.append(r)
            return out

        jobs += [("concavity-base", base), ("concavity-random", rand)]
    elif suite == "cd0n":

        def base():
            g = V.check_entropic_cd0n(interpolate(GaussianMeasure.scalar(0, 1), GaussianMeasure.scalar(0, 4), cfg.times), cfg.n)
            lo, hi = -8.0, 8.0
            x = lo + (np.arange(n_cells) + 0.5) * (hi - lo) / n_cells

            def unif(a, b):
                return GridDensity1D(lo, hi, n_cells, ((x >= a) & (x <= b)).astype(float))

            tr = V.check_entropic_cd0n(interpolate(unif(0, 1), unif(2, 3), cfg.times), cfg.n)
            sc = V.check_entropic_cd0n(interpolate(unif(0, 1), unif(0, 2), cfg.times), cfg.n)
            g.name, tr.name, sc.name = "cd0n-gaussian", "cd0n-translation", "cd0n-dilation"
            return [g, tr, sc]

        def rand():
            rng = np.random.default_rng(cfg.seed)
            out = []
            for i in range(cfg.pairs_1d):
                (l0, m0), (l1, m1) = F.random_density(rng, n_cells), F.random_density(rng, n_cells)
                r = V.check_entropic_cd0n(interpolate(m0, m1, cfg.times), cfg.n)
                r.name, r.parameters["endpoints"] = f"cd0n-random-{i}", [l0, l1]
                out.append(r)
            return out

        jobs += [("cd0n-base", base), ("cd0n-random", rand)]
    elif suite == "conv2n":

        def run():
            out = []
            cases = [("gamma", F.gaussian_density(1.0, n_cells=n_cells)), ("scale-0.5", GaussianMeasure.scalar(0, 0.25))]
            cases.append(("trunc-1", F.truncated_gaussian(1.0, n_cells=n_cells)))
            if cfg.preset != "paper-examples":
                cases += fam()[::3]
            for label, m in cases:
                r = V.check_2n_convexity_global(m, cfg.n, times=cfg.times)
                r.name = f"conv2n-{label}"
                out.append(r)
            g2 = V.check_2n_convexity_global(GaussianMeasure.scalar(0, 0.36), cfg.n, mu1=GaussianMeasure.scalar(0, 0.81), times=cfg.times)
            g2.name = "conv2n-gaussian-pair"
            out.append(g2)
            return out

        jobs.append(("conv2n", run))
    elif suite == "hwi":

        def run():
            gauss = [(f"scale-{s}", GaussianMeasure.scalar(0, s * s)) for s in (0.25, 0.5, 0.75, 0.9, 1.0)]
            gauss += [(f"diag-{a}-{b}", GaussianMeasure([0, 0], np.diag([a, b]))) for a, b in ((0.25, 1.0), (0.5, 0.8))]
            out = []
            for o in ("mu-gamma", "gamma-mu"):
                out.append(V.check_hwi(gauss[:5], cfg.n, o))
                out.append(V.check_hwi(gauss[5:], 2.0, o))
                out[-1].name += "-2d"
            if cfg.preset != "paper-examples":
                out.append(V.check_hwi(fam(), cfg.n, "mu-gamma"))
                out[-1].name += "-grid-family"
            return out

        jobs.append(("hwi", run))
    elif suite in ("lsi", "talagrand"):
        check = V.check_lsi if suite == "lsi" else V.check_talagrand
        bad = (2.0, 10.0) if suite == "lsi" else (2.0,)

        def run():
            good = [("scale-0.5", _tz(0.5, n_cells)), ("gamma", _tz(1.0, n_cells))]
            if cfg.preset != "paper-examples":
                good = fam()
            out = [check(good, cfg.n)]
            for t in bad:
                r = check([(f"scale-{t}", _tz(t, n_cells))], cfg.n, expected="fail")
                r.name += f"-counterexample-{t}"
                out.append(r)
            return out

        jobs.append((suite, run))
    elif suite == "ou-decay":

        def run():
            cases = [("gauss-var-0.25", GaussianMeasure.scalar(0, 0.25)), ("trunc-1-ou-0.01", F.smoothed_truncated_gaussian(1.0, 0.01, 2048))]
            if cfg.preset == "full":
                cases += [(lab, m) for lab, m in F.even_strongly_log_concave_family(2048)[::4]]
            return [V.check_ou_decay(cases)]

        jobs.append(("ou-decay", run))
    elif suite == "sharpness":
        jobs.append(("sharpness", lambda: [V.check_sharpness_limits()]))
    elif suite == "variational":

        def run():
            out = [V.check_variational_principle(gamma, (-1.0, 2.0), (-8.0, 8.0, n_cells), seed=cfg.seed)]
            ref = V.radial_reference(2.0)
            count = 2 if cfg.preset == "paper-examples" else 5 if cfg.preset == "smoke" else 10
            for i in range(count):
                K = random_star_body(cfg.seed + i, base_radius=1.0)
                K = K.on(Lattice.covering(K.radial.max(), min(cfg.half_cells, 256)))
                r = V.check_variational_principle(ref, K, None, seed=cfg.seed + i)
                r.name = f"variational-body-{i}"
                out.append(r)
            return out

        jobs.append(("variational", run))
    return jobs


def run_suite(suite: str, cfg: ExperimentConfig):
    jobs = jobs_for(suite, cfg)
    threads = cfg.threads or os.cpu_count() or 1
    if threads == 1:
        chunks = [job() for _, job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda j: j[1](), jobs))  # map keeps submission order
    results = [r for chunk in chunks for r in chunk]
    if cfg.tolerance is not None:
        for r in results:
            r.tolerance = max(r.tolerance, cfg.tolerance)
    return results


def cmd_verify(args) -> int:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
    preset = args.preset or data.get("preset", "paper-examples")
    if preset not in PRESETS:
        raise UsageError(f"unknown preset {preset!r}")
    merged = {**PRESET_SIZES[preset], **data, "suite": args.suite, "preset": preset}
    for key in ("seed", "pairs", "threads", "n", "times", "tolerance"):
        val = getattr(args, key)
        if val is not None:
            merged[key] = val
    if args.p:
        merged["p"] = args.p
    cfg = ExperimentConfig.from_mapping(merged).validate()
    out_dir = Path(args.out or data.get("out") or os.environ.get(OUTDIR_ENV) or "reports")
    suites = SUITES if cfg.suite == "all" else (cfg.suite,)
    ok = True
    summary = []
    for s in suites:
        results = run_suite(s, cfg)
        payload = write_suite(out_dir, s, results)
        ok &= payload["all_as_expected"]
        bad = [r.name for r in results if not r.as_expected]
        summary.append((s, len(results), bad))
        status = "ok" if not bad else "MISMATCH " + ", ".join(bad)
        print(f"{s}: {len(results)} checks, {status}")
    cfg_dict = asdict(cfg)
    cfg_dict["out"] = str(out_dir)
    write_metadata(out_dir, config=cfg_dict, suites=list(suites))
    return EXIT_OK if ok else EXIT_MISMATCH


def _out_dir(args):
    return Path(getattr(args, "out", None) or os.environ.get(OUTDIR_ENV) or ".")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="entropic-transport", description="Optimal transport and entropy inequality laboratory.")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", help="evaluate a single quantity")
    c.add_argument("op", choices=["w2", "entropy", "relent", "fisher", "interp", "ou-evolve"])
    c.add_argument("--mu", required=True, help="gauss:mean:var | unif:a:b | trunc-gauss:a:b | grid:<file>")
    c.add_argument("--nu", help="second measure (w2, interp) or reference (relent, fisher)")
    c.add_argument("--grid", help="lo:hi:n_cells, written --grid=lo:hi:n when lo < 0 (default: covers the inputs, 4096 cells)")
    c.add_argument("--t", type=float, default=1.0, help="OU time for ou-evolve")
    c.add_argument("--times", type=int, default=33, help="time grid size for interp")
    c.add_argument("--stem", default="result", help="file stem for written outputs")
    c.add_argument("--out", help=f"output directory (env {OUTDIR_ENV})")
    c.set_defaults(func=cmd_compute)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", choices=SUITES + ("all",))
    v.add_argument("--preset", choices=PRESETS)
    v.add_argument("--config", help="JSON config file")
    v.add_argument("--seed", type=int)
    v.add_argument("--pairs", type=int, help="random star-body pairs (bm)")
    v.add_argument("--p", type=float, action="append", help="homogeneity exponent (repeatable)")
    v.add_argument("--n", type=float, help="dimension parameter")
    v.add_argument("--times", type=int, help="time grid size")
    v.add_argument("--tolerance", type=float, help="minimum verdict tolerance")
    v.add_argument("--threads", type=int, help="worker threads (default: logical cores)")
    v.add_argument("--out", help=f"report directory (env {OUTDIR_ENV}, default ./reports)")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EntropicTransportError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
