"""Report writers: deterministic JSON, Markdown tables and plot-ready CSV."""

from __future__ import annotations

import csv
import json
import platform
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .verify import VerificationResult, _jsonable


def suite_payload(suite: str, results: list[VerificationResult]) -> dict:
    return {
        "suite": suite,
        "all_as_expected": all(r.as_expected for r in results),
        "results": [r.to_dict() for r in results],
    }


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if not np.isfinite(x):
        return str(x)
    return f"{x:.6g}"


def markdown_table(suite: str, results: list[VerificationResult]) -> str:
    lines = [
        f"# {suite}",
        "",
        "| check | tag | cases | min margin | tolerance | verdict | expected | caveats |",
        "|---|---|---|---|---|---|---|---|",
    ]
    for r in results:
        flag = r.verdict if r.as_expected else f"**{r.verdict}**"
        lines.append(
            f"| {r.name} | {r.tag} | {len(r.cases)} | {_fmt(r.min_margin)} | {_fmt(r.tolerance)} "
            f"| {flag} | {r.expected} | {'; '.join(r.caveats)} |"
        )
    return "\n".join(lines) + "\n"


def write_suite(out_dir, suite: str, results: list[VerificationResult]) -> dict:
    """Write ``<suite>.json``, ``<suite>.md`` and ``<suite>.csv`` and return the JSON payload."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = suite_payload(suite, results)
    (out / f"{suite}.json").write_text(dumps(payload))
    (out / f"{suite}.md").write_text(markdown_table(suite, results))
    with open(out / f"{suite}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["check", "tag", "case", "margin", "tolerance", "verdict", "expected"])
        for r in results:
            for case, m in zip(r.cases, r.margins):
                w.writerow([r.name, r.tag, case, repr(float(m)), repr(float(r.tolerance)), r.verdict, r.expected])
    return payload


def write_metadata(out_dir, **info):
    """Run metadata (timestamps, versions) kept apart from the deterministic reports."""
    import scipy

    from . import __version__

    meta = {
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "package_version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
        **info,
    }
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    (Path(out_dir) / "metadata.json").write_text(dumps(meta))
    return meta
