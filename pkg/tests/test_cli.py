import json
import os
import subprocess
import sys

import pytest

from entropic_transport.cli import ExperimentConfig, UsageError, main, parse_measure


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_relent_gaussian(capsys):
    code, out, _ = _run(capsys, "compute", "relent", "--mu", "gauss:0:0.25", "--nu", "gauss:0:1")
    assert code == 0
    first, rest = out.split("\n", 1)
    assert float(first) == pytest.approx(0.318147, abs=1e-6)
    prov = json.loads(rest)["provenance"]
    assert set(prov) >= {"inputs", "resolution", "tolerance"}


def test_w2_identical(capsys):
    code, out, _ = _run(capsys, "compute", "w2", "--mu", "gauss:0:1", "--nu", "gauss:0:1")
    assert code == 0 and float(out.split("\n")[0]) == 0.0


def test_fisher(capsys):
    code, out, _ = _run(capsys, "compute", "fisher", "--mu", "gauss:0:4", "--nu", "gauss:0:1")
    assert code == 0 and float(out.split("\n")[0]) == pytest.approx(2.25, rel=1e-6)


def test_entropy_uniform(capsys):
    code, out, _ = _run(capsys, "compute", "entropy", "--mu", "unif:0:2")
    assert float(out.split("\n")[0]) == pytest.approx(0.6931471806, abs=1e-9)


def test_relent_truncated_and_radial(capsys):
    _, out, _ = _run(capsys, "compute", "relent", "--mu", "trunc-gauss:-1:1")
    assert float(out.split("\n")[0]) == pytest.approx(0.381715, abs=1e-6)
    code, _, _ = _run(capsys, "compute", "relent", "--mu", "unif:-1:1", "--nu", "radial:3")
    assert code == 0


def test_grid_input_and_bundle(tmp_path, capsys):
    _, _, _ = _run(capsys, "compute", "ou-evolve", "--mu", "unif:-1:1", "--t", "0.5", "--out", str(tmp_path), "--stem", "ev")
    assert (tmp_path / "ev.csv").exists()
    code, out, _ = _run(capsys, "compute", "entropy", "--mu", f"grid:{tmp_path / 'ev.csv'}")
    assert code == 0
    code, _, _ = _run(capsys, "compute", "interp", "--mu", "gauss:0:1", "--nu", "gauss:1:2", "--times", "5", "--out", str(tmp_path))
    assert code == 0
    index = json.loads((tmp_path / "result.json").read_text())
    assert len(index["densities"]) == 5


@pytest.mark.parametrize(
    "argv",
    [
        ["compute", "relent", "--mu", "gauss:0"],
        ["compute", "relent", "--mu", "cauchy:0:1"],
        ["compute", "relent", "--mu", "gauss:0:-1"],
        ["compute", "w2", "--mu", "gauss:0:1"],
        ["compute", "relent", "--mu", "grid:/nonexistent.csv"],
        ["compute", "relent", "--mu", "gauss:0:1", "--nu", "gauss:1:1"],
        ["compute", "frobnicate", "--mu", "gauss:0:1"],
        ["verify", "lsi", "--p", "0.5"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_computation_error_exit_1(capsys):
    # a zero-mass restriction: the interval lies outside the grid
    code, _, err = _run(capsys, "compute", "relent", "--mu", "unif:20:21", "--grid=-8:8:64")
    assert code == 1
    assert "computation failed" in err


def test_config_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 1, "colour": "blue"}))
    assert main(["verify", "sharpness", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    with pytest.raises(UsageError):
        ExperimentConfig.from_mapping({"bogus": 1})
    with pytest.raises(UsageError):
        ExperimentConfig(times=3).validate()


def test_parse_measure_kinds():
    assert parse_measure("unif:0:1") == ("unif", 0.0, 1.0)
    with pytest.raises(UsageError):
        parse_measure("unif:1:0")


def test_verify_writes_reports(tmp_path, capsys):
    code, out, _ = _run(capsys, "verify", "sharpness", "--out", str(tmp_path))
    assert code == 0
    for name in ("sharpness.json", "sharpness.md", "sharpness.csv", "metadata.json"):
        assert (tmp_path / name).exists()
    payload = json.loads((tmp_path / "sharpness.json").read_text())
    assert payload["all_as_expected"]
    assert all(r["tag"] for r in payload["results"])


def test_env_var_sets_output_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("ENTROPIC_TRANSPORT_OUTDIR", str(tmp_path / "env"))
    assert main(["verify", "sharpness"]) == 0
    assert (tmp_path / "env" / "sharpness.json").exists()


def test_verdict_mismatch_exit_3(tmp_path, capsys):
    # a huge tolerance turns the expected counterexamples into passes
    assert main(["verify", "talagrand", "--tolerance", "10", "--out", str(tmp_path)]) == 3


def test_reports_identical_across_thread_counts(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["verify", "cd0n", "--preset", "smoke", "--threads", "1", "--out", str(a)]) == 0
    assert main(["verify", "cd0n", "--preset", "smoke", "--threads", "8", "--out", str(b)]) == 0
    for name in ("cd0n.json", "cd0n.md", "cd0n.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_console_entry_point(tmp_path):
    env = dict(os.environ, ENTROPIC_TRANSPORT_OUTDIR=str(tmp_path))
    res = subprocess.run(
        [sys.executable, "-m", "entropic_transport", "compute", "w2", "--mu", "unif:0:1", "--nu", "unif:2:3"],
        capture_output=True,
        text=True,
        env=env,
    )
    assert res.returncode == 0
    assert float(res.stdout.split("\n")[0]) == pytest.approx(2.0, rel=1e-12)
