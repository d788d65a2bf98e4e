import json
import subprocess
import sys

import numpy as np
import pytest

from ringsense.cli import main
from ringsense.runner import read_csv


def _write(tmp_path, text, name="cfg.yaml"):
    f = tmp_path / name
    f.write_text(text)
    return str(f)


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _run_dir(stdout):
    return json.loads(stdout)["run_dir"]


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as e:
        main(["spectrum", "--bogus"])
    assert e.value.code == 2


def test_unknown_subcommand_is_usage_error():
    r = subprocess.run([sys.executable, "-m", "ringsense", "frobnicate"], capture_output=True, text=True)
    assert r.returncode == 2


def test_config_error_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, "system: {cavity_linewidth: -2}\n")
    code, _, err = _run(capsys, "spectrum", "--config", cfg, "--out", str(tmp_path))
    assert code == 2
    assert json.loads(err)["error"] == "ConfigError"


def test_solver_error_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, "system: {coupling: 0}\n")
    code, out, _ = _run(capsys, "sensitivity", "--config", cfg, "--out", str(tmp_path))
    assert code == 1
    report = json.loads(out)
    assert report["status"] == "error" and report["failures"][0]["status"] == "failed"


def test_spectrum_without_collisions(tmp_path, capsys):
    cfg = _write(tmp_path, "system: {collision_rate: 0}\ngrid: {start: 400, stop: 900, points: 10000}\n")
    code, out, _ = _run(capsys, "spectrum", "--preset", "paper-defaults", "--config", cfg, "--out", str(tmp_path))
    assert code == 0
    d = _run_dir(out)
    cols, units, data = read_csv(f"{d}/points/point_00000.csv")
    assert cols == ["omega_hz", "S_total", "S_sn", "S_rp", "S_th", "S_add"]
    assert units["omega_hz"] == "Hz"
    w, s = data[:, 0], data[:, 1]
    lo, hi = w < 632, w >= 632
    assert w[lo][np.argmax(s[lo])] == pytest.approx(569, abs=2)
    assert w[hi][np.argmax(s[hi])] == pytest.approx(695, abs=2)
    assert data.shape[0] == 10000  # empty sweep: one point, one row per ω


def test_bae_spectrum_summary(tmp_path, capsys):
    code, out, _ = _run(capsys, "bae-spectrum", "--preset", "paper-defaults", "--out", str(tmp_path))
    assert code == 0
    summary = json.load(open(f"{_run_dir(out)}/summary.json"))
    assert summary["points"][0]["summary"]["peak_hz"] == pytest.approx(63.0, abs=0.5)


def test_angle_scan_ridge(tmp_path, capsys):
    cfg = _write(tmp_path, "angles: 33\n")
    code, out, _ = _run(capsys, "angle-scan", "--config", cfg, "--out", str(tmp_path))
    assert code == 0
    d = _run_dir(out)
    s = json.load(open(f"{d}/summary.json"))["points"][0]["summary"]
    assert s["ridge_phi_over_pi_at_peaks"] == [0.5, 0.5]
    cols, _, data = read_csv(f"{d}/points/point_00000.csv")
    assert cols[0] == "phi_over_pi" and data[:, 0].min() == 0 and data[:, 0].max() == 1


def test_bistability_kappa_axis(tmp_path, capsys):
    cfg = _write(tmp_path, "drive: {P_plus: 1e-19, P_minus: 1e-19}\nbistability_grid: {start: 10, stop: 1e4, points: 31, spacing: log}\n")
    code, out, _ = _run(capsys, "bistability", "--axis", "kappa", "--config", cfg, "--out", str(tmp_path))
    assert code == 0
    d = _run_dir(out)
    cols, units, data = read_csv(f"{d}/points/point_00000.csv")
    assert cols[:2] == ["kappa", "branch_count"] and units["kappa"] == "Hz"
    bc = data[:, 1]
    assert bc[0] == 3 and bc[-1] == 1 and np.count_nonzero(np.diff(bc)) == 1


SWEEP = """grid: {start: 600, stop: 800, points: 500}
sweep:
  - {path: squeeze.r, start: 0, stop: 1, points: 2}
  - {path: system.input_power, start: 1e-15, stop: 1e-14, points: 2, spacing: log}
"""


def _tree(d):
    import pathlib

    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(pathlib.Path(d).rglob("*")) if p.is_file() and p.name != "manifest.json"}


def test_determinism_and_parallel_equivalence(tmp_path, capsys):
    cfg = _write(tmp_path, SWEEP)
    outs = []
    for sub, jobs in (("a", "1"), ("b", "1"), ("c", "3")):
        code, out, _ = _run(capsys, "spectrum", "--config", cfg, "--out", str(tmp_path / sub), "--jobs", jobs)
        assert code == 0
        outs.append(_tree(_run_dir(out)))
    assert outs[0] == outs[1] == outs[2]
    assert sum(k.endswith(".csv") for k in outs[0]) == 4


def test_rerun_with_force_is_byte_identical(tmp_path, capsys):
    cfg = _write(tmp_path, SWEEP)
    _, out, _ = _run(capsys, "spectrum", "--config", cfg, "--out", str(tmp_path))
    before = _tree(_run_dir(out))
    _, out, _ = _run(capsys, "spectrum", "--config", cfg, "--out", str(tmp_path), "--force")
    assert _tree(_run_dir(out)) == before


def test_resumability(tmp_path, capsys):
    cfg = _write(tmp_path, SWEEP)
    _, out, _ = _run(capsys, "spectrum", "--config", cfg, "--out", str(tmp_path), "--jobs", "1")
    d = _run_dir(out)
    before = _tree(d)
    import os

    os.remove(f"{d}/points/point_00002.csv")
    os.remove(f"{d}/points/point_00002.json")
    _run(capsys, "spectrum", "--config", cfg, "--out", str(tmp_path), "--jobs", "1")
    manifest = json.load(open(f"{d}/manifest.json"))
    reused = [p["reused"] for p in manifest["points"]]
    assert reused == [True, True, False, True]
    assert _tree(d) == before


def test_manifest_contents(tmp_path, capsys):
    _, out, _ = _run(capsys, "steady-state", "--out", str(tmp_path))
    m = json.load(open(f"{_run_dir(out)}/manifest.json"))
    assert m["constants"]["hbar"] == pytest.approx(1.054571817e-34)
    assert {"config_hash", "tool_version", "wall_clock_s", "points", "config"} <= set(m)
    assert m["points"][0]["status"] in ("ok", "bistable-skipped", "failed")


def test_validate_default(tmp_path, capsys):
    code, out, _ = _run(capsys, "steady-state", "--out", str(tmp_path))
    code, out, _ = _run(capsys, "validate", "--preset", "paper-defaults", "--out", str(tmp_path))
    assert code == 0
    checks = json.loads(out)["checks"]
    assert all(c["passed"] for c in checks)
    assert any(c["name"] == "emitted CSV schema" for c in checks)


def test_validate_flags_corrupt_csv(tmp_path, capsys):
    bad = tmp_path / "x.csv"
    bad.write_text("a,b\n1,2\n")
    code, out, _ = _run(capsys, "validate", "--out", str(tmp_path))
    assert code == 1
    assert not [c for c in json.loads(out)["checks"] if c["name"] == "emitted CSV schema"][0]["passed"]
