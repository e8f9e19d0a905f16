"""End-to-end tests of the command-line interface and artifact files."""
import json

import numpy as np
import pytest

from sfase import io
from sfase.cli import EXIT_CONFIG, EXIT_OK, main


@pytest.fixture()
def toy_file(tmp_path, toy_dict):
    path = tmp_path / "toy.json"
    path.write_text(json.dumps(toy_dict))
    return str(path)


# ---------------------------------------------------------------------------
# validate / oracle
# ---------------------------------------------------------------------------

def test_validate_preset(capsys):
    assert main(["validate", "fig3a"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "alpha = 192" in out
    assert "grid:" in out


def test_validate_missing_file():
    assert main(["validate", "/nonexistent/scenario.json"]) == EXIT_CONFIG


def test_validate_rejects_bad_json(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["validate", str(bad)]) == EXIT_CONFIG


def test_oracle_reports_analytics(capsys, tmp_path):
    out_dir = tmp_path / "oracle"
    assert main(["oracle", "fig3a", "--out", str(out_dir)]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["alpha"] == pytest.approx(192.0)
    assert report["eta_thz_per_mm"] == pytest.approx(96.0)
    on_disk = json.loads((out_dir / "oracle.json").read_text())
    assert on_disk["alpha"] == pytest.approx(192.0)
    assert (out_dir / "manifest.json").exists()


# ---------------------------------------------------------------------------
# run / ensemble
# ---------------------------------------------------------------------------

def test_run_writes_record(tmp_path, toy_file):
    out = tmp_path / "run"
    assert main(["run", "--scenario", toy_file, "--out", str(out),
                 "--seed", "3"]) == EXIT_OK
    assert (out / "manifest.json").exists()
    record = out / "run.csv"
    assert record.exists()
    t, re_p = io.read_xy_csv(record, "t_ps", "re_omega_plus")
    _, im_p = io.read_xy_csv(record, "t_ps", "im_omega_plus")
    assert len(t) > 100
    assert np.max(np.hypot(np.asarray(re_p), np.asarray(im_p))) > 0.0


def test_ensemble_outputs_and_manifest_replay(tmp_path, toy_file):
    out = tmp_path / "ens"
    assert main(["ensemble", "--scenario", toy_file, "--out", str(out),
                 "--ne", "4", "--seed", "11"]) == EXIT_OK
    realizations = (out / "realizations.csv").read_text()
    assert realizations.count("\n") == 5        # header + 4 rows
    summary = json.loads((out / "summary.json").read_text())
    assert summary["n_realizations"] == 4
    assert 0.0 <= summary["forward"]["threshold_probability"] <= 1.0

    # replaying the manifest must reproduce the realization scalars bitwise
    out2 = tmp_path / "ens_replay"
    manifest = json.loads((out / "manifest.json").read_text())
    manifest["plan"]["out_dir"] = str(out2)
    replay = tmp_path / "manifest2.json"
    replay.write_text(json.dumps(manifest))
    assert main(["ensemble", "--from-manifest", str(replay)]) == EXIT_OK
    assert (out2 / "realizations.csv").read_text() == realizations


def test_ensemble_requires_scenario_and_out(toy_file):
    assert main(["ensemble", "--scenario", toy_file]) == EXIT_CONFIG
    assert main(["ensemble", "--out", "/tmp/x"]) == EXIT_CONFIG


def test_ne_preset_spelling(tmp_path, toy_file):
    out = tmp_path / "bad_ne"
    assert main(["ensemble", "--scenario", toy_file, "--out", str(out),
                 "--ne", "dozen"]) == EXIT_CONFIG


# ---------------------------------------------------------------------------
# sweep / fit
# ---------------------------------------------------------------------------

def test_sweep_length_fixed_alpha(tmp_path, toy_file):
    out = tmp_path / "sweep"
    assert main(["sweep", "--kind", "L", "--scenario", toy_file,
                 "--out", str(out), "--ne", "2", "--l-grid", "0.02,0.03",
                 "--fixed-alpha", "480"]) == EXIT_OK
    text = (out / "map.csv").read_text()
    assert "alpha" in text.splitlines()[0]
    assert text.count("\n") == 3
    assert (out / "point_000").is_dir()


def test_sweep_requires_kind(tmp_path, toy_file):
    assert main(["sweep", "--scenario", toy_file,
                 "--out", str(tmp_path / "s")]) == EXIT_CONFIG


def test_sweep_tp_quadrature(tmp_path):
    out = tmp_path / "tp"
    assert main(["sweep", "--kind", "Tp", "--scenario", "fig4",
                 "--out", str(out), "--tp-grid", "10,20,30",
                 "--q-grid", "1,4"]) == EXIT_OK
    tp, inv1 = io.read_xy_csv(out / "pump_study.csv",
                              "tau_p_fs", "max_inversion_q1")
    _, inv4 = io.read_xy_csv(out / "pump_study.csv",
                             "tau_p_fs", "max_inversion_q4")
    assert len(tp) == 3
    assert np.all(np.asarray(inv1) <= 1.0)
    assert np.all(np.asarray(inv4) <= 1.0)
    # stronger pump at the same duration leaves more inversion
    assert np.all(np.asarray(inv4) >= np.asarray(inv1))


def test_fit_command(tmp_path):
    x = np.linspace(100, 600, 10)
    y = 0.5 * np.exp(0.02 * x)
    data = tmp_path / "data.csv"
    io.write_csv(data, ["alpha", "peak_fwd"], [list(x), list(y)])
    out = tmp_path / "fit"
    assert main(["fit", "--family", "exp_gain", "--data", str(data),
                 "--out", str(out)]) == EXIT_OK
    result = json.loads((out / "fit.json").read_text())
    assert result["coefficients"][1] == pytest.approx(0.02, rel=1e-4)
    assert result["converged"]


def test_fit_unknown_family(tmp_path):
    data = tmp_path / "d.csv"
    io.write_csv(data, ["alpha", "peak_fwd"], [[1, 2, 3], [1, 2, 3]])
    assert main(["fit", "--family", "cubic", "--data", str(data),
                 "--out", str(tmp_path / "f")]) == EXIT_CONFIG


# ---------------------------------------------------------------------------
# io round trips
# ---------------------------------------------------------------------------

def test_csv_roundtrip_preserves_floats(tmp_path):
    path = tmp_path / "x.csv"
    x = [0.1, 1.0 / 3.0, 1e-300]
    y = [1.5, 2.5, 3.5]
    io.write_csv(path, ["a", "b"], [x, y])
    xa, ya = io.read_xy_csv(path, "a", "b")
    np.testing.assert_array_equal(xa, x)
    np.testing.assert_array_equal(ya, y)


def test_read_xy_missing_column(tmp_path):
    path = tmp_path / "x.csv"
    io.write_csv(path, ["a", "b"], [[1.0], [2.0]])
    with pytest.raises(ValueError):
        io.read_xy_csv(path, "a", "missing")
