import json
import subprocess
import sys

import pytest

from thetasde.cli import main

pytestmark = pytest.mark.usefixtures("clean_outdir_env")


@pytest.fixture
def clean_outdir_env(monkeypatch):
    monkeypatch.delenv("THETASDE_OUTDIR", raising=False)


def run_cli(capsys, *argv):
    rc = main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


# ---------------------------------------------------------------------------
# region

def test_region_problem1(capsys):
    rc, out, _ = run_cli(capsys, "region", "--problem", "problem1")
    assert rc == 0
    lines = out.splitlines()
    assert lines[0].startswith("constants: L=1 mu=-4 M=16")
    assert "[paper-preset]" in lines[0]
    assert lines[1] == "R = (0, 7/4)"
    assert lines[2] == "  = (0, 1.75)"


def test_region_unconditional(capsys):
    rc, out, _ = run_cli(capsys, "region", "--problem", "problem3",
                         "--theta", "1")
    assert rc == 0
    assert "R = (0, ∞), unconditional" in out


def test_region_mtilde_fraction_override(capsys):
    rc, out, _ = run_cli(capsys, "region", "--problem", "problem1",
                         "--scheme", "milstein", "--mtilde", "2/3")
    assert rc == 0
    assert "R = (0, 14/9)" in out
    assert "M_tilde=0.666667" in out


def test_region_fractional_theta(capsys):
    rc, out, _ = run_cli(capsys, "region", "--problem", "problem2",
                         "--theta", "13/20")
    assert rc == 0
    assert "R = (0, 144/49)" in out


def test_region_empty_from_constants_file(capsys, tmp_path):
    consts = tmp_path / "c.json"
    consts.write_text(json.dumps({"L": 1.0, "mu": 0.0, "M": 1.0}))
    rc, out, _ = run_cli(capsys, "region", "--problem", "problem1",
                         "--constants", str(consts))
    assert rc == 0
    assert "R = ∅; not mean-square contractive" in out


def test_region_json_payload(capsys):
    rc, out, _ = run_cli(capsys, "region", "--problem", "problem1",
                         "--json")
    assert rc == 0
    data = json.loads(out)
    assert data["region"]["sup_display"] == "7/4"
    assert data["region"]["sup"] == 1.75
    assert data["region"]["unconditional"] is False
    assert data["constants"]["L"] == 1.0
    assert data["constants"]["mu"] == -4.0


def test_region_constants_file_missing_key(capsys, tmp_path):
    consts = tmp_path / "c.json"
    consts.write_text(json.dumps({"L": 1.0, "mu": -4.0}))
    rc, _, err = run_cli(capsys, "region", "--problem", "problem1",
                         "--constants", str(consts))
    assert rc == 2
    assert "misses key" in err


def test_region_estimated_constants(capsys):
    rc, out, _ = run_cli(capsys, "region", "--problem", "problem2",
                         "--constants", "estimated",
                         "--paths", "100", "--pairs", "400")
    assert rc == 0
    assert "[estimated]" in out.splitlines()[0]
    assert "R = (0," in out


# ---------------------------------------------------------------------------
# error handling

def test_bad_theta_rejected_at_parse_time(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["region", "--problem", "problem1", "--theta", "1.5"])
    assert exc.value.code == 2
    assert "theta must lie in [0, 1]" in capsys.readouterr().err


def test_unknown_problem_is_runtime_error(capsys):
    rc, _, err = run_cli(capsys, "region", "--problem", "nosuch")
    assert rc == 1
    assert err.startswith("error: unknown problem 'nosuch'")
    assert "linear, problem1, problem2, problem3" in err


def test_unknown_preset_is_usage_error(capsys, tmp_path):
    rc, _, err = run_cli(capsys, "experiment", "--preset", "fig99",
                         "--out", str(tmp_path))
    assert rc == 2
    assert "unknown preset" in err


def test_unknown_config_keys_rejected(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"problem": "problem1", "stepsizes": [0.5]}))
    rc, _, err = run_cli(capsys, "experiment", "--config", str(cfg),
                         "--out", str(tmp_path))
    assert rc == 2
    assert "unknown config keys: stepsizes" in err


def test_bad_range_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["linear-stability", "--u-range", "1:2"])
    assert exc.value.code == 2


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


# ---------------------------------------------------------------------------
# simulate

def test_simulate_writes_named_csv(capsys, tmp_path):
    rc, out, _ = run_cli(capsys, "simulate", "--problem", "problem1",
                         "--dt", "0.5", "--horizon", "2",
                         "--out", str(tmp_path))
    assert rc == 0
    path = tmp_path / "trajectory_problem1_maruyama_theta0.5_dt0.5_path0.csv"
    assert path.exists()
    assert str(path) in out
    lines = path.read_text().splitlines()
    assert lines[1] == "t,x"
    assert len(lines) == 2 + 5


def test_simulate_pair_and_determinism(capsys, tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    args = ("simulate", "--problem", "problem1", "--dt", "0.5",
            "--horizon", "2", "--pair", "--seed", "7")
    assert run_cli(capsys, *args, "--out", str(a))[0] == 0
    assert run_cli(capsys, *args, "--out", str(b))[0] == 0
    name = "trajectory_problem1_maruyama_theta0.5_dt0.5_path0.csv"
    assert (a / name).read_bytes() == (b / name).read_bytes()
    header = (a / name).read_text().splitlines()[1]
    assert header == "t,x,y"


# ---------------------------------------------------------------------------
# estimate

def test_estimate_json_stdout(capsys):
    rc, out, _ = run_cli(capsys, "estimate", "--problem", "problem1",
                         "--paths", "100", "--pairs", "400")
    assert rc == 0
    data = json.loads(out)
    assert data["constants"]["L"] == 1.0
    assert -4.1 < data["constants"]["mu"] < -3.9
    assert data["constants"]["M"] > 0.0
    assert data["constants"]["provenance"]["L"] == "estimated"
    assert data["config"]["pairs"] == 400
    assert len(data["box"]["lower"]) == 1


def test_estimate_writes_file_on_request(capsys, tmp_path):
    rc, out, _ = run_cli(capsys, "estimate", "--problem", "problem1",
                         "--paths", "60", "--pairs", "200",
                         "--out", str(tmp_path))
    assert rc == 0
    path = tmp_path / "estimate_problem1.json"
    assert json.loads(path.read_text()) == json.loads(out)


def test_estimate_milstein_includes_mtilde(capsys):
    rc, out, _ = run_cli(capsys, "estimate", "--problem", "problem1",
                         "--scheme", "milstein",
                         "--paths", "60", "--pairs", "200")
    assert rc == 0
    data = json.loads(out)
    assert data["constants"]["M_tilde"] is not None


# ---------------------------------------------------------------------------
# experiment

def run_experiment(capsys, outdir, *extra):
    argv = ["experiment", "--problem", "problem1", "--dt-list", "0.5,2.0",
            "--paths", "40", "--seed", "9", "--out", str(outdir)]
    argv.extend(extra)
    return run_cli(capsys, *argv)


def test_experiment_outputs(capsys, tmp_path):
    rc, out, _ = run_experiment(capsys, tmp_path)
    assert rc == 0
    assert (tmp_path / "msd_dt0.5.csv").exists()
    assert (tmp_path / "msd_dt2.csv").exists()
    assert (tmp_path / "decay.png").exists()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"]["problem"] == "problem1"
    assert manifest["config"]["dts"] == [0.5, 2.0]
    assert manifest["config"]["paths"] == 40
    assert manifest["region"]["sup_display"] == "7/4"
    assert manifest["figure"] == "decay.png"
    rows = manifest["rows"]
    assert [r["dt"] for r in rows] == [0.5, 2.0]
    assert rows[0]["in_region"] is True
    assert rows[1]["in_region"] is False
    assert rows[0]["csv"] == "msd_dt0.5.csv"
    assert "region_sup=7/4" in out
    assert "dt=0.5: in_region=True" in out


def test_experiment_no_figure(capsys, tmp_path):
    rc, _, _ = run_experiment(capsys, tmp_path, "--no-figure")
    assert rc == 0
    assert not (tmp_path / "decay.png").exists()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["figure"] is None


def test_experiment_manifest_roundtrip(capsys, tmp_path):
    first = tmp_path / "first"
    second = tmp_path / "second"
    rc, _, _ = run_experiment(capsys, first)
    assert rc == 0
    rc, _, _ = run_cli(capsys, "experiment",
                       "--config", str(first / "manifest.json"),
                       "--out", str(second))
    assert rc == 0
    for name in ("msd_dt0.5.csv", "msd_dt2.csv", "manifest.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_experiment_workers_do_not_change_outputs(capsys, tmp_path):
    a = tmp_path / "w1"
    b = tmp_path / "w4"
    assert run_experiment(capsys, a, "--workers", "1")[0] == 0
    assert run_experiment(capsys, b, "--workers", "4")[0] == 0
    for name in ("msd_dt0.5.csv", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_experiment_preset(capsys, tmp_path):
    rc, out, _ = run_cli(capsys, "experiment", "--preset", "fig7",
                         "--dt-list", "0.5", "--paths", "30",
                         "--out", str(tmp_path))
    assert rc == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"]["problem"] == "problem3"
    assert manifest["config"]["theta"] == 1.0
    assert manifest["config"]["preset"] == "fig7"
    assert manifest["region"]["unconditional"] is True


def test_experiment_env_outdir(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("THETASDE_OUTDIR", str(tmp_path))
    rc, _, _ = run_cli(capsys, "experiment", "--problem", "problem1",
                       "--dt-list", "0.5", "--paths", "20", "--no-figure")
    assert rc == 0
    assert (tmp_path / "manifest.json").exists()


def test_experiment_row_errors_are_reported_not_fatal(capsys, tmp_path):
    import dataclasses
    # Milstein on the non-commutative problem: region comes from a
    # constants file, each row then fails in the integrator
    from thetasde.problems import builtin_problem
    consts = tmp_path / "c.json"
    consts.write_text(json.dumps(
        {"L": 0.148, "mu": -3.56, "M": 16.0, "M_tilde": 1.0}))
    rc, out, _ = run_cli(capsys, "experiment", "--problem", "problem3",
                         "--scheme", "milstein", "--dt-list", "0.25",
                         "--paths", "10", "--constants", str(consts),
                         "--out", str(tmp_path), "--no-figure")
    assert rc == 0
    assert "error: UnsupportedProblemError" in out
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["rows"][0]["error"] is not None


# ---------------------------------------------------------------------------
# linear stability raster

def test_linear_stability_outputs(capsys, tmp_path):
    rc, out, _ = run_cli(capsys, "linear-stability", "--theta", "0.5",
                         "--u-range=-4:1:6", "--v-range", "0:4:5",
                         "--out", str(tmp_path))
    assert rc == 0
    lines = (tmp_path / "stability.csv").read_text().splitlines()
    assert len(lines) == 2 + 6 * 5
    assert lines[1] == "u,v,factor,stable"
    assert (tmp_path / "stability.png").exists()
    assert "stable share" in out


def test_linear_stability_survives_singular_grid_line(capsys, tmp_path):
    # u = 1/theta makes the implicit step singular; the raster marks the
    # point unstable instead of dying
    rc, _, _ = run_cli(capsys, "linear-stability", "--theta", "0.5",
                       "--u-range", "0:2:3", "--v-range", "0:1:2",
                       "--out", str(tmp_path))
    assert rc == 0
    rows = (tmp_path / "stability.csv").read_text().splitlines()[2:]
    singular = [r for r in rows if r.startswith("2.0,")]
    assert singular
    for row in singular:
        assert row.split(",")[2] == "inf"
        assert row.split(",")[3] == "0.0"


def test_linear_stability_rejects_negative_v(capsys, tmp_path):
    rc, _, err = run_cli(capsys, "linear-stability",
                         "--v-range=-1:1:5", "--out", str(tmp_path))
    assert rc == 2
    assert "cannot be negative" in err


# ---------------------------------------------------------------------------
# module entry point

def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "thetasde", "region",
         "--problem", "problem1"],
        capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "R = (0, 7/4)" in proc.stdout


def test_module_entry_point_version():
    proc = subprocess.run(
        [sys.executable, "-m", "thetasde", "--version"],
        capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.strip()
