import csv
import io
import math

import numpy as np
import pytest

from nonlocal_capillarity import cli
from nonlocal_capillarity.kernels import AnisotropyFn
from nonlocal_capillarity.reduction import build_phi
from nonlocal_capillarity.regions import format_raster, read_raster
from nonlocal_capillarity.young import YoungProblem, solve_contact_angle


def _run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_solve_angle_default_is_right_angle(capsys):
    code, out, _ = _run(capsys, "solve-angle")
    assert code == 0
    row = _rows(out)[0]
    assert row["regime"] == "interior"
    assert abs(float(row["theta_rad"]) - math.pi / 2) < 1e-8
    assert row["unique"] == "true"


def test_solve_angle_from_file_with_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# isotropic, hydrorepellent\ns1 = 0.5\ns2 = 0.5\nsigma = 0.1\n")
    code, out, _ = _run(capsys, "solve-angle", str(cfg), "--set", "sigma=0.3",
                        "--set", f"output_dir={tmp_path / 'out'}")
    assert code == 0
    assert float(_rows(out)[0]["theta_rad"]) == pytest.approx(1.9342530948423042, abs=1e-9)
    resolved = (tmp_path / "out" / "config.resolved").read_text()
    assert "sigma = 0.3" in resolved
    assert (tmp_path / "out" / "angle.csv").read_text() == out


def test_regime_outputs(capsys):
    code, out, _ = _run(capsys, "solve-angle", "--set", "s1=0.3", "--set", "s2=0.6", "--set", "sigma=-1")
    assert code == 0 and _rows(out)[0]["regime"] == "sticking"
    code, out, _ = _run(capsys, "solve-angle", "--set", "sigma=1.5")
    assert code == 2 and _rows(out)[0]["regime"] == "no-interior-solution"


def test_anisotropy_table_input(tmp_path, capsys):
    table = tmp_path / "a1.txt"
    a = AnisotropyFn.planar(lambda t: 1 + 0.3 * np.sin(2 * t))
    table.write_text(a.to_table(720))
    code, out, _ = _run(capsys, "solve-angle", "--set", f"a1={table}")
    assert code == 0
    direct = solve_contact_angle(YoungProblem(0.5, 0.5, 0.0, build_phi(a, 2, 0.5))).theta
    assert abs(direct - math.pi / 2) > 0.05
    assert float(_rows(out)[0]["theta_rad"]) == pytest.approx(direct, abs=1e-4)


@pytest.mark.parametrize("argv", [
    ["solve-angle", "--set", "s1=1.5"],
    ["solve-angle", "--set", "bogus=1"],
    ["solve-angle", "--set", "sigma=abc"],
    ["solve-angle", "--set", "a1=/no/such/table"],
    ["minimize", "--set", "m=0"],
])
def test_config_errors_exit_one(capsys, argv):
    code, _, err = _run(capsys, *argv)
    assert code == 1
    assert err.startswith("nlcap:")


def test_scan_over_sigma(capsys):
    code, out, _ = _run(capsys, "scan", "--set", "start=-0.5", "--set", "stop=0.5", "--set", "steps=5")
    assert code == 0
    rows = _rows(out)
    theta = [float(r["theta_rad"]) for r in rows]
    assert len(rows) == 5 and np.all(np.diff(theta) > 0)
    assert theta[2] == pytest.approx(math.pi / 2, abs=1e-8)


def test_scan_workers_match_serial(capsys, monkeypatch):
    argv = ["scan", "--set", "sweep=s1", "--set", "start=0.2", "--set", "stop=0.8", "--set", "steps=4",
            "--set", "sigma=0.2"]
    _, serial, _ = _run(capsys, *argv)
    monkeypatch.setenv("NLCAP_WORKERS", "2")
    _, parallel, _ = _run(capsys, *argv)
    assert serial == parallel


@pytest.mark.parametrize("suite", ["reduction", "duality", "dual-angle"])
def test_verify_suites_pass(capsys, suite):
    code, out, _ = _run(capsys, "verify", "--suite", suite)
    assert code == 0
    assert out and all(line.startswith("PASS") for line in out.splitlines())


def test_verify_cstar_reports_constant_mismatch(capsys):
    code, out, _ = _run(capsys, "verify", "--suite", "cstar")
    lines = out.splitlines()
    # the closed form is off by a factor pi; everything else agrees
    assert code == 1
    assert [line.split()[0] for line in lines].count("FAIL") == 1
    assert lines[0].startswith("FAIL slab vs closed-form")


def test_unknown_suite_is_config_error(capsys):
    code, _, err = _run(capsys, "verify", "--suite", "nonsense")
    assert code == 1 and "suite" in err


def test_minimize_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    argv = ["minimize", "--set", "width=20", "--set", "height=14", "--set", "m=60", "--set", "sweeps=40",
            "--set", "sigma=-0.3", "--set", f"output_dir={out}"]
    code, text, _ = _run(capsys, *argv)
    assert code == 0
    for name in ("config.resolved", "mask.pbm", "trace.csv", "angle.csv"):
        assert (out / name).exists()
    mask = read_raster(out / "mask.pbm")
    assert mask.shape == (14, 20) and mask.sum() == 60
    angle = _rows((out / "angle.csv").read_text())[0]
    assert float(angle["theta_pred_deg"]) < 90
    first = (out / "mask.pbm").read_text()
    _run(capsys, *argv)
    assert (out / "mask.pbm").read_text() == first


def test_minimize_with_container_raster(tmp_path, capsys):
    omega = np.ones((10, 12), bool)
    omega[6:, :4] = False
    (tmp_path / "omega.pbm").write_text(format_raster(omega))
    code, _, _ = _run(capsys, "minimize", "--set", f"omega={tmp_path / 'omega.pbm'}", "--set", "m=20",
                      "--set", "sweeps=20", "--set", "wall=none", "--set", f"output_dir={tmp_path / 'o'}")
    assert code == 0
    mask = read_raster(tmp_path / "o" / "mask.pbm")
    assert not np.any(mask & ~omega)
