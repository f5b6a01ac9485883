import csv
from importlib import resources

import pytest

from targetpoint.cli import main

DATA = resources.files("targetpoint") / "data"


def cfg_path(name):
    return str(DATA / name)


def write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


SMALL = """\
[path]
kind = circle
kappa0 = 0.05
[vehicle]
d = 2
vx = 5
[gains]
mode = manual
k1 = 7500
k2 = 200
C1 = 0.1172
C2 = 0.5
D = 50
[init]
e_p0 = 1
e_q0 = 1
xi0 = 0.1
[sim]
dt = 1e-3
t_end = 0.5
"""


def test_gains_k2_200(capsys):
    assert main(["gains", "--k2", "200", "--beta", "8.1", "--D", "50"]) == 0
    out = capsys.readouterr().out
    assert "k1 = 7500\n" in out
    assert "C2 = 0.00030864197530864197" in out
    assert "1/(k2*D) = 0.0001" in out and "small enough" in out


@pytest.mark.parametrize("argv", [["gains", "--k2", "19"],
                                  ["gains", "--k2", "200", "--beta", "8"],
                                  ["gains", "--k2", "abc"],
                                  ["frobnicate"]])
def test_gains_invalid(argv):
    assert main(argv) == 2


def test_gains_from_config(capsys):
    assert main(["gains", "--config", cfg_path("paper_sec5.cfg")]) == 0
    out = capsys.readouterr().out
    assert "C1 = 0.1172" in out and "NOT small" not in out


def test_h1_violation_exit_2(tmp_path, capsys):
    p = write_cfg(tmp_path, SMALL.replace("kappa0 = 0.05", "kappa0 = 0.5"))
    assert main(["simulate", "--config", p, "--out", str(tmp_path)]) == 2
    assert "H1" in capsys.readouterr().err
    assert main(["certify", "--config", p, "--out", str(tmp_path)]) == 2


def test_unknown_key_reports_line(tmp_path, capsys):
    p = write_cfg(tmp_path, SMALL.replace("vx = 5", "vx = 5\nwheelbase = 3"))
    assert main(["simulate", "--config", p]) == 2
    err = capsys.readouterr().err
    assert "wheelbase" in err and "run.cfg:7" in err


def test_simulate_outputs(tmp_path):
    p = write_cfg(tmp_path, SMALL)
    assert main(["simulate", "--config", p, "--out", str(tmp_path), "--quiet"]) in (0, 1)
    with open(tmp_path / "trace.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:3] == ["t", "s", "x"] and len(rows[0]) == 28
    assert len(rows) == 502
    assert (tmp_path / "monitors.csv").exists()
    assert "final_error_norm" in (tmp_path / "report.txt").read_text()


def test_outputs_byte_identical(tmp_path):
    p = write_cfg(tmp_path, SMALL)
    blobs = []
    for sub in ("a", "b"):
        assert main(["simulate", "--config", p, "--out", str(tmp_path / sub), "--quiet"]) in (0, 1)
        blobs.append((tmp_path / sub / "trace.csv").read_bytes())
    assert blobs[0] == blobs[1]
    assert b"\r" not in blobs[0] and blobs[0].endswith(b"\n")


def test_stiffness_warning_in_report(tmp_path):
    # dt*k2*D = 5e-3 * 200 * 50 = 50
    p = write_cfg(tmp_path, SMALL.replace("dt = 1e-3", "dt = 5e-3"))
    main(["simulate", "--config", p, "--out", str(tmp_path), "--quiet"])
    assert "warning:" in (tmp_path / "report.txt").read_text()
    assert "dt*k2*D" in (tmp_path / "report.txt").read_text()


def test_env_override(tmp_path, monkeypatch):
    p = write_cfg(tmp_path, SMALL)
    monkeypatch.setenv("APP_SIM_DT", "2e-3")
    main(["simulate", "--config", p, "--out", str(tmp_path), "--quiet"])
    with open(tmp_path / "trace.csv") as fh:
        assert sum(1 for _ in fh) == 252


def test_set_beats_env(tmp_path, monkeypatch):
    p = write_cfg(tmp_path, SMALL)
    monkeypatch.setenv("APP_SIM_DT", "2e-3")
    main(["simulate", "--config", p, "--out", str(tmp_path), "--quiet", "--set", "sim.dt=5e-4"])
    with open(tmp_path / "trace.csv") as fh:
        assert sum(1 for _ in fh) == 1002


def test_blowup_exit_3(tmp_path):
    p = write_cfg(tmp_path, SMALL.replace("xi0 = 0.1", "xi0 = 2.827433388230814"))
    assert main(["simulate", "--config", p, "--out", str(tmp_path), "--quiet"]) == 3
    assert (tmp_path / "trace.csv").exists()
    assert "blow-up" in (tmp_path / "report.txt").read_text()


def test_certify_theorem_passes(tmp_path):
    assert main(["certify", "--config", cfg_path("theorem_k2_200.cfg"),
                 "--out", str(tmp_path), "--quiet"]) == 0
    rows = dict(csv.reader(open(tmp_path / "certificate.csv")))
    assert rows["verdict_gain_relations"] == "pass"


def test_certify_manual_gains_fail(tmp_path):
    assert main(["certify", "--config", cfg_path("paper_sec5.cfg"),
                 "--out", str(tmp_path), "--quiet"]) == 1
    assert "gain_relations" in (tmp_path / "summary.txt").read_text()


def test_sweep_empty_values(tmp_path):
    p = write_cfg(tmp_path, SMALL)
    assert main(["sweep", "--config", p, "--axis", "dt", "--values", "", "--out", str(tmp_path)]) == 2
    assert main(["sweep", "--config", p, "--axis", "nope", "--values", "1",
                 "--out", str(tmp_path)]) == 2


def test_sweep_dt_writes_richardson(tmp_path):
    p = write_cfg(tmp_path, SMALL)
    assert main(["sweep", "--config", p, "--axis", "dt", "--values", "1e-3,5e-4,2.5e-4",
                 "--out", str(tmp_path), "--quiet"]) in (0, 1)
    with open(tmp_path / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["value"]) for r in rows] == [1e-3, 5e-4, 2.5e-4]
    assert rows[0]["richardson_ratio"] != ""


def test_global_flags_after_subcommand(tmp_path):
    p = write_cfg(tmp_path, SMALL)
    assert main(["--quiet", "simulate", "--config", p, "--out", str(tmp_path), "--seed", "3"]) in (0, 1)


def test_reduced_heading_config_exit_0(tmp_path):
    assert main(["simulate", "--config", cfg_path("sec5_reduced.cfg"),
                 "--out", str(tmp_path), "--quiet"]) == 0


def test_bundled_reference_config_exit_0(tmp_path):
    # Expected to fail: heading error 9*pi/10 with these gains pushes |omega| d past 1
    # and kappa escapes near t = 0.044 s (exit 3).
    assert main(["simulate", "--config", cfg_path("paper_sec5.cfg"),
                 "--out", str(tmp_path), "--quiet"]) == 0
