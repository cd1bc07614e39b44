import json
import subprocess
import sys

import pytest

from repscat.cli import main


def _cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_missing_alpha(tmp_path, capsys):
    cfg = _cfg(tmp_path, "potential.d = 1\nspectral.lambdas = 1\n")
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "alpha" in capsys.readouterr().err


def test_alpha_out_of_range(tmp_path, capsys):
    cfg = _cfg(tmp_path, "potential.alpha = 2.5\nspectral.lambdas = 1\n")
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "outside" in capsys.readouterr().err


def test_empty_energy_list(tmp_path):
    cfg = _cfg(tmp_path, "potential.alpha = 1.0\nspectral.lambdas =\n")
    assert main(["smatrix", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_unknown_tolerance(tmp_path):
    cfg = _cfg(tmp_path, "potential.alpha = 1.0\nspectral.lambdas = 1\n")
    tol = _cfg(tmp_path, "bogus = 1e-3\n", "tol.cfg")
    assert main(["smatrix", "--config", str(cfg), "--tol-overrides", str(tol),
                 "--out", str(tmp_path / "o")]) == 2


def test_solve_report(tmp_path):
    cfg = _cfg(tmp_path, "potential.alpha = 1.0\nspectral.lambdas = 1\njob.psi = 0, 2\n")
    out = tmp_path / "o"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    rep = json.loads((out / "solve.json").read_text())
    assert rep["schema_version"]
    assert rep["parseval_rel_error"] < 1e-4
    assert (out / "solve.csv").read_text().startswith("schema_version,")
    assert all((out / f).exists() for f in rep["fields"])


def test_smatrix_deterministic_and_within_oracle(tmp_path):
    cfg = _cfg(tmp_path, "potential.alpha = 1.0\nspectral.lambdas = 0.5, 1, 2\n")
    texts = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        assert main(["smatrix", "--config", str(cfg), "--out", str(out),
                     "--workers", str(1 + k)]) == 0
        texts.append((out / "smatrix.json").read_text())
    assert texts[0] == texts[1]
    for row in json.loads(texts[0])["rows"]:
        assert row["oracle_diff"] <= 1e-6 and row["defect"] <= 1e-5


def test_tight_tolerance_raises_flag(tmp_path, capsys):
    cfg = _cfg(tmp_path, "potential.alpha = 1.0\nspectral.lambdas = 1\n")
    tol = _cfg(tmp_path, "airy = 1e-14\n", "tol.cfg")
    code = main(["smatrix", "--config", str(cfg), "--tol-overrides", str(tol),
                 "--out", str(tmp_path / "o")])
    assert code == 3
    assert "oracle difference" in capsys.readouterr().err


def test_audit_negative_control(tmp_path):
    cfg = _cfg(tmp_path, "potential.alpha = 1.0\nspectral.lambdas = 1\n"
                         "job.broken_phase = true\njob.eigenfunction = false\n")
    out = tmp_path / "o"
    assert main(["audit", "--config", str(cfg), "--out", str(out)]) == 3
    rows = json.loads((out / "audit.json").read_text())["rows"]
    bad = [r for r in rows if not r["passed"]]
    assert [r["name"] for r in bad] == ["eikonal_order_broken[a=1,none]"]
    assert "predicted" in bad[0]["detail"] and "fitted" in bad[0]["detail"]


@pytest.mark.slow
def test_default_audit_passes(tmp_path):
    out = tmp_path / "o"
    assert main(["audit", "--out", str(out)]) == 0
    header = (out / "audit.csv").read_text().splitlines()[0]
    assert header.split(",")[:7] == ["schema_version", "name", "identity", "measured",
                                     "tolerance", "comparison", "status"]


def test_entry_point(tmp_path):
    cfg = _cfg(tmp_path, "potential.alpha = 1.0\nspectral.lambdas = 0.5, 1, 1.5\n")
    res = subprocess.run([sys.executable, "-m", "repscat.cli", "sweep", "--config", str(cfg),
                          "--out", str(tmp_path / "o"), "--workers", "2"],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    rep = json.loads((tmp_path / "o" / "sweep.json").read_text())
    assert rep["holder"]["omega"] > 0
