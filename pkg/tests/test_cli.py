import json
import math

import pytest

from metrickernels.cli import main

RADIAL = '{"type": "radial", "atoms": [[1, 1]]}'


@pytest.fixture
def two_csv(tmp_path):
    p = tmp_path / "two.csv"
    p.write_text("0,1\n1,0\n")
    return p


def test_gram_two_point(two_csv, tmp_path):
    out = tmp_path / "out"
    assert main(["gram", "--space", str(two_csv), "--kernel", RADIAL, "--centers", "2", "--out", str(out)]) == 0
    rows = [list(map(float, r.split(","))) for r in (out / "gram.csv").read_text().splitlines()]
    assert rows[0][0] == 1 and rows[1][1] == 1
    assert rows[0][1] == pytest.approx(math.exp(-1), abs=1e-9)
    assert json.loads((out / "psd.json").read_text())["pass"] is True


def test_malformed_csv_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("0,1\n1,zz\n")
    assert main(["gram", "--space", str(bad), "--kernel", RADIAL, "--centers", "2", "--out", str(tmp_path)]) == 2
    assert "bad.csv:2" in capsys.readouterr().err


def test_bad_q_exit_1(capsys, tmp_path):
    args = ["gram", "--fixture", "two_point", "--kernel", RADIAL, "--centers", "2", "--q", "1.5", "--out", str(tmp_path)]
    assert main(args) == 1
    assert "(1, 1.41421356)" in capsys.readouterr().err


def test_eta_and_centers_exclusive(tmp_path):
    assert main(["gram", "--fixture", "two_point", "--kernel", RADIAL, "--centers", "2", "--eta", "1"]) == 1


def test_certify_ok_and_cap(tmp_path):
    assert main(["certify", "--fixture", "graph50", "--kernel", RADIAL, "--eta", "1", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "certify.json").read_text())
    assert report["pass"] and len(report["points"]) == 50
    assert set(report["points"][0]) == {"point", "interval", "rho_sq", "pass"}
    args = ["certify", "--fixture", "two_point", "--kernel", RADIAL, "--eta", "1", "--prefix-cap", "5"]
    assert main(args + ["--out", str(tmp_path)]) == 1


def test_certify_truncation_rho(tmp_path):
    args = ["certify", "--fixture", "two_point", "--kernel", RADIAL, "--mode", "truncation", "--N", "16", "--q", "2"]
    assert main(args + ["--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "certify.json").read_text())
    assert report["rho"] == 2.0**-16 * 1.0 * math.sqrt(2)


def test_certify_failure_exit_3(tmp_path, monkeypatch, capsys):
    import metrickernels.cli as cli
    from metrickernels.kernel import CertificationReport, PointCertificate

    fake = CertificationReport(0.1, 10, (PointCertificate(0, (0.0, 1.0), 0.01, False),))
    monkeypatch.setattr(cli, "certify", lambda *a, **k: fake)
    assert main(["certify", "--fixture", "two_point", "--kernel", RADIAL, "--eta", "1", "--out", str(tmp_path)]) == 3
    assert "[0]" in capsys.readouterr().err


def test_sweep_twice_identical(tmp_path):
    kernel = '{"type": "radial", "atoms": [[4, 1]]}'
    for d in ("a", "b"):
        args = ["sweep", "--fixture", "circle200", "--kernel", kernel, "--seed", "7", "--levels", "3"]
        assert main(args + ["--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()
    meta = json.loads((tmp_path / "a" / "sweep.json").read_text())
    assert meta["seed"] == 7 and meta["space"] == "circle200"


def test_mmd_outputs(capsys):
    base = ["mmd", "--fixture", "two_point", "--kernel", RADIAL, "--centers", "2"]
    assert main(base + ["--mu", "0", "--nu", "0"]) == 0
    assert capsys.readouterr().out.strip() == "0.0"
    assert main(base + ["--mu", "0", "--nu", "1"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(1.124385, abs=1e-6)


def test_validate(two_csv, capsys):
    assert main(["validate", "--space", str(two_csv)]) == 0
    assert json.loads(capsys.readouterr().out)["n_points"] == 2


def test_missing_file_exit_2(tmp_path):
    assert main(["validate", "--space", str(tmp_path / "nope.csv")]) == 2
