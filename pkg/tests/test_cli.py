from __future__ import annotations

import csv
import io
import json
import math

import pytest

from wormszego.cli import main
from wormszego.suites import RunConfig, run_suite
from wormszego.strip import nu
from wormszego.geometry import WormParams

SMALL_GRID = "L = 10\nn_x = 64\nn_v = 12\nn_theta = 8\nn_t = 12\n"


def read_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_nu_verb(capsys):
    assert main(["--beta", "3.5", "nu", "--j", "0", "2", "--xi", "0.5", "-1.0"]) == 0
    rows = read_rows(capsys.readouterr().out)
    assert len(rows) == 4
    r = rows[0]
    assert float(r["nu"]) == pytest.approx(nu(float(r["xi"]), int(r["j"]), WormParams(3.5)), rel=1e-15)


def test_kj_verb_writes_to_out(tmp_path):
    assert main(["--out", str(tmp_path), "kj", "--z", "0.1+0.2j", "--w", "0.1+0.2j", "--j", "1"]) == 0
    rows = read_rows((tmp_path / "kj.csv").read_text())
    assert float(rows[0]["k_re"]) > 0
    assert abs(float(rows[0]["k_im"])) < 1e-12 * float(rows[0]["k_re"])


def test_kernel_verb_rejects_exterior_points(capsys):
    assert main(["kernel", "--z1", "3j", "--z2", "1", "--w1", "0", "--w2", "1"]) == 1
    assert "error" in capsys.readouterr().err


def test_derivative_check_verb(capsys):
    assert main(["derivative-check", "--alpha", "0.5"]) == 0
    rows = {r["display"]: r for r in read_rows(capsys.readouterr().out)}
    assert float(rows["d_xi"]["max_rel_residual"]) < 1e-6


def test_schur_verb(capsys):
    assert main(["schur", "--p", "2"]) == 0
    row = read_rows(capsys.readouterr().out)[0]
    assert float(row["p_side"]) == pytest.approx(math.pi, rel=1e-5)


def test_sobolev_verb_with_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(SMALL_GRID)
    assert main(["--config", str(cfg), "sobolev-check", "--pair", "1,2", "--dy", "2e-3", "1e-3"]) == 0
    rows = read_rows(capsys.readouterr().out)
    r1, r2 = (float(r["residual"]) for r in rows)
    assert r1 < 1e-4 and r2 < r1


def test_project_and_verify_with_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(SMALL_GRID)
    out = tmp_path / "projected.csv"
    assert main(["--config", str(cfg), "project", "--output", str(out)]) == 0
    assert out.exists()
    capsys.readouterr()
    # a projected field keeps its norm, up to the idempotence residual of this coarse grid
    assert main(["--config", str(cfg), "project", "--input", str(out)]) == 0
    row = read_rows(capsys.readouterr().out)[0]
    assert float(row["rayleigh_quotient"]) == pytest.approx(1.0, abs=1e-3)
    assert main(["--config", str(cfg), "verify-projection", "--pairs", "1", "--j0"]) == 0
    row = read_rows(capsys.readouterr().out)[0]
    assert float(row["idempotence"]) < 1e-3 and float(row["self_adjointness"]) < 1e-3


def test_bad_sheet_pair_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["sobolev-check", "--pair", "1,7"])
    assert exc.value.code == 2


def test_unknown_suite_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["--out", str(tmp_path), "suite", "nonsense"])
    assert exc.value.code != 0
    with pytest.raises(ValueError):
        run_suite(RunConfig(), "nonsense", tmp_path)


def test_config_file_parsing(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("beta = 4.0\nn_x = 256\nseed = 7\ntol.projection = 1e-4\n")
    c = RunConfig.from_file(cfg)
    assert (c.beta, c.n_x, c.seed) == (4.0, 256, 7)
    assert c.tol("projection") == 1e-4
    assert c.tol("parseval") == 1e-6
    cfg.write_text("colour = blue\n")
    with pytest.raises(ValueError):
        RunConfig.from_file(cfg)
    cfg.write_text("tol.nonsense = 1\n")
    with pytest.raises(ValueError):
        RunConfig.from_file(cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(beta=1.0)
    with pytest.raises(ValueError):
        RunConfig(n_x=0)


def test_schur_suite_is_deterministic_and_reports(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["--out", str(a), "suite", "schur"]) == 0
    assert main(["--out", str(b), "suite", "schur"]) == 0
    for name in ("schur_checks.csv", "schur_schur.csv", "schur_summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    summary = json.loads((a / "schur_summary.json").read_text())
    assert summary["passed"] and summary["failed"] == []
    assert all(c["criterion"] == 9 for c in summary["checks"])


def test_failed_tolerance_gives_nonzero_exit(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("tol.stability = 1e-12\n")
    assert main(["--config", str(cfg), "--out", str(tmp_path), "suite", "schur"]) == 1
    summary = json.loads((tmp_path / "schur_summary.json").read_text())
    assert not summary["passed"] and summary["failed"]
