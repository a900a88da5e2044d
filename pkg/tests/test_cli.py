from __future__ import annotations

import subprocess
import sys

import pytest

from fracwell.cli import main, read_report
from fracwell.config import ConfigInvalid, h1_violations, initial_field, parse_config, read_snapshot, write_snapshot

SMALL = """
frac.s=0.5
p=3
g.kind=power
g.q=2
domain.a=-4
domain.b=4
domain.m=24
initial.width=1.5
initial.scale=0.2
evolve.dt=2e-3
evolve.t_end=0.2
evolve.record_every=5
wells.trials=8
wells.cstar_trials=8
wells.curve_candidates=2
groundstate.tol=1e-8
"""


def _cfg(tmp_path, text=SMALL, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_default_example():
    cfg = parse_config("frac.s=0.5\np=3\ng.kind=power\ng.q=2\ndomain.a=-1\ndomain.b=1\ndomain.m=64\n")
    assert cfg.problem.G.q_minus == 2 and cfg.problem.domain.M == 64
    assert not cfg.warnings


def test_parse_collects_all_errors():
    with pytest.raises(ConfigInvalid) as exc:
        parse_config("g.q=1.0\np=0.9\nbogus=3\ndomain.m=x\n")
    msg = " ".join(exc.value.errors)
    assert "bogus" in msg and "p must exceed 1" in msg and "domain.m" in msg and "exponent" in msg
    assert len(exc.value.errors) >= 4


def test_h1_rules():
    assert h1_violations(0.5, 1.5, 2, 2) == []
    assert h1_violations(0.5, 3, 4, 4)  # q+ = p+1


def test_h1_sobolev_exponent():
    # s q- = 0.6 < 1, so q-^* = 2 / (1 - 0.6) = 5: p+1 = 4 passes, p+1 = 6 fails
    assert h1_violations(0.3, 3.0, 2.0, 2.0) == []
    assert any("Sobolev" in e for e in h1_violations(0.3, 5.0, 2.0, 2.0))


def test_subcritical_warning():
    cfg = parse_config("frac.s=0.25\np=3.5\ng.q=2.5\n")
    assert cfg.warnings


def test_snapshot_roundtrip(tmp_path):
    cfg = parse_config(SMALL)
    u = initial_field(cfg)
    write_snapshot(tmp_path / "u.txt", u)
    back = read_snapshot(tmp_path / "u.txt", cfg.problem.domain)
    assert (back.values == u.values).all()
    write_snapshot(tmp_path / "v.txt", back)
    assert (tmp_path / "v.txt").read_bytes() == (tmp_path / "u.txt").read_bytes()


def test_exit_codes(tmp_path, capsys):
    assert main(["wells", "--config", str(_cfg(tmp_path, "p=0.5\n", "bad.cfg"))]) == 2
    assert main(["wells", "--config", str(tmp_path / "missing.cfg")]) == 3
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["wells", "--config", str(_cfg(tmp_path)), "--out", str(blocker / "sub")]) == 3


def test_all_subcommands(tmp_path):
    cfg = _cfg(tmp_path)
    out = tmp_path / "out"
    for cmd in ("wells", "simulate", "groundstate", "analyze"):
        assert main([cmd, "--config", str(cfg), "--out", str(out), "--deterministic"]) == 0, cmd
    rep = read_report(out / "report.txt")
    assert rep["status"] == "completed" and rep["classification"] == "W"
    verdict = read_report(out / "verdict.txt")
    assert verdict["decay.monotone"] == "true"
    assert "omega.selected" in verdict
    assert (out / "d_curve.csv").read_text().splitlines()[0] == "delta,d_of_delta"
    assert float(read_report(out / "groundstate.txt")["dual_residual"]) < 1e-6


def test_verify_subcommand(tmp_path):
    cfg = _cfg(tmp_path)
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / "v")]) == 0
    assert "FAIL" not in (tmp_path / "v" / "verify.txt").read_text()


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "fracwell.cli", "wells", "--config", str(_cfg(tmp_path)),
                        "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
