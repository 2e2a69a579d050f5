import json

import numpy as np
import pytest

from fracdamp import cli
from fracdamp.artifacts import read_csv
from fracdamp.errors import NumericalGuardError

SIM = ["simulate", "--s", "1.5", "--n-modes", "32", "--t-final", "5", "--record-interval", "0.25"]
SCAN = ["resolvent-scan", "--s", "1.5", "--k-min", "1", "--k-max", "16", "--per-decade", "8"]


def run(tmp_path, argv, sub="out"):
    out = tmp_path / sub
    return cli.main(argv + ["--out", str(out)]), out


def test_simulate_outputs(tmp_path):
    code, out = run(tmp_path, SIM + ["--weights", "energy"])
    assert code == 0
    header, rows = read_csv(out / "simulate.csv")
    assert list(rows[0]) == ["t", "energy_norm", "l2_norm_u", "l2_norm_v"]
    assert len(rows) == 21
    assert header["s"] == "1.5" and header["command"] == "simulate"
    assert "out" not in header and "config" not in header
    assert (out / "simulate.svg").stat().st_size > 0
    recs = [json.loads(line) for line in (out / "summary.jsonl").read_text().splitlines()]
    assert recs and {"name", "paper_ref", "expected", "measured", "tolerance", "pass"} <= set(recs[0])
    assert all(r["pass"] is True for r in recs)


def test_csv_is_crlf(tmp_path):
    _, out = run(tmp_path, SCAN)
    raw = (out / "resolvent_scan.csv").read_bytes()
    assert b"\r\n" in raw and raw.count(b"\n") == raw.count(b"\r\n")


@pytest.mark.parametrize("argv", [SIM, SCAN, ["observability-scan", "--s", "1.5", "--n-points", "8",
                                             "--lam-max", "100"]])
def test_deterministic(tmp_path, argv):
    _, a = run(tmp_path, argv, "a")
    _, b = run(tmp_path, argv, "b")
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir()) and files
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_resolvent_scan_columns(tmp_path):
    code, out = run(tmp_path, SCAN)
    assert code == 0
    _, rows = read_csv(out / "resolvent_scan.csv")
    assert list(rows[0]) == ["s", "m", "k", "pair", "norm", "paper_exponent", "normalized_ratio"]
    k = np.array([float(r["k"]) for r in rows])
    assert np.all(np.diff(k) > 0)


def test_resolvent_scan_fails_bound(tmp_path):
    # s = 3 in L2->L2: the normalized ratio keeps growing, so the check reports failure
    code, _ = run(tmp_path, ["resolvent-scan", "--s", "3"])
    assert code == 1


def test_rate_fit(tmp_path, capsys):
    _, out = run(tmp_path, SIM + ["--damping", "constant", "--amplitude", "0.5", "--s", "2"])
    code, _ = run(tmp_path, ["rate-fit", "--input", str(out / "simulate.csv"), "--kind", "exponential"],
                  "fit")
    assert code == 0
    assert "slope=" in capsys.readouterr().out


def test_rate_fit_missing_column(tmp_path):
    _, out = run(tmp_path, SIM)
    code, _ = run(tmp_path, ["rate-fit", "--input", str(out / "simulate.csv"), "--y", "nope"], "fit")
    assert code == 2


@pytest.mark.parametrize("argv", [
    ["simulate"],
    ["simulate", "--s", "-1"],
    ["simulate", "--s", "1", "--data", "bogus"],
    ["bogus"],
    ["resolvent-scan", "--s", "1", "--pair", "H1->L2"],
    ["simulate", "--s", "2", "--n-modes", "64", "--dt", "0.5", "--t-final", "1"],
])
def test_config_errors(tmp_path, argv):
    code, _ = run(tmp_path, argv)
    assert code == 2


def test_guard_exit(tmp_path, monkeypatch):
    import fracdamp.semigroup as sg

    def boom(*a, **k):
        raise NumericalGuardError("non-finite state")

    monkeypatch.setattr(sg, "simulate", boom)
    code, _ = run(tmp_path, SIM)
    assert code == 3


def test_config_file(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[simulate]\ns = 1.5\nn-modes = 32\nt_final = 5\nrecord-interval = 0.25\nweights = energy\n")
    code, out = run(tmp_path, ["simulate", "--config", str(cfg)], "c")
    assert code == 0
    header, rows = read_csv(out / "simulate.csv")
    assert len(rows) == 21 and header["weights"] == "energy"
    code, out2 = run(tmp_path, ["simulate", "--config", str(cfg), "--t-final", "2"], "d")
    assert code == 0
    assert len(read_csv(out2 / "simulate.csv")[1]) == 9  # flag wins over the file


def test_config_unknown_field(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[simulate]\ns = 1.5\ncolour = red\n")
    code, _ = run(tmp_path, ["simulate", "--config", str(cfg)])
    assert code == 2


def test_config_bad_value(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[simulate]\ns = 1.5\nweights = bogus\n")
    code, _ = run(tmp_path, ["simulate", "--config", str(cfg)])
    assert code == 2


def test_verify_invariants(tmp_path, capsys):
    code, out = run(tmp_path, ["verify", "--suite", "invariants"])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)
    assert len((out / "summary.jsonl").read_text().splitlines()) == len(lines)
