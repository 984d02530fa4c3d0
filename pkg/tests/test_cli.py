import json

import numpy as np
import pytest

from onebitcs.cli import main
from onebitcs.harness import read_rows
from onebitcs.model import parse_vector


def run(argv, capsys):
    rc = main(argv)
    out, err = capsys.readouterr()
    return rc, out, err


def test_gen_encode_decode_pipeline(tmp_path, capsys):
    d = str(tmp_path)
    assert run(["gen", "--n", "20", "--K", "2", "--m", "60", "--seed", "3", "--out", d], capsys)[0] == 0
    assert run(["encode", "--matrix", f"{d}/matrix.csv", "--signal", f"{d}/signal.csv",
                "--deviation", "rademacher:0.001", "--out", d], capsys)[0] == 0
    for dec in ("l1", "logsum"):
        rc, out, _ = run(["decode", "--matrix", f"{d}/matrix.csv", "--tau", f"{d}/tau.csv",
                          "--bits", f"{d}/bits.csv", "--decoder", dec], capsys)
        assert rc == 0
        x = parse_vector((tmp_path / "signal.csv").read_text())
        assert np.linalg.norm(parse_vector(out) - x) < 0.05 * np.linalg.norm(x)


def test_decode_l0_and_adapt(tmp_path, capsys):
    d = str(tmp_path)
    run(["gen", "--n", "8", "--K", "1", "--m", "12", "--seed", "1", "--out", d], capsys)
    run(["encode", "--matrix", f"{d}/matrix.csv", "--signal", f"{d}/signal.csv", "--out", d], capsys)
    rc, out, _ = run(["decode", "--matrix", f"{d}/matrix.csv", "--tau", f"{d}/tau.csv",
                      "--bits", f"{d}/bits.csv", "--decoder", "l0", "--kmax", "1"], capsys)
    assert rc == 0 and np.count_nonzero(parse_vector(out)) == 1
    rc, out, _ = run(["adapt", "--matrix", f"{d}/matrix.csv", "--signal", f"{d}/signal.csv",
                      "--max-rounds", "3"], capsys)
    assert rc == 0 and out.startswith("round,xi,nmse,l2_change,stop_reason\n")


def test_experiment_and_replay(tmp_path, capsys):
    out = tmp_path / "f1.csv"
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "fig1", "m_grid": [40], "param_grid": [0.1, 0.01]}))
    rc, _, _ = run(["experiment", "fig1", "--config", str(cfg), "--trials", "2", "--seed", "9",
                    "--out", str(out)], capsys)
    assert rc == 0
    rows = read_rows(out.read_text())
    seed = rows[0]["seed"]
    rc, text, _ = run(["replay", "--csv", str(out), "--seed", seed, "--config", str(cfg)], capsys)
    assert rc == 0
    replayed = read_rows(text)
    assert [r["nmse"] for r in replayed] == [r["nmse"] for r in rows if r["seed"] == seed]


def test_experiment_to_stdout(capsys):
    rc, out, _ = run(["experiment", "lemma1", "--trials", "1", "--config", "/dev/null"], capsys)
    assert rc == 2
    rc, out, _ = run(["-v", "experiment", "theory", "--trials", "2"], capsys)
    assert rc == 0 and out.startswith("row_type,experiment,m,n,K,kappa")


@pytest.mark.parametrize("argv", [
    ["experiment", "fig9"],
    ["experiment", "fig1", "--trials", "0"],
    ["decode", "--matrix", "/nonexistent", "--tau", "x", "--bits", "y"],
    ["encode", "--matrix", "m", "--signal", "s", "--deviation", "cauchy:1"],
    ["replay", "--csv", "whatever.csv"],
    ["bogus"],
])
def test_invalid_arguments_exit_2(argv, capsys):
    try:
        rc = main(argv)
    except SystemExit as exc:
        rc = exc.code
    capsys.readouterr()
    assert rc == 2


def test_infeasible_instance_exit_4(tmp_path, capsys, caplog):
    (tmp_path / "A.csv").write_text("1,2\n1,2\n")
    (tmp_path / "tau.csv").write_text("0.5,0.5\n")
    (tmp_path / "bits.csv").write_text("+1,-1\n")
    rc, _, _ = run(["decode", "--matrix", str(tmp_path / "A.csv"), "--tau", str(tmp_path / "tau.csv"),
                    "--bits", str(tmp_path / "bits.csv")], capsys)
    assert rc == 4 and "infeasible" in caplog.text


def test_solver_failure_exit_3(monkeypatch, tmp_path, capsys):
    from onebitcs import cli
    from onebitcs.exceptions import SolverFailure

    def boom(*a, **k):
        raise SolverFailure("singular basis")

    monkeypatch.setattr(cli, "decode_l1", boom)
    (tmp_path / "A.csv").write_text("1,2\n")
    (tmp_path / "tau.csv").write_text("0.5\n")
    (tmp_path / "bits.csv").write_text("+1\n")
    rc, _, _ = run(["decode", "--matrix", str(tmp_path / "A.csv"), "--tau", str(tmp_path / "tau.csv"),
                    "--bits", str(tmp_path / "bits.csv")], capsys)
    assert rc == 3
