import json
import subprocess
import sys

import pytest

from helpers import DATA
from pso2d.cli import main

ZOO = str(DATA / "zoo.csv")


def test_run_with_flags(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", "--data", ZOO, "--algo", "2d-upso", "--algo", "bpso", "--runs", "2",
                 "--budget", "100", "--swarm-size", "10", "--rg", "2", "--u-start", "0.1",
                 "--u-end", "0.5", "--seed", "3", "--memoize", "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "2d-upso" in text and "bpso" in text
    raw = json.loads((out / "results.json").read_text())
    assert raw["settings"]["algorithms"][0] == {"name": "2d-upso", "ps": 10, "rg": 2,
                                               "u_start": 0.1, "u_end": 0.5}
    assert [r["seed"] for r in raw["cells"][0]["runs"]["bpso"]] == [3, 4]
    assert (out / "summary.txt").read_text() in text


def test_run_with_spec(tmp_path, capsys):
    spec = tmp_path / "exp.toml"
    spec.write_text(f'runs = 1\nbudget = 60\ndatasets = ["{ZOO}"]\n'
                    'classifiers = [{tag = "knn", k = 3}]\n[[algorithms]]\nname = "2d-gpso"\nps = 6\n')
    assert main(["run", "--spec", str(spec), "--out", str(tmp_path / "o")]) == 0
    assert "3-NN" in capsys.readouterr().out
    assert (tmp_path / "o" / "results.json").exists()


def test_eval_and_baseline(capsys):
    assert main(["eval", "--data", ZOO, "--mask", "1,3,5", "--classifier", "knn", "--knn-k", "3"]) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("zoo 3-NN mask=1010100000000000 J=")
    assert main(["eval", "--data", ZOO, "--mask", "1" * 16]) == 0
    full = float(capsys.readouterr().out.split("J=")[1])
    assert main(["baseline", "--data", ZOO]) == 0
    assert float(capsys.readouterr().out.split("J(U)=")[1]) == pytest.approx(full, abs=1e-6)


@pytest.mark.parametrize("argv,code", [
    (["eval", "--data", "/no/such.csv", "--mask", "1"], 2),
    (["eval", "--data", ZOO, "--mask", "0" * 16], 1),
    (["eval", "--data", ZOO, "--mask", "99"], 1),
    (["run", "--data", ZOO, "--budget", "5"], 1),
    (["run", "--data", ZOO, "--runs", "0"], 1),
    (["run"], 1),
    (["run", "--algo", "ga", "--data", ZOO], 1),
    (["run", "--spec", "/no/such.toml"], 1),
    (["frobnicate"], 1),
])
def test_exit_codes(argv, code, capsys):
    try:
        got = main(argv)
    except SystemExit as exc:
        got = exc.code
    assert got == code


def test_bad_csv_is_data_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,x,0\n2,3,1\n")
    assert main(["baseline", "--data", str(bad)]) == 2


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pso2d.cli", "baseline", "--data", ZOO],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "J(U)=" in proc.stdout
