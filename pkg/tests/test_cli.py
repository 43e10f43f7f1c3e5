import json
import os
import subprocess
import sys

from fractions import Fraction

import pytest

from padic_hua.cli import main

BAND = {
    "core": {"n": 1, "flavor": "GL", "g": [["1", "2"], ["1", "3"]]},
    "kind": "band",
    "band": [["a", 1, 0, "2"], ["b", 1, 1, "1"], ["d", 1, 2, "3"]],
}


def run(argv, capsys, env=None):
    old = dict(os.environ)
    os.environ.pop("HUA_SEED", None)
    os.environ.update(env or {})
    try:
        code = main(argv)
    finally:
        os.environ.clear()
        os.environ.update(old)
    out, err = capsys.readouterr()
    return code, out, err


def report(argv, capsys, env=None):
    code, out, _ = run(argv, capsys, env)
    return code, json.loads(out)


def test_hua_const(capsys):
    code, rep = report(["hua-const", "--n", "2", "--p", "2", "--alpha", "4"], capsys)
    assert code == 0 and rep["passed"]
    assert rep["result"]["closed_form"] == "35/16"
    assert rep["config"]["alpha"] == "4"


def test_hua_series_brackets(capsys):
    code, rep = report(["hua-series", "--n", "1", "--p", "2", "--alpha", "3", "--kmax", "10"], capsys)
    assert code == 0
    res = rep["result"]
    assert abs(float(Fraction(res["partial_sum"]) - Fraction(7, 6))) <= float(res["tail_bound"])


def test_gamma_and_smith(capsys):
    m = '[["1/2","3"],["0","4"]]'
    code, rep = report(["gamma", "--p", "2", "--matrix", m], capsys)
    assert code == 0 and rep["result"]["gamma"] == "2" and rep["result"]["det_norm"] == "1/2"
    code, rep = report(["smith", "--p", "2", "--matrix", m], capsys)
    assert rep["result"]["profile"] == [1, -2]


def test_lattice_beta(capsys):
    code, rep = report(["lattice-beta", "--n", "1", "--p", "2", "--t", "3"], capsys)
    assert code == 0 and rep["passed"]


def test_push_test_and_csv(capsys):
    argv = ["push-test", "--n", "1", "--p", "2", "--s", "1", "--samples", "20000", "--seed", "7"]
    code, rep = report(argv, capsys)
    assert code == 0
    assert rep["result"]["detail"]["integral"]["expected"] == "6/7"
    code, out, _ = run(argv + ["--format", "csv"], capsys)
    assert code == 0 and out.splitlines()[0] == "bin,observed,expected"


def test_stab_det(tmp_path, capsys):
    path = tmp_path / "band.json"
    path.write_text(json.dumps(BAND))
    code, rep = report(["stab-det", "--band-spec", str(path), "--p", "2"], capsys)
    assert code == 0 and rep["result"]["agree"]
    assert len(set(rep["result"]["det"].values())) == 1


def test_rn_check(capsys):
    code, rep = report(["rn-check", "--n", "2", "--p", "2", "--trials", "50"], capsys)
    assert code == 0 and rep["passed"]


def test_sample_lines(tmp_path, capsys):
    out = tmp_path / "z.jsonl"
    code, _, _ = run(["sample", "--n", "2", "--p", "3", "--s", "1", "--count", "4", "--out", str(out)], capsys)
    assert code == 0
    lines = [json.loads(x) for x in out.read_text().splitlines()]
    assert len(lines) == 4 and all(x["flag"] == "accepted" for x in lines)
    code, rep = report(["sample", "--n", "2", "--p", "2", "--flavor", "ASymm", "--count", "2",
                        "--out", str(out)], capsys)
    assert code == 0 and 0 < rep["result"]["truncation_bias"] < 1


def test_seed_determinism_and_env_override(capsys):
    argv = ["sample", "--n", "1", "--p", "2", "--count", "5"]
    _, a, _ = run(argv + ["--seed", "11"], capsys)
    _, b, _ = run(argv + ["--seed", "11"], capsys)
    _, c, _ = run(argv + ["--seed", "3"], capsys, {"HUA_SEED": "11"})
    _, d, _ = run(argv + ["--seed", "12"], capsys)
    assert a == b == c != d


def test_report_bytes_stable(tmp_path, capsys):
    argv = ["push-test", "--n", "1", "--p", "3", "--s", "0", "--samples", "5000", "--seed", "2"]
    reps = []
    for i in range(2):
        path = tmp_path / f"r{i}.json"
        assert run(argv + ["--report", str(path)], capsys)[0] == 0
        rep = json.loads(path.read_text())
        rep.pop("runtime")
        reps.append(json.dumps(rep, sort_keys=True))
    assert reps[0] == reps[1]


@pytest.mark.parametrize(
    "argv,code,kind",
    [
        (["hua-const", "--n", "2", "--p", "2", "--alpha", "3"], 3, "convergence_domain"),
        (["hua-const", "--n", "2"], 2, "usage"),
        (["no-such-command"], 2, "usage"),
        (["hua-series", "--n", "2", "--p", "3", "--alpha", "5/2"], 3, "convergence_domain"),
        (["stab-det", "--band-spec", "/nonexistent.json", "--p", "2"], 2, "input"),
        (["gamma", "--p", "2", "--matrix", "not json"], 2, "usage"),
        (["hua-const", "--n", "1", "--p", "2", "--alpha", "3", "--format", "csv"], 2, "usage"),
    ],
)
def test_error_paths(argv, code, kind, capsys):
    got, out, err = run(argv, capsys)
    assert got == code
    rec = json.loads(err.strip().splitlines()[-1])
    assert "error_kind" in rec and "message" in rec
    if kind:
        assert rec["error_kind"] == kind


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "padic_hua", "hua-const", "--n", "1", "--p", "2", "--alpha", "3"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["closed_form"] == "7/6"
