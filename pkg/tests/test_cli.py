import json
import subprocess
import sys

import numpy as np
import pytest

from magicflow.cli import main
from magicflow.clifford import random_clifford, save_circuit
from magicflow.io import read_char, read_state


def run(args, capsys):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def psi(tmp_path, capsys):
    path = tmp_path / "psi.json"
    assert run(["build-state", "psi_k", "--d", 2, "--n", 3, "--k", 2, "--seed", 7, "--out", path], capsys)[0] == 0
    return path


class TestBuildState:
    def test_zeros(self, tmp_path, capsys):
        path = tmp_path / "z.json"
        assert run(["build-state", "zeros", "--d", 7, "--n", 2, "--out", path], capsys)[0] == 0
        rho = read_state(path)
        assert rho.matrix[0, 0] == 1 and np.abs(rho.matrix).sum() == 1

    @pytest.mark.parametrize("kind", ["zeros", "psi_k", "magic", "random", "mixed", "stabilizer"])
    def test_deterministic(self, tmp_path, capsys, kind):
        args = ["build-state", kind, "--d", 7, "--n", 2, "--k", 1, "--seed", 3]
        code, a, _ = run(args, capsys)
        _, b, _ = run(args, capsys)
        assert code == 0 and a == b

    def test_psi_k_meta(self, psi):
        meta = json.loads(psi.read_text())["meta"]
        assert meta["builder"] == "psi_k" and meta["seed"] == 7 and meta["k"] == 2

    def test_char_repr(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        run(["build-state", "magic", "--d", 7, "--n", 1, "--repr", "char", "--out", path], capsys)
        assert json.loads(path.read_text())["repr"] == "char"
        assert abs(read_char(path).values[0, 0] - 1) < 1e-12

    def test_stabilizer_from_circuit(self, tmp_path, capsys):
        circ = tmp_path / "c.json"
        save_circuit(random_clifford(2, 5, 10, 1), circ)
        code, out, _ = run(["build-state", "stabilizer", "--d", 5, "--n", 2, "--circuit", circ], capsys)
        assert code == 0 and json.loads(out)["meta"]["circuit"]["n"] == 2

    def test_circuit_mismatch(self, tmp_path, capsys):
        circ = tmp_path / "c.json"
        save_circuit(random_clifford(2, 5, 10, 1), circ)
        assert run(["build-state", "stabilizer", "--d", 7, "--n", 2, "--circuit", circ], capsys)[0] == 2

    @pytest.mark.parametrize("args", [
        ["build-state", "zeros", "--d", 4, "--n", 1],
        ["build-state", "zeros", "--d", 3],
        ["build-state", "psi_k", "--d", 3, "--n", 2],
        ["build-state", "psi_k", "--d", 3, "--n", 2, "--k", 3],
        ["build-state", "zeros", "--d", 3, "--n", 0],
    ])
    def test_usage_errors(self, capsys, args):
        assert run(args, capsys)[0] == 2

    def test_bad_seed(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["build-state", "zeros", "--d", "3", "--n", "1", "--seed", "-1"])
        assert info.value.code == 2


class TestRunCg:
    def test_trace_and_state(self, tmp_path, capsys, psi):
        out, trace = tmp_path / "o.json", tmp_path / "t.csv"
        code, _, _ = run(["run-cg", "--in", psi, "--L", 3, "--out", out, "--trace", trace], capsys)
        assert code == 0
        lines = trace.read_text().splitlines()
        assert lines[0].startswith("# format_version=1") and len(lines) == 5
        read_state(out)

    def test_deterministic(self, tmp_path, capsys, psi):
        args = ["run-cg", "--in", psi, "--L", 2]
        assert run(args, capsys)[1] == run(args, capsys)[1]

    def test_zero_steps_echo(self, tmp_path, capsys, psi):
        out, trace = tmp_path / "o.json", tmp_path / "t.csv"
        run(["run-cg", "--in", psi, "--L", 0, "--out", out, "--trace", trace], capsys)
        assert json.loads(out.read_text())["data"] == json.loads(psi.read_text())["data"]
        assert len(trace.read_text().splitlines()) == 2

    def test_stabilizer_gap(self, tmp_path, capsys):
        s = tmp_path / "s.json"
        run(["build-state", "stabilizer", "--d", 7, "--n", 2, "--seed", 1, "--out", s], capsys)
        code, out, _ = run(["run-cg", "--in", s, "--L", 4, "--out", tmp_path / "o.json"], capsys)
        rows = [line.split(",") for line in out.splitlines()[2:]]
        assert code == 0 and all(float(r[2]) < 1e-9 for r in rows)

    def test_explicit_params(self, tmp_path, capsys):
        m = tmp_path / "m.json"
        run(["build-state", "magic", "--d", 7, "--n", 1, "--out", m], capsys)
        code, out, _ = run(["run-cg", "--in", m, "--L", 2, "--s", 5, "--t", 2, "--out", tmp_path / "o.json"], capsys)
        assert code == 0 and "params=s=5,t=2" in out

    def test_d3_unsupported(self, tmp_path, capsys):
        z = tmp_path / "z.json"
        run(["build-state", "zeros", "--d", 3, "--n", 1, "--out", z], capsys)
        code, _, err = run(["run-cg", "--in", z, "--L", 1], capsys)
        assert code == 2 and "no nontrivial parameters" in err

    @pytest.mark.parametrize("extra", [["--s", 2], ["--s", 2, "--t", 3]])
    def test_bad_params(self, tmp_path, capsys, extra):
        m = tmp_path / "m.json"
        run(["build-state", "magic", "--d", 7, "--n", 1, "--out", m], capsys)
        assert run(["run-cg", "--in", m, "--L", 1] + extra, capsys)[0] == 2

    def test_missing_input(self, tmp_path, capsys):
        assert run(["run-cg", "--in", tmp_path / "nope.json", "--L", 1], capsys)[0] == 2

    def test_negative_steps(self, psi):
        with pytest.raises(SystemExit) as info:
            main(["run-cg", "--in", str(psi), "--L", "-1"])
        assert info.value.code == 2


class TestClassify:
    def test_zeros(self, tmp_path, capsys):
        z = tmp_path / "z.json"
        run(["build-state", "zeros", "--d", 7, "--n", 2, "--out", z], capsys)
        code, out, _ = run(["classify", "--in", z], capsys)
        assert code == 0 and json.loads(out)["k"] == 0

    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    def test_example_family(self, tmp_path, capsys, k):
        path = tmp_path / "p.json"
        run(["build-state", "psi_k", "--d", 2, "--n", 3, "--k", k, "--seed", k, "--out", path], capsys)
        code, out, _ = run(["classify", "--in", path], capsys)
        report = json.loads(out)
        assert code == 0 and report["k"] == k
        assert all(v is not False for v in report["verdicts"].values())

    def test_flow(self, capsys, psi):
        code, out, _ = run(["classify", "--in", psi, "--flow"], capsys)
        report = json.loads(out)
        assert code == 0 and report["k"] == 2 and report["iterations_used"] > 0

    def test_deterministic(self, capsys, psi):
        args = ["classify", "--in", psi, "--L", 3]
        assert run(args, capsys)[1] == run(args, capsys)[1]

    def test_invalid_state(self, tmp_path, capsys, psi):
        data = json.loads(psi.read_text())
        data["data"][0] = [3.0, 0.0]
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(data))
        assert run(["classify", "--in", bad], capsys)[0] == 1

    def test_malformed_json(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        assert run(["report", "--in", bad], capsys)[0] == 2


class TestVerify:
    def test_duality(self, capsys):
        code, out, _ = run(["verify", "duality", "--d", 7, "--n", 1], capsys)
        assert code == 0 and json.loads(out)["passed"]

    def test_stability(self, capsys):
        code, out, _ = run(["verify", "stability", "--d", 2, "--n", 2], capsys)
        assert code == 0 and json.loads(out)["checks"] == 20

    def test_unknown(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["verify", "nosuch"])
        assert info.value.code == 2

    def test_d5_two_input(self, capsys):
        assert run(["verify", "clt", "--d", 5, "--n", 1], capsys)[0] == 2

    def test_deterministic(self, capsys):
        args = ["verify", "clifford_covariance", "--d", 7, "--n", 1, "--seed", 4, "--samples", 3]
        assert run(args, capsys)[1] == run(args, capsys)[1]


class TestReport:
    def test_from_report(self, tmp_path, capsys, psi):
        r = tmp_path / "r.json"
        run(["classify", "--in", psi, "--out", r], capsys)
        code, out, _ = run(["report", "--in", r], capsys)
        assert code == 0 and out.startswith("n=3 d=2 k=2")

    def test_from_state(self, capsys, psi):
        code, out, _ = run(["report", "--in", psi, "--L", 2], capsys)
        assert code == 0 and "k by entropy: 2" in out and "L,entropy" in out


def test_console_entry_point(tmp_path):
    out = tmp_path / "z.json"
    proc = subprocess.run([sys.executable, "-m", "magicflow", "build-state", "zeros",
                           "--d", "3", "--n", "1", "--out", str(out)], capture_output=True)
    assert proc.returncode == 0 and out.exists()
