import io
import json
import subprocess
import sys

import numpy as np
import pytest

from segrescope.cli import run
from segrescope.states import bell_state, random_density, random_pure, save_state, werner


def _run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def files(tmp_path):
    paths = {"bell": tmp_path / "bell.json", "psi": tmp_path / "psi.json", "rho": tmp_path / "rho.json",
             "werner": tmp_path / "werner.json"}
    save_state(bell_state(), paths["bell"])
    save_state(random_pure((2, 2, 2), np.random.default_rng(1)), paths["psi"])
    save_state(random_density((2, 2), np.random.default_rng(2), rank=2), paths["rho"])
    save_state(werner(0.8), paths["werner"])
    return {k: str(v) for k, v in paths.items()}


def test_measure_bell(files):
    code, out, _ = _run("measure", "--kind", "concurrence", "--state", files["bell"])
    assert code == 0
    assert out == "C = 1.000000\n"


def test_secant_dim_json():
    code, out, _ = _run("secant-dim", "--dims", "3,3", "--k", "1", "--json")
    assert code == 0
    obj = json.loads(out)
    assert obj["computed_dim"] == 7 and obj["expected_dim"] == 8 and obj["defect"] == 1


def test_codes_table():
    code, out, _ = _run("codes", "--q", "2", "--l", "2", "--verify")
    assert code == 0
    header, row = out.splitlines()
    assert header.split() == ["q", "l", "t", "k", "ambient", "expected", "computed", "fills"]
    assert row.split() == ["2", "2", "3", "2", "7", "7", "7", "true"]


def test_segre_check_and_reshape(files):
    code, out, _ = _run("segre-check", "--state", files["bell"])
    assert code == 0 and out.splitlines()[-1] == "separable = false"
    code, out, _ = _run("reshape", "--state", files["psi"], "--split", "1", "--json")
    obj = json.loads(out)
    assert (obj["rows"], obj["cols"]) == (2, 4) and obj["numerical_rank"] == 2


def test_fill_scan(files):
    code, out, _ = _run("fill-scan", "--dims", "3,3", "--kmax", "3", "--json")
    assert code == 0 and json.loads(out)["least_filling_k"] == 2
    code, out, _ = _run("fill-scan", "--dims", "3,3", "--kmax", "1", "--json")
    assert code == 0 and json.loads(out)["least_filling_k"] is None
    code, out, _ = _run("fill-scan", "--dims", "3,3", "--kmax", "1", "--json", "--strict")
    assert code == 4
    assert json.loads(out)["exit_code"] == 4


def test_rank_and_roof(files):
    code, out, _ = _run("rank", "--state", files["bell"], "--r", "2", "--json")
    assert code == 0 and json.loads(out)["residual"] <= 1e-8
    code, out, _ = _run("roof", "--rho", files["werner"], "--restarts", "3", "--json")
    obj = json.loads(out)
    assert code == 0
    assert abs(obj["value"] - obj["wootters"]) <= 1e-3


def test_input_errors(files, tmp_path):
    assert _run("frobnicate")[0] == 2
    assert _run("measure")[0] == 2
    assert _run("measure", "--state", str(tmp_path / "missing.json"))[0] == 2
    assert _run("measure", "--state", files["rho"])[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"dims":[2,2],"re":[1,0,0],"im":[0,0,0]}')
    code, out, err = _run("measure", "--state", str(bad), "--json")
    assert code == 2 and "re" in err
    assert json.loads(out)["exit_code"] == 2
    code, out, _ = _run("codes", "--q", "6", "--l", "2", "--json")
    assert code == 2 and "prime power" in json.loads(out)["error"]


def test_resource_guard():
    code, out, _ = _run("secant-dim", "--dims", "2,2,2,2,2,2,2,2,2,2,2,2,2", "--k", "1", "--json")
    assert code == 3 and json.loads(out)["exit_code"] == 3
    assert _run("codes", "--q", "5", "--l", "2", "--verify")[0] == 3


def test_rank_strict_nonconvergence(tmp_path):
    from segrescope.states import w_state
    path = tmp_path / "w.json"
    save_state(w_state(3), path)
    code, out, _ = _run("rank", "--state", str(path), "--r", "2", "--restarts", "2", "--json", "--strict")
    assert code == 4
    assert json.loads(out)["result"]["converged"] is False


def test_inputs_not_mutated(files):
    before = {k: open(v, "rb").read() for k, v in files.items()}
    _run("measure", "--state", files["psi"], "--kind", "fmeasure")
    _run("roof", "--rho", files["rho"], "--restarts", "2")
    _run("rank", "--state", files["psi"], "--r", "2")
    assert {k: open(v, "rb").read() for k, v in files.items()} == before


@pytest.mark.parametrize(
    "argv",
    [
        ["secant-dim", "--dims", "2,3,2", "--k", "2", "--seed", "3"],
        ["fill-scan", "--dims", "2,2,2", "--kmax", "2"],
        ["codes", "--q", "3", "--l", "2", "--verify"],
        ["rank", "--state", "{psi}", "--r", "2", "--seed", "5"],
        ["roof", "--rho", "{rho}", "--restarts", "3", "--seed", "7"],
    ],
)
def test_json_is_deterministic(files, argv):
    argv = [a.format(**files) for a in argv] + ["--json"]
    first = _run(*argv)
    second = _run(*argv)
    assert first[0] == 0
    assert first[1] == second[1]
    json.loads(first[1])


def test_module_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "segrescope", "measure", "--state", files["bell"]],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "C = 1.000000\n"
