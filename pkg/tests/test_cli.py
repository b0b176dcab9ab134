import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from ksafe.cli import run
from ksafe.operators import is_safe
from ksafe.specfile import load_spec

SPECS = Path(__file__).parent.parent / "specs"
LAPLACIAN = str(SPECS / "laplacian.spec")
ROUGH = str(SPECS / "rough_potential.spec")
UNSAFE = str(SPECS / "unsafe_counterexample.spec")


def call(*argv):
    out = io.StringIO()
    code = run([str(a) for a in argv], stdout=out)
    return code, out.getvalue()


def call_json(*argv):
    code, text = call(*argv, "--json", "--no-timestamp")
    return code, json.loads(text) if text else None


@pytest.fixture
def nonelliptic_spec(tmp_path):
    path = tmp_path / "degenerate.spec"
    path.write_text(json.dumps({"operator": {"n": 1, "q": 1, "s": 2, "terms": [
        {"index": [2], "coeff": [[[{"tag": "trig", "freqs": [[1]], "amps": [1.0], "phases": [0.0]}]]]}]}}))
    return str(path)


def test_check_safe_spec():
    code, doc = call_json("check", ROUGH, "--k", 3)
    assert code == 0 and not doc["flagged"]
    expected = is_safe(load_spec(ROUGH).operator, 3).to_dict()
    assert doc["results"]["safeness"]["overall"] is True
    assert len(doc["results"]["safeness"]["rows"]) == len(expected["rows"])
    for got, want in zip(doc["results"]["safeness"]["rows"], expected["rows"]):
        assert got == want


def test_check_unsafe_spec_flags():
    code, doc = call_json("check", UNSAFE, "--k", 1)
    assert code == 2 and doc["flagged"]
    assert any("not 1-safe" in w for w in doc["warnings"])


def test_index_of_positive_laplacian():
    code, doc = call_json("index", LAPLACIAN, "--l", 2, "--N", 64)
    assert code == 0
    res = doc["results"]["index"]
    assert (res["dim_ker"], res["dim_coker"], res["index"]) == (0, 0, 0)


def test_index_on_nonelliptic_spec(nonelliptic_spec):
    code, doc = call_json("index", nonelliptic_spec, "--l", 2, "--N", 32)
    assert code == 2 and doc["flagged"]
    assert any("ellip" in w for w in doc["warnings"])


def test_ellipticity_command(nonelliptic_spec):
    assert call("ellipticity", LAPLACIAN)[0] == 0
    code, doc = call_json("ellipticity", nonelliptic_spec)
    assert code == 2 and doc["results"]["ellipticity"]["elliptic"] is False


def test_json_output_is_reproducible():
    first = call("check", ROUGH, "--k", 3, "--json", "--no-timestamp")[1]
    second = call("check", ROUGH, "--k", 3, "--json", "--no-timestamp")[1]
    assert first == second
    doc = json.loads(first)
    assert doc["schema_version"] == 1 and doc["tool"]["name"] == "ksafe"
    assert "timestamp" not in doc
    assert "timestamp" in json.loads(call("check", ROUGH, "--k", 3, "--json")[1])


def test_text_output():
    code, text = call("check", LAPLACIAN, "--k", "inf")
    assert code == 0
    assert "overall: True" in text and "k: inf" in text


def test_adjoint_and_compose():
    code, doc = call_json("adjoint", LAPLACIAN, "--k", 4)
    assert code == 0
    assert doc["results"]["adjoint"]["spec"]["terms"][-1]["index"] == [2]
    code, doc = call_json("compose", LAPLACIAN, LAPLACIAN)
    assert code == 0 and doc["results"]["composition"]["s"] == 4


def test_compose_rough_factor_is_a_grade_error():
    # the second derivative of a grade-1 coefficient is not available
    assert call("compose", LAPLACIAN, ROUGH)[0] == 1


@pytest.mark.parametrize(
    "argv",
    [
        ("frobnicate", LAPLACIAN),
        ("check", LAPLACIAN),
        ("check", "/nonexistent.spec", "--k", 1),
        ("check", LAPLACIAN, "--k", "many"),
        ("compose", LAPLACIAN),
        ("sweep", LAPLACIAN, "--values", "1,x"),
        (),
    ],
)
def test_usage_errors_exit_one(argv):
    assert call(*argv)[0] == 1


def test_malformed_spec_exit_one(tmp_path, capsys):
    path = tmp_path / "bad.spec"
    path.write_text('{"operator": {"n": 1, "q": 1, "s": 2, "terms": []}, "bogus": 1}')
    assert call("check", path, "--k", 1)[0] == 1
    assert "unknown field" in capsys.readouterr().err


def test_cutoff_sweep_csv(tmp_path):
    out = tmp_path / "cutoff.csv"
    code, doc = call_json("sweep", ROUGH, "--kind", "cutoff", "--values", "8,32,128", "--csv", out)
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["cutoff"] for r in rows] == ["8", "32", "128"]
    values = [float(r["difference_norm"]) for r in rows]
    assert values[0] > values[1] > values[2]
    assert [r["difference_norm"] for r in doc["results"]["sweep"]["rows"]] == values


def test_norm_sweep_unsafe_grows(tmp_path):
    code, doc = call_json("sweep", UNSAFE, "--kind", "norm", "--l", 1, "--values", "64,256")
    norms = [r["operator_norm"] for r in doc["results"]["sweep"]["rows"]]
    assert code == 0 and norms[1] > 1.3 * norms[0]


def test_parametrix_command(tmp_path):
    out = tmp_path / "eps.csv"
    code, doc = call_json("parametrix", LAPLACIAN, "--N", 256, "--csv", out)
    assert code == 0
    assert doc["results"]["splitting"]["relative_residual"] < 1e-6
    assert list(csv.DictReader(out.open()))[0].keys() == {"epsilon", "A_eps", "ER_coefficient", "residual"}


def test_estimate_command():
    code, doc = call_json("estimate", LAPLACIAN, "--N", 64)
    assert code == 0
    assert doc["results"]["operator_norm"]["value"] == pytest.approx(1.0, rel=1e-6)
    assert doc["results"]["garding"]["C_est"] > 0


def test_out_file(tmp_path):
    out = tmp_path / "report.txt"
    code, text = call("check", LAPLACIAN, "--k", 2, "--out", out)
    assert code == 0 and text == ""
    assert "safeness" in out.read_text()


def test_csv_without_rows_is_an_error(tmp_path):
    assert call("check", LAPLACIAN, "--k", 2, "--csv", tmp_path / "x.csv")[0] == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ksafe", "check", LAPLACIAN, "--k", "3"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "overall: True" in proc.stdout
