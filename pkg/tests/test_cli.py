import csv
import json
from pathlib import Path

import pytest

from ncspecflow import cli, specflow
from ncspecflow.algebra import KZeroClass
from ncspecflow.problems import BUILDERS

PROBLEMS = Path(__file__).resolve().parents[1] / "problems"


def _run(tmp_path, problem, *extra):
    src = tmp_path / "problem.json"
    src.write_text(problem if isinstance(problem, str) else json.dumps(problem))
    out = tmp_path / "result.json"
    code = cli.main(["--input", str(src), "--output", str(out), *extra])
    return code, json.loads(out.read_text()) if out.exists() else None


def test_shipped_problems_are_current():
    for name, fn in BUILDERS.items():
        assert json.loads((PROBLEMS / f"{name}.json").read_text()) == json.loads(json.dumps(fn()))


@pytest.mark.parametrize("name, code, key, value", [
    ("axiom_v", 0, "k0", [2]),
    ("constant_path", 0, "k0", [0, 0]),
    ("divergence", 2, "verdict", "refine"),
    ("maslov", 0, "k0", [1]),
    ("odd_flow", 0, "k1", [1]),
    ("relative_index", 0, "k0", None),
])
def test_problem_outcomes(tmp_path, name, code, key, value):
    got, res = _run(tmp_path, (PROBLEMS / f"{name}.json").read_text())
    assert got == code
    if value is not None:
        assert res[key] == value
    assert res["signs"]["SIGMA_C"] == -1


def test_bad_json_is_schema_error(tmp_path):
    code, res = _run(tmp_path, "{not json")
    assert code == 3 and res["error"]["type"] == "SchemaError"


def test_unknown_task_is_schema_error(tmp_path):
    p = BUILDERS["axiom_v"]()
    p["task"] = "eigenvalues"
    assert _run(tmp_path, p)[0] == 3


def test_shape_mismatch_is_schema_error(tmp_path):
    p = BUILDERS["axiom_v"]()
    p["algebra"]["blocks"][0]["dim"] = 4
    assert _run(tmp_path, p)[0] == 3


def test_route_disagreement_exit_code(tmp_path, monkeypatch):
    real = specflow.spectral_flow_crossings

    def broken(p, *a, **k):
        r = real(p, *a, **k)
        r.value = r.value + KZeroClass(p.shape, (1,) * len(p.shape))
        return r

    monkeypatch.setattr(specflow, "spectral_flow_crossings", broken)
    code, res = _run(tmp_path, BUILDERS["axiom_v"]())
    assert code == 4 and res["error"]["type"] == "CrossCheckFailed"


def test_threads_do_not_change_output(tmp_path):
    text = (PROBLEMS / "axiom_suite_relindex.json").read_text()
    outs = []
    for threads in ("1", "4"):
        src = tmp_path / "p.json"
        src.write_text(text)
        out = tmp_path / f"r{threads}.json"
        cli.main(["--input", str(src), "--output", str(out), "--threads", threads])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_emit_curves(tmp_path):
    src = PROBLEMS / "constant_path.json"
    csv_path = tmp_path / "curves.csv"
    cli.main(["--input", str(src), "--output", str(tmp_path / "r.json"), "--emit-curves", str(csv_path)])
    rows = list(csv.reader(csv_path.open()))
    assert rows[0] == ["t", "block", "curve_index", "eigenvalue"]
    # 5 t-samples at rank 2: block 0 has 4 curves, block 1 has 8 thetas x 2
    assert len(rows) - 1 == 5 * (4 + 16)
