import json

import pytest

from geomops import cli, scenario
from geomops.scenario import ScenarioError, build, run_scenario

BASE = {"schema": "geomops.scenario/1", "structure": "shear2"}


def doc(**kw):
    return {**BASE, **kw}


def test_schema_loads_and_accepts_minimal_document():
    assert scenario.schema()["properties"]["schema"]["const"] == scenario.SCHEMA_ID
    scenario.validate(doc(tasks=[]))


@pytest.mark.parametrize("bad", [
    {"structure": "shear2", "tasks": []},
    doc(schema="geomops.scenario/2", tasks=[]),
    doc(tasks=[{"task": "integrate"}]),
    doc(tasks=[{"task": "eval", "colour": 1}]),
    doc(tasks=[{"task": "flow", "steps": 1}]),
    doc(tasks=[], extra=1),
    doc(dimension=0, tasks=[]),
])
def test_schema_violations(bad):
    with pytest.raises(ScenarioError):
        scenario.validate(bad)


@pytest.mark.parametrize("bad", [
    doc(structure=[[1, 0]], tasks=[]),
    doc(structure="euclidean(3)", dimension=2, tasks=[]),
    doc(box=[0, 1], tasks=[]),
    doc(functions={"h": "x3"}, tasks=[]),
    doc(volume={"kind": "density"}, tasks=[]),
    doc(morphisms=[{"name": "m", "forward": ["x1"]}], tasks=[]),
])
def test_build_errors(bad):
    with pytest.raises(ScenarioError):
        build(bad)


def test_custom_structure_metric_and_volume():
    sc = build(doc(structure=[["1", "x1"], ["0", "1"]], box={"lower": [0, 0], "upper": [1, 2]},
                   metric=[[1, 0], [0, 1]], volume={"kind": "density", "expr": "1 + x1^2"},
                   functions={"h": "x1*x2"}, tasks=[]))
    assert sc.dim == 2 and sc.box.upper == (1.0, 2.0)
    assert sc.b.name == "custom" and sc.volume.kind == "density"
    assert sc.function("h")(sc.box.center) == pytest.approx(0.5)
    entry = sc.as_entry()
    assert entry.functions["h"] is sc.functions["h"] and "sumsq" in entry.functions


def test_multi_task_report():
    rep = run_scenario(doc(name="demo", functions={"E": "x1^2 + x2^2"}, tasks=[
        {"task": "eval", "id": "e", "F": "E", "points": [[1, 2]], "expect": [5]},
        {"task": "grad", "F": "E"},
        {"task": "bracket", "F": "x1", "G": "E"},
        {"task": "laplace", "F": "E"},
        {"task": "adjoint", "A": [["0", "1"], ["0", "0"]]},
        {"task": "green", "F": "x1", "G": "E", "variant": "right"},
        {"task": "dirichlet", "F": "x1"},
        {"task": "morphcheck", "morphism": "translate", "check": "all"},
        {"task": "verify", "suite": "structure"},
    ]))
    assert rep["schema"] == "geomops.report/1" and rep["scenario"] == "demo"
    assert rep["passed"] is True
    assert [t["task"] for t in rep["tasks"]][:2] == ["eval", "grad"]
    assert rep["tasks"][0]["id"] == "e"
    green = rep["tasks"][5]
    assert (green["lhs"], green["bulk"], green["boundary"]) == pytest.approx((2.0, 0.0, 2.0))
    assert rep["tasks"][6]["value"] == pytest.approx(0.5)


def test_numerical_failure_is_recorded_with_point():
    rep = run_scenario(doc(structure=[["1", "x1"], ["x1", "1"]], box=[0, 2, 0, 1],
                           tasks=[{"task": "grad", "F": "x2", "points": [[0.5, 0.5], [1.0, 0.3]]}]))
    t = rep["tasks"][0]
    assert rep["passed"] is False and t["error"] == "SingularMatrixError"
    assert t["argmax_point"] == [1.0, 0.3]


def test_non_morphism_fails_with_residual():
    rep = run_scenario(doc(structure="euclidean",
                           morphisms=[{"name": "stretch", "forward": ["2*x1", "x2"], "inverse": ["x1/2", "x2"]}],
                           tasks=[{"task": "morphcheck", "morphism": "stretch", "check": "geometromorphism"}]))
    t = rep["tasks"][0]
    assert t["passed"] is False and t["residual"] == pytest.approx(3.0)
    assert len(t["argmax_point"]) == 2


def test_run_subcommand(tmp_path, capsys):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc(tasks=[{"task": "green", "F": "x1", "G": "x1^2+x2^2", "order": 8}])))
    assert cli.main(["run", str(path), "--no-timestamp"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["tasks"][0]["residual"] < 1e-12
    path.write_text("{not json")
    assert cli.main(["run", str(path)]) == 2
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 2
    path.write_text(json.dumps({"schema": "geomops.scenario/1", "tasks": []}))
    assert cli.main(["run", str(path)]) == 2


def test_default_tolerances():
    assert scenario.DEFAULT_TOLS["grad"] == 1e-9
    assert scenario.DEFAULT_TOLS["laplace"] == 1e-8
    assert scenario.DEFAULT_TOLS["green"] == 1e-6
