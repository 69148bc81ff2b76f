import json
import math

import numpy as np
import pytest

import treemot

BIMARGINAL = {
    "epsilon": 1.0,
    "variables": [{"id": "x1", "cardinality": 2}, {"id": "x2", "cardinality": 2}],
    "factors": [{"id": "c", "scope": ["x1", "x2"], "cost": [[0, 1], [1, 0]]}],
    "constraints": {"x1": [0.5, 0.5], "x2": [0.5, 0.5]},
}


def bimarginal():
    return treemot.Problem.from_json(json.dumps(BIMARGINAL))


def test_problem_round_trip():
    p = bimarginal()
    assert p.variables == ["x1", "x2"]
    assert p.factors == ["c"]
    assert p.validate() == ""
    q = treemot.Problem.from_json(p.to_json())
    assert q.to_json() == p.to_json()


@pytest.mark.parametrize("algorithm", ["vanilla-is", "isbp", "cnp"])
def test_symmetric_plan(algorithm):
    r = treemot.solve(bimarginal(), algorithm=algorithm, tol=1e-12)
    assert r["status"] == "converged"
    plan = r["factors"]["c"]
    assert plan.shape == (2, 2)
    assert plan[0, 0] == pytest.approx(1.0 / (2.0 + 2.0 * math.exp(-1.0)), abs=1e-9)
    np.testing.assert_allclose(r["nodes"]["x1"], [0.5, 0.5], atol=1e-12)


def test_algorithms_agree_on_bench_instance():
    p = treemot.bench_problem("star", 5, 3, seed=4)
    a = treemot.solve(p, algorithm="isbp", tol=1e-11)
    b = treemot.solve(p, algorithm="cnp", counting="experiment", tol=1e-11)
    c = treemot.solve(p, algorithm="vanilla-is", tol=1e-12)
    for v in p.variables:
        assert np.abs(a["nodes"][v] - c["nodes"][v]).sum() < 1e-6
        assert np.abs(b["nodes"][v] - c["nodes"][v]).sum() < 1e-6


def test_counting_numbers():
    c = treemot.counting_numbers(bimarginal(), "uniform")
    assert c["c_edge"] == pytest.approx([1 / 3, 1 / 3])
    assert c["convex"]
    with pytest.raises(ValueError):
        treemot.counting_numbers(bimarginal(), "nope")


def test_errors_and_cli():
    bad = dict(BIMARGINAL, constraints={"x1": [0.5, 0.4]})
    with pytest.raises(ValueError):
        treemot.Problem.from_json(json.dumps(bad))
    code, out, _ = treemot.run_cli(["bench", "--families", "line", "--J", "4", "--algorithms", "isbp"])
    assert code == 0
    assert out.startswith("family,J,d,algorithm")
