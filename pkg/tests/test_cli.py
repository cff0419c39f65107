import json

import numpy as np
import pytest

from kam.cli import main
from kam.hermitian import matrix_from_json


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def strip_time(rep):
    rep = dict(rep)
    rep.pop("wall_time")
    return rep


def test_mean_geometric(capsys):
    code, rep, _ = run(capsys, "mean", "[[1,0],[0,4]]", "[[1,0],[0,1]]", "--mean", "geometric")
    assert code == 0 and rep["passed"]
    assert np.allclose(matrix_from_json(rep["result"]["matrix"]), np.diag([1.0, 2.0]))
    for key in ("command", "config", "checks", "passed", "version", "wall_time", "result"):
        assert key in rep


def test_mean_measure_file(capsys, tmp_path):
    f = tmp_path / "harm.json"
    f.write_text(json.dumps({"alpha": 0, "beta": 0, "atoms": [[1, 1]]}))
    code, rep, _ = run(capsys, "mean", "[[2,0],[0,3]]", "[[1,0],[0,1]]", "--mean", str(f))
    assert code == 0
    assert any(c["name"] == "route_agreement" and c["passed"] for c in rep["checks"])
    assert np.allclose(matrix_from_json(rep["result"]["matrix"]), np.diag([4 / 3, 1.5]))


@pytest.mark.parametrize(
    "argv, code",
    [
        (["mean", "[[1,0],[0,-1]]", "[[1,0],[0,1]]", "--mean", "geometric"], 3),
        (["mean", "[[1,0],[0,1e-14]]", "[[1,0],[0,1]]", "--mean", "geometric"], 3),
        (["mean", "[[1,0],[0,5e-13]]", "[[1,0],[0,1]]", "--mean", "geometric"], 4),
        (["mean", "[[1,2],[0,1]]", "[[1,0],[0,1]]", "--mean", "geometric"], 2),
        (["mean", "[[1]]", "[[1,0],[0,1]]", "--mean", "geometric"], 2),
        (["mean", "[[1]]", "[[1]]", "--mean", "quadratic"], 2),
        (["check-mean-axioms", "--dim", "17"], 2),
        (["check-mean-axioms", "--dim", "0"], 2),
        (["check-mean-axioms", "--trials", "0"], 2),
        (["verify", "nonsense"], 2),
    ],
)
def test_exit_codes(capsys, argv, code):
    got = main(argv)
    _, err = capsys.readouterr()
    assert got == code
    assert "error" in json.loads(err)


def test_usage_error_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_norm_mean_and_check_order(capsys):
    code, rep, _ = run(capsys, "norm-mean", "[[2,0],[0,3]]", "[[1,0],[0,0]]", "--mean", "geometric")
    assert code == 0
    assert rep["result"]["norm"] == pytest.approx(np.sqrt(2), abs=1e-6)
    code, rep, _ = run(capsys, "check-order", "[[1,0],[0,1]]", "[[2,0],[0,2]]", "--mean", "geometric")
    assert code == 0 and rep["result"]["loewner_leq"] is True
    assert rep["result"]["by_projection_norms"] is True
    code, rep, _ = run(capsys, "check-order", "[[2,0],[0,1]]", "[[1,0],[0,2]]", "--mean", "geometric")
    assert rep["result"]["loewner_leq"] is False
    assert rep["result"]["by_projection_norms"] is False
    assert rep["result"]["witness"]["P"]["n"] == 2


def test_axioms_deterministic_and_seed_env(capsys, monkeypatch):
    args = ["check-mean-axioms", "--mean", "harmonic", "--dim", "3", "--trials", "10"]
    c1, r1, _ = run(capsys, *args, "--seed", "7")
    c2, r2, _ = run(capsys, *args, "--seed", "7")
    assert c1 == c2 == 0 and strip_time(r1) == strip_time(r2)
    monkeypatch.setenv("KAM_SEED", "7")
    _, r3, _ = run(capsys, *args)
    assert r3["config"]["seed"] == 7 and strip_time(r3) == strip_time(r1)
    monkeypatch.delenv("KAM_SEED")
    _, r4, _ = run(capsys, *args)
    assert r4["config"]["seed"] == 42


def test_verify_suites(capsys):
    code, rep, _ = run(capsys, "verify", "prop3.4", "--mean", "harmonic", "--dim", "3", "--trials", "10")
    assert code == 0 and rep["config"]["suite"] == "order-by-projections"
    code, rep, _ = run(capsys, "verify", "lemma3.6", "--mean", "arithmetic", "--dim", "3", "--trials", "3")
    assert code == 0
    assert any("h empty" in n for c in rep["checks"] for n in c.get("notes", []))
    code, _, err = run(capsys, "verify", "eq10", "--mean", "arithmetic", "--trials", "3")
    assert code == 1 and json.loads(err)["type"] == "HypothesisError"


def test_verify_failure_replays(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, rep, _ = run(capsys, "verify", "projection-norm", "--mean", "arithmetic", "--dim", "3",
                       "--trials", "10", "--out", str(out))
    assert code == 1
    code, rep2, _ = run(capsys, "verify", "projection-norm", "--replay", str(out))
    assert code == 0
    assert rep2["result"]["deviation"] == pytest.approx(rep["checks"][0]["max_deviation"])


def test_preserver_run(capsys, tmp_path):
    code, rep, _ = run(capsys, "preserver", "run", "--map", '{"kind":"unitary","n":3,"random":7}',
                       "--mean", "geometric", "--trials", "5")
    assert code == 0 and rep["result"]["overall"] == "certified_jordan"
    assert rep["result"]["jordan"]["form"] == "automorphism"
    out = tmp_path / "p.json"
    spec = '{"kind":"perturbed","eta":0.01,"seed":1,"base":{"kind":"identity","n":3}}'
    code, rep, _ = run(capsys, "preserver", "run", "--map", spec, "--trials", "5", "--out", str(out))
    assert code == 1 and rep["result"]["overall"] == "rejected"
    code, rep2, _ = run(capsys, "preserver", "run", "--replay", str(out), "--map", spec)
    assert code == 0 and not rep2["result"]["deviation"] <= rep2["result"]["threshold"]


def test_preserver_reports_byte_identical(capsys):
    args = ["preserver", "run", "--map", '{"kind":"transpose","n":2,"random":3}', "--trials", "4", "--seed", "5"]
    _, r1, _ = run(capsys, *args)
    _, r2, _ = run(capsys, *args)
    assert json.dumps(strip_time(r1), sort_keys=True) == json.dumps(strip_time(r2), sort_keys=True)


def test_measure_equivalence(capsys, tmp_path):
    f = tmp_path / "h.json"
    f.write_text(json.dumps({"alpha": 0, "beta": 0, "atoms": [[1, 1]]}))
    code, rep, _ = run(capsys, "measure", "check-equivalence", str(f), "--mean", "harmonic",
                       "--dim", "3", "--trials", "10")
    assert code == 0 and all(c["passed"] for c in rep["checks"])
    code, rep, _ = run(capsys, "measure", "check-equivalence", str(f), "--mean", "geometric",
                       "--dim", "3", "--trials", "3")
    assert code == 1
