import json

import pytest

from kam.errors import HypothesisError
from kam.means import catalog_means, get_mean
from kam.verify import (
    SUITE_ALIASES,
    SUITES,
    CheckRecord,
    geometric_relation,
    h_decomposition_suite,
    maximality,
    mean_axioms,
    order_by_projections,
    pair_scaling,
    projection_norm_formula,
    replay_check,
    route_equivalence,
    run_suite,
    shifted_identity,
    worked_projection_value,
)

CASE1 = ["geometric", "harmonic", "logarithmic"]


@pytest.mark.parametrize("name", ["arithmetic", "geometric", "harmonic", "logarithmic", "power:0.3"])
def test_axioms_pass_for_catalog(name):
    recs = mean_axioms(get_mean(name), n=3, trials=25, seed=1)
    assert recs and all(r.passed for r in recs), [r.name for r in recs if not r.passed]
    assert {r.name.split("/")[-1] for r in recs} >= {"monotonicity", "transformer", "symmetry", "norm_idempotent"}


def test_route_equivalence_random_measures():
    (rec,) = route_equivalence(measures=6, pairs=6, seed=2)
    assert rec.passed and rec.trials == 36


def test_projection_norm_formula_case1():
    for name in CASE1:
        (rec,) = projection_norm_formula(get_mean(name), trials=15, seed=3)
        assert rec.passed, (name, rec.max_deviation)


def test_projection_norm_formula_outside_hypothesis_is_measured():
    (rec,) = projection_norm_formula(get_mean("arithmetic"), trials=15, seed=3)
    assert not rec.passed
    assert any("f(0+)" in n for n in rec.notes)
    assert rec.witness is not None
    assert replay_check(rec.witness) == pytest.approx(rec.max_deviation)


def test_worked_value():
    assert worked_projection_value().passed


def test_geometric_relation_and_order():
    g = get_mean("geometric")
    assert all(r.passed for r in geometric_relation(g, trials=15, seed=4))
    for name in CASE1:
        assert all(r.passed for r in order_by_projections(get_mean(name), trials=20, seed=4))
    with pytest.raises(HypothesisError):
        geometric_relation(get_mean("arithmetic"), trials=2)
    with pytest.raises(HypothesisError):
        order_by_projections(get_mean("power:0.5"), trials=2)


def test_maximality_and_scaling():
    assert all(r.passed for r in maximality(n=3, trials=10, effects=50, seed=5))
    assert all(r.passed for r in pair_scaling(n=3, trials=10, seed=5))


def test_h_decomposition():
    recs = h_decomposition_suite(get_mean("arithmetic"), n=3, trials=5)
    assert all(r.passed for r in recs)
    assert any("h empty" in n for r in recs for n in r.notes)
    for name in ["harmonic", "geometric", "logarithmic", "power:0.5"]:
        recs = h_decomposition_suite(get_mean(name), n=3, trials=5, seed=6)
        assert all(r.passed for r in recs), [(r.name, r.max_deviation) for r in recs if not r.passed]


def test_shifted_identity():
    for m in catalog_means():
        assert all(r.passed for r in shifted_identity(m, trials=3, seed=7))


def test_run_suite_aliases():
    for alias, key in SUITE_ALIASES.items():
        assert key in SUITES
    a = run_suite("lemma2.5", "geometric", n=3, trials=5, seed=1)
    b = run_suite("scaling", "geometric", n=3, trials=5, seed=1)
    assert [r.to_json() for r in a] == [r.to_json() for r in b]
    with pytest.raises(KeyError):
        run_suite("nope", "geometric")


def test_records_are_json_and_deterministic():
    r1 = [r.to_json() for r in mean_axioms(get_mean("harmonic"), n=2, trials=5, seed=9)]
    r2 = [r.to_json() for r in mean_axioms(get_mean("harmonic"), n=2, trials=5, seed=9)]
    assert json.dumps(r1, sort_keys=True) == json.dumps(r2, sort_keys=True)
    assert isinstance(CheckRecord("x", "y", True, 0.0, 1.0, 1).to_json(), dict)


def test_replay_unknown_check():
    with pytest.raises(KeyError):
        replay_check({"check": "nope", "inputs": {}})
