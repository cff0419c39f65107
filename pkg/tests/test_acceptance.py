"""Acceptance criteria, one test each.

Every test prints a single ``PASS`` or ``FAIL`` line (visible even under
pytest's capture) before asserting. Run ``pytest tests/test_acceptance.py -v``
or ``python tests/test_acceptance.py``.
"""

import sys
import time

import numpy as np
import pytest

from kam.hermitian import operator_norm
from kam.maps import Congruence, JordanTranspose, JordanUnitary, Perturbed, identity_map
from kam.means import DEFAULT_LADDER, catalog_means, get_mean
from kam.preserver import (
    PipelineConfig,
    check_eps_independence,
    replay_witness,
    run_pipeline,
)
from kam.sampling import random_hermitian, random_pd, random_projection, random_unitary
from kam.verify import (
    geometric_relation,
    h_decomposition_suite,
    maximality,
    mean_axioms,
    order_by_projections,
    projection_norm_formula,
    route_equivalence,
    shifted_identity,
    worked_projection_value,
)

SEED = 20240601
THEORY_STAGES = {"norm_preservation", "projection_preservation", "homogeneity_or_orthogonality"}


_capture = None


@pytest.fixture(autouse=True)
def _uncaptured(capsys):
    global _capture
    _capture = capsys
    yield
    _capture = None


def report(num: int, passed: bool, detail: str) -> None:
    line = f"{'PASS' if passed else 'FAIL'} criterion {num}: {detail}"
    if _capture is not None:
        with _capture.disabled():
            print("\n" + line)
    else:
        print(line)
    assert passed, line


def _worst(records):
    bad = [r for r in records if not r.passed]
    dev = max((r.max_deviation for r in records), default=0.0)
    return bad, dev


def test_c01_mean_axioms():
    t0 = time.perf_counter()
    records = []
    for m in catalog_means():
        records += mean_axioms(m, n=4, trials=200, seed=SEED)
    dt = time.perf_counter() - t0
    bad, dev = _worst(records)
    report(1, not bad and dt <= 30,
           f"mean axioms, {len(records)} batteries, {len(bad)} failing, worst {dev:.2e}, {dt:.1f}s")


def test_c02_route_equivalence():
    t0 = time.perf_counter()
    (rec,) = route_equivalence(measures=50, pairs=50, max_atoms=5, max_dim=5, seed=SEED, tol=1e-8)
    dt = time.perf_counter() - t0
    report(2, rec.passed and dt <= 60,
           f"route equivalence over {rec.trials} pairs, max rel dev {rec.max_deviation:.2e}, {dt:.1f}s")


def test_c03_projection_norm_formula():
    worked = worked_projection_value()
    parts, ok = [f"worked value dev {worked.max_deviation:.1e}"], worked.passed
    for name in ("geometric", "harmonic", "power:0.5"):
        (rec,) = projection_norm_formula(get_mean(name), trials=100, max_dim=5, seed=SEED, tol=1e-5)
        ok &= rec.passed
        parts.append(f"{name} {'ok' if rec.passed else 'fails'} ({rec.max_deviation:.1e})")
    report(3, ok, "projection-norm formula: " + ", ".join(parts))


def test_c04_geometric_relation():
    ok, parts = True, []
    for name in ("geometric", "harmonic", "logarithmic"):
        recs = geometric_relation(get_mean(name), trials=100, max_dim=5, seed=SEED, tol=1e-6)
        bad, dev = _worst(recs)
        ok &= not bad
        parts.append(f"{name} {dev:.1e}")
    report(4, ok, "norm via geometric-mean identity, Case-1 means: " + ", ".join(parts))


def test_c05_order_by_projections():
    ok, parts = True, []
    for name in ("geometric", "harmonic"):
        recs = order_by_projections(get_mean(name), trials=200, dims=(3, 4), seed=SEED)
        bad, _ = _worst(recs)
        ok &= not bad
        names = {r.name.split("/")[-1] for r in recs}
        ok &= {"order_by_projections", "order_witness"} <= names
        parts.append(f"{name} {'0' if not bad else len(bad)} failing batteries")
    report(5, ok, "order test vs Loewner order with P_eps witnesses: " + ", ".join(parts))


def test_c06_maximality():
    recs = maximality(n=3, trials=100, effects=500, seed=SEED)
    bad, _ = _worst(recs)
    summary = ", ".join(f"{r.name}:{r.trials}" for r in recs)
    report(6, not bad, f"maximality and projection detection ({summary}), {len(bad)} failing")


def test_c07_shifted_identity():
    ok, parts = True, []
    for m in catalog_means():
        h_empty = any("h empty" in n for r in h_decomposition_suite(m, n=2, trials=1) for n in r.notes)
        recs = shifted_identity(m, dims=(3, 5), deltas=(1e-1, 1e-2, 1e-3), trials=10, seed=SEED, tol=1e-6)
        bad, dev = _worst(recs)
        ok &= not bad
        parts.append(f"{m.label} {dev:.1e}{' (h = 0)' if h_empty else ''}")
    report(7, ok, "||(Q + dI) s_h P|| = h(d): " + ", ".join(parts))


def test_c08_pipeline_completeness():
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    failures, worst_fit, worst_sq, cases = [], 0.0, 0.0, 0
    for n in (2, 3, 4):
        for kind in (JordanUnitary, JordanTranspose):
            phi = kind(random_unitary(rng, n))
            for m in catalog_means():
                cases += 1
                rep = run_pipeline(phi, m, PipelineConfig(trials=20, seed=SEED))
                if not rep.certified or rep.jordan is None:
                    failures.append(f"{kind.__name__} n={n} {m.label}: {rep.overall} at {rep.stage}")
                    continue
                ext = rep.jordan
                for _ in range(5):
                    a = random_pd(rng, n)
                    worst_fit = max(worst_fit, operator_norm(ext(a) - phi(a)) / operator_norm(phi(a)))
                    h = random_hermitian(rng, n)
                    jh = ext(h)
                    worst_sq = max(worst_sq, np.linalg.norm(ext(h @ h) - jh @ jh, 2) / operator_norm(h) ** 2)
    dt = time.perf_counter() - t0
    ok = not failures and worst_fit <= 1e-7 and worst_sq <= 1e-6 and dt <= 180
    detail = (f"{cases - len(failures)}/{cases} certified_jordan, J fit {worst_fit:.1e}, "
              f"J(A^2) defect {worst_sq:.1e}, {dt:.1f}s")
    if failures:
        detail += "; " + "; ".join(failures[:3])
    report(8, ok, detail)


def test_c09_pipeline_soundness():
    rng = np.random.default_rng(SEED)
    cfg = PipelineConfig(trials=20, seed=SEED)
    ok, parts = True, []

    named = [
        ("Congruence(diag(1,2))", Congruence(np.diag([1.0, 2.0]), identity_map(2)), "geometric"),
        ("Perturbed(1e-2)", Perturbed(JordanUnitary(random_unitary(rng, 3)), 1e-2, seed=SEED), "arithmetic"),
    ]
    for label, phi, mean in named:
        sigma = get_mean(mean)
        r1, r2 = run_pipeline(phi, sigma, cfg), run_pipeline(phi, sigma, cfg)
        stage = r1.stage_verdict(r1.stage)
        replay_ok = False
        if stage is not None and stage.witness is not None:
            dev, thr = replay_witness(stage.witness, phi, sigma)
            replay_ok = not dev <= thr and np.isclose(dev, stage.max_deviation, rtol=1e-9)
        good = (r1.overall == "rejected" and r1.stage in THEORY_STAGES and replay_ok
                and r1.to_json() == r2.to_json())
        ok &= good
        parts.append(f"{label} {r1.overall} at {r1.stage}{'' if replay_ok else ' (witness not reproduced)'}")

    means = catalog_means()
    false_cert = 0
    for k in range(20):
        n = 2 + k % 3
        if k % 2 == 0:
            phi = Perturbed(JordanUnitary(random_unitary(rng, n)), 1e-2, seed=SEED + k)
        else:
            u = random_unitary(rng, n)
            c = u @ np.diag(rng.uniform(0.5, 2.0, n)) @ u.conj().T
            phi = Congruence(c, identity_map(n))
        if run_pipeline(phi, means[k % len(means)], cfg).certified:
            false_cert += 1
    ok &= false_cert == 0
    parts.append(f"{false_cert}/20 corrupted maps falsely certified")
    report(9, ok, "; ".join(parts))


def test_c10_eps_independence():
    rng = np.random.default_rng(SEED)
    cfg = PipelineConfig(trials=10, seed=SEED)
    ok, worst, maps = True, 0.0, 0
    for n in (2, 3, 4):
        for kind in (JordanUnitary, JordanTranspose):
            phi = kind(random_unitary(rng, n))
            if not run_pipeline(phi, get_mean("geometric"), cfg).certified:
                ok = False
                continue
            maps += 1
            ps = [random_projection(rng, n).matrix for _ in range(50)]
            v = check_eps_independence(phi, DEFAULT_LADDER, projections=ps)
            worst = max(worst, v.max_deviation)
    ok &= worst <= 1e-7
    report(10, ok, f"psi_eps(P) across ladder {DEFAULT_LADDER.values}, {maps} maps x 50 P, max {worst:.1e}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
