import numpy as np
import pytest

from kam.errors import HypothesisError
from kam.hermitian import operator_norm
from kam.maps import (
    Congruence,
    JordanTranspose,
    JordanUnitary,
    Perturbed,
    custom_inverse,
    custom_norm_distort,
    custom_scale,
    identity_map,
)
from kam.means import EpsLadder, catalog_means, get_mean
from kam.preserver import (
    EVALUATORS,
    STAGES,
    PipelineConfig,
    build_psi_eps,
    check_case1_homogeneity,
    check_case2_orthogonality,
    check_eps_independence,
    check_key_equation,
    check_norm_preservation,
    check_order_iso,
    check_projection_homogeneity,
    check_projection_preservation,
    check_unit_scalars,
    classify_case,
    extract_jordan,
    herm_to_vec,
    replay_witness,
    run_pipeline,
    spanning_set,
    vec_to_herm,
)
from kam.sampling import random_hermitian, random_pd, random_projection, random_unitary

GEO = get_mean("geometric")
ARI = get_mean("arithmetic")
HAR = get_mean("harmonic")


@pytest.fixture
def u3(rng):
    return random_unitary(rng, 3)


def test_norm_preservation_examples(u3):
    v = check_norm_preservation(JordanUnitary(u3), GEO, trials=200, seed=1)
    assert v.passed and v.max_deviation <= 1e-10
    v = check_norm_preservation(custom_scale(3, 2.0), ARI, trials=20, seed=1)
    assert v.status == "fail"
    v = check_norm_preservation(Congruence(np.diag([1.0, 2.0]), identity_map(2)), GEO, trials=20, seed=1)
    assert v.status == "fail" and v.witness is not None


def test_witness_replays(u3):
    phi = Congruence(np.diag([1.0, 2.0]), identity_map(2))
    v = check_norm_preservation(phi, GEO, trials=20, seed=1)
    dev, thr = replay_witness(v.witness, phi, GEO)
    assert dev == pytest.approx(v.max_deviation)
    assert thr == v.threshold


def test_order_iso_examples(u3):
    assert check_order_iso(JordanUnitary(u3), GEO, trials=20, seed=2).passed
    assert check_order_iso(JordanTranspose(u3), GEO, trials=20, seed=2).passed
    assert check_order_iso(custom_inverse(3), GEO, trials=20, seed=2).status == "fail"


def test_unit_scalars_examples(u3):
    assert check_unit_scalars(JordanUnitary(u3)).passed
    assert check_unit_scalars(JordanTranspose(u3)).passed
    assert check_unit_scalars(Congruence(2 * np.eye(3), identity_map(3))).status == "fail"


def test_psi_eps_examples(u3, rng):
    phi = JordanUnitary(u3)
    a = random_pd(rng, 3) - 0.1 * np.eye(3)
    for eps in (1e-1, 1e-4):
        psi = build_psi_eps(phi, eps)
        assert np.allclose(psi(a), u3 @ a @ u3.conj().T)
        assert np.allclose(psi(np.zeros((3, 3))), 0)
        assert np.allclose(psi(2.5 * np.eye(3)), 2.5 * np.eye(3))
    with pytest.raises(ValueError):
        build_psi_eps(phi, 0)


def test_projection_preservation_examples(u3):
    assert check_projection_preservation(JordanUnitary(u3), trials=10, seed=3).passed
    assert check_projection_preservation(JordanTranspose(u3), trials=10, seed=3).passed
    v = check_projection_preservation(Perturbed(JordanUnitary(u3), 1e-2, seed=1), trials=10, seed=3)
    assert v.status == "fail"
    assert v.witness["check"].startswith("projection_preservation")
    assert 1e-3 < v.max_deviation < 1e-1


def test_projection_homogeneity_examples(u3):
    assert check_projection_homogeneity(JordanUnitary(u3), trials=10, seed=4).passed
    assert check_projection_homogeneity(custom_norm_distort(3), trials=10, seed=4).status == "fail"


def test_homogeneity_t_one_is_trivial(u3, rng):
    p = random_projection(rng, 3).matrix
    dev, thr = EVALUATORS["projection_homogeneity"](custom_norm_distort(3), None, P=p, eps=1e-3, t=1.0)
    assert dev <= thr


def test_eps_independence_examples(u3, rng):
    ladder = EpsLadder((1e-2, 1e-4))
    phi = JordanUnitary(u3)
    ps = [random_projection(rng, 3).matrix for _ in range(5)]
    assert check_eps_independence(phi, ladder, projections=ps).passed
    v = check_eps_independence(phi, ladder, projections=[np.zeros((3, 3)), np.eye(3)])
    assert v.passed and v.max_deviation <= 1e-12


def test_key_equation_examples(u3):
    assert check_key_equation(JordanUnitary(u3), GEO, trials=4, seed=5).passed
    for m in catalog_means():
        assert check_key_equation(identity_map(3), m, trials=2, seed=5).passed
    v = check_key_equation(Perturbed(identity_map(3), 1e-2, seed=1), GEO, trials=4, seed=5)
    assert v.status == "fail" and v.witness is not None


def test_classify_case():
    assert classify_case(GEO) == "Case1_f0_zero"
    assert classify_case(ARI) == "Case2_f0_positive"
    assert classify_case(HAR) == "Case1_f0_zero"


def test_case1_examples(u3):
    v = check_case1_homogeneity(JordanUnitary(u3), GEO, trials=4, seed=6)
    assert v.passed and v.max_deviation <= 1e-10
    assert check_case1_homogeneity(JordanTranspose(u3), HAR, trials=4, seed=6).passed
    v = check_case1_homogeneity(custom_norm_distort(3), GEO, trials=4, seed=6)
    assert v.status == "fail"
    assert "A" in v.witness["inputs"] and "t" in v.witness["params"]


def test_case2_examples(u3):
    assert check_case2_orthogonality(JordanUnitary(u3), ARI, trials=4, seed=7).passed
    assert check_case2_orthogonality(identity_map(3), ARI, trials=4, seed=7).passed
    v = check_case2_orthogonality(Perturbed(JordanUnitary(u3), 1e-2, seed=1), ARI, trials=4, seed=7)
    assert v.status == "fail"


def test_case2_needs_nonaffine_mean_for_h_identities(u3):
    with pytest.raises(HypothesisError):
        check_case1_homogeneity(JordanUnitary(u3), ARI, trials=2, seed=0)


def test_herm_vector_roundtrip(rng):
    a = random_hermitian(rng, 4)
    assert np.allclose(vec_to_herm(herm_to_vec(a)), a)
    basis = np.column_stack([herm_to_vec(s) for s in spanning_set(3)])
    assert np.linalg.matrix_rank(basis) == 9


def test_extract_jordan_examples(u3, rng):
    ext = extract_jordan(build_psi_eps(JordanUnitary(u3), 1e-3), 3)
    a = random_hermitian(rng, 3)
    assert operator_norm(ext(a @ a) - ext(a) @ ext(a)) <= 1e-12 * (1 + operator_norm(a) ** 2)
    assert ext.form == "automorphism"

    ext = extract_jordan(build_psi_eps(JordanTranspose(np.eye(2, dtype=complex)), 1e-3), 2)
    x = np.array([[1.0, 1.0], [1.0, 0.0]])
    assert np.allclose(ext(x), x.T)
    assert ext.form == "anti-automorphism"
    assert ext.non_multiplicative_witness is not None
    a, b = np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.linalg.norm(ext(a @ b) - ext(a) @ ext(b), 2) > 0.5
    jordan = ext(a @ b + b @ a) - ext(a) @ ext(b) - ext(b) @ ext(a)
    assert operator_norm(jordan) < 1e-10

    ext = extract_jordan(build_psi_eps(identity_map(2), 1e-3), 2)
    assert np.allclose(ext.matrix, np.eye(4), atol=1e-10)


def test_pipeline_examples(rng):
    cfg = PipelineConfig(trials=10, seed=1)
    r = run_pipeline(JordanUnitary(random_unitary(rng, 3)), GEO, cfg)
    assert r.certified and [s.name for s in r.stages] == list(STAGES)
    assert r.stage_verdict("jordan_extraction").passed
    r = run_pipeline(Perturbed(JordanUnitary(random_unitary(rng, 3)), 1e-2, seed=2), ARI, cfg)
    assert r.overall == "rejected"
    assert r.stage in ("norm_preservation", "projection_preservation", "homogeneity_or_orthogonality")
    for m in catalog_means():
        assert run_pipeline(identity_map(2), m, cfg).certified


def test_pipeline_refuses_asymmetric_mean():
    from kam.functions import DiscreteMeasure, from_measure
    from kam.means import MeanDescriptor

    lop = MeanDescriptor(from_measure(DiscreteMeasure(0.8, 0.2)))
    with pytest.raises(HypothesisError):
        run_pipeline(identity_map(2), lop)


def test_custom_map_notes_surjectivity():
    r = run_pipeline(custom_scale(2, 1.0), GEO, PipelineConfig(trials=4))
    assert "surjectivity assumed" in r.notes


def test_pipeline_report_is_deterministic(rng):
    u = random_unitary(rng, 2)
    cfg = PipelineConfig(trials=5, seed=9)
    r1 = run_pipeline(Perturbed(JordanUnitary(u), 1e-2, seed=3), GEO, cfg).to_json()
    r2 = run_pipeline(Perturbed(JordanUnitary(u), 1e-2, seed=3), GEO, cfg).to_json()
    assert r1 == r2
