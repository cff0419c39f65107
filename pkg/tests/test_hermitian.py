import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from strategies import hermitian_matrices, pd_and_projection, pd_matrices

from kam.errors import ConditioningError, ConeError, DomainError, SchemaError
from kam.hermitian import (
    Cone,
    Projection,
    TolerancePolicy,
    cone_membership,
    eig_hermitian,
    hermitian,
    loewner_leq,
    matrix_from_json,
    matrix_to_json,
    max_lambda_compression,
    operator_norm,
    range_projection,
    require_pd,
    spectral_apply,
    spectral_projection_below,
)
from kam.sampling import random_hermitian, random_projection


def test_hermitian_symmetrizes_small_defects():
    a = np.array([[1.0, 2.0 + 1e-12], [2.0, 3.0]])
    h = hermitian(a)
    assert np.array_equal(h, h.conj().T)
    assert not h.flags.writeable


def test_hermitian_rejects_asymmetry():
    with pytest.raises(SchemaError):
        hermitian(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_eig_examples():
    assert np.allclose(eig_hermitian(np.diag([3.0, 1.0])).eigenvalues, [1, 3])
    assert np.allclose(eig_hermitian(np.eye(4)).eigenvalues, [1, 1, 1, 1])


@given(hermitian_matrices())
def test_eig_reconstruction(a):
    dec = eig_hermitian(a)
    v = dec.eigenvectors
    assert operator_norm(dec.reconstruct() - a) < 1e-10 * (1 + operator_norm(a))
    assert np.linalg.norm(v.conj().T @ v - np.eye(len(v)), 2) < 1e-10


def test_loewner_examples():
    assert loewner_leq(np.eye(2), 2 * np.eye(2))
    assert not loewner_leq(np.diag([1.0, 2.0]), np.diag([2.0, 1.0]))
    a = np.diag([1.0, 5.0])
    assert loewner_leq(a, a)


def test_cone_examples():
    assert cone_membership(np.eye(2)) is Cone.PD
    assert cone_membership(np.diag([1.0, 0.0])) is Cone.PSD_ONLY
    assert cone_membership(np.diag([1.0, -1.0])) is Cone.NOT_PSD


def test_require_pd_errors():
    with pytest.raises(ConeError):
        require_pd(np.diag([1.0, 0.0]))
    with pytest.raises(ConditioningError):
        require_pd(np.diag([1.0, 5e-13]))


def test_spectral_apply_examples(rng):
    assert np.allclose(spectral_apply(np.sqrt, np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    a = random_hermitian(rng, 4)
    assert np.allclose(spectral_apply(lambda x: x, a), a)
    assert operator_norm(spectral_apply(np.square, a) - a @ a) < 1e-10 * (1 + operator_norm(a) ** 2)


def test_spectral_apply_domain():
    with pytest.raises(DomainError):
        spectral_apply(np.log, np.diag([1.0, -1.0]))
    with pytest.raises(DomainError):
        spectral_apply(np.sqrt, np.diag([1.0, -1.0]), domain=lambda w: w >= 0)


def test_operator_norm_examples(rng):
    assert operator_norm(np.diag([1.0, 3.0])) == pytest.approx(3)
    assert operator_norm(2.5 * np.eye(3)) == pytest.approx(2.5)
    x = rng.normal(size=3) + 1j * rng.normal(size=3)
    x /= np.linalg.norm(x)
    assert operator_norm(np.outer(x, x.conj())) == pytest.approx(1)


def test_range_projection_examples(rng):
    assert np.allclose(range_projection(np.diag([2.0, 0.0])).matrix, np.diag([1.0, 0.0]))
    assert np.allclose(range_projection(np.diag([2.0, 1.0])).matrix, np.eye(2))
    x = rng.normal(size=3) + 1j * rng.normal(size=3)
    p = range_projection(np.outer(x, x.conj()))
    assert p.rank == 1
    assert np.allclose(p.matrix, np.outer(x, x.conj()) / np.vdot(x, x).real)


def test_projection_validation():
    with pytest.raises(ValueError):
        Projection(np.diag([0.5, 0.0]), 1)
    p = Projection.from_matrix(np.diag([1.0, 0.0, 1.0]))
    assert p.rank == 2
    assert np.allclose(p.complement().matrix, np.diag([0.0, 1.0, 0.0]))


def _bisect_lambda(a, p, iters=200):
    """Largest lam with lam P <= P A^-1 P on range(P), by bisection on loewner_leq."""
    w = p.basis()
    comp = w.conj().T @ np.linalg.inv(a) @ w
    lo, hi = 0.0, operator_norm(comp) + 1
    pol = TolerancePolicy(order_tol=1e-15)
    for _ in range(iters):
        mid = (lo + hi) / 2
        if loewner_leq(mid * np.eye(p.rank), comp, pol):
            lo = mid
        else:
            hi = mid
    return lo


def test_max_lambda_examples(rng):
    assert max_lambda_compression(np.diag([2.0, 3.0]), np.diag([1.0, 0.0])) == pytest.approx(0.5)
    p = random_projection(rng, 4)
    assert max_lambda_compression(np.eye(4), p) == pytest.approx(1)
    a = np.diag([1.0, 2.0, 4.0])
    assert max_lambda_compression(a, np.eye(3)) == pytest.approx(1 / 4)


@given(pd_and_projection())
def test_max_lambda_matches_bisection(ap):
    a, p = ap
    assert max_lambda_compression(a, p) == pytest.approx(_bisect_lambda(a, p), rel=1e-9, abs=1e-12)


def test_spectral_projection_below_examples():
    assert np.allclose(spectral_projection_below(np.diag([-1.0, 1.0]), -0.5).matrix, np.diag([1.0, 0.0]))
    assert spectral_projection_below(np.diag([1.0, 2.0]), -1e-3).rank == 0
    p = spectral_projection_below(np.diag([-2.0, -1.0, 3.0]), -0.5)
    assert np.allclose(p.matrix, np.diag([1.0, 1.0, 0.0]))


@given(pd_matrices())
def test_matrix_json_roundtrip(a):
    assert np.array_equal(matrix_from_json(matrix_to_json(a)), a)


@pytest.mark.parametrize("obj", [{"n": 2, "re": [[1, 0]]}, {"re": [[1]]}, {"n": "x", "re": []}])
def test_matrix_json_schema_errors(obj):
    with pytest.raises(SchemaError):
        matrix_from_json(obj)


@given(st.floats(min_value=1e-3, max_value=1e3))
def test_norm_of_scalar_identity(t):
    assert operator_norm(t * np.eye(3)) == pytest.approx(t)
