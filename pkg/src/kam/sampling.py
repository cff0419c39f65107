"""Seeded random matrices used by the property batteries and the pipeline."""

import numpy as np
from scipy.stats import unitary_group

from kam.functions import DiscreteMeasure
from kam.hermitian import Projection, hermitian


def random_hermitian(rng, n, scale=1.0):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return hermitian(scale * (g + g.conj().T) / 2, check=False)


def random_unitary(rng, n):
    if n == 1:
        return np.array([[np.exp(2j * np.pi * rng.random())]])
    return unitary_group.rvs(n, random_state=rng)


def random_pd(rng, n, lo=0.2, hi=5.0):
    """Haar-rotated PD matrix with log-uniform spectrum in ``[lo, hi]``."""
    w = np.exp(rng.uniform(np.log(lo), np.log(hi), n))
    u = random_unitary(rng, n)
    return hermitian((u * w) @ u.conj().T, check=False)


def random_psd(rng, n, rank=None, lo=0.1, hi=2.0):
    rank = n if rank is None else rank
    g = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    q, _ = np.linalg.qr(g)
    w = rng.uniform(lo, hi, rank)
    return hermitian((q * w) @ q.conj().T, check=False)


def random_projection(rng, n, rank=None) -> Projection:
    """Projection onto a Haar-random subspace; random rank in ``[1, n-1]`` by default."""
    if rank is None:
        rank = int(rng.integers(1, n)) if n > 1 else 1
    u = random_unitary(rng, n)
    return Projection.from_basis(u[:, :rank])


def random_orthogonal_pair(rng, n, rank_p=None, rank_q=None):
    """Two mutually orthogonal nonzero projections."""
    rank_p = rank_p or int(rng.integers(1, n))
    rank_q = rank_q or int(rng.integers(1, n - rank_p + 1))
    u = random_unitary(rng, n)
    return (
        Projection.from_basis(u[:, :rank_p]),
        Projection.from_basis(u[:, rank_p : rank_p + rank_q]),
    )


def random_effect(rng, n):
    """Effect ``0 <= E <= I`` with spectrum uniform in ``[0, 1]``."""
    u = random_unitary(rng, n)
    w = rng.uniform(0, 1, n)
    return hermitian((u * w) @ u.conj().T, check=False)


def random_measure(rng, max_atoms=5) -> DiscreteMeasure:
    k = int(rng.integers(1, max_atoms + 1))
    ts = np.exp(rng.uniform(np.log(1e-2), np.log(1e2), k))
    ws = rng.uniform(0.1, 1.0, k)
    alpha, beta = rng.uniform(0, 0.5, 2) * (rng.random(2) < 0.7)
    return DiscreteMeasure(alpha, beta, tuple(zip(ts, ws)))
