"""Effect intervals, disjoint pairs and order recovered from projection norms.

Pairs in ``Delta_t`` are ordered componentwise: ``(a1, a2) <= (b1, b2)`` iff
``a1 <= b1`` and ``a2 <= b2``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from kam.errors import DiagnosticError, HypothesisError
from kam.hermitian import (
    DEFAULT_POLICY,
    Projection,
    TolerancePolicy,
    as_matrix,
    hermitian,
    loewner_leq,
    operator_norm,
    range_projection,
    require_pd,
    require_psd,
    spectral_projection_below,
)
from kam.means import DEFAULT_LADDER, EpsLadder, as_mean, mean_spectral, parallel_sum

__all__ = [
    "EffectElement",
    "DisjointPair",
    "inf_is_zero",
    "is_projection_like",
    "is_maximal_pair",
    "dominating_pair",
    "detect_projection",
    "scale_pair",
    "order_from_projection_norms",
    "order_witness",
    "domination_search",
]

# below this the spectrum is considered to sit on {0, t}
_PROJ_TOL = 1e-9
_RANK_TOL = 1e-8
_MAX_ENUMERATED_BLOCKS = 6


@dataclass(frozen=True, eq=False)
class EffectElement:
    matrix: np.ndarray
    level: float = 1.0

    def __post_init__(self):
        if self.level <= 0:
            raise ValueError("level must be positive")
        m = as_matrix(self.matrix)
        object.__setattr__(self, "matrix", m)
        eye = np.eye(m.shape[0])
        if not (loewner_leq(0 * eye, m) and loewner_leq(m, self.level * eye)):
            raise ValueError(f"matrix is not in E_t for t={self.level}")


@dataclass(frozen=True, eq=False)
class DisjointPair:
    first: EffectElement
    second: EffectElement

    def __post_init__(self):
        if self.first.level != self.second.level:
            raise ValueError("components must share a level")
        if not inf_is_zero(self.first.matrix, self.second.matrix):
            raise ValueError("components have a nonzero common lower bound")

    @property
    def level(self) -> float:
        return self.first.level

    @classmethod
    def of(cls, a, b, level: float = 1.0) -> "DisjointPair":
        return cls(EffectElement(a, level), EffectElement(b, level))

    def __le__(self, other: "DisjointPair") -> bool:
        return loewner_leq(self.first.matrix, other.first.matrix) and loewner_leq(
            self.second.matrix, other.second.matrix
        )


def _joint_rank(*bases: np.ndarray) -> int:
    m = np.hstack(bases)
    if m.shape[1] == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(s > _RANK_TOL * max(1.0, s[0])))


def _parallel_sum_vanishes(a, b, ladder: EpsLadder) -> tuple[bool, list[float]]:
    eye = np.eye(a.shape[0])
    norms = [operator_norm(parallel_sum(a + e * eye, b + e * eye)) for e in ladder]
    scale = 1 + operator_norm(a) + operator_norm(b)
    # a vanishing limit decays linearly in eps; a nonzero one stalls
    ratio = norms[-1] / norms[-2]
    ladder_ratio = ladder.values[-1] / ladder.values[-2]
    vanishes = norms[-1] <= 1e-3 * scale and ratio <= np.sqrt(ladder_ratio)
    return bool(vanishes), norms


def inf_is_zero(a, b, ladder: EpsLadder = DEFAULT_LADDER, pol: TolerancePolicy = DEFAULT_POLICY) -> bool:
    """Whether 0 is the only PSD lower bound of ``a`` and ``b``.

    Decided twice: by range intersection (rank count) and by the decay of the
    regularized parallel sum. Disagreement raises :class:`DiagnosticError`.
    """
    a, b = require_psd(a, "A"), require_psd(b, "B")
    pa, pb = range_projection(a, pol), range_projection(b, pol)
    by_rank = pa.rank + pb.rank == _joint_rank(pa.basis(), pb.basis())
    by_limit, norms = _parallel_sum_vanishes(a, b, ladder)
    if by_rank != by_limit:
        raise DiagnosticError(
            "range-rank and parallel-sum tests disagree",
            by_rank=by_rank,
            by_limit=by_limit,
            norms=norms,
        )
    return by_rank


def is_projection_like(a, level: float = 1.0) -> bool:
    """``a / level`` idempotent, i.e. ``a`` is ``level`` times a projection."""
    m = as_matrix(a) / level
    return bool(np.linalg.norm(m @ m - m, 2) <= _PROJ_TOL)


def _rank(a, level: float) -> int:
    return int(round(np.trace(as_matrix(a)).real / level))


def is_maximal_pair(pair: DisjointPair, level: float | None = None) -> bool:
    """Both components are ``t``-scaled projections with complementary ranges."""
    t = pair.level
    if level is not None and level != t:
        raise ValueError(f"pair lives at level {t}, not {level}")
    a, b = pair.first.matrix, pair.second.matrix
    if not (is_projection_like(a, t) and is_projection_like(b, t)):
        return False
    if _rank(a, t) + _rank(b, t) != a.shape[0]:
        return False
    return inf_is_zero(a, b)


def dominating_pair(pair: DisjointPair) -> DisjointPair | None:
    """A pair in the same ``Delta_t`` strictly above ``pair``, or ``None``.

    Replaces a non-projection component by ``t`` times its range projection,
    or, for two projections with rank deficit, enlarges the second to a
    complement of the first.
    """
    t = pair.level
    a, b = pair.first.matrix, pair.second.matrix
    n = a.shape[0]
    if not is_projection_like(a, t):
        return DisjointPair.of(t * range_projection(a).matrix, b, t)
    if not is_projection_like(b, t):
        return DisjointPair.of(a, t * range_projection(b).matrix, t)
    pa, pb = range_projection(a), range_projection(b)
    if pa.rank + pb.rank == n:
        return None
    span = np.hstack([pa.basis(), pb.basis()])
    u, s, _ = np.linalg.svd(span)
    r = int(np.sum(s > _RANK_TOL * max(1.0, s[0]))) if s.size else 0
    extra = u[:, r:]
    grown = Projection.from_basis(np.hstack([pb.basis(), extra]))
    return DisjointPair.of(a, t * grown.matrix, t)


def _sqrt_psd(m):
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def domination_search(pair: DisjointPair, trials: int = 10_000, seed: int = 0):
    """Randomized hunt for a pair in ``Delta_t`` strictly above ``pair``.

    Each candidate component is ``c + R K R`` with ``R = (tI - c)^{1/2}`` and
    ``0 <= K <= I`` random, so it stays in the interval ``[c, tI]``. Half the
    bumps are supported on the range of ``c``, half on a random subspace.
    Returns the first disjoint candidate that differs from ``pair``, else None.
    """
    rng = np.random.default_rng(seed)
    t = pair.level
    a, b = pair.first.matrix, pair.second.matrix
    n = a.shape[0]
    roots = [_sqrt_psd(t * np.eye(n) - c) for c in (a, b)]
    for _ in range(trials):
        cand = []
        for base, root in zip((a, b), roots):
            if rng.random() < 0.25:
                cand.append(base)
                continue
            w, v = np.linalg.eigh(base)
            support = v[:, w > 1e-9 * t]
            if support.shape[1] and rng.random() < 0.5:
                # grow inside the current range, which keeps ranges apart
                q = support[:, rng.random(support.shape[1]) < 0.7]
                k = q.shape[1]
            else:
                k = int(rng.integers(1, n + 1))
                g = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
                q, _ = np.linalg.qr(g)
            kmat = (q * rng.uniform(0, 1, k)) @ q.conj().T
            cand.append(hermitian(base + root @ kmat @ root, check=False))
        if operator_norm(cand[0] - a) + operator_norm(cand[1] - b) < 1e-9:
            continue
        pa, pb = range_projection(cand[0]), range_projection(cand[1])
        if pa.rank + pb.rank == _joint_rank(pa.basis(), pb.basis()):
            return cand
    return None


def detect_projection(a) -> bool:
    """Projection test through maximality, cross-checked against the spectrum."""
    e = a if isinstance(a, EffectElement) else EffectElement(a, 1.0)
    m = e.matrix
    w = np.linalg.eigvalsh(m)
    by_spectrum = bool(np.max(np.minimum(np.abs(w), np.abs(w - 1))) <= _PROJ_TOL)
    complement = np.eye(m.shape[0]) - range_projection(m).matrix
    try:
        pair = DisjointPair.of(m, complement)
        by_maximality = is_maximal_pair(pair)
    except ValueError:
        by_maximality = False
    if by_spectrum != by_maximality:
        raise DiagnosticError(
            "maximality and spectral projection tests disagree",
            by_spectrum=by_spectrum,
            by_maximality=by_maximality,
            spectrum=w.tolist(),
        )
    return by_spectrum


def scale_pair(pair: DisjointPair, t: float) -> DisjointPair:
    if t <= 0:
        raise ValueError("scale must be positive")
    return DisjointPair.of(t * pair.first.matrix, t * pair.second.matrix, pair.level * t)


def _eigen_blocks(t_matrix, tol: float):
    """Group eigenvectors of ``t_matrix`` into clusters of nearly equal eigenvalues."""
    w, v = np.linalg.eigh(as_matrix(t_matrix))
    scale = max(1.0, np.abs(w).max())
    blocks, start = [], 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > tol * scale:
            blocks.append((w[start:i], v[:, start:i]))
            start = i
    return blocks


def candidate_projections(a, b) -> list[Projection]:
    """Projections of the commutative algebra generated by ``A^{-1} - B^{-1}``.

    All sums of eigenprojections when there are at most six clusters,
    otherwise the lower cuts at every spectral gap.
    """
    t = hermitian(np.linalg.inv(a) - np.linalg.inv(b), check=False)
    blocks = _eigen_blocks(t, 1e-9)
    if len(blocks) <= _MAX_ENUMERATED_BLOCKS:
        out = []
        for r in range(1, len(blocks) + 1):
            for combo in itertools.combinations(blocks, r):
                out.append(Projection.from_basis(np.hstack([v for _, v in combo])))
        return out
    cuts = [(blk[0][-1] + nxt[0][0]) / 2 for blk, nxt in zip(blocks, blocks[1:])]
    return [spectral_projection_below(t, c) for c in cuts] + [
        Projection(hermitian(np.eye(a.shape[0]), check=False), a.shape[0])
    ]


def order_from_projection_norms(sigma, a, b, pol: TolerancePolicy = DEFAULT_POLICY) -> bool:
    """Decide ``A <= B`` from ``||A σ P|| <= ||B σ P||`` over projections ``P``
    commuting with ``A^{-1} - B^{-1}``."""
    sigma = as_mean(sigma)
    if not sigma.symmetric or sigma.f.f_at_0 > 1e-12:
        raise HypothesisError(f"{sigma.label}: needs a symmetric mean with f(0+) = 0")
    a, b = require_pd(a, "A"), require_pd(b, "B")
    for p in candidate_projections(a, b):
        na = operator_norm(mean_spectral(sigma, a, p.matrix))
        nb = operator_norm(mean_spectral(sigma, b, p.matrix))
        if na > nb + pol.order_tol * (1 + na + nb):
            return False
    return True


@dataclass
class OrderWitness:
    projection: Projection
    eps: float
    norm_a: float
    norm_b: float
    compression_gap: float


def order_witness(sigma, a, b) -> OrderWitness | None:
    """The cut ``P_eps`` onto ``T <= -eps`` (``T = A^{-1} - B^{-1}``) when ``A <= B`` fails.

    On ``P_eps`` one has ``P A^{-1} P + eps P <= P B^{-1} P`` and hence
    ``||B σ P|| < ||A σ P||``. ``compression_gap`` is the least eigenvalue of
    ``P B^{-1} P - P A^{-1} P - eps P`` on ``range(P)``.
    """
    sigma = as_mean(sigma)
    a, b = require_pd(a, "A"), require_pd(b, "B")
    t = hermitian(np.linalg.inv(a) - np.linalg.inv(b), check=False)
    lo = np.linalg.eigvalsh(t)[0]
    if lo >= 0:
        return None
    eps = -lo / 2
    p = spectral_projection_below(t, -eps)
    w = p.basis()
    comp = w.conj().T @ (np.linalg.solve(b, w) - np.linalg.solve(a, w)) - eps * np.eye(p.rank)
    gap = float(np.linalg.eigvalsh((comp + comp.conj().T) / 2)[0])
    return OrderWitness(
        projection=p,
        eps=float(eps),
        norm_a=operator_norm(mean_spectral(sigma, a, p.matrix)),
        norm_b=operator_norm(mean_spectral(sigma, b, p.matrix)),
        compression_gap=gap,
    )
