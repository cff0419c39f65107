"""Dense Hermitian matrices: validation, spectra, Loewner order, projections.

Matrices are plain complex ``numpy`` arrays. :func:`hermitian` is the single
ingestion point; it symmetrizes and freezes its result, so every array that
came through it can be shared between workers without copying.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from kam.errors import (
    ConditioningError,
    ConeError,
    DomainError,
    EigenConvergenceError,
    SchemaError,
)

__all__ = [
    "TolerancePolicy",
    "DEFAULT_POLICY",
    "Cone",
    "SpectralDecomposition",
    "Projection",
    "hermitian",
    "eig_hermitian",
    "loewner_leq",
    "cone_membership",
    "spectral_apply",
    "operator_norm",
    "range_projection",
    "max_lambda_compression",
    "spectral_projection_below",
    "as_matrix",
    "as_projection",
    "matrix_to_json",
    "matrix_from_json",
]

# asymmetry above this (relative) is an input error rather than roundoff
_REJECT_ASYMMETRY = 1e-8


@dataclass(frozen=True)
class TolerancePolicy:
    order_tol: float = 1e-9
    eq_tol: float = 1e-8
    psd_floor: float = -1e-10
    # relative least eigenvalue above which a matrix counts as PD; kept at
    # roundoff level so that near-singular inputs reach the conditioning guard
    pd_floor: float = 1e-13

    def __post_init__(self):
        if self.order_tol <= 0 or self.eq_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.order_tol > 1e-6:
            raise ValueError("order_tol must not exceed 1e-6")
        if self.psd_floor >= 0:
            raise ValueError("psd_floor is a (negative) eigenvalue floor")
        if not 0 < self.pd_floor < 1e-6:
            raise ValueError("pd_floor must lie in (0, 1e-6)")


DEFAULT_POLICY = TolerancePolicy()


class Cone(enum.Enum):
    PD = "PD"
    PSD_ONLY = "PSD_only"
    NOT_PSD = "not_PSD"


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def hermitian(a, *, check: bool = True) -> np.ndarray:
    """Return ``(a + a*)/2`` as a read-only complex array.

    Raises :class:`SchemaError` for non-square input and for asymmetry beyond
    ``1e-8 * (1 + max|a_ij|)``.
    """
    m = np.array(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise SchemaError(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise SchemaError("matrix has non-finite entries")
    if check:
        scale = 1.0 + np.max(np.abs(m))
        asym = np.max(np.abs(m - m.conj().T))
        if asym > _REJECT_ASYMMETRY * scale:
            raise SchemaError(f"matrix is not Hermitian (asymmetry {asym:.3e})")
    return _freeze((m + m.conj().T) / 2)


def as_matrix(a) -> np.ndarray:
    if isinstance(a, Projection):
        return a.matrix
    if isinstance(a, np.ndarray) and not a.flags.writeable and a.dtype == complex:
        return a
    return hermitian(a)


def eig_hermitian(a) -> SpectralDecomposition:
    a = as_matrix(a)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        s = np.linalg.svd(a, compute_uv=False)
        cond = s[0] / s[-1] if s[-1] > 0 else np.inf
        raise EigenConvergenceError(
            f"eigh did not converge (n={a.shape[0]}, norm={s[0]:.3e}, cond={cond:.3e})"
        ) from exc
    return SpectralDecomposition(_freeze(w), _freeze(v))


def operator_norm(a) -> float:
    w = np.linalg.eigvalsh(as_matrix(a))
    return float(max(abs(w[0]), abs(w[-1])))


def _check_dims(a, b):
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def loewner_leq(a, b, pol: TolerancePolicy = DEFAULT_POLICY) -> bool:
    """``a <= b`` in the Loewner order, with a cushion scaled by the norms."""
    a, b = as_matrix(a), as_matrix(b)
    _check_dims(a, b)
    lam = np.linalg.eigvalsh(b - a)[0]
    return bool(lam >= -pol.order_tol * (1 + operator_norm(a) + operator_norm(b)))


def loewner_gap(a, b) -> float:
    """Smallest eigenvalue of ``b - a``; negative means ``a <= b`` fails."""
    a, b = as_matrix(a), as_matrix(b)
    _check_dims(a, b)
    return float(np.linalg.eigvalsh(b - a)[0])


def cone_membership(a, pol: TolerancePolicy = DEFAULT_POLICY) -> Cone:
    a = as_matrix(a)
    w = np.linalg.eigvalsh(a)
    scale = 1 + max(abs(w[0]), abs(w[-1]))
    if w[0] > pol.pd_floor * scale:
        return Cone.PD
    if w[0] >= pol.psd_floor * scale:
        return Cone.PSD_ONLY
    return Cone.NOT_PSD


def require_pd(a, what: str = "matrix", max_cond: float = 1e12) -> np.ndarray:
    a = as_matrix(a)
    w = np.linalg.eigvalsh(a)
    if cone_membership(a) is not Cone.PD:
        raise ConeError(f"{what} is not positive definite (min eigenvalue {w[0]:.3e})")
    cond = w[-1] / w[0]
    if cond > max_cond:
        raise ConditioningError(f"{what} has condition number {cond:.3e} > {max_cond:.0e}")
    return a


def require_psd(a, what: str = "matrix") -> np.ndarray:
    a = as_matrix(a)
    if cone_membership(a) is Cone.NOT_PSD:
        w = np.linalg.eigvalsh(a)
        raise ConeError(f"{what} is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    return a


def spectral_apply(
    f: Callable[[np.ndarray], np.ndarray],
    a,
    domain: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """``V diag(f(lambda)) V*`` for the eigendecomposition of ``a``.

    ``domain`` is an optional elementwise predicate on eigenvalues. Without it
    the only domain check is that ``f`` returns finite values.
    """
    w, v = eig_hermitian(a)
    if domain is not None:
        ok = np.asarray(domain(w), dtype=bool)
        if not ok.all():
            bad = w[~ok][0]
            raise DomainError(f"eigenvalue {bad!r} is outside the domain of f")
    with np.errstate(all="ignore"):
        fw = np.asarray(f(w), dtype=float)
    if not np.all(np.isfinite(fw)):
        bad = w[~np.isfinite(fw)][0]
        raise DomainError(f"f is not finite at eigenvalue {bad!r}")
    return hermitian((v * fw) @ v.conj().T, check=False)


@dataclass(frozen=True, eq=False)
class Projection:
    """An orthogonal projection, stored with its rank."""

    matrix: np.ndarray
    rank: int

    def __post_init__(self):
        p = self.matrix
        if np.linalg.norm(p @ p - p, 2) > 1e-9:
            raise ValueError("matrix is not idempotent")
        tr = np.trace(p).real
        if abs(tr - self.rank) >= 1e-6:
            raise ValueError(f"trace {tr} does not match rank {self.rank}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_matrix(cls, p) -> "Projection":
        p = as_matrix(p)
        w = np.linalg.eigvalsh(p)
        if np.max(np.minimum(np.abs(w), np.abs(w - 1))) > 1e-6:
            raise ValueError("spectrum is not clustered at {0, 1}")
        return cls(p, int(round(np.trace(p).real)))

    @classmethod
    def from_basis(cls, w: np.ndarray) -> "Projection":
        """Projection onto the column span of ``w`` (columns orthonormal)."""
        w = np.asarray(w, dtype=complex)
        n = w.shape[0]
        if w.shape[1] == 0:
            return cls(hermitian(np.zeros((n, n)), check=False), 0)
        return cls(hermitian(w @ w.conj().T, check=False), w.shape[1])

    def basis(self) -> np.ndarray:
        """Orthonormal basis of the range, as columns."""
        w, v = np.linalg.eigh(self.matrix)
        return v[:, w > 0.5]

    def complement(self) -> "Projection":
        n = self.dim
        return Projection(hermitian(np.eye(n) - self.matrix, check=False), n - self.rank)


def as_projection(p) -> Projection:
    return p if isinstance(p, Projection) else Projection.from_matrix(p)


def range_projection(a, pol: TolerancePolicy = DEFAULT_POLICY) -> Projection:
    a = require_psd(a)
    w, v = np.linalg.eigh(a)
    keep = w > pol.order_tol * (1 + abs(w).max())
    return Projection.from_basis(v[:, keep])


def max_lambda_compression(a, p) -> float:
    """``max{lam >= 0 : lam P <= P a^{-1} P}``.

    Equal to the least eigenvalue of ``a^{-1}`` compressed to ``range(P)``.
    """
    p = as_projection(p)
    if p.rank == 0:
        raise ValueError("projection must be nonzero")
    a = require_pd(a, "A")
    w = p.basis()
    comp = w.conj().T @ np.linalg.solve(a, w)
    return float(np.linalg.eigvalsh((comp + comp.conj().T) / 2)[0])


def spectral_projection_below(t, threshold: float) -> Projection:
    w, v = eig_hermitian(t)
    return Projection.from_basis(v[:, w <= threshold])


def matrix_to_json(a) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"n": int(a.shape[0]), "re": a.real.tolist(), "im": a.imag.tolist()}


def matrix_from_json(obj) -> np.ndarray:
    try:
        n = int(obj["n"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros((n, n))), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad matrix JSON: {exc}") from exc
    if re.shape != (n, n) or im.shape != (n, n):
        raise SchemaError(f"matrix JSON arrays must be {n}x{n}")
    return hermitian(re + 1j * im)
