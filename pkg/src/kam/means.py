"""Evaluating Kubo-Ando connections.

Two independent routes are provided for ``A σ B``:

* the spectral formula ``A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2}``
  (:func:`mean_spectral`, the canonical route), and
* the integral representation over the Loewner measure, which for a
  finitely supported measure is a weighted sum of parallel sums
  (:func:`mean_quadrature`).

Semidefinite arguments are handled by walking ``(A + eps I) σ (B + eps I)``
down an :class:`EpsLadder`; downward continuity of connections makes the
sequence Loewner-decreasing, which is checked on the way.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from kam import functions as fn
from kam.errors import AffineMeanError, DiagnosticError, HypothesisError
from kam.functions import DiscreteMeasure, RepresentingFunction, transpose
from kam.hermitian import (
    DEFAULT_POLICY,
    Cone,
    TolerancePolicy,
    as_matrix,
    as_projection,
    cone_membership,
    hermitian,
    loewner_leq,
    max_lambda_compression,
    operator_norm,
    require_pd,
    require_psd,
)

__all__ = [
    "MeanDescriptor",
    "EpsLadder",
    "LimitResult",
    "get_mean",
    "as_mean",
    "catalog_means",
    "parallel_sum",
    "mean_spectral",
    "mean_quadrature",
    "mean_psd_limit",
    "norm_of_mean",
    "norm_mean_projection",
    "geometric_relation_check",
]

MAX_COND = 1e12


@dataclass(frozen=True, eq=False)
class MeanDescriptor:
    f: RepresentingFunction
    measure: DiscreteMeasure | None = None
    label: str = ""

    def __post_init__(self):
        if self.measure is None and self.f.measure is not None:
            object.__setattr__(self, "measure", self.f.measure)
        if not self.label:
            object.__setattr__(self, "label", self.f.name)
        if self.measure is not None:
            x = fn.PROBE_GRID
            fx = self.f(x)
            mx = fn.eval_from_measure(self.measure, x)
            if np.max(np.abs(fx - mx) / np.abs(fx)) > 1e-9:
                raise ValueError(f"measure does not represent {self.f.name}")

    @property
    def symmetric(self) -> bool:
        return self.f.symmetric

    @property
    def normalized(self) -> bool:
        return self.f.normalized


@dataclass(frozen=True)
class EpsLadder:
    values: tuple[float, ...] = (1e-3, 1e-4, 1e-5, 1e-6, 1e-7)

    def __post_init__(self):
        v = tuple(float(e) for e in self.values)
        object.__setattr__(self, "values", v)
        if not v or any(e <= 0 for e in v):
            raise ValueError("ladder rungs must be positive")
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("ladder must be strictly decreasing")

    def __iter__(self):
        return iter(self.values)


DEFAULT_LADDER = EpsLadder()

_CATALOG = {
    "arithmetic": fn.arithmetic,
    "geometric": fn.geometric,
    "harmonic": fn.harmonic,
    "logarithmic": fn.logarithmic,
}


def get_mean(name: str) -> MeanDescriptor:
    """Catalog lookup: ``arithmetic``, ``geometric``, ``harmonic``,
    ``logarithmic`` or ``power:<p>`` (also ``power(<p>)``)."""
    key = name.strip().lower()
    if key in _CATALOG:
        return MeanDescriptor(_CATALOG[key]())
    m = re.fullmatch(r"power[:(]\s*([-+0-9.eE]+)\s*\)?", key)
    if m:
        return MeanDescriptor(fn.power(float(m.group(1))))
    raise KeyError(f"unknown mean {name!r}")


def catalog_means() -> list[MeanDescriptor]:
    return [MeanDescriptor(f) for f in fn.builtin_catalog()]


def as_mean(sigma) -> MeanDescriptor:
    if isinstance(sigma, MeanDescriptor):
        return sigma
    if isinstance(sigma, RepresentingFunction):
        return MeanDescriptor(sigma)
    if isinstance(sigma, DiscreteMeasure):
        return MeanDescriptor(fn.from_measure(sigma))
    return get_mean(sigma)


def parallel_sum(a, b) -> np.ndarray:
    """``A:B = (A^{-1} + B^{-1})^{-1}``, evaluated as ``A (A + B)^{-1} B``."""
    a = require_pd(a, "A", MAX_COND)
    b = require_pd(b, "B", MAX_COND)
    return hermitian(a @ np.linalg.solve(a + b, b), check=False)


def _pd_roots(a):
    w, v = np.linalg.eigh(a)
    s = np.sqrt(w)
    return (v * s) @ v.conj().T, (v / s) @ v.conj().T


def mean_spectral(sigma, a, b) -> np.ndarray:
    """``A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2}`` for PD ``A`` and PSD ``B``.

    Eigenvalues of the congruence that are zero to working precision are
    snapped to 0, where ``f(0+)`` is used.
    """
    sigma = as_mean(sigma)
    a = require_pd(a, "A", MAX_COND)
    b = require_psd(b, "B")
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    root, iroot = _pd_roots(a)
    x = iroot @ b @ iroot
    x = (x + x.conj().T) / 2
    w, v = np.linalg.eigh(x)
    w = np.where(np.abs(w) <= 64 * np.finfo(float).eps * np.abs(w).max(), 0.0, w)
    w = np.maximum(w, 0.0)
    fx = (v * sigma.f.extended(w)) @ v.conj().T
    return hermitian(root @ fx @ root, check=False)


def mean_quadrature(sigma, a, b) -> np.ndarray:
    """``alpha A + beta B + sum_i w_i (1 + t_i)/t_i (t_i A : B)``."""
    sigma = as_mean(sigma)
    m = sigma.measure
    if m is None:
        raise HypothesisError(f"{sigma.label} has no discrete measure attached")
    a = require_pd(a, "A", MAX_COND)
    b = require_pd(b, "B", MAX_COND)
    out = m.alpha * a + m.beta * b
    for t, w in m.atoms:
        out = out + w * (1 + t) / t * parallel_sum(t * a, b)
    return hermitian(out, check=False)


class LimitResult(NamedTuple):
    value: np.ndarray
    estimate: float
    iterates: tuple


def _well_conditioned(a, pol) -> bool:
    if cone_membership(a, pol) is not Cone.PD:
        return False
    w = np.linalg.eigvalsh(a)
    return w[-1] <= MAX_COND * w[0]


def mean_psd_limit(
    sigma, a, b, ladder: EpsLadder = DEFAULT_LADDER, pol: TolerancePolicy = DEFAULT_POLICY
) -> LimitResult:
    """Downward limit of ``(A + eps I) σ (B + eps I)`` along ``ladder``.

    The iterates are checked to decrease in the Loewner order
    (:class:`DiagnosticError` otherwise). When one argument is PD the limit
    itself is available in closed form, since ``f`` extends continuously to
    ``[0, inf)`` by ``f(0+)``; ``value`` is then that limit and ``estimate``
    the distance from the last rung to it. Otherwise ``value`` is the last
    rung and ``estimate`` the size of the last step.
    """
    sigma = as_mean(sigma)
    a, b = require_psd(a, "A"), require_psd(b, "B")
    eye = np.eye(a.shape[0])
    iterates = []
    for eps in ladder:
        m = mean_spectral(sigma, a + eps * eye, b + eps * eye)
        if iterates and not loewner_leq(m, iterates[-1], pol):
            gap = float(np.linalg.eigvalsh(iterates[-1] - m)[0])
            raise DiagnosticError(
                "epsilon ladder is not monotone", eps=eps, gap=gap, label=sigma.label
            )
        iterates.append(m)
    if _well_conditioned(a, pol):
        result = mean_spectral(sigma, a, b)
    elif _well_conditioned(b, pol):
        result = mean_spectral(MeanDescriptor(transpose(sigma.f)), b, a)
    else:
        result = None
    if result is not None:
        est = operator_norm(iterates[-1] - result)
    else:
        result = iterates[-1]
        est = operator_norm(iterates[-1] - iterates[-2]) if len(iterates) > 1 else float("nan")
    result = hermitian(result, check=False)
    require_psd(result, "limit")
    return LimitResult(result, est, tuple(iterates))


def norm_of_mean(sigma, a, b, ladder: EpsLadder = DEFAULT_LADDER) -> float:
    a, b = as_matrix(a), as_matrix(b)
    if _well_conditioned(a, DEFAULT_POLICY):
        return operator_norm(mean_spectral(sigma, a, b))
    return operator_norm(mean_psd_limit(sigma, a, b, ladder).value)


def _require_case1(sigma: MeanDescriptor):
    if sigma.f.f_at_0 > 1e-12:
        raise HypothesisError(f"{sigma.label}: needs f(0+) = 0, got {sigma.f.f_at_0:g}")
    try:
        fn.h_decomposition(sigma.f)
    except AffineMeanError as exc:
        raise HypothesisError(f"{sigma.label}: needs a non-affine mean") from exc


def norm_mean_projection(sigma, a, p) -> float:
    """``||A σ P|| = f°(1 / max{lam >= 0 : lam P <= P A^{-1} P})``.

    Valid for non-affine ``f`` with ``f(0+) = 0`` and a nonzero projection.
    """
    sigma = as_mean(sigma)
    _require_case1(sigma)
    lam = max_lambda_compression(a, as_projection(p))
    return float(transpose(sigma.f)(1 / lam))


def geometric_relation_check(sigma, a, p, tol: float = 1e-6) -> bool:
    """``||A σ P|| = f°(||A # P||^2)`` with the inner square from the
    compression formula."""
    sigma = as_mean(sigma)
    if not sigma.symmetric:
        raise HypothesisError(f"{sigma.label} is not symmetric")
    _require_case1(sigma)
    p = as_projection(p)
    inner = 1 / max_lambda_compression(a, p)
    lhs = operator_norm(mean_spectral(sigma, a, p.matrix))
    rhs = float(transpose(sigma.f)(inner))
    return abs(lhs - rhs) <= tol * max(1.0, lhs)
