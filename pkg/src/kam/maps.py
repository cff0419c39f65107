"""Candidate maps on the positive definite cone.

Every map is a callable ``phi(A)`` on PD matrices of a fixed dimension and can
be written to / read from the map-spec JSON used by the CLI.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from kam.errors import KamError, SchemaError
from kam.hermitian import (
    DEFAULT_POLICY,
    as_matrix,
    hermitian,
    matrix_from_json,
    matrix_to_json,
    operator_norm,
    require_pd,
)
from kam.sampling import random_hermitian, random_unitary

__all__ = [
    "PreserverMap",
    "JordanUnitary",
    "JordanTranspose",
    "Congruence",
    "Perturbed",
    "Custom",
    "MapDomainError",
    "apply",
    "identity_map",
    "custom_inverse",
    "custom_scale",
    "custom_norm_distort",
    "custom_table",
    "map_from_json",
]


class MapDomainError(KamError, KeyError):
    pass


class PreserverMap:
    dim: int
    surjective_by_construction = True

    def __call__(self, a) -> np.ndarray:
        raise NotImplementedError

    def inverse(self, b) -> np.ndarray | None:
        """Explicit inverse where the map has one, else ``None``."""
        return None

    def to_json(self) -> dict:
        raise NotImplementedError


def _unitary(u) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError("U must be square")
    if np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]), 2) > 1e-10:
        raise ValueError("U is not unitary")
    return u


def _unitary_json(u) -> dict:
    return {"n": u.shape[0], "re": u.real.tolist(), "im": u.imag.tolist()}


def _unitary_from_json(obj) -> np.ndarray:
    try:
        n = int(obj["n"])
        u = np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj.get("im", np.zeros((n, n))))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad unitary JSON: {exc}") from exc
    try:
        return _unitary(u)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


@dataclass(eq=False)
class JordanUnitary(PreserverMap):
    """``A -> U A U*``."""

    u: np.ndarray

    def __post_init__(self):
        self.u = _unitary(self.u)
        self.dim = self.u.shape[0]

    def __call__(self, a):
        u = self.u
        return hermitian(u @ as_matrix(a) @ u.conj().T, check=False)

    def inverse(self, b):
        u = self.u
        return hermitian(u.conj().T @ as_matrix(b) @ u, check=False)

    def to_json(self):
        return {"kind": "unitary", "U": _unitary_json(self.u)}


@dataclass(eq=False)
class JordanTranspose(PreserverMap):
    """``A -> U A^T U*``."""

    u: np.ndarray

    def __post_init__(self):
        self.u = _unitary(self.u)
        self.dim = self.u.shape[0]

    def __call__(self, a):
        u = self.u
        return hermitian(u @ as_matrix(a).T @ u.conj().T, check=False)

    def inverse(self, b):
        u = self.u
        return hermitian((u.conj().T @ as_matrix(b) @ u).T, check=False)

    def to_json(self):
        return {"kind": "transpose", "U": _unitary_json(self.u)}


@dataclass(eq=False)
class Congruence(PreserverMap):
    """``A -> C inner(A) C`` for PD ``C``."""

    c: np.ndarray
    inner: PreserverMap

    def __post_init__(self):
        self.c = require_pd(self.c, "C")
        self.dim = self.c.shape[0]
        if self.inner.dim != self.dim:
            raise ValueError("inner map dimension mismatch")

    def __call__(self, a):
        return hermitian(self.c @ self.inner(a) @ self.c, check=False)

    def inverse(self, b):
        ci = np.linalg.inv(self.c)
        return self.inner.inverse(hermitian(ci @ as_matrix(b) @ ci, check=False))

    def to_json(self):
        return {"kind": "congruence", "C": matrix_to_json(self.c), "inner": self.inner.to_json()}


@dataclass(eq=False)
class Perturbed(PreserverMap):
    """``base(A) + eta ||A|| H`` for a fixed unit-norm Hermitian ``H`` drawn
    from ``seed``, clamped back into the PD cone."""

    base: PreserverMap
    eta: float
    seed: int = 0
    noise: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.dim = self.base.dim
        h = random_hermitian(np.random.default_rng(self.seed), self.dim)
        self.noise = h / operator_norm(h)

    def __call__(self, a):
        a = as_matrix(a)
        out = self.base(a) + self.eta * operator_norm(a) * self.noise
        w, v = np.linalg.eigh(out)
        floor = DEFAULT_POLICY.order_tol * (1 + np.abs(w).max())
        w = np.maximum(w, floor)
        return hermitian((v * w) @ v.conj().T, check=False)

    def to_json(self):
        return {"kind": "perturbed", "base": self.base.to_json(), "eta": self.eta, "seed": self.seed}


@dataclass(eq=False)
class Custom(PreserverMap):
    """A map given by a Python callable or tabulated on a finite sample set."""

    dim: int
    fn: Callable[[np.ndarray], np.ndarray] | None = None
    table: list[tuple[np.ndarray, np.ndarray]] | None = None
    name: str = "custom"
    params: dict = field(default_factory=dict)
    inverse_fn: Callable[[np.ndarray], np.ndarray] | None = None

    surjective_by_construction = False

    def __post_init__(self):
        if (self.fn is None) == (self.table is None):
            raise ValueError("give exactly one of fn or table")

    def __call__(self, a):
        a = as_matrix(a)
        if self.fn is not None:
            return hermitian(self.fn(a), check=False)
        for x, y in self.table:
            if np.allclose(x, a, rtol=0, atol=1e-12 * (1 + operator_norm(a))):
                return as_matrix(y)
        raise MapDomainError("custom map queried off its sample set")

    def inverse(self, b):
        return None if self.inverse_fn is None else hermitian(self.inverse_fn(as_matrix(b)))

    def to_json(self):
        if self.table is not None:
            entries = [{"A": matrix_to_json(x), "phi": matrix_to_json(y)} for x, y in self.table]
            return {"kind": "table", "n": self.dim, "entries": entries}
        return {"kind": self.name, "n": self.dim, **self.params}


def apply(phi: PreserverMap, a) -> np.ndarray:
    a = require_pd(a, "A")
    if a.shape[0] != phi.dim:
        raise ValueError(f"map acts on {phi.dim}x{phi.dim} matrices")
    return phi(a)


def identity_map(n: int) -> JordanUnitary:
    return JordanUnitary(np.eye(n, dtype=complex))


def custom_inverse(n: int) -> Custom:
    return Custom(n, fn=np.linalg.inv, name="inverse", inverse_fn=np.linalg.inv)


def custom_scale(n: int, c: float) -> Custom:
    return Custom(n, fn=lambda a: c * a, name="scale", params={"c": c}, inverse_fn=lambda b: b / c)


def custom_norm_distort(n: int) -> Custom:
    """``A -> A + (||A|| - 1)^2 I``; fixes the unit ball's boundary but not scalars."""
    return Custom(
        n, fn=lambda a: a + (operator_norm(a) - 1) ** 2 * np.eye(n), name="norm_distort"
    )


def custom_table(entries) -> Custom:
    entries = [(as_matrix(x), as_matrix(y)) for x, y in entries]
    return Custom(entries[0][0].shape[0], table=entries, name="table")


def map_from_json(obj, n: int | None = None) -> PreserverMap:
    """Parse a map spec. ``U`` may be omitted for the unitary/transpose kinds,
    in which case ``{"random": seed}`` or the identity is used."""
    try:
        kind = obj["kind"]
    except (KeyError, TypeError) as exc:
        raise SchemaError("map spec needs a 'kind'") from exc
    n = int(obj.get("n", n or 0)) or None

    def unitary():
        if "U" in obj:
            return _unitary_from_json(obj["U"])
        if n is None:
            raise SchemaError("map spec needs 'U' or 'n'")
        if "random" in obj:
            return random_unitary(np.random.default_rng(int(obj["random"])), n)
        return np.eye(n, dtype=complex)

    try:
        if kind in ("identity",):
            if n is None:
                raise SchemaError("identity map needs 'n'")
            return identity_map(n)
        if kind in ("unitary", "jordan_unitary"):
            return JordanUnitary(unitary())
        if kind in ("transpose", "jordan_transpose"):
            return JordanTranspose(unitary())
        if kind == "congruence":
            c = matrix_from_json(obj["C"])
            inner = map_from_json(obj.get("inner", {"kind": "identity"}), c.shape[0])
            return Congruence(c, inner)
        if kind == "perturbed":
            base = map_from_json(obj["base"], n)
            return Perturbed(base, float(obj["eta"]), int(obj.get("seed", 0)))
        if kind == "inverse":
            return custom_inverse(n)
        if kind == "scale":
            return custom_scale(n, float(obj["c"]))
        if kind == "norm_distort":
            return custom_norm_distort(n)
        if kind == "table":
            return custom_table(
                [(matrix_from_json(e["A"]), matrix_from_json(e["phi"])) for e in obj["entries"]]
            )
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"bad map spec: missing {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"bad map spec: {exc}") from exc
    raise SchemaError(f"unknown map kind {kind!r}")
