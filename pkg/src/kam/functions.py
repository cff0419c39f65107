"""Representing functions of Kubo-Ando connections and their Loewner measures.

A connection is determined by an operator monotone ``f: (0, inf) -> (0, inf)``,
which in turn has the integral form

    f(x) = alpha + beta * x + sum_i w_i * x (1 + t_i) / (x + t_i)

when its measure is finitely supported. ``alpha`` is the mass at 0 (equal to
``f(0+)``) and ``beta`` the mass at infinity (equal to ``f°(0+)``, where
``f°(x) = x f(1/x)`` is the transpose).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from kam.errors import AffineMeanError, HypothesisError, SchemaError
from kam.hermitian import DEFAULT_POLICY, loewner_leq, spectral_apply

__all__ = [
    "DiscreteMeasure",
    "RepresentingFunction",
    "PROBE_GRID",
    "eval_from_measure",
    "from_measure",
    "transpose",
    "is_symmetric",
    "h_decomposition",
    "monotonicity_probe",
    "builtin_catalog",
    "arithmetic",
    "geometric",
    "harmonic",
    "power",
    "logarithmic",
    "validate_function",
]

PROBE_GRID = np.logspace(-6, 6, 241)


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported positive measure on ``[0, inf]``."""

    alpha: float = 0.0
    beta: float = 0.0
    atoms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        atoms = tuple(sorted((float(t), float(w)) for t, w in self.atoms))
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("point masses at 0 and infinity must be nonnegative")
        ts = [t for t, _ in atoms]
        for t, w in atoms:
            if not (0 < t < math.inf):
                raise ValueError(f"atom location {t} must lie in (0, inf)")
            if not w > 0:
                raise ValueError(f"atom weight {w} must be positive")
        if len(set(ts)) != len(ts):
            raise ValueError("duplicate atom locations")
        total = self.total_mass
        if not (0 < total < math.inf):
            raise ValueError("total mass must be finite and positive")

    @property
    def total_mass(self) -> float:
        return self.alpha + self.beta + sum(w for _, w in self.atoms)

    @property
    def interior_mass(self) -> float:
        return sum(w for _, w in self.atoms)

    def reflected(self) -> "DiscreteMeasure":
        """Measure of the transpose: swap the endpoint masses, send t to 1/t."""
        return DiscreteMeasure(self.beta, self.alpha, tuple((1 / t, w) for t, w in self.atoms))

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "atoms": [list(a) for a in self.atoms]}

    @classmethod
    def from_json(cls, obj) -> "DiscreteMeasure":
        try:
            atoms = tuple((float(t), float(w)) for t, w in obj.get("atoms", []))
            return cls(float(obj.get("alpha", 0.0)), float(obj.get("beta", 0.0)), atoms)
        except (TypeError, ValueError, AttributeError) as exc:
            raise SchemaError(f"bad measure JSON: {exc}") from exc


def eval_from_measure(m: DiscreteMeasure, x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("the integral representation is defined for x > 0 only")
    out = m.alpha + m.beta * x
    for t, w in m.atoms:
        out = out + w * x * (1 + t) / (x + t)
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class RepresentingFunction:
    """An operator monotone function together with its boundary data.

    ``func`` is vectorized over positive reals. ``f_at_0`` is ``f(0+)`` and
    ``fo_at_0`` is ``f°(0+) = lim f(x)/x`` as ``x -> inf``.
    """

    name: str
    kind: str
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    f_at_0: float
    fo_at_0: float
    symmetric: bool
    normalized: bool
    p: float | None = None
    measure: DiscreteMeasure | None = None
    _transpose_of: "RepresentingFunction | None" = field(default=None, repr=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        y = self.func(x)
        return y if np.ndim(y) else float(y)

    def extended(self, x):
        """Evaluate on ``[0, inf)``, using ``f(0+)`` at zero."""
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.f_at_0, dtype=float)
        pos = x > 0
        if np.any(pos):
            out[pos] = self.func(x[pos])
        return out


def from_measure(m: DiscreteMeasure, name: str = "measure") -> RepresentingFunction:
    sym = m.alpha == m.beta and _atoms_symmetric(m)
    return RepresentingFunction(
        name=name,
        kind="FromMeasure",
        func=lambda x: eval_from_measure(m, x),
        f_at_0=m.alpha,
        fo_at_0=m.beta,
        symmetric=sym,
        normalized=abs(m.total_mass - 1) <= 1e-12,
        measure=m,
    )


def _atoms_symmetric(m: DiscreteMeasure) -> bool:
    mine = np.array(m.atoms, dtype=float).reshape(-1, 2)
    refl = np.array(m.reflected().atoms, dtype=float).reshape(-1, 2)
    return mine.shape == refl.shape and np.allclose(mine, refl, rtol=1e-12, atol=0)


def transpose(f: RepresentingFunction) -> RepresentingFunction:
    if f._transpose_of is not None:
        return f._transpose_of
    if f.measure is not None:
        g = from_measure(f.measure.reflected(), name=f"{f.name}°")
    else:
        g = RepresentingFunction(
            name=f"{f.name}°",
            kind=f.kind,
            func=lambda x: x * f.func(1 / x),
            f_at_0=f.fo_at_0,
            fo_at_0=f.f_at_0,
            symmetric=f.symmetric,
            normalized=f.normalized,
            p=f.p,
        )
    return replace(g, _transpose_of=f)


def symmetry_defect(f: RepresentingFunction, grid=PROBE_GRID) -> float:
    x = np.asarray(grid, dtype=float)
    fx = np.asarray(f(x), dtype=float)
    fo = x * np.asarray(f(1 / x), dtype=float)
    return float(np.max(np.abs(fx - fo) / (1 + np.abs(fx))))


def is_symmetric(f: RepresentingFunction, grid=PROBE_GRID) -> bool:
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0):
        raise ValueError("probe grid must be nonempty and positive")
    return symmetry_defect(f, grid) <= 1e-9


def h_decomposition(f: RepresentingFunction, grid=PROBE_GRID) -> RepresentingFunction:
    """``h(x) = f(x) - f(0+) - f°(0+) x``, the part carried by the interior mass.

    Raises :class:`AffineMeanError` when ``h`` vanishes, i.e. the measure sits
    entirely on ``{0, inf}``.
    """
    if not (math.isfinite(f.f_at_0) and math.isfinite(f.fo_at_0)):
        raise HypothesisError("h-decomposition needs finite f(0+) and f°(0+)")
    if f.measure is not None:
        if not f.measure.atoms:
            raise AffineMeanError(f"{f.name} is affine; h is empty")
        m = DiscreteMeasure(0.0, 0.0, f.measure.atoms)
        return from_measure(m, name=f"h[{f.name}]")
    a0, b0, base = f.f_at_0, f.fo_at_0, f.func

    def h(x):
        return base(x) - a0 - b0 * x

    x = np.asarray(grid, dtype=float)
    if np.all(h(x) <= 1e-12 * (1 + np.abs(base(x)))):
        raise AffineMeanError(f"{f.name} is affine; h is empty")
    return RepresentingFunction(
        name=f"h[{f.name}]",
        kind=f.kind,
        func=h,
        f_at_0=0.0,
        fo_at_0=0.0,
        symmetric=f.symmetric,
        normalized=False,
        p=f.p,
    )


# --- catalog -----------------------------------------------------------------


def arithmetic() -> RepresentingFunction:
    return replace(from_measure(DiscreteMeasure(0.5, 0.5), name="arithmetic"), kind="Arithmetic")


def harmonic() -> RepresentingFunction:
    m = DiscreteMeasure(0.0, 0.0, ((1.0, 1.0),))
    return replace(from_measure(m, name="harmonic"), kind="Harmonic")


def geometric() -> RepresentingFunction:
    return RepresentingFunction(
        name="geometric",
        kind="Geometric",
        func=np.sqrt,
        f_at_0=0.0,
        fo_at_0=0.0,
        symmetric=True,
        normalized=True,
    )


def power(p: float) -> RepresentingFunction:
    """Power mean ``((1 + x^p)/2)^(1/p)`` for ``p`` in ``[-1, 1]``, ``p != 0``."""
    if p == 0 or not -1 <= p <= 1:
        raise ValueError("power mean exponent must lie in [-1, 1] \\ {0}")

    def f(x):
        return ((1 + x**p) / 2) ** (1 / p)

    f0 = 2 ** (-1 / p) if p > 0 else 0.0
    return RepresentingFunction(
        name=f"power({p:g})",
        kind="Power",
        func=f,
        f_at_0=f0,
        fo_at_0=f0,
        symmetric=True,
        normalized=True,
        p=float(p),
    )


def _log_mean(x):
    u = x - 1
    small = np.abs(u) < 1e-6
    safe = np.where(small, 1.0, u)
    out = safe / np.log1p(safe)
    return np.where(small, 1 + u / 2 - u * u / 12, out)


def logarithmic() -> RepresentingFunction:
    return RepresentingFunction(
        name="logarithmic",
        kind="Logarithmic",
        func=_log_mean,
        f_at_0=0.0,
        fo_at_0=0.0,
        symmetric=True,
        normalized=True,
    )


def builtin_catalog() -> list[RepresentingFunction]:
    return [arithmetic(), geometric(), harmonic(), power(0.5), logarithmic()]


# --- validation --------------------------------------------------------------


def boundary_estimates(f: RepresentingFunction, tiny: float = 1e-12) -> tuple[float, float]:
    """Numerical ``(f(0+), f°(0+))`` from ``f(tiny)`` and ``tiny * f(1/tiny)``."""
    return float(f(tiny)), float(tiny * f(1 / tiny))


def validate_function(f: RepresentingFunction, grid=PROBE_GRID) -> list[str]:
    """Sampled checks of positivity, monotonicity, concavity and the flags."""
    x = np.asarray(grid, dtype=float)
    y = np.asarray(f(x), dtype=float)
    issues = []
    if not np.all(y > 0):
        issues.append("not positive")
    if np.any(np.diff(y) < -1e-12 * (1 + np.abs(y[1:]))):
        issues.append("not nondecreasing")
    slopes = np.diff(y) / np.diff(x)
    if np.any(np.diff(slopes) > 1e-9 * (1 + np.abs(slopes[:-1]))):
        issues.append("not concave")
    if f.symmetric and symmetry_defect(f, x) > 1e-10:
        issues.append("flagged symmetric but f != f°")
    if f.normalized and abs(f(1.0) - 1) > 1e-12:
        issues.append("flagged normalized but f(1) != 1")
    return issues


# --- operator monotonicity probe ---------------------------------------------


@dataclass
class ProbeReport:
    trials: int
    violations: int
    worst_gap: float
    witness: tuple[np.ndarray, np.ndarray] | None = None


def monotonicity_probe(f, n: int, trials: int, seed: int = 0, *, equal: bool = False) -> ProbeReport:
    """Search for ``A <= B`` (PD) with ``f(A) <= f(B)`` failing.

    ``f(A)`` is ``I σ A`` for the connection of ``f``, so this is the same as
    testing monotonicity of ``σ`` in its second slot. ``equal=True`` uses the
    degenerate pairs ``A = B``.
    """
    from kam.sampling import random_pd, random_psd

    if n > 8:
        raise ValueError("probe dimension capped at 8")
    rng = np.random.default_rng(seed)
    g = f.func if isinstance(f, RepresentingFunction) else f
    violations, worst, witness = 0, 0.0, None
    for _ in range(trials):
        a = random_pd(rng, n)
        b = a if equal else a + random_psd(rng, n, rank=int(rng.integers(1, n + 1)))
        fa, fb = spectral_apply(g, a), spectral_apply(g, b)
        if not loewner_leq(fa, fb, DEFAULT_POLICY):
            gap = float(np.linalg.eigvalsh(fb - fa)[0])
            violations += 1
            if gap < worst:
                worst, witness = gap, (a, np.asarray(b))
    return ProbeReport(trials, violations, worst, witness)
