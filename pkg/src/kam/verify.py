"""Property batteries over random samples.

Each battery returns a list of :class:`CheckRecord`; a record carries the
worst deviation seen, its threshold and, on failure, a witness naming the
per-sample evaluator and its inputs so the sample can be re-run with
:func:`replay_check`. The CLI ``verify`` and ``check-mean-axioms`` verbs
and the acceptance tests are thin wrappers around these functions.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from kam.errors import AffineMeanError
from kam.functions import PROBE_GRID, DiscreteMeasure, h_decomposition, monotonicity_probe, transpose
from kam.hermitian import (
    DEFAULT_POLICY,
    hermitian,
    loewner_gap,
    loewner_leq,
    matrix_from_json,
    matrix_to_json,
    max_lambda_compression,
    operator_norm,
)
from kam.means import (
    MeanDescriptor,
    _require_case1,
    as_mean,
    get_mean,
    mean_psd_limit,
    mean_quadrature,
    mean_spectral,
)
from kam.order import (
    DisjointPair,
    detect_projection,
    dominating_pair,
    is_maximal_pair,
    order_from_projection_norms,
    order_witness,
    scale_pair,
)
from kam.sampling import (
    random_effect,
    random_measure,
    random_orthogonal_pair,
    random_pd,
    random_projection,
    random_psd,
    random_unitary,
)

__all__ = [
    "CheckRecord",
    "EVALUATORS",
    "SUITES",
    "SUITE_ALIASES",
    "run_suite",
    "replay_check",
    "mean_axioms",
    "route_equivalence",
    "projection_norm_formula",
    "worked_projection_value",
    "geometric_relation",
    "order_by_projections",
    "maximality",
    "pair_scaling",
    "h_decomposition_suite",
    "shifted_identity",
]


@dataclass
class CheckRecord:
    name: str
    anchor: str
    passed: bool
    max_deviation: float
    threshold: float
    trials: int = 0
    witness: dict | None = None
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        d = asdict(self)
        if not math.isfinite(d["max_deviation"]):
            d["max_deviation"] = repr(d["max_deviation"])
        return d


# --- per-sample evaluators ---------------------------------------------------------
#
# Each takes (sigma, **inputs) and returns a deviation; a sample passes when
# the deviation is at most the battery's threshold. Boolean checks return 0/1.


def ev_monotonicity(sigma, A, B, C, D):
    ab, cd = mean_spectral(sigma, A, B), mean_spectral(sigma, C, D)
    return max(0.0, -loewner_gap(ab, cd)) / (1 + operator_norm(ab) + operator_norm(cd))


def ev_transformer(sigma, A, B, C):
    lhs = hermitian(C @ mean_spectral(sigma, A, B) @ C, check=False)
    rhs = mean_spectral(sigma, C @ A @ C, C @ B @ C)
    return max(0.0, -loewner_gap(lhs, rhs)) / (1 + operator_norm(lhs) + operator_norm(rhs))


def ev_transformer_equality(sigma, A, B, C):
    lhs = C @ mean_spectral(sigma, A, B) @ C
    rhs = mean_spectral(sigma, C @ A @ C, C @ B @ C)
    return operator_norm(lhs - rhs) / (1 + operator_norm(lhs))


def ev_symmetry(sigma, A, B):
    ab = mean_spectral(sigma, A, B)
    return operator_norm(ab - mean_spectral(sigma, B, A)) / (1 + operator_norm(ab))


def ev_norm_idempotent(sigma, A):
    return abs(operator_norm(mean_spectral(sigma, A, A)) - operator_norm(A)) / operator_norm(A)


def ev_homogeneity(sigma, A, B, t):
    ab = mean_spectral(sigma, A, B)
    return operator_norm(mean_spectral(sigma, t * A, t * B) - t * ab) / (t * (1 + operator_norm(ab)))


def ev_route(sigma, A, B, measure):
    sigma = as_mean(DiscreteMeasure.from_json(measure))
    s = mean_spectral(sigma, A, B)
    return operator_norm(s - mean_quadrature(sigma, A, B)) / operator_norm(s)


def ev_projection_norm(sigma, A, P):
    lam = max_lambda_compression(A, P)
    limit = operator_norm(mean_psd_limit(sigma, A, P).value)
    return abs(float(transpose(sigma.f)(1 / lam)) - limit)


def ev_geometric_square(sigma, A, P):
    sq = 1 / max_lambda_compression(A, P)
    g = operator_norm(mean_spectral(get_mean("geometric"), A, P))
    return abs(g * g - sq) / (1 + sq)


def ev_geometric_relation(sigma, A, P):
    sq = 1 / max_lambda_compression(A, P)
    lhs = operator_norm(mean_spectral(sigma, A, P))
    return abs(lhs - float(transpose(sigma.f)(sq))) / max(1.0, lhs)


def ev_order_agreement(sigma, A, B):
    return float(loewner_leq(A, B) != order_from_projection_norms(sigma, A, B))


def ev_order_witness(sigma, A, B):
    w = order_witness(sigma, A, B)
    return float(w is None or w.compression_gap < -1e-12 or not w.norm_b < w.norm_a)


def ev_complement_maximal(sigma, P):
    return float(not is_maximal_pair(DisjointPair.of(P, np.eye(P.shape[0]) - P)))


def ev_dominated(sigma, E, B):
    pair = DisjointPair.of(E, B)
    bigger = dominating_pair(pair)
    ok = (
        bigger is not None
        and pair <= bigger
        and operator_norm(bigger.first.matrix - E) + operator_norm(bigger.second.matrix - B) > 1e-9
        and not is_maximal_pair(pair)
    )
    return float(not ok)


def ev_detect_projection(sigma, E):
    w = np.linalg.eigvalsh(E)
    spectral = bool(np.max(np.minimum(np.abs(w), np.abs(w - 1))) <= 1e-9)
    return float(detect_projection(E) != spectral)


def ev_scaling(sigma, P, t):
    eye = np.eye(P.shape[0])
    good = scale_pair(DisjointPair.of(P, eye - P), t)
    bad = scale_pair(DisjointPair.of(P, (eye - P) / 2), t)
    ok = is_maximal_pair(good) and not is_maximal_pair(bad) and is_maximal_pair(scale_pair(good, 1 / t))
    witness = dominating_pair(bad)
    ok = ok and witness is not None and bad <= witness
    return float(not ok)


def ev_shifted_identity(sigma, P, Q, delta):
    h = h_decomposition(sigma.f)
    n = P.shape[0]
    val = operator_norm(mean_spectral(MeanDescriptor(h), Q + delta * np.eye(n), P))
    hd = float(h(delta))
    return abs(val - hd) / hd


EVALUATORS = {
    "monotonicity": ev_monotonicity,
    "transformer": ev_transformer,
    "transformer_equality": ev_transformer_equality,
    "symmetry": ev_symmetry,
    "norm_idempotent": ev_norm_idempotent,
    "homogeneity": ev_homogeneity,
    "route_equivalence": ev_route,
    "projection_norm": ev_projection_norm,
    "geometric_square": ev_geometric_square,
    "geometric_relation": ev_geometric_relation,
    "order_by_projections": ev_order_agreement,
    "order_witness": ev_order_witness,
    "complement_maximal": ev_complement_maximal,
    "dominated_effects": ev_dominated,
    "detect_projection": ev_detect_projection,
    "scaling": ev_scaling,
    "shifted_identity": ev_shifted_identity,
}


def replay_check(witness: dict, sigma=None) -> float:
    """Re-run the sample stored in a failing record's witness."""
    check = witness["check"]
    if check not in EVALUATORS:
        raise KeyError(f"no evaluator for {check!r}")
    if sigma is None and witness.get("mean"):
        sigma = get_mean(witness["mean"])
    sigma = as_mean(sigma) if sigma is not None else None
    inputs = {k: matrix_from_json(v) for k, v in witness.get("inputs", {}).items()}
    return float(EVALUATORS[check](sigma, **inputs, **witness.get("params", {})))


class _Battery:
    """Runs one evaluator over many samples and keeps the worst."""

    def __init__(self, check, sigma, anchor, threshold, label=None):
        self.check, self.sigma, self.anchor, self.threshold = check, sigma, anchor, threshold
        prefix = label if label is not None else (sigma.label if sigma is not None else "")
        self.name = f"{prefix}/{check}" if prefix else check
        self.dev, self.witness, self.trials, self.failures = 0.0, None, 0, 0
        self.notes: list[str] = []

    def __call__(self, **inputs) -> float:
        dev = float(EVALUATORS[self.check](self.sigma, **inputs))
        self.trials += 1
        if not dev <= self.threshold:
            self.failures += 1
        if dev > self.dev or not math.isfinite(dev):
            self.dev = dev
            if not dev <= self.threshold:
                self.witness = {
                    "check": self.check,
                    "mean": self.sigma.label if self.sigma is not None else None,
                    "inputs": {k: matrix_to_json(v) for k, v in inputs.items() if isinstance(v, np.ndarray)},
                    "params": {k: v for k, v in inputs.items() if not isinstance(v, np.ndarray)},
                }
        return dev

    def record(self) -> CheckRecord:
        return CheckRecord(
            self.name, self.anchor, self.failures == 0, self.dev, self.threshold, self.trials, self.witness, self.notes
        )


def _rng(seed):
    return np.random.default_rng(seed)


# --- mean axioms -------------------------------------------------------------------


def _random_invertible_hermitian(rng, n):
    u = random_unitary(rng, n)
    s = rng.uniform(0.5, 2.0, n) * rng.choice([-1.0, 1.0], n)
    return hermitian((u * s) @ u.conj().T, check=False)


def mean_axioms(sigma, n: int = 4, trials: int = 200, seed: int = 42, pol=DEFAULT_POLICY) -> list[CheckRecord]:
    """Monotonicity, transformer inequality (and equality for PD
    congruences), symmetry, ``||A σ A|| = ||A||`` and homogeneity."""
    sigma = as_mean(sigma)
    rng = _rng(seed)
    tol = pol.order_tol
    mono = _Battery("monotonicity", sigma, "connection axiom: monotonicity", tol)
    trans = _Battery("transformer", sigma, "connection axiom: transformer inequality", tol)
    trans_eq = _Battery("transformer_equality", sigma, "transformer equality for invertible C", pol.eq_tol)
    homog = _Battery("homogeneity", sigma, "(tA) s (tB) = t (A s B)", pol.eq_tol)
    sym = _Battery("symmetry", sigma, "symmetric mean: A s B = B s A", tol)
    idem = _Battery("norm_idempotent", sigma, "||A|| = ||A s A||", tol)
    for _ in range(trials):
        a, b = random_pd(rng, n), random_pd(rng, n)
        c = a + random_psd(rng, n, rank=int(rng.integers(1, n + 1)))
        d = b + random_psd(rng, n, rank=int(rng.integers(1, n + 1)))
        mono(A=a, B=b, C=c, D=d)
        trans(A=a, B=b, C=np.asarray(_random_invertible_hermitian(rng, n)))
        trans_eq(A=a, B=b, C=np.asarray(random_pd(rng, n, 0.5, 2.0)))
        homog(A=a, B=b, t=float(rng.choice([0.1, 2.0, 10.0])))
        if sigma.symmetric:
            sym(A=a, B=b)
        if sigma.normalized:
            idem(A=a)
    out = [mono.record(), trans.record(), trans_eq.record(), homog.record()]
    if sigma.symmetric:
        out.append(sym.record())
    if sigma.normalized:
        out.append(idem.record())
    return out


# --- integral representation vs spectral formula ---------------------------------


def route_equivalence(
    measures: int = 50, pairs: int = 50, max_atoms: int = 5, max_dim: int = 5, seed: int = 42, tol: float = 1e-8
) -> list[CheckRecord]:
    rng = _rng(seed)
    battery = _Battery("route_equivalence", None, "integral representation vs spectral formula", tol)
    for _ in range(measures):
        m = random_measure(rng, max_atoms).to_json()
        for _ in range(pairs):
            n = int(rng.integers(1, max_dim + 1))
            battery(A=random_pd(rng, n), B=random_pd(rng, n), measure=m)
    return [battery.record()]


# --- projection-norm formula and its geometric-mean form --------------------------


def projection_norm_formula(sigma, trials: int = 100, max_dim: int = 5, seed: int = 42, tol: float = 1e-5):
    """``f°(1/max lam)`` against the epsilon-ladder limit of ``||A σ P||``.

    The formula is evaluated directly rather than through the guarded
    :func:`kam.means.norm_mean_projection`, so means outside its hypotheses
    are measured instead of refused.
    """
    sigma = as_mean(sigma)
    rng = _rng(seed)
    battery = _Battery("projection_norm", sigma, "||A s P|| = f°(1 / max{lam : lam P <= P A^-1 P})", tol)
    if sigma.f.f_at_0 > 1e-12:
        battery.notes.append(f"f(0+) = {sigma.f.f_at_0:g} > 0: outside the formula's hypothesis")
    for _ in range(trials):
        n = int(rng.integers(1, max_dim + 1))
        a = random_pd(rng, n)
        p = random_projection(rng, n).matrix if n > 1 else np.eye(1)
        battery(A=a, P=np.asarray(p))
    return [battery.record()]


def worked_projection_value() -> CheckRecord:
    """``A = diag(2, 3)``, ``P = e11``: ``||A # P|| = sqrt(2)``."""
    a, p = np.diag([2.0, 3.0]), np.diag([1.0, 0.0])
    geo = get_mean("geometric")
    lam = max_lambda_compression(a, p)
    limit = operator_norm(mean_psd_limit(geo, a, p).value)
    formula = float(transpose(geo.f)(1 / lam))
    dev = max(abs(formula - math.sqrt(2)), abs(limit - math.sqrt(2)))
    return CheckRecord("geometric/worked_value", "||A # P||^2 = 1/max lam", dev <= 1e-5, dev, 1e-5, 1)


def geometric_relation(sigma, trials: int = 100, max_dim: int = 5, seed: int = 42, tol: float = 1e-6):
    """``||A σ P|| = f°(||A # P||^2)`` with ``||A # P||^2 = 1/max lam``."""
    sigma = as_mean(sigma)
    _require_case1(sigma)
    rng = _rng(seed)
    inner = _Battery("geometric_square", sigma, "||A # P||^2 = 1/max lam", tol)
    outer = _Battery("geometric_relation", sigma, "||A s P|| = f°(||A # P||^2)", tol)
    for _ in range(trials):
        n = int(rng.integers(2, max_dim + 1))
        a = random_pd(rng, n)
        p = np.asarray(random_projection(rng, n).matrix)
        inner(A=a, P=p)
        outer(A=a, P=p)
    return [inner.record(), outer.record()]


# --- order from projection norms ---------------------------------------------------


def order_by_projections(sigma, trials: int = 200, dims=(3, 4), seed: int = 42) -> list[CheckRecord]:
    sigma = as_mean(sigma)
    _require_case1(sigma)
    rng = _rng(seed)
    agree = _Battery(
        "order_by_projections", sigma, "A <= B iff ||A s P|| <= ||B s P|| for P in AW*(I, A^-1 - B^-1)", 0.0
    )
    wit = _Battery("order_witness", sigma, "P_eps A^-1 P_eps + eps P_eps <= P_eps B^-1 P_eps", 0.0)
    negatives = 0
    for k in range(trials):
        n = int(dims[k % len(dims)])
        a = random_pd(rng, n)
        if k % 2 == 0:
            b = a + random_psd(rng, n, rank=int(rng.integers(1, n + 1)))
        else:
            b = random_pd(rng, n)
        agree(A=a, B=b)
        if not loewner_leq(a, b):
            negatives += 1
            wit(A=a, B=b)
    agree.notes.append(f"{negatives} of {trials} pairs not ordered")
    return [agree.record(), wit.record()]


# --- maximal pairs and projections ------------------------------------------------


def maximality(n: int = 3, trials: int = 100, effects: int = 500, seed: int = 42) -> list[CheckRecord]:
    rng = _rng(seed)
    maxi = _Battery("complement_maximal", None, "(P, I-P) is maximal in Delta_1", 0.0, label="maximality")
    for _ in range(trials):
        maxi(P=np.asarray(random_projection(rng, n).matrix))

    dom = _Battery(
        "dominated_effects", None, "non-projection effects sit in dominated pairs", 0.0, label="maximality"
    )
    for _ in range(trials):
        u = random_unitary(rng, n)
        r = int(rng.integers(1, n + 1))
        we = np.concatenate([rng.uniform(0.05, 0.95, r), np.zeros(n - r)])
        wb = np.concatenate([np.zeros(r), rng.uniform(0, 1, n - r)])
        e = np.asarray(hermitian((u * we) @ u.conj().T, check=False))
        b = np.asarray(hermitian((u * wb) @ u.conj().T, check=False))
        dom(E=e, B=b)

    det = _Battery(
        "detect_projection", None, "P is a projection iff (P, B) is maximal for some B", 0.0, label="maximality"
    )
    for k in range(effects):
        m = random_projection(rng, n).matrix if k % 2 == 0 else random_effect(rng, n)
        det(E=np.asarray(m))
    return [maxi.record(), dom.record(), det.record()]


def pair_scaling(n: int = 3, trials: int = 50, seed: int = 42) -> list[CheckRecord]:
    """Maximality in ``Delta_1`` iff maximality of the scaled pair in ``Delta_t``."""
    rng = _rng(seed)
    battery = _Battery(
        "scaling", None, "(tP1, tP2) maximal in Delta_t iff (P1, P2) maximal in Delta_1", 0.0, label="scaling"
    )
    for _ in range(trials):
        battery(P=np.asarray(random_projection(rng, n).matrix), t=float(rng.uniform(0.2, 8.0)))
    return [battery.record()]


# --- h-decomposition and the shifted identity ------------------------------------


def h_decomposition_suite(sigma, n: int = 3, trials: int = 50, seed: int = 42) -> list[CheckRecord]:
    sigma = as_mean(sigma)
    try:
        h = h_decomposition(sigma.f)
    except AffineMeanError:
        rec = CheckRecord(f"{sigma.label}/h_decomposition", "h = f - f(0+) - f°(0+) x", True, 0.0, 0.0)
        rec.notes.append("h empty: affine mean, suite passes vacuously")
        return [rec]
    x = PROBE_GRID
    f = sigma.f
    hx = h(x)
    recon = float(np.max(np.abs(hx + f.f_at_0 + f.fo_at_0 * x - f(x)) / np.abs(f(x))))
    bnd = float(abs(h.f_at_0) + abs(h.fo_at_0))
    dec = float(max(0.0, -np.min(np.diff(hx))))
    out = [
        CheckRecord(f"{sigma.label}/h_reconstruction", "h + f(0+) + f°(0+) x = f", recon <= 1e-12, recon, 1e-12),
        CheckRecord(f"{sigma.label}/h_boundary", "h(0+) = h°(0+) = 0", bnd == 0.0, bnd, 0.0),
        CheckRecord(f"{sigma.label}/h_monotone", "h nondecreasing", dec <= 1e-12, dec, 1e-12),
    ]
    if f.symmetric:
        d = float(np.max(np.abs(hx - x * h(1 / x)) / (1 + hx)))
        out.append(CheckRecord(f"{sigma.label}/h_symmetric", "f symmetric implies h symmetric", d <= 1e-9, d, 1e-9))
    probe = monotonicity_probe(h, n, trials, seed)
    out.append(
        CheckRecord(
            f"{sigma.label}/h_operator_monotone",
            "h operator monotone",
            probe.violations == 0,
            float(max(0.0, -probe.worst_gap)),
            0.0,
            trials,
        )
    )
    return out


def shifted_identity(sigma, dims=(3, 5), deltas=(1e-1, 1e-2, 1e-3), trials: int = 10, seed: int = 42, tol=1e-6):
    """``||(Q + delta I) σ_h P|| = h(delta)`` for orthogonal projections."""
    sigma = as_mean(sigma)
    try:
        h_decomposition(sigma.f)
    except AffineMeanError:
        rec = CheckRecord(f"{sigma.label}/shifted_identity", "||(Q + dI) s_h P|| = h(d)", True, 0.0, tol)
        rec.notes.append("h empty: affine mean, identity vacuous")
        return [rec]
    rng = _rng(seed)
    battery = _Battery("shifted_identity", sigma, "||(Q + dI) s_h P|| = h(d)", tol)
    for n in dims:
        for _ in range(trials):
            p, q = random_orthogonal_pair(rng, n)
            for d in deltas:
                battery(P=np.asarray(p.matrix), Q=np.asarray(q.matrix), delta=float(d))
    return [battery.record()]


# --- suite registry ------------------------------------------------------------------


def _suite_axioms(sigma, n, trials, seed):
    return mean_axioms(sigma, n=n, trials=trials, seed=seed)


def _suite_maximality(sigma, n, trials, seed):
    k = min(trials, 100)
    return maximality(n=n, trials=k, effects=5 * k, seed=seed)


def _suite_scaling(sigma, n, trials, seed):
    return pair_scaling(n=n, trials=min(trials, 50), seed=seed)


def _suite_projection_norm(sigma, n, trials, seed):
    return projection_norm_formula(sigma, trials=trials, max_dim=n, seed=seed) + [worked_projection_value()]


def _suite_relation(sigma, n, trials, seed):
    return geometric_relation(sigma, trials=trials, max_dim=max(n, 2), seed=seed)


def _suite_order(sigma, n, trials, seed):
    return order_by_projections(sigma, trials=trials, dims=(n,), seed=seed)


def _suite_h(sigma, n, trials, seed):
    return h_decomposition_suite(sigma, n=n, trials=trials, seed=seed)


def _suite_shifted(sigma, n, trials, seed):
    return shifted_identity(sigma, dims=(max(n, 2),), trials=max(1, trials // 10), seed=seed)


SUITES = {
    "axioms": _suite_axioms,
    "maximality": _suite_maximality,
    "scaling": _suite_scaling,
    "projection-norm": _suite_projection_norm,
    "geometric-relation": _suite_relation,
    "order-by-projections": _suite_order,
    "h-decomposition": _suite_h,
    "shifted-identity": _suite_shifted,
}

# numbered names accepted on the command line
SUITE_ALIASES = {
    "lemma2.3": "maximality",
    "lemma2.5": "scaling",
    "prop3.3": "projection-norm",
    "eq10": "geometric-relation",
    "prop3.4": "order-by-projections",
    "lemma3.6": "h-decomposition",
    "case2-identities": "shifted-identity",
}


def run_suite(name: str, sigma, n: int = 4, trials: int = 200, seed: int = 42) -> list[CheckRecord]:
    key = SUITE_ALIASES.get(name, name)
    if key not in SUITES:
        raise KeyError(f"unknown suite {name!r}")
    return SUITES[key](as_mean(sigma), n, trials, seed)
