"""Command-line front end.

Every verb prints one JSON report (sorted keys) to stdout and, with
``--out``, writes the same report to a file. Reports for the same
configuration and seed are byte-identical except for ``wall_time``.

Exit codes: 0 ok, 1 failed check or rejected map, 2 schema or usage error,
3 cone violation, 4 ill-conditioned input, 5 inconclusive pipeline.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from kam import __version__
from kam.errors import KamError, SchemaError
from kam.functions import PROBE_GRID, DiscreteMeasure, from_measure, transpose
from kam.hermitian import (
    Cone,
    cone_membership,
    loewner_leq,
    matrix_from_json,
    matrix_to_json,
    max_lambda_compression,
    operator_norm,
    require_pd,
    require_psd,
)
from kam.maps import map_from_json
from kam.means import (
    MeanDescriptor,
    get_mean,
    mean_psd_limit,
    mean_quadrature,
    mean_spectral,
)
from kam.order import order_from_projection_norms, order_witness
from kam.preserver import PipelineConfig, replay_witness, run_pipeline
from kam.sampling import random_pd
from kam.verify import SUITE_ALIASES, SUITES, mean_axioms, replay_check

EXIT_INCONCLUSIVE = 5
MAX_DIM = 16
MAX_TRIALS = 1_000_000
DEFAULT_SEED = 42


@dataclass
class RunConfig:
    command: str
    mean: str | None = None
    dim: int = 4
    trials: int = 200
    seed: int = DEFAULT_SEED
    out: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 1 <= self.dim <= MAX_DIM:
            raise SchemaError(f"dim must be in [1, {MAX_DIM}], got {self.dim}")
        if not 1 <= self.trials <= MAX_TRIALS:
            raise SchemaError(f"trials must be in [1, {MAX_TRIALS}], got {self.trials}")

    def to_json(self) -> dict:
        return {"mean": self.mean, "dim": self.dim, "trials": self.trials, "seed": self.seed, **self.extra}


# --- input helpers ---------------------------------------------------------------


def _read_json(src: str):
    """Parse ``src`` as inline JSON if it looks like an object, else as a path."""
    try:
        if src.lstrip().startswith(("{", "[")):
            return json.loads(src)
        return json.loads(Path(src).read_text())
    except OSError as exc:
        raise SchemaError(f"cannot read {src}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{src}: invalid JSON ({exc.msg})") from exc


def load_matrix(src: str) -> np.ndarray:
    """``{"n", "re", "im"}`` or a plain nested list of reals."""
    obj = _read_json(src)
    if isinstance(obj, list):
        try:
            arr = np.asarray(obj, dtype=float)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{src}: matrix entries must be numbers") from exc
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise SchemaError(f"{src}: matrix must be square")
        obj = {"n": arr.shape[0], "re": arr.tolist()}
    try:
        a = matrix_from_json(obj)
    except ValueError as exc:
        if isinstance(exc, KamError):
            raise
        raise SchemaError(f"{src}: {exc}") from exc
    if a.shape[0] > MAX_DIM:
        raise SchemaError(f"matrices are capped at n = {MAX_DIM}")
    return a


def load_mean(name: str | None) -> MeanDescriptor:
    if name is None:
        raise SchemaError("--mean is required")
    if name.endswith(".json") or Path(name).is_file() or name.lstrip().startswith("{"):
        m = DiscreteMeasure.from_json(_read_json(name))
        return MeanDescriptor(from_measure(m, name=f"measure:{Path(name).stem}"))
    try:
        return get_mean(name)
    except (KeyError, ValueError) as exc:
        raise SchemaError(str(exc)) from exc


def _seed(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("KAM_SEED")
    if env is None or env == "":
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError as exc:
        raise SchemaError(f"KAM_SEED must be an integer, got {env!r}") from exc


# --- report assembly -------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return matrix_to_json(x) if x.ndim == 2 else x.tolist()
    if isinstance(x, float) and not np.isfinite(x):
        return repr(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


def _check(name, anchor, passed, max_deviation=0.0, threshold=0.0, witness=None, **extra) -> dict:
    return {
        "name": name,
        "anchor": anchor,
        "passed": bool(passed),
        "max_deviation": float(max_deviation),
        "threshold": float(threshold),
        "witness": witness,
        **extra,
    }


def emit(cfg: RunConfig, checks: list[dict], result: dict | None, started: float, stream=None) -> str:
    report = {
        "command": cfg.command,
        "config": cfg.to_json(),
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
        "version": __version__,
        "wall_time": round(time.perf_counter() - started, 6),
    }
    if result is not None:
        report["result"] = result
    text = json.dumps(report, sort_keys=True, indent=2, default=_jsonable)
    if cfg.out:
        Path(cfg.out).write_text(text + "\n")
    print(text, file=stream or sys.stdout)
    return text


# --- verbs -------------------------------------------------------------------------


def cmd_mean(args, started) -> int:
    sigma = load_mean(args.mean)
    a, b = load_matrix(args.A), load_matrix(args.B)
    if a.shape != b.shape:
        raise SchemaError("A and B must have the same size")
    cfg = RunConfig("mean", sigma.label, a.shape[0], 1, _seed(args.seed), args.out)
    a = require_pd(a, "A")
    b = require_psd(b, "B")
    res = mean_spectral(sigma, a, b)
    result = {"matrix": matrix_to_json(res), "norm_spectral": operator_norm(res)}
    checks = []
    if sigma.measure is not None and cone_membership(b) is Cone.PD:
        quad = mean_quadrature(sigma, a, b)
        dev = operator_norm(res - quad) / max(operator_norm(res), 1e-300)
        result["norm_quadrature"] = operator_norm(quad)
        checks.append(
            _check("route_agreement", "integral representation vs spectral formula", dev <= 1e-8, dev, 1e-8)
        )
    emit(cfg, checks, result, started)
    return 0 if all(c["passed"] for c in checks) else 1


def _is_projection(b) -> bool:
    w = np.linalg.eigvalsh(b)
    return bool(np.max(np.minimum(np.abs(w), np.abs(w - 1))) <= 1e-9) and w[-1] > 0.5


def cmd_norm_mean(args, started) -> int:
    sigma = load_mean(args.mean)
    a, b = load_matrix(args.A), load_matrix(args.B)
    if a.shape != b.shape:
        raise SchemaError("A and B must have the same size")
    cfg = RunConfig("norm-mean", sigma.label, a.shape[0], 1, _seed(args.seed), args.out)
    a, b = require_psd(a, "A"), require_psd(b, "B")
    lim = mean_psd_limit(sigma, a, b)
    norm = operator_norm(lim.value)
    result = {"norm": norm, "ladder_estimate": lim.estimate}
    checks = [
        _check("norm_idempotent", "||A|| = ||A s A||",
               abs(operator_norm(mean_psd_limit(sigma, a, a).value) - operator_norm(a)) <= 1e-9 * (1 + operator_norm(a)))
    ] if sigma.normalized else []
    if cone_membership(a) is Cone.PD and _is_projection(b) and sigma.f.f_at_0 <= 1e-12:
        formula = float(transpose(sigma.f)(1 / max_lambda_compression(a, b)))
        result["projection_formula"] = formula
        dev = abs(formula - norm)
        checks.append(
            _check("projection_norm", "||A s P|| = f°(1 / max{lam : lam P <= P A^-1 P})", dev <= 1e-5, dev, 1e-5)
        )
    emit(cfg, checks, result, started)
    return 0 if all(c["passed"] for c in checks) else 1


def cmd_check_order(args, started) -> int:
    sigma = load_mean(args.mean)
    a, b = load_matrix(args.A), load_matrix(args.B)
    if a.shape != b.shape:
        raise SchemaError("A and B must have the same size")
    cfg = RunConfig("check-order", sigma.label, a.shape[0], 1, _seed(args.seed), args.out)
    a, b = require_pd(a, "A"), require_pd(b, "B")
    direct = loewner_leq(a, b)
    by_norms = order_from_projection_norms(sigma, a, b)
    result = {"loewner_leq": direct, "by_projection_norms": by_norms}
    checks = [
        _check("order_by_projections", "A <= B iff ||A s P|| <= ||B s P|| for P in AW*(I, A^-1 - B^-1)",
               direct == by_norms, float(direct != by_norms), 0.0)
    ]
    if not direct:
        w = order_witness(sigma, a, b)
        result["witness"] = {
            "P": matrix_to_json(w.projection.matrix),
            "eps": w.eps,
            "norm_a": w.norm_a,
            "norm_b": w.norm_b,
            "compression_gap": w.compression_gap,
        }
        ok = w.compression_gap >= -1e-12 and w.norm_b < w.norm_a
        checks.append(
            _check("order_witness", "P_eps A^-1 P_eps + eps P_eps <= P_eps B^-1 P_eps", ok,
                   max(0.0, -w.compression_gap), 0.0)
        )
    emit(cfg, checks, result, started)
    return 0 if all(c["passed"] for c in checks) else 1


def _records(records) -> list[dict]:
    return [r.to_json() for r in records]


def _first_witness(obj: dict) -> dict:
    """A bare witness, or the first witness found in a report."""
    if "check" in obj and "inputs" in obj:
        return obj
    for key in ("checks", "stages"):
        for rec in obj.get(key, []):
            if rec.get("witness"):
                return rec["witness"]
    raise SchemaError("no witness found in replay file")


def _replay_battery(args, cmd, started) -> int:
    obj = _read_json(args.replay)
    witness = _first_witness(obj)
    sigma = load_mean(args.mean) if args.mean else None
    cfg = RunConfig(cmd, sigma.label if sigma else witness.get("mean"), args.dim, 1, _seed(args.seed), args.out,
                    {"replay": witness["check"]})
    try:
        dev = replay_check(witness, sigma)
    except KeyError as exc:
        raise SchemaError(str(exc)) from exc
    thr = next((r.get("threshold") for r in obj.get("checks", []) if r.get("witness") == witness), None)
    result = {"check": witness["check"], "deviation": dev, "threshold": thr}
    reproduced = thr is None or not dev <= thr
    emit(cfg, [_check(f"replay/{witness['check']}", "witness replay", reproduced, dev, thr or 0.0)], result, started)
    return 0 if reproduced else 1


def cmd_check_mean_axioms(args, started) -> int:
    if args.replay:
        return _replay_battery(args, "check-mean-axioms", started)
    sigma = load_mean(args.mean)
    cfg = RunConfig("check-mean-axioms", sigma.label, args.dim, args.trials, _seed(args.seed), args.out)
    checks = _records(mean_axioms(sigma, cfg.dim, cfg.trials, cfg.seed))
    emit(cfg, checks, None, started)
    return 0 if all(c["passed"] for c in checks) else 1


def cmd_verify(args, started) -> int:
    if args.replay:
        return _replay_battery(args, f"verify {args.suite}", started)
    key = SUITE_ALIASES.get(args.suite, args.suite)
    if key not in SUITES:
        raise SchemaError(f"unknown suite {args.suite!r}")
    sigma = load_mean(args.mean or "geometric")
    cfg = RunConfig(f"verify {args.suite}", sigma.label, args.dim, args.trials, _seed(args.seed), args.out,
                    {"suite": key})
    checks = _records(SUITES[key](sigma, cfg.dim, cfg.trials, cfg.seed))
    emit(cfg, checks, None, started)
    return 0 if all(c["passed"] for c in checks) else 1


def _load_map(src: str, dim: int | None):
    obj = _read_json(src)
    phi = map_from_json(obj, dim)
    if phi.dim > MAX_DIM:
        raise SchemaError(f"maps are capped at n = {MAX_DIM}")
    return phi


def cmd_preserver_run(args, started) -> int:
    if args.replay:
        return _replay_preserver(args, started)
    if args.map is None:
        raise SchemaError("--map is required")
    sigma = load_mean(args.mean or "geometric")
    phi = _load_map(args.map, args.dim)
    cfg = RunConfig("preserver run", sigma.label, phi.dim, args.trials, _seed(args.seed), args.out)
    report = run_pipeline(phi, sigma, PipelineConfig(trials=cfg.trials, seed=cfg.seed))
    checks = [
        _check(s.name, s.anchor, s.passed, s.max_deviation if np.isfinite(s.max_deviation) else 1e300,
               s.threshold, s.witness, status=s.status, notes=s.notes)
        for s in report.stages
    ]
    result = report.to_json()
    result.pop("stages")
    if report.jordan is not None:
        result["jordan"] = {
            "form": report.jordan.form,
            "linear_residual": report.jordan.linear_residual,
            "cond": report.jordan.cond,
        }
    emit(cfg, checks, result, started)
    return {"certified_jordan": 0, "rejected": 1}.get(report.overall, EXIT_INCONCLUSIVE)


def _replay_preserver(args, started) -> int:
    obj = _read_json(args.replay)
    witness = _first_witness(obj)
    res = obj.get("result", {})
    map_src = args.map if args.map is not None else json.dumps(res.get("map")) if res.get("map") else None
    if map_src is None:
        raise SchemaError("replay needs --map or a report carrying its map spec")
    sigma = load_mean(args.mean or res.get("mean") or obj.get("config", {}).get("mean") or "geometric")
    phi = _load_map(map_src, args.dim or res.get("dim"))
    cfg = RunConfig("preserver run", sigma.label, phi.dim, 1, _seed(args.seed), args.out,
                    {"replay": witness["check"]})
    try:
        dev, thr = replay_witness(witness, phi, sigma)
    except KeyError as exc:
        raise SchemaError(str(exc)) from exc
    reproduced = not dev <= thr
    result = {"check": witness["check"], "deviation": dev, "threshold": thr}
    emit(cfg, [_check(f"replay/{witness['check']}", "witness replay", reproduced, dev, thr)], result, started)
    return 0 if reproduced else 1


def cmd_measure_equivalence(args, started) -> int:
    m = DiscreteMeasure.from_json(_read_json(args.measure))
    sigma = MeanDescriptor(from_measure(m, name=f"measure:{Path(args.measure).stem}"))
    cfg = RunConfig("measure check-equivalence", sigma.label, args.dim, args.trials, _seed(args.seed), args.out)
    checks = []
    if args.mean:
        target = load_mean(args.mean)
        x = PROBE_GRID
        dev = float(np.max(np.abs(target.f(x) - sigma.f(x)) / np.abs(target.f(x))))
        checks.append(_check("represents_mean", f"measure represents {target.label}", dev <= 1e-9, dev, 1e-9))
    rng = np.random.default_rng(cfg.seed)
    worst, witness = 0.0, None
    for _ in range(cfg.trials):
        a, b = random_pd(rng, cfg.dim), random_pd(rng, cfg.dim)
        s = mean_spectral(sigma, a, b)
        dev = operator_norm(s - mean_quadrature(sigma, a, b)) / operator_norm(s)
        if dev > worst:
            worst = dev
            if dev > 1e-8:
                witness = {
                    "check": "route_equivalence",
                    "mean": None,
                    "inputs": {"A": matrix_to_json(a), "B": matrix_to_json(b)},
                    "params": {"measure": m.to_json()},
                }
    checks.append(
        _check("route_equivalence", "integral representation vs spectral formula", worst <= 1e-8, worst, 1e-8,
               witness)
    )
    emit(cfg, checks, {"measure": m.to_json()}, started)
    return 0 if all(c["passed"] for c in checks) else 1


# --- parser ------------------------------------------------------------------------


def _common(p, *, dim=True, trials=True, replay=False):
    p.add_argument("--mean", help="catalog name (arithmetic, geometric, harmonic, logarithmic, power:<p>) "
                                  "or a measure JSON file")
    if dim:
        p.add_argument("--dim", type=int, default=4, help="matrix size n (1..16)")
    if trials:
        p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=None, help="defaults to $KAM_SEED, else 42")
    p.add_argument("--out", help="also write the JSON report here")
    if replay:
        p.add_argument("--replay", metavar="WITNESS_JSON", help="re-run the sample stored in a witness or report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kam", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"kam {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    for verb, fn, help_ in [
        ("mean", cmd_mean, "evaluate A s B"),
        ("norm-mean", cmd_norm_mean, "||A s B|| for PSD arguments via the epsilon ladder"),
        ("check-order", cmd_check_order, "compare A <= B with the projection-norm criterion"),
    ]:
        p = sub.add_parser(verb, help=help_)
        p.add_argument("A")
        p.add_argument("B")
        _common(p, dim=False, trials=False)
        p.set_defaults(fn=fn)

    p = sub.add_parser("check-mean-axioms", help="connection axioms on random samples")
    _common(p, replay=True)
    p.set_defaults(fn=cmd_check_mean_axioms)

    p = sub.add_parser("verify", help="run a property battery")
    p.add_argument("suite", help="one of: " + ", ".join(list(SUITES) + list(SUITE_ALIASES)))
    _common(p, replay=True)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("preserver", help="norm-preserver pipeline")
    psub = p.add_subparsers(dest="action", required=True)
    r = psub.add_parser("run", help="run the stage pipeline on a map spec")
    r.add_argument("--map", help="map spec JSON file or inline object")
    r.add_argument("--mean")
    r.add_argument("--dim", type=int, default=None)
    r.add_argument("--trials", type=int, default=20)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--out")
    r.add_argument("--replay", metavar="WITNESS_JSON")
    r.set_defaults(fn=cmd_preserver_run)

    p = sub.add_parser("measure", help="Loewner measure utilities")
    msub = p.add_subparsers(dest="action", required=True)
    e = msub.add_parser("check-equivalence", help="integral route vs spectral route for a measure")
    e.add_argument("measure", help="measure JSON: {alpha, beta, atoms: [[t, w], ...]}")
    _common(e)
    e.set_defaults(fn=cmd_measure_equivalence)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        if getattr(args, "dim", None) is not None and not 1 <= args.dim <= MAX_DIM:
            raise SchemaError(f"dim must be in [1, {MAX_DIM}], got {args.dim}")
        return args.fn(args, started)
    except KamError as exc:
        print(json.dumps({"error": str(exc), "type": type(exc).__name__}, sort_keys=True), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
