"""Configuration-driven experiment harness.

Reads a flat ``key = value`` config (documented in the README; one canonical
example ships under ``configs/``), runs repeated estimator realizations per
depth against a reference oracle, and writes three CSV files:

* ``results.csv``: one row per (n, M) with mean/SE, RMSE against the
  reference, the a priori error bound, and the tallied cost next to its
  recursion bound;
* ``raw.csv``: one row per replication with the full cost ledger;
* ``bounds.csv``: the bound evaluations alone.

Outputs are byte-identical for identical configs regardless of the worker
count: replication results are keyed by seed and assembled after a
deterministic sort.  Wall-clock timings are reported on stdout only; they
are the one quantity that would break byte-level reproducibility.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bounds import error_bound, total_cost_bound
from .mlp import CostTally, MlpParams, cost_recursion_bound, estimate
from .oracle import (
    BaselineBudget,
    OracleError,
    Reference,
    closed_form,
    mc_baseline,
    picard_quadrature_1d,
)
from .problems import Problem, instantiate, validate

RESULTS_HEADER = [
    "n", "M", "N", "value_mean", "value_se", "rmse_vs_reference",
    "reference_value", "reference_ci_halfwidth", "reference_ci_flag",
    "theoretical_error_bound", "tallied_cost", "cost_recursion_bound",
]
RAW_HEADER = [
    "n", "M", "N", "seed", "value", "uniforms", "gaussians", "euler_steps",
    "g_evals", "f_evals", "weighted_cost",
]
BOUNDS_HEADER = ["n", "M", "N", "error_bound", "cost_recursion_bound"]
SWEEP_HEADER = [
    "epsilon", "status", "n_star", "rmse", "rmse_plus_2se", "cost_sum",
    "total_cost_bound", "cost_times_eps_power", "tripped_bound",
]

_PROBLEM_OVERRIDE_KEYS = ("d", "T", "a", "kappa", "lip_f", "source",
                          "mu_bar", "sigma_bar", "strike")

_KNOWN_KEYS = {
    "problem", "t0", "x0", "depths", "euler_steps", "replications", "seed",
    "reference", "reference_n", "reference_m", "reference_steps",
    "reference_replications", "reference_seed", "cost_weights",
    "cost_ceiling", "cache_dir", "output_dir", "workers", "max_depth",
    *_PROBLEM_OVERRIDE_KEYS,
}

OUTPUT_DIR_ENV = "MLPICARD_OUTPUT_DIR"


class ConfigError(ValueError):
    """Carries the complete list of config violations, not just the first."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid config:\n  " + "\n  ".join(self.violations))


@dataclass
class ExperimentConfig:
    problem: str
    overrides: dict = field(default_factory=dict)
    t0: float = 0.0
    x0: Optional[np.ndarray] = None  # None means the origin in dimension d
    depths: list = field(default_factory=lambda: [(1, 1), (2, 2), (3, 3)])
    euler_override: Optional[int] = None
    replications: int = 32
    seed: int = 0
    reference: str = "auto"  # auto | closed-form | picard | mc-baseline
    reference_budget: Optional[BaselineBudget] = None
    reference_seed: int = 777
    cost_weights: tuple = (1.0, 1.0, 1.0, 1.0)
    cost_ceiling: float = 1.0e12
    cache_dir: str = "cache"
    output_dir: str = "out"
    workers: int = 1
    max_depth: int = 8

    @property
    def dimension(self) -> int:
        return int(self.overrides.get("d", 1))

    def resolved_steps(self, M: int) -> int:
        return self.euler_override if self.euler_override is not None else M**M

    def query_point(self) -> np.ndarray:
        if self.x0 is None:
            return np.zeros(self.dimension)
        return self.x0

    def build_problem(self) -> Problem:
        return instantiate(self.problem, **self.overrides)


@dataclass
class ReportRow:
    n: int
    M: int
    N: int
    value_mean: float
    value_se: float
    rmse_vs_reference: float
    rmse_se: float
    reference_value: float
    reference_ci: float
    theoretical_error_bound: float
    tallied_cost: float
    cost_recursion_bound: float
    wall_time_seconds: float

    @property
    def reference_ci_flag(self) -> str:
        # flag rows where the reference uncertainty is non-negligible
        if self.rmse_vs_reference > 0 and self.reference_ci > 0.1 * self.rmse_vs_reference:
            return "wide-reference-ci"
        return "ok"


def _parse_scalar(value: str, caster, key: str, line_no: int, errors: list):
    try:
        return caster(value)
    except ValueError:
        errors.append(f"line {line_no}: key {key!r} has invalid value {value!r}")
        return None


def _parse_depths(value: str, line_no: int, errors: list):
    depths = []
    for chunk in value.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            if ":" in chunk:
                n_str, m_str = chunk.split(":", 1)
                depths.append((int(n_str), int(m_str)))
            else:
                n = int(chunk)
                depths.append((n, n))
        except ValueError:
            errors.append(f"line {line_no}: depth entry {chunk!r} is not 'n' or 'n:M'")
    return depths


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a flat key-value config document.

    Raises :class:`ConfigError` carrying every violation found: unknown or
    duplicate keys (duplicates name both lines), type mismatches, and
    invariant violations (replications, dimensions, cost ceiling).
    """
    errors: list = []
    seen: dict = {}
    entries: dict = {}
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {line_no}: expected 'key = value', got {raw_line.strip()!r}")
            continue
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key in seen:
            errors.append(f"duplicate key {key!r} on lines {seen[key]} and {line_no}")
            continue
        seen[key] = line_no
        if key not in _KNOWN_KEYS:
            errors.append(f"line {line_no}: unknown key {key!r}")
            continue
        entries[key] = (value, line_no)

    if "problem" not in entries and not any(v.startswith("line") and "'problem'" in v for v in errors):
        errors.append("missing required key 'problem'")

    cfg = ExperimentConfig(problem=entries.get("problem", ("", 0))[0])

    for key in _PROBLEM_OVERRIDE_KEYS:
        if key in entries:
            value, line_no = entries[key]
            caster = int if key == "d" else float
            parsed = _parse_scalar(value, caster, key, line_no, errors)
            if parsed is not None:
                cfg.overrides[key] = parsed

    if "t0" in entries:
        parsed = _parse_scalar(entries["t0"][0], float, "t0", entries["t0"][1], errors)
        if parsed is not None:
            cfg.t0 = parsed
    if "x0" in entries:
        value, line_no = entries["x0"]
        try:
            cfg.x0 = np.asarray([float(v) for v in value.split(",")], dtype=float)
        except ValueError:
            errors.append(f"line {line_no}: x0 must be a comma-separated float list")
    if "depths" in entries:
        cfg.depths = _parse_depths(entries["depths"][0], entries["depths"][1], errors)
    if "euler_steps" in entries:
        parsed = _parse_scalar(entries["euler_steps"][0], int, "euler_steps",
                               entries["euler_steps"][1], errors)
        if parsed is not None:
            cfg.euler_override = parsed
    for key, attr, caster in [
        ("replications", "replications", int), ("seed", "seed", int),
        ("cost_ceiling", "cost_ceiling", float), ("workers", "workers", int),
        ("max_depth", "max_depth", int), ("reference_seed", "reference_seed", int),
    ]:
        if key in entries:
            parsed = _parse_scalar(entries[key][0], caster, key, entries[key][1], errors)
            if parsed is not None:
                setattr(cfg, attr, parsed)
    for key, attr in [("reference", "reference"), ("cache_dir", "cache_dir"),
                      ("output_dir", "output_dir")]:
        if key in entries:
            setattr(cfg, attr, entries[key][0])
    if "cost_weights" in entries:
        value, line_no = entries["cost_weights"]
        parts = [p.strip() for p in value.split(",")]
        if len(parts) != 4:
            errors.append(f"line {line_no}: cost_weights needs exactly 4 values")
        else:
            try:
                cfg.cost_weights = tuple(float(p) for p in parts)
            except ValueError:
                errors.append(f"line {line_no}: cost_weights must be floats")
    budget_keys = [k for k in ("reference_n", "reference_m", "reference_steps",
                               "reference_replications") if k in entries]
    if budget_keys:
        if len(budget_keys) < 4:
            errors.append("mc-baseline budget needs all of reference_n, reference_m, "
                          "reference_steps, reference_replications")
        else:
            vals = {}
            for key in budget_keys:
                parsed = _parse_scalar(entries[key][0], int, key, entries[key][1], errors)
                if parsed is not None:
                    vals[key] = parsed
            if len(vals) == 4:
                try:
                    cfg.reference_budget = BaselineBudget(
                        n=vals["reference_n"], M=vals["reference_m"],
                        euler_steps=vals["reference_steps"],
                        replications=vals["reference_replications"])
                except ValueError as exc:
                    errors.append(str(exc))

    # environment override for the output directory
    cfg.output_dir = os.environ.get(OUTPUT_DIR_ENV, cfg.output_dir)

    _validate_config(cfg, errors)
    if errors:
        raise ConfigError(errors)
    return cfg


def _validate_config(cfg: ExperimentConfig, errors: list) -> None:
    if cfg.replications < 2:
        errors.append(f"replications must be >= 2 (standard errors need variance), got {cfg.replications}")
    if not cfg.depths:
        errors.append("depths must contain at least one entry")
    for n, M in cfg.depths:
        if n < 0 or M < 1:
            errors.append(f"depth ({n},{M}) violates n >= 0, M >= 1")
    if cfg.reference not in ("auto", "closed-form", "picard", "mc-baseline"):
        errors.append(f"unknown reference {cfg.reference!r}")
    if cfg.reference == "mc-baseline" and cfg.reference_budget is None:
        errors.append("reference = mc-baseline requires the reference_* budget keys")
    if cfg.x0 is not None and cfg.x0.shape != (cfg.dimension,):
        errors.append(f"x0 has dimension {cfg.x0.shape[0]}, problem has d = {cfg.dimension}")
    if cfg.problem:
        try:
            cfg.build_problem()
        except Exception as exc:
            errors.append(f"problem: {exc}")
    # every configured depth must pass the cost ceiling
    for n, M in cfg.depths:
        if n < 0 or M < 1:
            continue
        bound = cost_recursion_bound(n, M, cfg.dimension, cfg.resolved_steps(M), cfg.cost_weights)
        if bound > cfg.cost_ceiling:
            errors.append(
                f"depth ({n},{M}) exceeds the cost ceiling: "
                f"cost_recursion_bound = {bound:.6g} > {cfg.cost_ceiling:.6g}")


def resolve_reference(cfg: ExperimentConfig, problem: Problem) -> Reference:
    """Pick and evaluate the reference oracle for the configured query point."""
    x0 = cfg.query_point()
    kind = cfg.reference
    if kind == "auto":
        if problem.name in ("heat-quadratic", "linear-reaction"):
            kind = "closed-form"
        elif problem.d == 1 and problem.constant_coefficients is not None:
            kind = "picard"
        else:
            raise OracleError(
                f"no automatic reference for {problem.name!r}; configure mc-baseline")
    if kind == "closed-form":
        return closed_form(problem, cfg.t0, x0)
    if kind == "picard":
        return picard_quadrature_1d(problem, cfg.t0, x0)
    budget = cfg.reference_budget
    max_n = max(n for n, _ in cfg.depths)
    max_m = max(M for _, M in cfg.depths)
    max_steps = max(cfg.resolved_steps(M) for _, M in cfg.depths)
    if not (budget.n > max_n and budget.M > max_m and budget.euler_steps > max_steps):
        raise OracleError(
            "mc-baseline budget must strictly dominate every refereed configuration: "
            f"need n > {max_n}, M > {max_m}, steps > {max_steps}, got "
            f"({budget.n}, {budget.M}, {budget.euler_steps})")
    return mc_baseline(problem, cfg.t0, x0, budget, cfg.reference_seed, cfg.cache_dir)


def _replicate(task) -> tuple:
    """Worker entry: one estimator realization.  Importable for process pools."""
    problem_name, overrides, n, M, steps, seed, t0, x0 = task
    problem = instantiate(problem_name, **overrides)
    result = estimate(problem, MlpParams(n=n, M=M, euler_steps=steps, root_seed=seed),
                      (0,), t0, np.asarray(x0))
    return seed, result.value, result.cost.as_dict()


def _run_depth(cfg: ExperimentConfig, problem: Problem, n: int, M: int, pool) -> dict:
    steps = cfg.resolved_steps(M)
    x0 = cfg.query_point()
    tasks = [
        (cfg.problem, cfg.overrides, n, M, steps, cfg.seed + r, cfg.t0, tuple(x0))
        for r in range(cfg.replications)
    ]
    start = time.perf_counter()
    if pool is None:
        outcomes = [_replicate(task) for task in tasks]
    else:
        outcomes = list(pool.map(_replicate, tasks))
    wall = time.perf_counter() - start
    outcomes.sort(key=lambda item: item[0])
    values = np.array([item[1] for item in outcomes])
    tallies = []
    for _, _, raw in outcomes:
        tally = CostTally(**raw)
        tallies.append(tally)
    weighted = np.array([tl.weighted(*cfg.cost_weights) for tl in tallies])
    return {
        "n": n, "M": M, "N": steps, "values": values, "tallies": tallies,
        "weighted_costs": weighted, "wall": wall,
        "seeds": [item[0] for item in outcomes],
    }


def _report_row(cfg: ExperimentConfig, problem: Problem, depth_data: dict,
                reference: Reference) -> ReportRow:
    values = depth_data["values"]
    reps = len(values)
    sq_err = (values - reference.value) ** 2
    mse = float(sq_err.mean())
    rmse = math.sqrt(mse)
    if reps > 1 and rmse > 0:
        rmse_se = float(sq_err.std(ddof=1) / math.sqrt(reps) / (2.0 * rmse))
    else:
        rmse_se = 0.0
    bp = problem.bound_params(cfg.query_point())
    return ReportRow(
        n=depth_data["n"], M=depth_data["M"], N=depth_data["N"],
        value_mean=float(values.mean()),
        value_se=float(values.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0,
        rmse_vs_reference=rmse,
        rmse_se=rmse_se,
        reference_value=reference.value,
        reference_ci=reference.ci_halfwidth,
        theoretical_error_bound=error_bound(depth_data["n"], depth_data["M"], bp),
        tallied_cost=float(depth_data["weighted_costs"].mean()),
        cost_recursion_bound=cost_recursion_bound(
            depth_data["n"], depth_data["M"], problem.d, depth_data["N"], cfg.cost_weights),
        wall_time_seconds=depth_data["wall"],
    )


def _format_cell(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def emit_csv(header: list, rows: list, path: str) -> None:
    """Write rows as RFC-4180-style CSV: fixed header, 17-significant-digit
    decimal text for floats, LF line endings."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_format_cell(cell) for cell in row) + "\n")


def read_csv(path: str) -> tuple:
    """Round-trip reader for files written by :func:`emit_csv`."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().split("\n")
    lines = [ln for ln in lines if ln]
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    return header, rows


def run_experiment(cfg: ExperimentConfig):
    """Run every configured depth and write the three CSV reports.

    Returns ``(rows, reference, paths)`` with one :class:`ReportRow` per
    configured (n, M), in config order.
    """
    problem = cfg.build_problem()
    reference = resolve_reference(cfg, problem)
    pool = None
    rows = []
    raw_rows = []
    bound_rows = []
    try:
        if cfg.workers > 1:
            pool = ProcessPoolExecutor(max_workers=cfg.workers)
        for n, M in cfg.depths:
            depth_data = _run_depth(cfg, problem, n, M, pool)
            row = _report_row(cfg, problem, depth_data, reference)
            rows.append(row)
            for seed, value, tally, cost in zip(
                    depth_data["seeds"], depth_data["values"], depth_data["tallies"],
                    depth_data["weighted_costs"]):
                raw_rows.append([
                    n, M, depth_data["N"], seed, float(value), tally.uniforms,
                    tally.gaussians, tally.euler_steps, tally.g_evals, tally.f_evals,
                    float(cost),
                ])
            bound_rows.append([n, M, depth_data["N"], row.theoretical_error_bound,
                               row.cost_recursion_bound])
    finally:
        if pool is not None:
            pool.shutdown()

    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    paths = {
        "results": os.path.join(out, "results.csv"),
        "raw": os.path.join(out, "raw.csv"),
        "bounds": os.path.join(out, "bounds.csv"),
    }
    emit_csv(RESULTS_HEADER, [
        [r.n, r.M, r.N, r.value_mean, r.value_se, r.rmse_vs_reference,
         r.reference_value, r.reference_ci, r.reference_ci_flag,
         r.theoretical_error_bound, r.tallied_cost, r.cost_recursion_bound]
        for r in rows
    ], paths["results"])
    emit_csv(RAW_HEADER, raw_rows, paths["raw"])
    emit_csv(BOUNDS_HEADER, bound_rows, paths["bounds"])
    return rows, reference, paths


@dataclass
class SweepRow:
    epsilon: float
    status: str  # ok | cost-ceiling | max-depth
    n_star: int
    rmse: float
    rmse_plus_2se: float
    cost_sum: float
    total_cost_bound: float
    cost_times_eps_power: float
    tripped_bound: float
    depth_rows: list = field(default_factory=list)


def find_depth_for_epsilon(cfg: ExperimentConfig, epsilons, gamma: float = 1.0):
    """Empirical depth search: smallest n (with M = n) whose empirical RMSE
    plus a two-standard-error margin beats each target accuracy.

    Scans n = 1, 2, ... and stops at the configured cost ceiling or depth
    cap, emitting an explicit failure row instead of a result.  Depth runs
    are shared across targets (they are deterministic in the config).
    Reported cost is the per-realization mean of the weighted tally, summed
    over all depths up to n*.
    """
    if np.isscalar(epsilons):
        epsilons = [float(epsilons)]
    for eps in epsilons:
        if not (0.0 < eps <= 1.0):
            raise ValueError(f"epsilon must lie in (0, 1], got {eps}")
    problem = cfg.build_problem()
    reference = resolve_reference(cfg, problem)
    w_draw, w_step, w_g, w_f = cfg.cost_weights
    folded_m = w_step + problem.d * w_draw
    folded_f = w_draw + 2.0 * w_f

    depth_cache: dict = {}
    sweep_rows = []
    for eps in epsilons:
        n = 0
        row = None
        while True:
            n += 1
            if n > cfg.max_depth:
                row = SweepRow(epsilon=eps, status="max-depth", n_star=-1, rmse=math.nan,
                               rmse_plus_2se=math.nan, cost_sum=math.nan,
                               total_cost_bound=math.nan, cost_times_eps_power=math.nan,
                               tripped_bound=float(cfg.max_depth))
                break
            bound = cost_recursion_bound(n, n, problem.d, cfg.resolved_steps(n), cfg.cost_weights)
            if bound > cfg.cost_ceiling:
                row = SweepRow(epsilon=eps, status="cost-ceiling", n_star=-1, rmse=math.nan,
                               rmse_plus_2se=math.nan, cost_sum=math.nan,
                               total_cost_bound=math.nan, cost_times_eps_power=math.nan,
                               tripped_bound=bound)
                break
            if n not in depth_cache:
                depth_data = _run_depth(cfg, problem, n, n, None)
                depth_cache[n] = _report_row(cfg, problem, depth_data, reference)
            report = depth_cache[n]
            margin = report.rmse_vs_reference + 2.0 * report.rmse_se
            if margin < eps:
                cost_sum = sum(depth_cache[k].tallied_cost for k in range(1, n + 1))
                row = SweepRow(
                    epsilon=eps, status="ok", n_star=n,
                    rmse=report.rmse_vs_reference, rmse_plus_2se=margin,
                    cost_sum=cost_sum,
                    total_cost_bound=total_cost_bound(n, folded_m, w_g, folded_f),
                    cost_times_eps_power=cost_sum * eps ** (gamma + 4.0),
                    tripped_bound=0.0,
                )
                break
        row.depth_rows = [depth_cache[k] for k in sorted(depth_cache)]
        sweep_rows.append(row)
    return sweep_rows, reference


def write_sweep_csv(sweep_rows, path: str) -> None:
    emit_csv(SWEEP_HEADER, [
        [r.epsilon, r.status, r.n_star, r.rmse, r.rmse_plus_2se, r.cost_sum,
         r.total_cost_bound, r.cost_times_eps_power, r.tripped_bound]
        for r in sweep_rows
    ], path)


def validation_summary(name: str, samples: int, seed: int, overrides=None) -> tuple:
    """Run the hypothesis spot checks for a catalogue problem."""
    problem = instantiate(name, **(overrides or {}))
    report = validate(problem, samples, seed)
    return problem, report
