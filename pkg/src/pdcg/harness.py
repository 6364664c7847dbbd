"""Problem generation, reference solving, and experiment orchestration.

Everything is synthetic and seeded: a config plus a seed determines the
problem instance, the run, and the serialized trace byte-for-byte.
Traces are written as CSV (fixed column set, 17 significant digits) or
JSON (same record fields plus a header with the config echo, geometry
constants and termination reason).
"""

from __future__ import annotations

import dataclasses
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .algorithms import (
    ALGORITHMS,
    FixedOneOverT,
    FixedTwoOverTPlusOne,
    LineSearch,
    RunResult,
    SqrtDecay,
    StepSchedule,
    gcg_step,
    init_state,
    resolve_initial_dual,
    run,
    step_size,
)
from .certificates import (
    GeometryConstants,
    domain_radius_delta2,
    dual_objective,
    duality_gap,
    estimate_r2,
    primal_objective,
)
from .core import (
    ConfigurationError,
    LinearOperator,
    ProblemInstance,
    validate_instance,
)
from .functions import (
    Box,
    DualNormGauge,
    Hinge,
    LeastAbsoluteDeviation,
    Logistic,
    NegativeEntropySimplex,
    SquaredL2,
    SquaredL2Box,
)

LOSS_KINDS = ("hinge", "lad", "logistic", "gauge")
REGULARIZER_KINDS = ("squared_l2", "squared_l2_box", "entropy")
SCHEDULE_NAMES = ("two-over-t-plus-one", "one-over-t", "line-search", "sqrt-decay")

CSV_HEADER = "t,rho,primal,dual,gap,avg_primal,dual_subopt,bregman_ref"

THREADS_ENV = "PDCG_THREADS"


# ---------------------------------------------------------------------------
# Experiment configuration


@dataclass
class ExperimentConfig:
    """Flat, JSON-serializable description of one experiment."""

    loss: str = "hinge"
    regularizer: str = "squared_l2"
    n: int = 100
    p: int = 20
    mu: float = 1.0
    scale: Optional[float] = None  # None -> 1/n
    gauge_omega0: float = 1.0
    gauge_lambda: float = 0.0
    box_lower: float = 0.0
    box_upper: float = 1.0
    seed: int = 0
    algorithm: str = "gcg"
    schedule: str = "two-over-t-plus-one"
    max_iters: int = 1000
    gap_tol: float = 0.0
    output_format: str = "csv"
    output_path: Optional[str] = None
    reference_budget: int = 100000

    def validate(self) -> "ExperimentConfig":
        if self.loss not in LOSS_KINDS:
            raise ConfigurationError(f"loss must be one of {LOSS_KINDS}, got {self.loss!r}")
        if self.regularizer not in REGULARIZER_KINDS:
            raise ConfigurationError(
                f"regularizer must be one of {REGULARIZER_KINDS}, got {self.regularizer!r}"
            )
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(
                f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}"
            )
        if self.schedule not in SCHEDULE_NAMES:
            raise ConfigurationError(
                f"schedule must be one of {SCHEDULE_NAMES}, got {self.schedule!r}"
            )
        if self.n < 1 or self.p < 1:
            raise ConfigurationError("n and p must be positive")
        if self.max_iters < 0:
            raise ConfigurationError("max_iters must be nonnegative")
        if self.output_format not in ("csv", "json"):
            raise ConfigurationError("output_format must be 'csv' or 'json'")
        if self.regularizer == "entropy" and self.mu != 1.0:
            raise ConfigurationError("the entropy regularizer has modulus 1; set mu = 1")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data).validate()

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"invalid config JSON in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError("config file must contain a JSON object")
        return cls.from_dict(data)

    def dump(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


# ---------------------------------------------------------------------------
# Problem generation


def generate_problem_with_truth(config: ExperimentConfig, seed: Optional[int] = None):
    """Seeded synthetic instance plus generator metadata.

    Classification losses use rows drawn from two unit-variance Gaussian
    clusters at +-0.5/sqrt(p) with matching labels; the least-absolute-
    deviation loss uses Gaussian rows, a planted primal point and sparse
    outliers.  Features are scaled by 1/sqrt(n) so column norms are O(1).
    The metadata dict records what was planted (labels, x_true, outlier
    indices and mass) for oracle-style tests.
    """
    config.validate()
    n, p = config.n, config.p
    rng = np.random.default_rng(config.seed if seed is None else seed)
    scale = config.scale if config.scale is not None else 1.0 / n
    info: dict = {"scale": scale}

    if config.regularizer == "entropy":
        regularizer = NegativeEntropySimplex(p)
    elif config.regularizer == "squared_l2_box":
        if not config.box_lower < config.box_upper:
            raise ConfigurationError("box_lower must be strictly below box_upper")
        regularizer = SquaredL2Box(
            config.mu, np.full(p, config.box_lower), np.full(p, config.box_upper)
        )
    else:
        regularizer = SquaredL2(config.mu, p)

    if config.loss in ("hinge", "logistic"):
        labels = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        center = 0.5 / np.sqrt(p)
        a = (rng.standard_normal((n, p)) + labels[:, None] * center) / np.sqrt(n)
        loss = Hinge(labels, scale) if config.loss == "hinge" else Logistic(labels, scale)
        info["labels"] = labels
    elif config.loss == "lad":
        a = rng.standard_normal((n, p)) / np.sqrt(n)
        if config.regularizer == "entropy":
            x_true = rng.dirichlet(np.ones(p))
        elif config.regularizer == "squared_l2_box":
            x_true = rng.uniform(config.box_lower, config.box_upper, size=p)
        else:
            x_true = rng.standard_normal(p)
        k = max(1, n // 10)
        outlier_idx = rng.choice(n, size=k, replace=False)
        amplitudes = 5.0 * rng.standard_normal(k)
        targets = a @ x_true
        targets[outlier_idx] += amplitudes
        loss = LeastAbsoluteDeviation(targets, scale)
        info.update(
            x_true=x_true,
            outlier_indices=np.sort(outlier_idx),
            outlier_mass=scale * float(np.sum(np.abs(amplitudes))),
        )
    else:  # gauge
        a = rng.standard_normal((n, p)) / np.sqrt(n)
        loss = DualNormGauge(n, config.gauge_omega0, config.gauge_lambda)

    problem = validate_instance(ProblemInstance(LinearOperator(a), regularizer, loss))
    return problem, info


def generate_problem(config: ExperimentConfig, seed: Optional[int] = None) -> ProblemInstance:
    """Deterministic synthetic instance for a config (see _with_truth)."""
    return generate_problem_with_truth(config, seed)[0]


# ---------------------------------------------------------------------------
# Reference solving


@dataclass
class ReferenceSolution:
    """A primal-dual pair whose duality gap certifies its own quality.

    ``certified_gap`` is the gap achieved at (x_star, y_star); the pair
    is ``certified`` when that gap meets the requested tolerance.  The
    primal and dual objective values at the pair bracket the optimum.
    """

    x_star: np.ndarray
    y_star: np.ndarray
    certified_gap: float
    iterations: int
    certified: bool
    primal_value: float
    dual_value: float


def _loss_conj_grad(loss, y: np.ndarray) -> np.ndarray:
    """Gradient of f* on the interior of C (linear losses: constant)."""
    if isinstance(loss, Hinge):
        return loss.labels.copy()
    if isinstance(loss, LeastAbsoluteDeviation):
        return loss.targets.copy()
    if isinstance(loss, Logistic):
        g = np.clip(-y * loss.labels / loss.scale, 1e-12, 1.0 - 1e-12)
        return -loss.labels * np.log(g / (1.0 - g))
    raise ConfigurationError(f"no smooth dual model for {type(loss).__name__}")


def _loss_conj_hess_diag(loss, y: np.ndarray) -> np.ndarray:
    if isinstance(loss, (Hinge, LeastAbsoluteDeviation)):
        return np.zeros(loss.dim)
    if isinstance(loss, Logistic):
        g = np.clip(-y * loss.labels / loss.scale, 1e-12, 1.0 - 1e-12)
        return 1.0 / (loss.scale * g * (1.0 - g))
    raise ConfigurationError(f"no smooth dual model for {type(loss).__name__}")


def _reg_conj_hess(reg, z: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Hessian of h* at z (x = (h*)'(z) is passed to reuse the softmax)."""
    if isinstance(reg, SquaredL2):
        return np.eye(reg.dim) / reg.mu
    if isinstance(reg, NegativeEntropySimplex):
        return np.diag(x) - np.outer(x, x)
    raise ConfigurationError(f"no smooth dual model for {type(reg).__name__}")


def _polish_box_dual(problem: ProblemInstance, y: np.ndarray, tol: float, max_iter: int):
    """Active-set projected Newton ascent on the dual over a box C.

    The conditional-gradient warm start gets within zigzag range of the
    optimum; this stage identifies the active face and solves the
    remaining smooth concave program to gap <= tol.  Used only as a
    reference engine; the returned pair is certified by its gap, not by
    this procedure.
    """
    op, reg, loss = problem.operator, problem.regularizer, problem.loss
    box = loss.dual_domain
    lo, hi = box.lower, box.upper
    widths = np.maximum(box.widths, 1e-300)
    y = np.clip(y, lo, hi)
    if isinstance(loss, Logistic):
        margin = 1e-12 * widths
        y = np.clip(y, lo + margin, hi - margin)
    best_y = y.copy()
    best_gap = duality_gap(problem, reg.conj_grad(-op.adjoint_apply(y)), y)
    used = 0
    for k in range(max_iter):
        used = k + 1
        z = -op.adjoint_apply(y)
        x = reg.conj_grad(z)
        gap = duality_gap(problem, x, y)
        if gap < best_gap:
            best_gap, best_y = gap, y.copy()
        if gap <= tol:
            break
        grad = op.apply(x) - _loss_conj_grad(loss, y)
        at_lo = (y - lo) <= 1e-12 * widths
        at_hi = (hi - y) <= 1e-12 * widths
        free = ~((at_lo & (grad <= 0.0)) | (at_hi & (grad >= 0.0)))
        direction = np.zeros_like(y)
        if np.any(free):
            hess = -(op.matrix @ _reg_conj_hess(reg, z, x) @ op.matrix.T)
            hess[np.diag_indices_from(hess)] -= _loss_conj_hess_diag(loss, y)
            sub = -hess[np.ix_(free, free)]
            sub[np.diag_indices_from(sub)] += 1e-12 * (1.0 + np.trace(sub) / sub.shape[0])
            try:
                d = np.linalg.solve(sub, grad[free])
            except np.linalg.LinAlgError:
                d = np.linalg.lstsq(sub, grad[free], rcond=None)[0]
            direction[free] = d
        q0 = dual_objective(problem, y)

        def _try(step_dir):
            alpha = 1.0
            for _ in range(60):
                cand = np.clip(y + alpha * step_dir, lo, hi)
                if isinstance(loss, Logistic):
                    cand = np.clip(cand, lo + 1e-15 * widths, hi - 1e-15 * widths)
                if dual_objective(problem, cand) > q0:
                    return cand
                alpha *= 0.5
            return None

        nxt = _try(direction) if np.any(free) else None
        if nxt is None:
            nxt = _try(grad)
        if nxt is None:
            break
        y = nxt
    return best_y, best_gap, used


def reference_solution(problem: ProblemInstance, tol: float = 1e-9, cap: int = 10**6) -> ReferenceSolution:
    """High-accuracy primal-dual pair, certified by its duality gap.

    Warm-starts with the line-search conditional gradient, then (for box
    dual domains) switches to an active-set Newton polish; the best pair
    seen is kept.  If the gap tolerance is not reached within the
    budget, the result is returned marked uncertified rather than
    raising.  x_star is always recomputed as (h*)'(-A^T y_star).
    """
    validate_instance(problem, require_strong_convexity=True)
    op, reg = problem.operator, problem.regularizer
    r2, _ = estimate_r2(problem.loss, op, "diameter")
    schedule = LineSearch(mu=reg.mu, r2=r2)
    state = init_state(problem, resolve_initial_dual(problem))
    loss = problem.loss
    best_y = state.y.copy()
    best_gap = duality_gap(problem, state.x, best_y)
    iters = 0
    warm = min(cap, 500)
    for t in range(1, warm + 1):
        primal = reg.value(state.x) + loss.value(state.ax)
        dual = -reg.conj_value(state.carried_h_sub) - loss.conj_value(state.y)
        gap = max(primal - dual, 0.0)
        if gap < best_gap:
            best_gap, best_y = gap, state.y.copy()
        if gap <= tol:
            break
        state = gcg_step(problem, state, step_size(schedule, t, current_gap=gap))
        iters = t
    if best_gap > tol and iters < cap and isinstance(loss.dual_domain, Box):
        y_pol, gap_pol, used = _polish_box_dual(
            problem, best_y, tol, max_iter=min(200, cap - iters)
        )
        iters += used
        if gap_pol < best_gap:
            best_gap, best_y = gap_pol, y_pol
    x_star = reg.conj_grad(-op.adjoint_apply(best_y))
    certified_gap = duality_gap(problem, x_star, best_y)
    return ReferenceSolution(
        x_star=x_star,
        y_star=best_y,
        certified_gap=certified_gap,
        iterations=iters,
        certified=bool(certified_gap <= tol),
        primal_value=primal_objective(problem, x_star),
        dual_value=dual_objective(problem, best_y),
    )


# ---------------------------------------------------------------------------
# Schedules and experiment assembly


def build_schedule(config: ExperimentConfig, problem: ProblemInstance) -> StepSchedule:
    """Schedule object for a config, computing R^2/delta^2 where needed."""
    name = config.schedule
    if name == "two-over-t-plus-one":
        return FixedTwoOverTPlusOne()
    if name == "one-over-t":
        return FixedOneOverT()
    if name == "line-search":
        r2, _ = estimate_r2(problem.loss, problem.operator, "diameter")
        return LineSearch(mu=problem.regularizer.mu, r2=r2)
    if name == "sqrt-decay":
        r2, _ = estimate_r2(problem.loss, problem.operator, "origin")
        delta2 = domain_radius_delta2(
            problem.regularizer, problem.regularizer.interior_point()
        )
        return SqrtDecay(delta=float(np.sqrt(delta2)), radius=float(np.sqrt(r2)))
    raise ConfigurationError(f"unknown schedule {name!r}")


def run_experiment(config: ExperimentConfig, reference=None) -> RunResult:
    """Generate the instance, build the schedule, and run."""
    config.validate()
    problem = generate_problem(config)
    schedule = build_schedule(config, problem)
    return run(
        problem,
        config.algorithm,
        schedule,
        max_iters=config.max_iters,
        gap_tol=config.gap_tol,
        reference=reference,
    )


# ---------------------------------------------------------------------------
# Trace serialization


def _fmt(v: Optional[float]) -> str:
    return "" if v is None else format(float(v), ".17g")


def trace_csv(result: RunResult) -> str:
    """CSV text for a trace: fixed header plus one row per iteration."""
    lines = [CSV_HEADER]
    for rec in result.trace:
        lines.append(
            ",".join(
                (
                    str(rec.t),
                    _fmt(rec.rho),
                    _fmt(rec.primal_value),
                    _fmt(rec.dual_value),
                    _fmt(rec.gap),
                    _fmt(rec.avg_primal_value),
                    _fmt(rec.dual_suboptimality),
                    _fmt(rec.bregman_to_ref),
                )
            )
        )
    return "\n".join(lines) + "\n"


def trace_json_obj(
    result: RunResult,
    config: Optional[ExperimentConfig] = None,
    geometry: Optional[GeometryConstants] = None,
) -> dict:
    """JSON object mirroring the CSV fields plus a header."""
    header = {
        "algorithm": result.algorithm,
        "schedule": result.schedule.name,
        "termination": result.termination,
        "iterations": len(result.trace),
        "config": config.to_dict() if config is not None else None,
        "geometry": None
        if geometry is None
        else {
            "r2_primal": geometry.r2_primal,
            "r2_origin": geometry.r2_origin,
            "mode": geometry.mode,
            "delta2": geometry.delta2,
        },
    }
    records = [
        {
            "t": rec.t,
            "rho": rec.rho,
            "primal": rec.primal_value,
            "dual": rec.dual_value,
            "gap": rec.gap,
            "avg_primal": rec.avg_primal_value,
            "dual_subopt": rec.dual_suboptimality,
            "bregman_ref": rec.bregman_to_ref,
        }
        for rec in result.trace
    ]
    return {"header": header, "records": records}


def emit_trace(
    result: RunResult,
    output_format: str,
    path: str,
    config: Optional[ExperimentConfig] = None,
    geometry: Optional[GeometryConstants] = None,
) -> None:
    """Write a trace to ``path`` as CSV or JSON."""
    if output_format == "csv":
        text = trace_csv(result)
    elif output_format == "json":
        text = json.dumps(trace_json_obj(result, config, geometry), indent=1) + "\n"
    else:
        raise ConfigurationError(f"unknown output format {output_format!r}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# Sweeps


def thread_budget() -> int:
    """Worker cap for sweeps: PDCG_THREADS if set, else the machine cores."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        val = int(raw)
    except ValueError as exc:
        raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if val < 1:
        raise ConfigurationError(f"{THREADS_ENV} must be >= 1")
    return val


def sweep_cells(config: ExperimentConfig, schedules, seeds, out_dir: str):
    """One (config, output path) pair per grid cell."""
    cells = []
    for sched in schedules:
        for seed in seeds:
            cfg = dataclasses.replace(config, schedule=sched, seed=int(seed))
            cfg.validate()
            name = f"trace_{sched}_{seed}.{cfg.output_format}"
            cells.append((cfg, os.path.join(out_dir, name)))
    return cells


def _run_cell(payload) -> str:
    cfg_dict, path = payload
    cfg = ExperimentConfig.from_dict(cfg_dict)
    result = run_experiment(cfg)
    emit_trace(result, cfg.output_format, path, config=cfg)
    return path


def run_sweep(config: ExperimentConfig, schedules, seeds, out_dir: str, workers: Optional[int] = None):
    """Run the grid; cells are independent, so order never affects bytes."""
    os.makedirs(out_dir, exist_ok=True)
    cells = sweep_cells(config, schedules, seeds, out_dir)
    payloads = [(cfg.to_dict(), path) for cfg, path in cells]
    workers = thread_budget() if workers is None else workers
    if workers <= 1 or len(payloads) <= 1:
        return [_run_cell(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=min(workers, len(payloads))) as pool:
        return list(pool.map(_run_cell, payloads))
