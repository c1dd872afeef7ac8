"""Monte-Carlo sweeps over the density or tightness axis.

A sweep fixes (n, alpha, k) and one of (p, r), walks a grid of the
other, generates `replicates` instances per grid point, solves each
exactly, and reports the empirical satisfiable fraction with a Wilson
interval.  Near the threshold this traces the finite-n phase
transition; the crossing of 0.5 estimates the critical point.

Reproducibility rules, in order of importance:

* every (point, replicate) task derives its instance seed by hashing
  (master_seed, point_index, replicate_index), so results do not depend
  on scheduling or parallelism width;
* timeouts are reported and excluded from the satisfiable fraction
  rather than counted as UNSAT (counting them would bias the curve
  toward 0 exactly where the solver struggles, i.e. near the
  threshold);
* a point whose timeout fraction exceeds 20% is marked aborted and
  keeps counts but no fraction; that wall is a hardness signal, not
  data.

The module also houses the Monte-Carlo cross-check that ties the
moment formulas to the generator: sample many small instances, count
solutions exactly, and compare mean(X) and mean(X^2) against the
sampled-mode formula values.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

from .errors import ConfigError
from .instances import generate
from .moments import EvalMode, log_first_moment, log_second_moment
from .solver import SolverConfig, Status, brute_force_count, solve
from .thresholds import (
    ModelParams,
    RoundingPolicy,
    derive_sizes,
    p_critical,
    r_critical,
)

__all__ = [
    "Axis",
    "SweepConfig",
    "PointResult",
    "SweepResult",
    "MomentCheck",
    "run_sweep",
    "estimate_crossing",
    "transition_window",
    "wilson_interval",
    "moment_empirical_check",
    "export_csv",
]

logger = logging.getLogger(__name__)

THREADS_ENV = "RB_LAB_THREADS"

# two-sided 95%
_WILSON_Z = 1.959963984540054


class Axis(Enum):
    R_AXIS = "r"
    P_AXIS = "p"


@dataclass(frozen=True)
class SweepConfig:
    """One sweep: fixed (n, alpha, k) and one of (p, r), grid on the other.

    `fixed` is the tightness p when axis is R_AXIS, the density r when
    axis is P_AXIS.  node_budget bounds each solve; max_workers of None
    defers to the RB_LAB_THREADS environment variable or a small
    default.
    """

    n: int
    alpha: float
    k: int
    axis: Axis
    fixed: float
    grid: tuple[float, ...]
    replicates: int
    master_seed: int
    node_budget: int = 10_000_000
    max_workers: int | None = None
    rounding: RoundingPolicy = RoundingPolicy.HALF_UP

    def __post_init__(self):
        if len(self.grid) < 1:
            raise ConfigError("grid must contain at least one point")
        if any(a >= b for a, b in zip(self.grid, self.grid[1:])):
            raise ConfigError("grid values must be strictly increasing")
        if self.replicates < 1:
            raise ConfigError(f"replicates must be >= 1, got {self.replicates}")
        if self.node_budget < 1:
            raise ConfigError(f"node_budget must be >= 1, got {self.node_budget}")
        if self.max_workers is not None and self.max_workers < 1:
            raise ConfigError(f"max_workers must be >= 1, got {self.max_workers}")

    def params_at(self, value: float) -> ModelParams:
        if self.axis is Axis.R_AXIS:
            return ModelParams(n=self.n, alpha=self.alpha, k=self.k, p=self.fixed, r=value)
        return ModelParams(n=self.n, alpha=self.alpha, k=self.k, p=value, r=self.fixed)


@dataclass(frozen=True)
class PointResult:
    axis_value: float
    n_sat: int
    n_unsat: int
    n_timeout: int
    replicates: int
    p_hat: float | None
    wilson_lo: float | None
    wilson_hi: float | None
    aborted: bool


@dataclass(frozen=True)
class SweepResult:
    config: SweepConfig
    points: tuple[PointResult, ...]
    crossing_estimate: float | None
    theoretical_threshold: float
    transition_window: float | None


def _task_seed(master_seed: int, point_index: int, replicate_index: int) -> int:
    h = hashlib.sha256(
        f"rblab.task:{master_seed}:{point_index}:{replicate_index}".encode("ascii")
    )
    return int.from_bytes(h.digest()[:8], "big")


def _sample_seed(master_seed: int, index: int) -> int:
    h = hashlib.sha256(f"rblab.sample:{master_seed}:{index}".encode("ascii"))
    return int.from_bytes(h.digest()[:8], "big")


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ConfigError("Wilson interval needs at least one trial")
    z2 = _WILSON_Z * _WILSON_Z
    phat = successes / trials
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2.0 * trials)) / denom
    half = (
        _WILSON_Z
        * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4.0 * trials * trials))
        / denom
    )
    return max(0.0, center - half), min(1.0, center + half)


def _resolve_workers(config: SweepConfig) -> int:
    width = config.max_workers
    if width is None:
        width = min(8, os.cpu_count() or 1)
    cap = os.environ.get(THREADS_ENV)
    if cap is not None:
        try:
            cap_val = int(cap)
        except ValueError:
            raise ConfigError(
                f"{THREADS_ENV} must be an integer, got {cap!r}"
            ) from None
        if cap_val < 1:
            raise ConfigError(f"{THREADS_ENV} must be >= 1, got {cap_val}")
        width = min(width, cap_val)
    return max(width, 1)


def run_sweep(config: SweepConfig) -> SweepResult:
    """Run the full sweep; deterministic in (config, master_seed).

    Tasks fan out over a thread pool but results are reduced in
    (point_index, replicate_index) order, so the output is identical at
    any parallelism width.
    """
    point_params = [config.params_at(v) for v in config.grid]
    for params in point_params:
        derive_sizes(params, config.rounding)  # reject bad grid points up front

    solver_cfg = SolverConfig(node_budget=config.node_budget)

    def work(task: tuple[int, int]) -> Status:
        point_index, replicate_index = task
        seed = _task_seed(config.master_seed, point_index, replicate_index)
        inst = generate(point_params[point_index], seed, config.rounding)
        return solve(inst, solver_cfg).status

    tasks = [
        (pi, ri)
        for pi in range(len(config.grid))
        for ri in range(config.replicates)
    ]
    width = _resolve_workers(config)
    if width == 1:
        statuses = [work(task) for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=width) as pool:
            statuses = list(pool.map(work, tasks))
    by_task = dict(zip(tasks, statuses))

    points = []
    for pi, value in enumerate(config.grid):
        tally = {Status.SAT: 0, Status.UNSAT: 0, Status.TIMEOUT: 0}
        for ri in range(config.replicates):
            tally[by_task[(pi, ri)]] += 1
        n_sat, n_unsat, n_timeout = (
            tally[Status.SAT],
            tally[Status.UNSAT],
            tally[Status.TIMEOUT],
        )
        if n_timeout:
            logger.warning(
                "sweep point %s=%.6g: %d/%d replicates timed out (excluded "
                "from the satisfiable fraction)",
                config.axis.value,
                value,
                n_timeout,
                config.replicates,
            )
        aborted = n_timeout > 0.20 * config.replicates
        decided = n_sat + n_unsat
        if aborted or decided == 0:
            if aborted:
                logger.warning(
                    "sweep point %s=%.6g aborted: timeout fraction %.2f "
                    "exceeds 20%%",
                    config.axis.value,
                    value,
                    n_timeout / config.replicates,
                )
            p_hat = lo = hi = None
            aborted = True
        else:
            p_hat = n_sat / decided
            lo, hi = wilson_interval(n_sat, decided)
        points.append(
            PointResult(
                axis_value=value,
                n_sat=n_sat,
                n_unsat=n_unsat,
                n_timeout=n_timeout,
                replicates=config.replicates,
                p_hat=p_hat,
                wilson_lo=lo,
                wilson_hi=hi,
                aborted=aborted,
            )
        )
    points = tuple(points)

    if config.axis is Axis.R_AXIS:
        threshold = r_critical(config.fixed)
    else:
        threshold = p_critical(config.fixed)
    result = SweepResult(
        config=config,
        points=points,
        crossing_estimate=_crossing_from_points(points),
        theoretical_threshold=threshold,
        transition_window=transition_window(points),
    )
    return result


def _crossing_from_points(points: tuple[PointResult, ...]) -> float | None:
    live = [pt for pt in points if not pt.aborted]
    for a, b in zip(live, live[1:]):
        pa, pb = a.p_hat, b.p_hat
        if (pa - 0.5) * (pb - 0.5) > 0:
            continue
        if pa == pb:
            if pa == 0.5:
                return 0.5 * (a.axis_value + b.axis_value)
            continue
        return a.axis_value + (0.5 - pa) * (b.axis_value - a.axis_value) / (pb - pa)
    return None


def estimate_crossing(result: SweepResult) -> float | None:
    """Axis value where the satisfiable fraction crosses 0.5.

    Linear interpolation on the first adjacent non-aborted pair whose
    fractions bracket 0.5; None when no pair brackets it.
    """
    return _crossing_from_points(result.points)


def transition_window(points: tuple[PointResult, ...]) -> float | None:
    """Axis distance from the last p_hat >= 0.9 to the first p_hat <= 0.1.

    A grid-resolution measure of transition sharpness; None when either
    side of the transition is not represented on the grid.
    """
    hi_side = [pt.axis_value for pt in points if pt.p_hat is not None and pt.p_hat >= 0.9]
    lo_side = [pt.axis_value for pt in points if pt.p_hat is not None and pt.p_hat <= 0.1]
    if not hi_side or not lo_side:
        return None
    return lo_side[0] - hi_side[-1]


@dataclass(frozen=True)
class MomentCheck:
    """Monte-Carlo versus formula for E[X] and E[X^2] (sampled mode)."""

    samples: int
    mean_x: float
    stderr_x: float
    formula_ex: float
    z_x: float
    mean_x2: float
    stderr_x2: float
    formula_ex2: float
    z_x2: float


def moment_empirical_check(
    params: ModelParams, samples: int, master_seed: int
) -> MomentCheck:
    """Sample instances, count solutions exactly, compare to the formulas.

    The z-scores are (sample mean - formula) / stderr(sample mean); the
    guard inside brute_force_count keeps this to d^n <= 10^7.
    """
    if samples < 2:
        raise ConfigError(f"need at least 2 samples, got {samples}")
    xs = []
    for i in range(samples):
        inst = generate(params, _sample_seed(master_seed, i))
        xs.append(float(brute_force_count(inst)))
    sum_x = math.fsum(xs)
    sum_x2 = math.fsum(x * x for x in xs)
    sum_x4 = math.fsum((x * x) ** 2 for x in xs)
    mean_x = sum_x / samples
    mean_x2 = sum_x2 / samples
    var_x = max((sum_x2 - samples * mean_x * mean_x) / (samples - 1), 0.0)
    var_x2 = max((sum_x4 - samples * mean_x2 * mean_x2) / (samples - 1), 0.0)
    stderr_x = math.sqrt(var_x / samples)
    stderr_x2 = math.sqrt(var_x2 / samples)
    formula_ex = math.exp(log_first_moment(params, EvalMode.SAMPLED))
    formula_ex2 = math.exp(log_second_moment(params, EvalMode.SAMPLED).log_EX2)

    def z_score(mean: float, formula: float, stderr: float) -> float:
        if stderr > 0:
            return (mean - formula) / stderr
        return 0.0 if mean == formula else math.inf

    z_x = z_score(mean_x, formula_ex, stderr_x)
    z_x2 = z_score(mean_x2, formula_ex2, stderr_x2)
    return MomentCheck(
        samples=samples,
        mean_x=mean_x,
        stderr_x=stderr_x,
        formula_ex=formula_ex,
        z_x=z_x,
        mean_x2=mean_x2,
        stderr_x2=stderr_x2,
        formula_ex2=formula_ex2,
        z_x2=z_x2,
    )


def export_csv(result: SweepResult) -> str:
    """Render the sweep as CSV: axis,p_hat,lo,hi,n_sat,n_total,n_timeout.

    Floats are written with repr so equal results are byte-identical;
    aborted points leave p_hat/lo/hi empty.
    """
    lines = ["axis,p_hat,lo,hi,n_sat,n_total,n_timeout"]
    for pt in result.points:
        if pt.aborted:
            stats = ",,"
        else:
            stats = f"{pt.p_hat!r},{pt.wilson_lo!r},{pt.wilson_hi!r}"
        lines.append(
            f"{pt.axis_value!r},{stats},{pt.n_sat},{pt.replicates},{pt.n_timeout}"
        )
    return "\n".join(lines) + "\n"
