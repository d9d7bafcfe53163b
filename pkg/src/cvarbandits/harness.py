"""Monte Carlo benchmark driver.

Runs R independent realizations, evaluates every method x decay-rate cell on
each realization under common random numbers (one shared loss matrix per run,
optionally shared exploration draws), and averages the metric series across
runs.  Aggregation always proceeds in run-index order, so results are
bit-identical whatever the worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from functools import partial

import numpy as np

from .env import (
    STREAM_EXPLORE,
    STREAM_TIES,
    ParameterSpec,
    RunRealization,
    RunStreams,
    TestbedConfig,
    generate_run,
    labeled_stream,
)
from .metrics import (
    HIT_TOLERANCE,
    MetricSeries,
    RunTrajectory,
    compute_metrics,
)
from .policy import (
    METHOD_DUAL,
    METHOD_SAMPLE,
    METHODS,
    PolicyConfig,
    PolicyState,
    greedy_action,
    observe,
)
from .risk import _require_alpha, _require_rate

__all__ = [
    "DEFAULT_LAMBDAS",
    "DEFAULT_GRID",
    "ExperimentConfig",
    "AggregateResult",
    "run_single",
    "run_experiment",
    "sweep_lambda",
    "run_trace",
    "config_as_dict",
    "render_sweep_csv",
    "render_trace_csv",
    "render_config_echo",
    "aggregate_filename",
    "per_run_filename",
]

DEFAULT_LAMBDAS = (0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99)
DEFAULT_GRID = (-100.0, 350.0, 2000)


@dataclass(frozen=True)
class ExperimentConfig:
    """Full benchmark configuration; defaults reproduce the reference testbed."""

    runs: int = 1000
    stages: int = 2000
    arms: int = 8
    alpha: float = 0.90
    epsilon: float = 0.05
    lambdas: tuple[float, ...] = DEFAULT_LAMBDAS
    methods: tuple[str, ...] = METHODS
    grid: tuple[float, float, int] = DEFAULT_GRID
    master_seed: int = 0
    workers: int = 1
    share_exploration: bool = True
    param_spec: ParameterSpec = ParameterSpec()

    def __post_init__(self) -> None:
        for name in ("runs", "stages", "arms", "workers"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.master_seed < 0:
            raise ValueError("master_seed must be nonnegative")
        _require_alpha(self.alpha)
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        object.__setattr__(self, "lambdas", tuple(float(l) for l in self.lambdas))
        object.__setattr__(self, "methods", tuple(self.methods))
        if not self.lambdas:
            raise ValueError("at least one decay rate is required")
        for lam in self.lambdas:
            _require_rate(lam)
        if not self.methods:
            raise ValueError("at least one method is required")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("duplicate methods in config")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}, expected one of {METHODS}")
        if METHOD_DUAL in self.methods and any(lam == 0.0 for lam in self.lambdas):
            raise ValueError("dual_recursive requires decay rates in (0, 1]; drop lambda=0 or the method")
        lo, hi, count = self.grid
        if not (lo < hi and int(count) >= 2):
            raise ValueError(f"grid must satisfy min < max and count >= 2, got {self.grid}")
        object.__setattr__(self, "grid", (float(lo), float(hi), int(count)))

    def testbed(self) -> TestbedConfig:
        return TestbedConfig(stages=self.stages, arms=self.arms, alpha=self.alpha, param_spec=self.param_spec)

    def cell_keys(self) -> list[tuple[str, float]]:
        return [(m, lam) for m in self.methods for lam in self.lambdas]


@dataclass(frozen=True)
class AggregateResult:
    """Stage-wise mean metric series and their time-T values per (method, rate) cell."""

    mean_series: dict
    finals: dict
    runs: int
    config: ExperimentConfig
    per_run: dict | None = None


def _exploration_arrays(config: ExperimentConfig, run_index: int, method: str, lam: float):
    """Pre-drawn exploration decisions and exploration arms for one cell.

    With sharing on, every cell of the run uses the same stream; otherwise the
    stream is keyed by method and the rate's bit pattern.  The arm draw is
    consumed every stage regardless of whether that stage explores, so the
    stream position never depends on estimator behavior.
    """
    if config.share_exploration:
        rng = labeled_stream(config.master_seed, run_index, STREAM_EXPLORE)
    else:
        extra = (METHODS.index(method), int(np.float64(lam).view(np.uint64)))
        rng = labeled_stream(config.master_seed, run_index, STREAM_EXPLORE, extra=extra)
    explores = rng.random(config.stages) < config.epsilon
    arms = rng.integers(0, config.arms, config.stages)
    return explores, arms


def run_single(
    run_seed: int,
    method: str,
    lam: float,
    realization: RunRealization,
    config: ExperimentConfig,
    exploration: tuple[np.ndarray, np.ndarray] | None = None,
) -> MetricSeries:
    """Drive one policy over one realization and return its metric series."""
    if realization.stages != config.stages or realization.arms != config.arms:
        raise ValueError(
            f"realization shape {realization.losses.shape} does not match config "
            f"({config.stages} stages, {config.arms} arms)"
        )
    if exploration is None:
        exploration = _exploration_arrays(config, run_seed, method, lam)
    explores, explore_arms = exploration
    pcfg = PolicyConfig(
        method=method,
        epsilon=config.epsilon,
        alpha=config.alpha,
        lam=lam,
        grid_spec=config.grid,
    )
    state = PolicyState(pcfg, config.arms, labeled_stream(config.master_seed, run_seed, STREAM_TIES))
    stages = config.stages
    losses = realization.losses
    actions = np.empty(stages, dtype=np.int64)
    incurred = np.empty(stages)
    for t in range(stages):
        a = int(explore_arms[t]) if explores[t] else greedy_action(state)
        y = float(losses[t, a])
        observe(state, a, y, pcfg)
        actions[t] = a
        incurred[t] = y
    traj = RunTrajectory(actions=actions, incurred_losses=incurred, true_cvar=realization.true_cvar)
    return compute_metrics(traj, config.alpha)


def _evaluate_run(config: ExperimentConfig, run_index: int) -> dict[tuple[str, float], MetricSeries]:
    """All cells of one run on one shared realization.

    sample_average ignores the decay rate, so it is executed once and its
    series reused for every rate in the list.
    """
    realization = generate_run(RunStreams.from_seed(config.master_seed, run_index), config.testbed())
    shared = None
    if config.share_exploration:
        shared = _exploration_arrays(config, run_index, METHODS[0], 0.0)
    out: dict[tuple[str, float], MetricSeries] = {}
    if METHOD_SAMPLE in config.methods:
        series = run_single(run_index, METHOD_SAMPLE, 0.0, realization, config, exploration=shared)
        for lam in config.lambdas:
            out[(METHOD_SAMPLE, lam)] = series
    for method in config.methods:
        if method == METHOD_SAMPLE:
            continue
        for lam in config.lambdas:
            out[(method, lam)] = run_single(run_index, method, lam, realization, config, exploration=shared)
    return out


def run_experiment(config: ExperimentConfig, collect_per_run: bool = False) -> AggregateResult:
    """Execute the full run x method x rate grid and average the series stage-wise."""
    keys = config.cell_keys()
    sums: dict[tuple[str, float], list[np.ndarray] | None] = {k: None for k in keys}
    per_run: dict[tuple[str, float], list[MetricSeries]] | None = (
        {k: [] for k in keys} if collect_per_run else None
    )

    def absorb(result: dict[tuple[str, float], MetricSeries]) -> None:
        for k in keys:
            series = result[k]
            acc = sums[k]
            if acc is None:
                sums[k] = [series.hit_rate.copy(), series.avg_regret.copy(), series.empirical_cvar.copy()]
            else:
                acc[0] += series.hit_rate
                acc[1] += series.avg_regret
                acc[2] += series.empirical_cvar
            if per_run is not None:
                per_run[k].append(series)

    if config.workers == 1:
        for r in range(config.runs):
            absorb(_evaluate_run(config, r))
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunk = max(1, config.runs // (config.workers * 4))
            # map() yields in submission order: the accumulator sees run 0, 1, ...
            for result in pool.map(partial(_evaluate_run, config), range(config.runs), chunksize=chunk):
                absorb(result)

    mean_series = {
        k: MetricSeries(
            hit_rate=acc[0] / config.runs,
            avg_regret=acc[1] / config.runs,
            empirical_cvar=acc[2] / config.runs,
        )
        for k, acc in sums.items()
    }
    finals = {
        k: {
            "hit_rate_T": float(ms.hit_rate[-1]),
            "avg_regret_T": float(ms.avg_regret[-1]),
            "empirical_cvar_T": float(ms.empirical_cvar[-1]),
        }
        for k, ms in mean_series.items()
    }
    return AggregateResult(
        mean_series=mean_series, finals=finals, runs=config.runs, config=config, per_run=per_run
    )


def sweep_lambda(config: ExperimentConfig) -> list[dict]:
    """Time-T metrics for every method x rate cell, one row per cell.

    The sample_average rows are identical across rates: the method has no
    rate parameter.
    """
    result = run_experiment(config)
    return [
        {"method": m, "lambda": lam, **result.finals[(m, lam)]}
        for m in config.methods
        for lam in config.lambdas
    ]


def run_trace(config: ExperimentConfig, run_index: int) -> list[tuple[int, int, float, int]]:
    """Ground-truth CVaR trace of one realization: (stage, arm, true_cvar, is_optimal).

    Stages and arms are 1-based in the rows; ``run_index`` is the 0-based run
    seed index, the same number the experiment uses for that run.
    """
    if not 0 <= run_index < config.runs:
        raise ValueError(f"run index {run_index} out of range for {config.runs} runs")
    realization = generate_run(RunStreams.from_seed(config.master_seed, run_index), config.testbed())
    best = realization.true_cvar.min(axis=1)
    rows = []
    for t in range(realization.stages):
        for i in range(realization.arms):
            value = float(realization.true_cvar[t, i])
            rows.append((t + 1, i + 1, value, int(value <= best[t] + HIT_TOLERANCE)))
    return rows


def config_as_dict(config: ExperimentConfig) -> dict:
    """JSON-ready mapping of the exact configuration in use."""
    d = asdict(config)
    d["lambdas"] = list(config.lambdas)
    d["methods"] = list(config.methods)
    d["grid"] = list(config.grid)
    d["param_spec"] = {
        "mu_bounds": list(config.param_spec.mu_bounds),
        "sigma0_bounds": list(config.param_spec.sigma0_bounds),
        "shock_stds": list(config.param_spec.shock_stds),
    }
    return d


def render_config_echo(config_dict: dict) -> str:
    return json.dumps(config_dict, indent=2, sort_keys=True) + "\n"


def render_sweep_csv(rows: list[dict]) -> str:
    lines = ["method,lambda,hit_rate_T,avg_regret_T,empirical_cvar_T"]
    for row in rows:
        lines.append(
            f"{row['method']},{float(row['lambda'])!r},{float(row['hit_rate_T'])!r},"
            f"{float(row['avg_regret_T'])!r},{float(row['empirical_cvar_T'])!r}"
        )
    return "\n".join(lines) + "\n"


def render_trace_csv(rows: list[tuple[int, int, float, int]]) -> str:
    lines = ["stage,arm,true_cvar,is_optimal"]
    for stage, arm, value, is_opt in rows:
        lines.append(f"{stage},{arm},{float(value)!r},{int(is_opt)}")
    return "\n".join(lines) + "\n"


def aggregate_filename(method: str, lam: float) -> str:
    return f"aggregate_{method}_{float(lam)!r}.csv"


def per_run_filename(method: str, lam: float) -> str:
    return f"per_run_{method}_{float(lam)!r}.csv"
