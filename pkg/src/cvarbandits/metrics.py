"""Per-stage performance metrics of one simulated run.

Three series, each defined on every prefix of the trajectory: the cumulative
rate of picking a truly least-risky arm, the running mean of the chosen arm's
true-CVaR excess over the stage minimum, and the tail average of the losses
actually incurred so far.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .risk import _require_alpha, _tail_start

__all__ = [
    "HIT_TOLERANCE",
    "RunTrajectory",
    "MetricSeries",
    "hit_rate_series",
    "average_regret_series",
    "empirical_cvar_series",
    "compute_metrics",
    "render_metric_csv",
]

# A chosen arm counts as a hit when its true CVaR is within this tolerance of
# the stage minimum; guards float equality on genuinely tied arms.
HIT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class RunTrajectory:
    """What one policy did on one realization: choices, incurred losses, ground truth."""

    actions: np.ndarray
    incurred_losses: np.ndarray
    true_cvar: np.ndarray

    def __post_init__(self) -> None:
        actions = np.asarray(self.actions, dtype=np.int64)
        incurred = np.asarray(self.incurred_losses, dtype=float)
        truth = np.asarray(self.true_cvar, dtype=float)
        if truth.ndim != 2:
            raise ValueError("true_cvar must be a T x K matrix")
        t, k = truth.shape
        if actions.shape != (t,) or incurred.shape != (t,):
            raise ValueError("actions and incurred_losses must have one entry per stage")
        if t == 0:
            raise ValueError("trajectory must contain at least one stage")
        if actions.min(initial=0) < 0 or actions.max(initial=0) >= k:
            raise ValueError(f"actions must be arm indices in [0, {k})")
        if not (np.isfinite(incurred).all() and np.isfinite(truth).all()):
            raise ValueError("losses and true CVaR values must be finite")
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "incurred_losses", incurred)
        object.__setattr__(self, "true_cvar", truth)

    @property
    def stages(self) -> int:
        return int(self.actions.size)


@dataclass(frozen=True)
class MetricSeries:
    hit_rate: np.ndarray
    avg_regret: np.ndarray
    empirical_cvar: np.ndarray

    def __post_init__(self) -> None:
        if not (self.hit_rate.shape == self.avg_regret.shape == self.empirical_cvar.shape):
            raise ValueError("metric series must share one length")

    @property
    def stages(self) -> int:
        return int(self.hit_rate.size)


def _chosen_and_best(traj: RunTrajectory) -> tuple[np.ndarray, np.ndarray]:
    chosen = traj.true_cvar[np.arange(traj.stages), traj.actions]
    best = traj.true_cvar.min(axis=1)
    return chosen, best


def hit_rate_series(traj: RunTrajectory) -> np.ndarray:
    """Cumulative fraction of stages whose chosen arm had the (tied-)minimal true CVaR."""
    chosen, best = _chosen_and_best(traj)
    hits = chosen <= best + HIT_TOLERANCE
    return np.cumsum(hits) / np.arange(1, traj.stages + 1)


def average_regret_series(traj: RunTrajectory) -> np.ndarray:
    """Running mean of the chosen arm's true-CVaR gap to the stage minimum.

    Each summand is an exact nonnegative difference (the chosen entry minus
    the rowwise minimum of the same matrix).
    """
    chosen, best = _chosen_and_best(traj)
    return np.cumsum(chosen - best) / np.arange(1, traj.stages + 1)


def empirical_cvar_series(traj: RunTrajectory, alpha: float) -> np.ndarray:
    """Tail average of each incurred-loss prefix, one value per stage.

    Prefix t equals the sample-averaging estimator applied to the first t
    incurred losses.  Maintained incrementally: losses are inserted into a
    sorted buffer (new duplicates go after existing equals), and the tail sum
    is taken over the same sorted slice the batch estimator would use, so the
    per-prefix values match it bit for bit.
    """
    alpha = _require_alpha(alpha)
    losses = traj.incurred_losses
    t_max = losses.size
    buf = np.empty(t_max)
    out = np.empty(t_max)
    for t, y in enumerate(losses):
        i = int(np.searchsorted(buf[:t], y, side="right"))
        buf[i + 1 : t + 1] = buf[i:t]
        buf[i] = y
        n = t + 1
        j = _tail_start(buf[:n], alpha)
        tail = buf[j:n]
        out[t] = np.sum(tail) / tail.size
    return out


def compute_metrics(traj: RunTrajectory, alpha: float) -> MetricSeries:
    return MetricSeries(
        hit_rate=hit_rate_series(traj),
        avg_regret=average_regret_series(traj),
        empirical_cvar=empirical_cvar_series(traj, alpha),
    )


def render_metric_csv(series: MetricSeries) -> str:
    """CSV text with columns stage, hit_rate, avg_regret, empirical_cvar (stage 1-based)."""
    lines = ["stage,hit_rate,avg_regret,empirical_cvar"]
    for t in range(series.stages):
        lines.append(
            f"{t + 1},{float(series.hit_rate[t])!r},{float(series.avg_regret[t])!r},{float(series.empirical_cvar[t])!r}"
        )
    return "\n".join(lines) + "\n"
