"""Epsilon-greedy arm selection around per-arm CVaR estimators.

A policy keeps one estimator per arm (loss histories for the two empirical
methods, a grid state for the recursive variational method) plus a cached
CVaR estimate per arm.  The cached value of an arm changes only at stages
where that arm was sampled; unsampled arms start at an optimistic initial
estimate so every arm gets tried early.
"""

from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np

from .risk import (
    DualState,
    _require_alpha,
    _require_rate,
    cvar_sample_average,
    cvar_weighted,
    dual_cvar,
    dual_update,
)

__all__ = [
    "METHOD_SAMPLE",
    "METHOD_WEIGHTED",
    "METHOD_DUAL",
    "METHODS",
    "PolicyConfig",
    "PolicyState",
    "greedy_action",
    "select_action",
    "observe",
]

METHOD_SAMPLE = "sample_average"
METHOD_WEIGHTED = "weighted_empirical"
METHOD_DUAL = "dual_recursive"
METHODS = (METHOD_SAMPLE, METHOD_WEIGHTED, METHOD_DUAL)


@dataclass(frozen=True)
class PolicyConfig:
    """Estimation method plus the knobs shared by all methods.

    ``lam`` is ignored by sample_average; ``grid_spec`` (min, max, count)
    applies to dual_recursive only.
    """

    method: str
    epsilon: float = 0.05
    alpha: float = 0.90
    lam: float = 0.5
    grid_spec: tuple[float, float, int] = (-100.0, 350.0, 2000)
    initial_estimate: float = 0.0

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        _require_alpha(self.alpha)
        _require_rate(self.lam)
        if self.method == METHOD_DUAL:
            if self.lam == 0.0:
                raise ValueError("dual_recursive requires a decay rate in (0, 1]")
            lo, hi, count = self.grid_spec
            if count < 2 or not lo < hi:
                raise ValueError(f"grid_spec must satisfy min < max and count >= 2, got {self.grid_spec}")
        if not math.isfinite(self.initial_estimate):
            raise ValueError("initial_estimate must be finite")


class PolicyState:
    """Mutable per-run policy state; one instance per (run, method, rate) cell.

    ``rng`` is the policy's own selection stream, used for greedy tie-breaks
    and (in the standalone selector) exploration draws.
    """

    def __init__(self, config: PolicyConfig, arms: int, rng: np.random.Generator) -> None:
        if arms < 1:
            raise ValueError(f"arms must be >= 1, got {arms}")
        self.config = config
        self.arms = int(arms)
        self.rng = rng
        self.estimates = np.full(self.arms, float(config.initial_estimate))
        if config.method == METHOD_DUAL:
            lo, hi, count = config.grid_spec
            grid = np.linspace(float(lo), float(hi), int(count))
            grid.setflags(write=False)
            self.duals = [
                DualState(grid, config.alpha, estimates=np.full(int(count), float(config.initial_estimate)))
                for _ in range(self.arms)
            ]
            self._buffers = None
            self._counts = None
        else:
            self.duals = None
            self._buffers = [np.empty(16) for _ in range(self.arms)]
            self._counts = np.zeros(self.arms, dtype=np.int64)

    def history(self, arm: int) -> np.ndarray:
        """View of an arm's observed losses, oldest first (empirical methods only)."""
        if self._buffers is None:
            raise ValueError("dual_recursive keeps grid state, not loss histories")
        return self._buffers[arm][: self._counts[arm]]

    def observation_count(self, arm: int) -> int:
        if self._buffers is not None:
            return int(self._counts[arm])
        return int(self.duals[arm].update_count)

    def _append(self, arm: int, loss: float) -> None:
        n = int(self._counts[arm])
        buf = self._buffers[arm]
        if n == buf.size:
            grown = np.empty(buf.size * 2)
            grown[:n] = buf
            self._buffers[arm] = buf = grown
        buf[n] = loss
        self._counts[arm] = n + 1


def greedy_action(state: PolicyState) -> int:
    """Arm with the smallest cached CVaR estimate; exact ties resolved uniformly.

    A random draw is consumed only when two or more arms tie, so policies
    whose estimates evolve identically also consume their tie streams
    identically.
    """
    values = state.estimates
    ties = np.flatnonzero(values == values.min())
    if ties.size == 1:
        return int(ties[0])
    return int(ties[state.rng.integers(ties.size)])


def select_action(state: PolicyState, config: PolicyConfig) -> int:
    """Explore uniformly with probability epsilon, otherwise act greedily."""
    if state.rng.random() < config.epsilon:
        return int(state.rng.integers(state.arms))
    return greedy_action(state)


def observe(state: PolicyState, arm: int, loss: float, config: PolicyConfig) -> PolicyState:
    """Record one sampled loss for ``arm`` and refresh that arm's cached estimate.

    Every other arm's state and cached estimate are untouched.  Mutates and
    returns ``state``.
    """
    if not 0 <= arm < state.arms:
        raise ValueError(f"arm index {arm} out of range for {state.arms} arms")
    loss = float(loss)
    if not math.isfinite(loss):
        raise ValueError("loss must be finite")
    if config.method == METHOD_SAMPLE:
        state._append(arm, loss)
        state.estimates[arm] = cvar_sample_average(state.history(arm), config.alpha)
    elif config.method == METHOD_WEIGHTED:
        state._append(arm, loss)
        state.estimates[arm] = cvar_weighted(state.history(arm), config.lam, config.alpha)
    else:
        dual_update(state.duals[arm], loss, config.lam)
        state.estimates[arm] = dual_cvar(state.duals[arm])[0]
    return state
