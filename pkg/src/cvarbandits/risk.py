"""CVaR estimation primitives.

Three ways to estimate the conditional value-at-risk of a loss stream:

* sample averaging over the closed tail at the empirical quantile,
* a recency-weighted empirical estimator with exponential decay weights,
* a recursive estimator of the variational (auxiliary-function) form over a
  fixed grid of candidate quantile values.

All losses are plain finite reals; NaN or infinite inputs are rejected at
ingestion.  Estimator state objects are single-owner: updates mutate in place
and return the state, and distinct instances can be driven concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConfidenceLevel",
    "DecayWeights",
    "DualState",
    "empirical_cdf",
    "empirical_quantile",
    "cvar_sample_average",
    "decay_weights",
    "weighted_cdf",
    "weighted_quantile",
    "cvar_weighted",
    "dual_auxiliary",
    "dual_update",
    "dual_cvar",
]


def _require_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"confidence level must lie in (0, 1), got {alpha}")
    return alpha


def _require_rate(lam: float) -> float:
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"decay rate must lie in [0, 1], got {lam}")
    return lam


def _as_history(losses) -> np.ndarray:
    """Coerce a loss sequence to a 1-D float array, rejecting non-finite entries."""
    arr = np.asarray(losses, dtype=float)
    if arr.ndim != 1:
        raise ValueError("loss history must be one-dimensional")
    if arr.size and not np.isfinite(arr).all():
        raise ValueError("loss history contains non-finite values")
    return arr


def _require_observations(arr: np.ndarray) -> None:
    if arr.size == 0:
        raise ValueError("no observations")


@dataclass(frozen=True)
class ConfidenceLevel:
    """A tail confidence level, constrained to the open interval (0, 1)."""

    alpha: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", _require_alpha(self.alpha))


@dataclass(frozen=True)
class DecayWeights:
    """Normalized recency weights for a history of length ``len(weights)``.

    ``weights[j]`` multiplies the (j+1)-th oldest observation.  Invariants:
    the weights sum to one (within 1e-12) and for rates strictly inside
    (0, 1) each weight is exactly ``(1 - lam)`` times its right neighbour.
    """

    weights: np.ndarray
    lam: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "lam", _require_rate(self.lam))
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty 1-D sequence")
        if (w < 0.0).any() or not np.isfinite(w).all():
            raise ValueError("weights must be finite and nonnegative")
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return int(self.weights.size)


def _tail_start(sorted_losses: np.ndarray, alpha: float) -> int:
    """Index of the first tail element in an ascending-sorted array.

    The quantile is the ceil(alpha*n)-th order statistic; the tail is every
    observation >= that value (closed inequality, ties included).
    """
    n = sorted_losses.size
    k = min(max(math.ceil(alpha * n), 1), n)
    q = sorted_losses[k - 1]
    return int(np.searchsorted(sorted_losses, q, side="left"))


def empirical_cdf(history, z: float) -> float:
    """Fraction of observed losses that are <= z (right-continuous step cdf)."""
    arr = _as_history(history)
    _require_observations(arr)
    return float(np.count_nonzero(arr <= float(z)) / arr.size)


def empirical_quantile(history, alpha: float) -> float:
    """The ceil(alpha*n)-th smallest observation: inf{z : empirical_cdf(z) >= alpha}."""
    alpha = _require_alpha(alpha)
    arr = _as_history(history)
    _require_observations(arr)
    s = np.sort(arr)
    k = min(max(math.ceil(alpha * arr.size), 1), arr.size)
    return float(s[k - 1])


def cvar_sample_average(history, alpha: float) -> float:
    """Average of the losses at or above the empirical alpha-quantile.

    The tail inequality is closed, so duplicates equal to the quantile all
    enter the average; the denominator is at least one because the quantile
    is itself an observation.
    """
    alpha = _require_alpha(alpha)
    arr = _as_history(history)
    _require_observations(arr)
    s = np.sort(arr)
    j = _tail_start(s, alpha)
    tail = s[j:]
    return float(np.sum(tail) / tail.size)


def decay_weights(n: int, lam: float) -> DecayWeights:
    """Exponential recency weights for a history of length n.

    w_j = (1-lam)^(n-j) * lam / (1-(1-lam)^n) for rates strictly inside (0, 1);
    the endpoints are defined by their pointwise limits: uniform weights at
    lam=0 and all mass on the newest observation at lam=1.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"history length must be a positive integer, got {n}")
    n = int(n)
    lam = _require_rate(lam)
    if lam == 0.0:
        w = np.full(n, 1.0 / n)
    elif lam == 1.0:
        w = np.zeros(n)
        w[-1] = 1.0
    else:
        # Newest weight first, then a sequential backward chain so that
        # w[j] == (1-lam) * w[j+1] holds exactly, element by element.
        # The normalizer 1-(1-lam)^n is evaluated via expm1/log1p: a plain
        # power loses ~1e-8 of the weight sum at n=10**4 with small rates.
        newest = lam / -math.expm1(n * math.log1p(-lam))
        chain = np.full(n, 1.0 - lam)
        chain[0] = newest
        w = np.cumprod(chain)[::-1].copy()
    return DecayWeights(weights=w, lam=lam)


def _weights_array(weights, n: int) -> np.ndarray:
    w = weights.weights if isinstance(weights, DecayWeights) else np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size != n:
        raise ValueError(f"weights length {w.size} does not match history length {n}")
    if (w < 0.0).any() or not np.isfinite(w).all():
        raise ValueError("weights must be finite and nonnegative")
    return w


def weighted_cdf(history, weights, z: float) -> float:
    """Total weight of the observations that are <= z."""
    arr = _as_history(history)
    _require_observations(arr)
    w = _weights_array(weights, arr.size)
    total = float(np.sum(w[arr <= float(z)]))
    return min(1.0, max(0.0, total))


def weighted_quantile(history, weights, alpha: float) -> float:
    """Smallest observed loss whose cumulative weight reaches alpha.

    Observations are ordered by a stable sort on (loss, arrival index); the
    returned value is always a member of the history.
    """
    alpha = _require_alpha(alpha)
    arr = _as_history(history)
    _require_observations(arr)
    w = _weights_array(weights, arr.size)
    if not (w > 0.0).any():
        raise ValueError("all weights are zero")
    order = np.argsort(arr, kind="stable")
    cum = np.cumsum(w[order])
    idx = min(int(np.searchsorted(cum, alpha, side="left")), arr.size - 1)
    return float(arr[order][idx])


def cvar_weighted(history, lam: float, alpha: float) -> float:
    """Recency-weighted tail average at the weighted alpha-quantile.

    Equivalent to weighting with decay_weights and averaging the closed tail
    at weighted_quantile.  Internally the weights are kept unnormalized
    (v_j = (1-lam)^(n-j), the quantile criterion scaled by their total):
    algebraically the same estimator, but at lam=0 every v_j is exactly 1.0
    and the arithmetic reproduces cvar_sample_average bit for bit.
    """
    alpha = _require_alpha(alpha)
    lam = _require_rate(lam)
    arr = _as_history(history)
    _require_observations(arr)
    n = arr.size
    order = np.argsort(arr, kind="stable")
    sz = arr[order]
    # exponent n-1-arrival: newest observation gets (1-lam)^0
    v = np.power(1.0 - lam, (n - 1 - order).astype(float))
    cum = np.cumsum(v)
    total = cum[-1]
    idx = min(int(np.searchsorted(cum, alpha * total, side="left")), n - 1)
    q = sz[idx]
    j = int(np.searchsorted(sz, q, side="left"))
    num = np.sum(v[j:] * sz[j:])
    den = np.sum(v[j:])
    return float(num / den)


@dataclass
class DualState:
    """State of the recursive variational CVaR estimator over a fixed grid.

    ``estimates[m]`` tracks the running mean of the auxiliary function at
    grid point ``grid[m]``; the estimator itself is the grid minimum.  The
    grid is immutable and may be shared between instances; estimates are
    owned by exactly one updater.
    """

    grid: np.ndarray
    alpha: float
    estimates: np.ndarray | None = None
    update_count: int = 0

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("grid must be a 1-D sequence of at least 2 points")
        if not np.isfinite(grid).all() or not (np.diff(grid) > 0.0).all():
            raise ValueError("grid must be finite and strictly increasing")
        self.grid = grid
        self.alpha = _require_alpha(self.alpha)
        if self.estimates is None:
            self.estimates = np.zeros(grid.size)
        else:
            est = np.array(self.estimates, dtype=float)
            if est.shape != grid.shape:
                raise ValueError("estimates must have one entry per grid point")
            if not np.isfinite(est).all():
                raise ValueError("estimates must be finite")
            self.estimates = est
        if self.update_count < 0:
            raise ValueError("update_count must be nonnegative")


def dual_auxiliary(c: float, alpha: float, z: float) -> float:
    """Auxiliary function c + (z-c)/(1-alpha) * 1{z > c}.

    Convex and piecewise linear in c, never below c; the indicator is strict,
    so z == c returns c itself.
    """
    alpha = _require_alpha(alpha)
    c = float(c)
    z = float(z)
    if z > c:
        return c + (z - c) / (1.0 - alpha)
    return c


def dual_update(state: DualState, z: float, lam: float) -> DualState:
    """Move every grid estimate a step lam toward its auxiliary target.

    Mutates ``state`` in place and returns it.  lam=1 replaces the estimates
    with the targets outright (the incremental form would not reproduce the
    target to the last bit for nonzero prior estimates).
    """
    lam = float(lam)
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"update rate must lie in (0, 1], got {lam}")
    z = float(z)
    if not math.isfinite(z):
        raise ValueError("loss must be finite")
    grid = state.grid
    target = np.where(z > grid, grid + (z - grid) / (1.0 - state.alpha), grid)
    if lam == 1.0:
        state.estimates[:] = target
    else:
        state.estimates += lam * (target - state.estimates)
    state.update_count += 1
    return state


def dual_cvar(state: DualState) -> tuple[float, float]:
    """Grid minimum of the auxiliary estimates and the grid point attaining it.

    Ties break toward the smallest grid point, which is the natural reading
    of the minimizer as a quantile estimate.
    """
    i = int(np.argmin(state.estimates))
    return float(state.estimates[i]), float(state.grid[i])
