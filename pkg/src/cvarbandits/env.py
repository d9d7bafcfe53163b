"""Non-stationary Gaussian loss testbed.

Each arm draws losses from a normal distribution whose mean is fixed for the
whole run and whose variance follows a multiplicative random walk,
``var_next = var * exp(shock)`` with independent Gaussian log-shocks.  The
per-stage ground-truth CVaR of every arm is available in closed form, which
is what the benchmark metrics compare against.

Randomness is organized as labeled substreams: one master seed plus a run
index and a stream label fully determine every draw, so realizations are
bit-reproducible and policy decisions can never perturb environment noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .risk import _require_alpha

__all__ = [
    "TABLE_SHOCK_STDS",
    "DEFAULT_MU_BOUNDS",
    "DEFAULT_SIGMA0_BOUNDS",
    "STREAM_PARAMS",
    "STREAM_LOSSES",
    "STREAM_SHOCKS",
    "STREAM_EXPLORE",
    "STREAM_TIES",
    "ArmParams",
    "ArmProcess",
    "ParameterSpec",
    "TestbedConfig",
    "RunRealization",
    "RunStreams",
    "labeled_stream",
    "sample_arm_params",
    "apply_shock",
    "step_variance",
    "standard_normal_quantile",
    "normal_cvar_factor",
    "normal_cvar",
    "generate_run",
    "write_realization_csv",
]

# Benchmark defaults: per-arm std dev of the variance log-shocks (arms 1-8;
# arms 5 and 6 intentionally share a value) and the uniform sampling bounds
# for the arm mean and initial std dev.
TABLE_SHOCK_STDS = (0.08870, 0.08871, 0.08872, 0.08873, 0.08874, 0.08874, 0.08872, 0.08873)
DEFAULT_MU_BOUNDS = (0.0, 2.0)
DEFAULT_SIGMA0_BOUNDS = (1.0, 2.0)

# Stream labels: disjoint substreams per (master_seed, run_index).
STREAM_PARAMS = 0
STREAM_LOSSES = 1
STREAM_SHOCKS = 2
STREAM_EXPLORE = 3
STREAM_TIES = 4


def labeled_stream(master_seed: int, run_index: int, label: int, extra: tuple[int, ...] = ()) -> np.random.Generator:
    """Deterministic generator for one labeled substream of one run."""
    if master_seed < 0 or run_index < 0:
        raise ValueError("master_seed and run_index must be nonnegative integers")
    entropy = (int(master_seed), int(run_index), int(label), *(int(e) for e in extra))
    return np.random.default_rng(np.random.SeedSequence(entropy))


@dataclass(frozen=True)
class ArmParams:
    """Fixed per-run parameters of one arm."""

    mu: float
    sigma0: float
    shock_std: float

    def __post_init__(self) -> None:
        if not (self.sigma0 > 0.0):
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")
        if not (self.shock_std > 0.0):
            raise ValueError(f"shock_std must be positive, got {self.shock_std}")


@dataclass
class ArmProcess:
    """One arm's evolving state: fixed params plus the current variance."""

    params: ArmParams
    sigma2: float

    def __post_init__(self) -> None:
        if not (self.sigma2 > 0.0):
            raise ValueError(f"variance must be positive, got {self.sigma2}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


@dataclass(frozen=True)
class ParameterSpec:
    """Sampling spec for arm parameters: uniform bounds plus fixed shock stds.

    ``shock_stds`` lists one value per arm; testbeds with more arms than
    entries cycle the list.
    """

    mu_bounds: tuple[float, float] = DEFAULT_MU_BOUNDS
    sigma0_bounds: tuple[float, float] = DEFAULT_SIGMA0_BOUNDS
    shock_stds: tuple[float, ...] = TABLE_SHOCK_STDS

    def __post_init__(self) -> None:
        if self.mu_bounds[0] > self.mu_bounds[1]:
            raise ValueError(f"mu bounds out of order: {self.mu_bounds}")
        if not (0.0 < self.sigma0_bounds[0] <= self.sigma0_bounds[1]):
            raise ValueError(f"sigma0 bounds must be positive and ordered: {self.sigma0_bounds}")
        if len(self.shock_stds) == 0 or any(s <= 0.0 for s in self.shock_stds):
            raise ValueError("shock_stds must be non-empty and positive")


@dataclass(frozen=True)
class TestbedConfig:
    """Shape of one simulated run: stage count, arm count, tail level, parameter spec."""

    stages: int
    arms: int
    alpha: float
    param_spec: ParameterSpec = ParameterSpec()

    def __post_init__(self) -> None:
        if self.stages < 1:
            raise ValueError(f"stages must be >= 1, got {self.stages}")
        if self.arms < 1:
            raise ValueError(f"arms must be >= 1, got {self.arms}")
        _require_alpha(self.alpha)


@dataclass(frozen=True)
class RunRealization:
    """All environment randomness of one run, realized up front.

    ``losses[t, i]`` is the loss arm i would give at stage t; ``true_cvar[t, i]``
    is the ground-truth CVaR of that same stage-t distribution.  Every arm is
    realized at every stage regardless of what a policy later picks, so
    different policies replayed on one realization see identical losses
    whenever they make identical choices.
    """

    losses: np.ndarray
    true_cvar: np.ndarray
    params: tuple[ArmParams, ...]

    def __post_init__(self) -> None:
        if self.losses.shape != self.true_cvar.shape or self.losses.ndim != 2:
            raise ValueError("losses and true_cvar must be equal-shape T x K matrices")
        if self.losses.shape[1] != len(self.params):
            raise ValueError("one ArmParams per arm column is required")
        self.losses.setflags(write=False)
        self.true_cvar.setflags(write=False)

    @property
    def stages(self) -> int:
        return int(self.losses.shape[0])

    @property
    def arms(self) -> int:
        return int(self.losses.shape[1])


@dataclass(frozen=True)
class RunStreams:
    """The three environment substreams of one run."""

    params: np.random.Generator
    losses: np.random.Generator
    shocks: np.random.Generator

    @classmethod
    def from_seed(cls, master_seed: int, run_index: int) -> "RunStreams":
        return cls(
            params=labeled_stream(master_seed, run_index, STREAM_PARAMS),
            losses=labeled_stream(master_seed, run_index, STREAM_LOSSES),
            shocks=labeled_stream(master_seed, run_index, STREAM_SHOCKS),
        )


def sample_arm_params(rng: np.random.Generator, spec: ParameterSpec, arm_index: int) -> ArmParams:
    """Draw one arm's parameters: uniform mean and initial sd, fixed shock std."""
    mu = float(rng.uniform(spec.mu_bounds[0], spec.mu_bounds[1]))
    sigma0 = float(rng.uniform(spec.sigma0_bounds[0], spec.sigma0_bounds[1]))
    shock = float(spec.shock_stds[arm_index % len(spec.shock_stds)])
    return ArmParams(mu=mu, sigma0=sigma0, shock_std=shock)


def apply_shock(process: ArmProcess, eps: float) -> ArmProcess:
    """Multiply the variance by exp(eps) in place; positivity is preserved."""
    process.sigma2 *= math.exp(float(eps))
    return process


def step_variance(process: ArmProcess, rng: np.random.Generator) -> ArmProcess:
    """Advance the variance one stage with a fresh Gaussian log-shock."""
    eps = rng.normal(0.0, process.params.shock_std)
    return apply_shock(process, eps)


# Rational approximation coefficients for the standard normal quantile
# (central region and lower tail), polished by one Halley step below.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425
_SQRT2 = math.sqrt(2.0)
_SQRT_TWO_PI = math.sqrt(2.0 * math.pi)


def _quantile_lower_half(p: float) -> float:
    # p in (0, 0.5]; returns a nonpositive quantile.
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    else:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
            (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    # One Halley refinement.  x <= 0 here, so the cdf via erfc(-x/sqrt(2))/2
    # is evaluated without cancellation and the result is accurate to ~1 ulp.
    e = 0.5 * math.erfc(-x / _SQRT2) - p
    u = e * _SQRT_TWO_PI * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def standard_normal_quantile(p: float) -> float:
    """Inverse standard normal cdf on (0, 1), accurate to ~1e-15 absolute."""
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    if p <= 0.5:
        return _quantile_lower_half(p)
    # 1-p is exact for p >= 0.5, so the upper tail reduces to the lower one.
    return -_quantile_lower_half(1.0 - p)


def _norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / _SQRT_TWO_PI


def normal_cvar_factor(alpha: float) -> float:
    """Tail factor pdf(quantile(alpha)) / (1 - alpha): the standard-normal CVaR."""
    alpha = _require_alpha(alpha)
    return _norm_pdf(standard_normal_quantile(alpha)) / (1.0 - alpha)


def normal_cvar(mu: float, sigma: float, alpha: float) -> float:
    """Closed-form CVaR of a normal(mu, sigma^2) loss at tail level alpha."""
    sigma = float(sigma)
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return float(mu) + sigma * normal_cvar_factor(alpha)


def generate_run(streams: RunStreams, config: TestbedConfig) -> RunRealization:
    """Realize one full run: arm parameters, loss matrix, ground-truth CVaR matrix.

    Stage ordering per arm: the truth for stage t is the CVaR of the current
    distribution, the stage-t loss is drawn from that same distribution, and
    the variance shock is applied afterwards (the initial sd is the stage-1
    sd; the stage-T shock never affects a recorded loss).
    """
    t, k = config.stages, config.arms
    params = tuple(sample_arm_params(streams.params, config.param_spec, i) for i in range(k))
    mu = np.array([p.mu for p in params])
    sigma0 = np.array([p.sigma0 for p in params])
    shock_std = np.array([p.shock_std for p in params])

    z = streams.losses.standard_normal((t, k))
    eps = streams.shocks.standard_normal((t, k)) * shock_std[None, :]
    log_var = 2.0 * np.log(sigma0)[None, :] + np.vstack([np.zeros((1, k)), np.cumsum(eps[:-1], axis=0)])
    sigma = np.exp(0.5 * log_var)

    factor = normal_cvar_factor(config.alpha)
    true_cvar = mu[None, :] + sigma * factor
    losses = mu[None, :] + sigma * z
    return RunRealization(losses=losses, true_cvar=true_cvar, params=params)


def write_realization_csv(realization: RunRealization, path) -> None:
    """Debug export, long format: one row per (stage, arm), 1-based indices."""
    lines = ["stage,arm,loss,true_cvar"]
    for t in range(realization.stages):
        for i in range(realization.arms):
            lines.append(
                f"{t + 1},{i + 1},{float(realization.losses[t, i])!r},{float(realization.true_cvar[t, i])!r}"
            )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
