"""Risk-averse multi-armed bandit simulator.

Core pieces: CVaR estimation primitives (`risk`), a non-stationary Gaussian
testbed (`env`), epsilon-greedy policies around per-arm estimators
(`policy`), per-stage performance metrics (`metrics`), and a reproducible
Monte Carlo harness (`harness`).  An HTTP service (`service`) exposes the
harness; the command line (`cli`) is a thin client of that service.
"""

from .risk import (
    ConfidenceLevel,
    DecayWeights,
    DualState,
    cvar_sample_average,
    cvar_weighted,
    decay_weights,
    dual_auxiliary,
    dual_cvar,
    dual_update,
    empirical_cdf,
    empirical_quantile,
    weighted_cdf,
    weighted_quantile,
)
from .env import (
    ArmParams,
    ArmProcess,
    ParameterSpec,
    RunRealization,
    RunStreams,
    TestbedConfig,
    generate_run,
    normal_cvar,
    sample_arm_params,
    step_variance,
)
from .policy import (
    METHODS,
    PolicyConfig,
    PolicyState,
    greedy_action,
    observe,
    select_action,
)
from .metrics import (
    MetricSeries,
    RunTrajectory,
    average_regret_series,
    compute_metrics,
    empirical_cvar_series,
    hit_rate_series,
)
from .harness import (
    AggregateResult,
    ExperimentConfig,
    run_experiment,
    run_single,
    run_trace,
    sweep_lambda,
)

__version__ = "0.1.0"
