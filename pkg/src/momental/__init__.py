"""Momental: deterministic benchmarking of moment-based optimizers.

The package provides three first-order optimizers (SGD with momentum, Adam,
and a rate-bounded Adam variant), learning-rate schedules, deterministic
test problems with an independent finite-difference gradient oracle,
per-coordinate learning-rate telemetry, and a reproducible experiment
harness with a CLI front end.
"""

from .errors import (
    AggregationError,
    ConfigError,
    DimensionError,
    MomentalError,
    MomentalIOError,
    NumericError,
    SequencingError,
    StateError,
)
from .vectors import GradVector, ParamVector, axpy, elementwise_min
from .optimizers import (
    Constant,
    HyperConfig,
    LinearWarmup,
    OptimizerState,
    Schedule,
    StepDecay,
    StepOutput,
    STEP_FUNCTIONS,
    adam_step,
    adamod_step,
    ema_expansion_oracle,
    init_state,
    scheduled_alpha,
    sgdm_step,
)
from .problems import (
    PROBLEM_BUILDERS,
    Problem,
    finite_diff_grad,
    logreg_problem,
    mlp_problem,
    quadratic_problem,
    rosenbrock_problem,
)
from .telemetry import (
    BIN_EDGES,
    LrHistogram,
    RunRecord,
    SeedAggregate,
    TerminalStats,
    aggregate_seeds,
    export_csv,
    finalize_record,
    record_step,
)
from .config import ExperimentSpec, load_config, parse_config_text
from .harness import (
    SweepResult,
    gradient_check,
    run_experiment,
    run_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "AggregationError",
    "BIN_EDGES",
    "ConfigError",
    "Constant",
    "DimensionError",
    "ExperimentSpec",
    "GradVector",
    "HyperConfig",
    "LinearWarmup",
    "LrHistogram",
    "MomentalError",
    "MomentalIOError",
    "NumericError",
    "OptimizerState",
    "PROBLEM_BUILDERS",
    "ParamVector",
    "Problem",
    "RunRecord",
    "Schedule",
    "SeedAggregate",
    "SequencingError",
    "StateError",
    "StepDecay",
    "StepOutput",
    "STEP_FUNCTIONS",
    "SweepResult",
    "TerminalStats",
    "adam_step",
    "adamod_step",
    "aggregate_seeds",
    "axpy",
    "elementwise_min",
    "ema_expansion_oracle",
    "export_csv",
    "finalize_record",
    "finite_diff_grad",
    "gradient_check",
    "init_state",
    "load_config",
    "logreg_problem",
    "mlp_problem",
    "parse_config_text",
    "quadratic_problem",
    "record_step",
    "rosenbrock_problem",
    "run_experiment",
    "run_sweep",
    "scheduled_alpha",
    "sgdm_step",
    "__version__",
]
