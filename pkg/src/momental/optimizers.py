"""Stateful optimizer update rules: SGD with momentum, Adam, and the
EMA-bounded Adam variant, plus learning-rate schedules and decoupled weight
decay.

All three steps share the same calling convention:

    out = adam_step(params, grad, state, cfg)

where state carries the moment buffers and the step counter and is mutated
in place; params is never mutated, the updated vector comes back in
StepOutput.new_params together with the per-coordinate learning rate that
was actually applied.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, NumericError, StateError
from .vectors import GradVector, ParamVector, elementwise_min

_MAX_STEP = 2**63 - 1


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    """alpha_t = base_alpha for all t."""


@dataclass(frozen=True)
class LinearWarmup:
    """Linear growth alpha_t = alpha0 + ((alpha_w - alpha0)/t_w) * t while
    t < t_w, then the nested schedule evaluated at t - t_w (re-based at 0).

    Continuity with the warmup endpoint is the config author's job: set
    base_alpha equal to alpha_w when the tail should hold the peak rate.
    """

    alpha0: float
    alpha_w: float
    t_w: int
    then: "Schedule" = field(default_factory=Constant)

    def __post_init__(self):
        if not 0.0 <= self.alpha0 <= self.alpha_w:
            raise ConfigError(
                f"linear_warmup needs 0 <= alpha0 <= alpha_w, got "
                f"alpha0={self.alpha0}, alpha_w={self.alpha_w}"
            )
        if self.t_w < 1:
            raise ConfigError(f"linear_warmup needs t_w >= 1, got {self.t_w}")


@dataclass(frozen=True)
class StepDecay:
    """alpha_t = base_alpha * factor**(number of milestones <= t)."""

    milestones: tuple[int, ...]
    factor: float

    def __post_init__(self):
        ms = tuple(int(m) for m in self.milestones)
        object.__setattr__(self, "milestones", ms)
        if any(b <= a for a, b in zip(ms, ms[1:])):
            raise ConfigError(f"milestones must be strictly increasing, got {ms}")
        if not 0.0 < self.factor <= 1.0:
            raise ConfigError(f"decay factor must be in (0, 1], got {self.factor}")


Schedule = Constant | LinearWarmup | StepDecay


def scheduled_alpha(schedule: Schedule, base_alpha: float, t: int) -> float:
    """The scheduled scalar step size alpha_t for step index t (t >= 1).

    Nested schedules behind a warmup are evaluated at t - t_w, which may be
    0 at the handoff step; both variants are total there.
    """
    if isinstance(schedule, Constant):
        return base_alpha
    if isinstance(schedule, LinearWarmup):
        if t < schedule.t_w:
            return schedule.alpha0 + (
                (schedule.alpha_w - schedule.alpha0) / schedule.t_w
            ) * t
        return scheduled_alpha(schedule.then, base_alpha, t - schedule.t_w)
    if isinstance(schedule, StepDecay):
        hit = sum(1 for m in schedule.milestones if m <= t)
        return base_alpha * schedule.factor**hit
    raise ConfigError(f"unknown schedule {schedule!r}")


# ---------------------------------------------------------------------------
# Hyperparameters and state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HyperConfig:
    """Scalar hyperparameters for all three optimizers.

    beta1/beta2 are the first/second moment decays; beta3 is the decay of
    the learning-rate EMA used by the bounded variant, with memory length
    on the order of 1/(1-beta3) steps. beta3=0 degenerates to Adam exactly;
    beta3=1 is rejected because the bound would freeze at 0 and no step
    would ever move. weight_decay is decoupled (see the step functions).
    """

    base_alpha: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    beta3: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.0
    schedule: Schedule = field(default_factory=Constant)

    def __post_init__(self):
        if not self.base_alpha > 0:
            raise ConfigError(f"base_alpha must be > 0, got {self.base_alpha}")
        for name in ("beta1", "beta2", "beta3"):
            b = getattr(self, name)
            if not 0.0 <= b < 1.0:
                raise ConfigError(f"{name} must be in [0, 1), got {b}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if self.weight_decay < 0:
            raise ConfigError(
                f"weight_decay must be >= 0, got {self.weight_decay}"
            )


@dataclass
class OptimizerState:
    """Per-coordinate moment buffers and the step counter.

    m, v, s start at zero; t counts completed steps. s is only advanced by
    the bounded step but is allocated for all optimizers so state objects
    are interchangeable.
    """

    t: int
    m: np.ndarray
    v: np.ndarray
    s: np.ndarray


def init_state(dim: int) -> OptimizerState:
    """Fresh all-zeros state (t=0, m=v=s=0)."""
    return OptimizerState(
        t=0,
        m=np.zeros(dim),
        v=np.zeros(dim),
        s=np.zeros(dim),
    )


@dataclass(frozen=True)
class StepOutput:
    """Result of one optimizer step.

    effective_lr is the per-coordinate rate actually applied to m_hat (or to
    the raw momentum buffer for SGDM, broadcast from the scalar alpha_t);
    the decoupled weight-decay term is deliberately excluded from it.
    """

    new_params: ParamVector
    effective_lr: np.ndarray
    loss_scale_alpha: float


# ---------------------------------------------------------------------------
# Step operations
# ---------------------------------------------------------------------------


def _precheck(params: ParamVector, grad: GradVector, state: OptimizerState) -> None:
    if len(grad) != len(params):
        raise DimensionError(
            f"gradient length {len(grad)} != parameter length {len(params)}"
        )
    if state.m.size != len(params):
        raise DimensionError(
            f"state dimension {state.m.size} != parameter length {len(params)}"
        )
    bad = np.flatnonzero(~np.isfinite(grad.data))
    if bad.size:
        raise NumericError(f"non-finite gradient at coordinate {int(bad[0])}")
    if state.t >= _MAX_STEP:
        raise StateError("step counter would exceed 2**63 - 1")


def _adaptive_rate(
    grad: GradVector, state: OptimizerState, cfg: HyperConfig, alpha_t: float
) -> tuple[np.ndarray, np.ndarray]:
    """Advance m and v, return (m_hat, eta).

    Bias correction divides by (1 - beta**t) with the post-increment t, so
    the first call uses t=1. epsilon is added after the square root.
    """
    g = grad.data
    t = state.t
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * (g * g)
    m_hat = state.m / (1.0 - cfg.beta1**t)
    v_hat = state.v / (1.0 - cfg.beta2**t)
    eta = alpha_t / (np.sqrt(v_hat) + cfg.epsilon)
    return m_hat, eta


def _apply(
    params: ParamVector, step_vec: np.ndarray, alpha_t: float, cfg: HyperConfig
) -> ParamVector:
    """theta - step_vec, minus the decoupled decay alpha_t * lambda * theta.

    The decay uses the scheduled scalar alpha_t (never the adaptive rate)
    and is skipped entirely at lambda=0 so it cannot perturb the update.
    """
    new = params.data - step_vec
    if cfg.weight_decay != 0.0:
        new = new - (alpha_t * cfg.weight_decay) * params.data
    return params.with_data(new)


def adam_step(
    params: ParamVector,
    grad: GradVector,
    state: OptimizerState,
    cfg: HyperConfig,
) -> StepOutput:
    """One Adam step.

    m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2
    m_hat = m/(1-b1^t);    v_hat = v/(1-b2^t)
    eta = alpha_t / (sqrt(v_hat) + eps)
    theta <- theta - eta*m_hat - alpha_t*lambda*theta
    """
    _precheck(params, grad, state)
    state.t += 1
    alpha_t = scheduled_alpha(cfg.schedule, cfg.base_alpha, state.t)
    m_hat, eta = _adaptive_rate(grad, state, cfg, alpha_t)
    return StepOutput(_apply(params, eta * m_hat, alpha_t, cfg), eta, alpha_t)


def adamod_step(
    params: ParamVector,
    grad: GradVector,
    state: OptimizerState,
    cfg: HyperConfig,
) -> StepOutput:
    """One EMA-bounded Adam step.

    Moments and eta as in adam_step, then

        s <- b3*s + (1-b3)*eta        (s0 = 0, no bias correction)
        eta_hat = min(eta, s)         (elementwise)
        theta <- theta - eta_hat*m_hat - alpha_t*lambda*theta

    s is deliberately left uncorrected: starting from s0=0 makes the bound
    tight early, so the optimizer self-warms-up. With beta3=0 the bound
    equals eta and the step reproduces adam_step bitwise.
    """
    _precheck(params, grad, state)
    state.t += 1
    alpha_t = scheduled_alpha(cfg.schedule, cfg.base_alpha, state.t)
    m_hat, eta = _adaptive_rate(grad, state, cfg, alpha_t)
    state.s = cfg.beta3 * state.s + (1.0 - cfg.beta3) * eta
    eta_hat = elementwise_min(eta, state.s)
    return StepOutput(_apply(params, eta_hat * m_hat, alpha_t, cfg), eta_hat, alpha_t)


def sgdm_step(
    params: ParamVector,
    grad: GradVector,
    state: OptimizerState,
    cfg: HyperConfig,
) -> StepOutput:
    """One SGD step with gradient-accumulating momentum.

    m <- b1*m + g;  theta <- theta - alpha_t*m - alpha_t*lambda*theta

    beta1 doubles as the momentum factor; beta2, beta3 and epsilon are
    ignored. The accumulating form (not the EMA form) means the effective
    step is ~1/(1-b1) times a plain SGD step once m saturates.
    """
    _precheck(params, grad, state)
    state.t += 1
    alpha_t = scheduled_alpha(cfg.schedule, cfg.base_alpha, state.t)
    state.m = cfg.beta1 * state.m + grad.data
    effective = np.full(len(params), alpha_t)
    return StepOutput(
        _apply(params, alpha_t * state.m, alpha_t, cfg), effective, alpha_t
    )


STEP_FUNCTIONS = {
    "sgdm": sgdm_step,
    "adam": adam_step,
    "adamod": adamod_step,
}


# ---------------------------------------------------------------------------
# Reference oracle
# ---------------------------------------------------------------------------


def ema_expansion_oracle(eta_history: list[np.ndarray], beta3: float) -> np.ndarray:
    """Brute-force reference for the learning-rate EMA.

    Evaluates the explicit unroll of s_k = b3*s_{k-1} + (1-b3)*eta_k from
    s0 = 0:

        s_t = (1-b3) * sum_{k=1..t} b3**(t-k) * eta_k

    The weights are computed directly and summed in one pass over the
    stacked history, a different association order than the incremental
    recurrence, which makes this a genuine cross-check rather than a
    re-implementation.
    """
    if not eta_history:
        raise ValueError("eta_history must be nonempty")
    t = len(eta_history)
    weights = (1.0 - beta3) * beta3 ** np.arange(t - 1, -1, -1, dtype=np.float64)
    return (weights[:, None] * np.stack(eta_history)).sum(axis=0)
