"""Tests for the three step rules, schedules, and the EMA oracle."""

import numpy as np
import pytest

from momental import (
    ConfigError,
    Constant,
    DimensionError,
    GradVector,
    HyperConfig,
    LinearWarmup,
    NumericError,
    ParamVector,
    StateError,
    StepDecay,
    adam_step,
    adamod_step,
    ema_expansion_oracle,
    init_state,
    scheduled_alpha,
    sgdm_step,
)
from momental.optimizers import _MAX_STEP


def scalar(x):
    return ParamVector(np.array([float(x)]))


def grad(*xs):
    return GradVector(np.array([float(x) for x in xs]))


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------


def test_constant_schedule():
    assert scheduled_alpha(Constant(), 0.01, 1) == 0.01
    assert scheduled_alpha(Constant(), 0.01, 10_000) == 0.01


def test_linear_warmup_formula():
    # alpha_t = alpha0 + ((alpha_w - alpha0)/t_w) * t for t < t_w
    sch = LinearWarmup(alpha0=0.0, alpha_w=0.001, t_w=10)
    assert scheduled_alpha(sch, 0.001, 1) == pytest.approx(0.0001)
    assert scheduled_alpha(sch, 0.001, 5) == pytest.approx(0.0005)
    assert scheduled_alpha(sch, 0.001, 9) == pytest.approx(0.0009)


def test_linear_warmup_hands_off_to_nested_schedule():
    # from t = t_w the nested schedule runs, re-based at t - t_w
    sch = LinearWarmup(alpha0=0.0, alpha_w=0.01, t_w=5, then=StepDecay((3,), 0.5))
    assert scheduled_alpha(sch, 0.01, 5) == 0.01  # t'=0, before the milestone
    assert scheduled_alpha(sch, 0.01, 7) == 0.01  # t'=2
    assert scheduled_alpha(sch, 0.01, 8) == 0.005  # t'=3 hits the milestone
    assert scheduled_alpha(sch, 0.01, 100) == 0.005


def test_warmup_nondecreasing():
    sch = LinearWarmup(alpha0=1e-5, alpha_w=0.1, t_w=50)
    vals = [scheduled_alpha(sch, 0.1, t) for t in range(1, 80)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_step_decay_decreases_by_exactly_the_factor():
    sch = StepDecay(milestones=(5, 10), factor=0.1)
    assert scheduled_alpha(sch, 1.0, 4) == 1.0
    assert scheduled_alpha(sch, 1.0, 5) == pytest.approx(0.1)
    assert scheduled_alpha(sch, 1.0, 5) / scheduled_alpha(sch, 1.0, 4) == pytest.approx(0.1)
    assert scheduled_alpha(sch, 1.0, 10) == pytest.approx(0.01)


def test_schedule_validation():
    with pytest.raises(ConfigError):
        LinearWarmup(alpha0=0.2, alpha_w=0.1, t_w=5)  # alpha0 > alpha_w
    with pytest.raises(ConfigError):
        LinearWarmup(alpha0=0.0, alpha_w=0.1, t_w=0)
    with pytest.raises(ConfigError):
        StepDecay(milestones=(5, 5), factor=0.1)
    with pytest.raises(ConfigError):
        StepDecay(milestones=(5, 10), factor=0.0)
    with pytest.raises(ConfigError):
        StepDecay(milestones=(5, 10), factor=1.5)


# ---------------------------------------------------------------------------
# HyperConfig validation
# ---------------------------------------------------------------------------


def test_hyper_defaults():
    h = HyperConfig()
    assert (h.base_alpha, h.beta1, h.beta2, h.beta3) == (0.001, 0.9, 0.999, 0.999)
    assert (h.epsilon, h.weight_decay) == (1e-8, 0.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"base_alpha": 0.0},
        {"base_alpha": -1.0},
        {"beta1": 1.0},
        {"beta1": -0.1},
        {"beta2": 1.0},
        {"beta3": 1.0},  # bound would freeze at s=0 forever
        {"epsilon": 0.0},
        {"weight_decay": -1e-9},
    ],
)
def test_hyper_validation(kwargs):
    with pytest.raises(ConfigError):
        HyperConfig(**kwargs)


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


def test_adam_single_step_hand_value():
    # t=1: m_hat=1, v_hat=1, eta = 0.001/(1+1e-8), theta1 = 1 - eta ~ 0.999
    st = init_state(1)
    out = adam_step(scalar(1.0), grad(1.0), st, HyperConfig(base_alpha=0.001))
    assert abs(out.new_params.data[0] - 0.999) < 1e-10
    assert st.t == 1
    assert out.loss_scale_alpha == 0.001


def test_adam_first_step_scale_invariance():
    # m_hat/sqrt(v_hat) = sign(g) at t=1, so g=1000 lands at ~0.999 too
    st = init_state(1)
    out = adam_step(scalar(1.0), grad(1000.0), st, HyperConfig(base_alpha=0.001))
    assert abs(out.new_params.data[0] - 0.999) < 1e-10


def test_adam_first_step_magnitude_bounds():
    # |theta1 - theta0| = alpha*|g|/(|g|+eps): <= alpha always, and for
    # |g| >= 1e-3 the slack eps/(|g|+eps) is at most ~1e-5, so the step is
    # at least alpha*(1 - 1.1e-5). (A 10*eps-tight bound is impossible at
    # |g|=1e-3: the slack there is 1e-5 = 1000*eps.)
    alpha = 0.001
    for g in (1e-3, 1e-2, 1.0, 1e3, -5.0):
        st = init_state(1)
        out = adam_step(scalar(2.0), grad(g), st, HyperConfig(base_alpha=alpha))
        delta = abs(out.new_params.data[0] - 2.0)
        assert delta <= alpha
        assert delta >= alpha * (1.0 - 1.1e-5)


def test_adam_zero_gradient_is_identity():
    # eta = alpha/eps is huge but m_hat = 0, so the update is exactly zero
    st = init_state(2)
    p = ParamVector(np.array([3.0, -4.0]))
    out = adam_step(p, grad(0.0, 0.0), st, HyperConfig())
    np.testing.assert_array_equal(out.new_params.data, p.data)
    assert out.effective_lr[0] == pytest.approx(0.001 / 1e-8)


def test_adam_decoupled_weight_decay():
    # g=0 isolates the decay term: theta <- theta - alpha*lambda*theta
    st = init_state(1)
    out = adam_step(
        scalar(2.0), grad(0.0), st, HyperConfig(base_alpha=0.001, weight_decay=0.01)
    )
    assert out.new_params.data[0] == pytest.approx(2.0 * (1.0 - 0.001 * 0.01))
    # decay is excluded from the reported rate
    assert out.effective_lr[0] == pytest.approx(0.001 / 1e-8)


def test_adam_uses_scheduled_alpha():
    sch = LinearWarmup(alpha0=0.0, alpha_w=0.01, t_w=10)
    st = init_state(1)
    out = adam_step(scalar(1.0), grad(1.0), st, HyperConfig(base_alpha=0.01, schedule=sch))
    assert out.loss_scale_alpha == pytest.approx(0.001)  # 0 + (0.01/10)*1
    assert abs(abs(out.new_params.data[0] - 1.0) - 0.001) < 1e-8


# ---------------------------------------------------------------------------
# SGDM
# ---------------------------------------------------------------------------


def test_sgdm_two_hand_steps():
    st = init_state(1)
    h = HyperConfig(base_alpha=0.1, beta1=0.9)
    # step 1: m = 1, theta = 0 - 0.1*1 = -0.1
    out1 = sgdm_step(scalar(0.0), grad(1.0), st, h)
    assert out1.new_params.data[0] == pytest.approx(-0.1)
    # step 2: m = 0.9*1 + 1 = 1.9, theta = -0.1 - 0.1*1.9 = -0.29
    out2 = sgdm_step(out1.new_params, grad(1.0), st, h)
    assert out2.new_params.data[0] == pytest.approx(-0.29)
    assert st.t == 2


def test_sgdm_zero_gradient_zero_momentum_is_identity():
    st = init_state(2)
    p = ParamVector(np.array([1.0, 2.0]))
    out = sgdm_step(p, grad(0.0, 0.0), st, HyperConfig(base_alpha=0.1))
    np.testing.assert_array_equal(out.new_params.data, p.data)


def test_sgdm_effective_lr_is_broadcast_alpha():
    st = init_state(3)
    out = sgdm_step(
        ParamVector(np.zeros(3)), grad(1.0, 2.0, 3.0), st, HyperConfig(base_alpha=0.05)
    )
    np.testing.assert_array_equal(out.effective_lr, [0.05, 0.05, 0.05])


def test_sgdm_ignores_adam_only_hyperparameters():
    h1 = HyperConfig(base_alpha=0.1, beta2=0.999, beta3=0.999, epsilon=1e-8)
    h2 = HyperConfig(base_alpha=0.1, beta2=0.5, beta3=0.0, epsilon=1e-3)
    st1, st2 = init_state(1), init_state(1)
    o1 = sgdm_step(scalar(1.0), grad(2.0), st1, h1)
    o2 = sgdm_step(scalar(1.0), grad(2.0), st2, h2)
    np.testing.assert_array_equal(o1.new_params.data, o2.new_params.data)


# ---------------------------------------------------------------------------
# Bounded variant
# ---------------------------------------------------------------------------


def test_bounded_first_step_is_contracted_adam_step():
    # s1 = (1-b3)*eta1 < eta1, so step 1 is exactly (1-b3) times Adam's
    g0 = grad(0.7)
    dA = adam_step(scalar(0.0), g0, init_state(1), HyperConfig()).new_params.data
    for b3 in (0.9, 0.99, 0.999):
        dM = adamod_step(
            scalar(0.0), g0, init_state(1), HyperConfig(beta3=b3)
        ).new_params.data
        np.testing.assert_allclose(dM, (1.0 - b3) * dA, rtol=1e-14)


def test_bounded_first_step_hand_value():
    # eta1 ~ 0.001, s1 = 0.1*eta1 ~ 0.0001, theta1 ~ 1 - 0.0001
    st = init_state(1)
    out = adamod_step(scalar(1.0), grad(1.0), st, HyperConfig(base_alpha=0.001, beta3=0.9))
    assert abs(out.new_params.data[0] - 0.9999) < 1e-9
    assert abs(out.effective_lr[0] - 0.0001) < 1e-12


def test_bounded_rate_never_exceeds_unbounded_or_s():
    st = init_state(4)
    p = ParamVector(np.zeros(4))
    h = HyperConfig(base_alpha=0.01, beta3=0.99)
    for t in range(1, 200):
        g = GradVector(np.sin(np.arange(4) + t * 0.7) * (1.0 + (t % 5)))
        out = adamod_step(p, g, st, h)
        # recompute the unbounded eta from the post-step state
        v_hat = st.v / (1.0 - h.beta2**st.t)
        eta = out.loss_scale_alpha / (np.sqrt(v_hat) + h.epsilon)
        assert np.all(out.effective_lr <= eta)
        assert np.all(out.effective_lr <= st.s)
        p = out.new_params


def test_bounded_state_nonnegative():
    st = init_state(3)
    p = ParamVector(np.zeros(3))
    h = HyperConfig(base_alpha=0.01, beta3=0.9)
    for t in range(1, 100):
        g = GradVector(np.cos(np.arange(3) * 1.3 + t))
        p = adamod_step(p, g, st, h).new_params
        assert np.all(st.v >= 0.0)
        assert np.all(st.s >= 0.0)


def test_bounded_equals_adam_at_beta3_zero():
    hA = HyperConfig(base_alpha=0.01)
    hM = HyperConfig(base_alpha=0.01, beta3=0.0)
    stA, stM = init_state(2), init_state(2)
    pA = pM = ParamVector(np.array([1.0, -2.0]))
    for t in range(1, 50):
        g = GradVector(np.array([np.sin(t * 0.3), np.cos(t * 0.5)]))
        outA = adam_step(pA, g, stA, hA)
        outM = adamod_step(pM, g, stM, hM)
        pA, pM = outA.new_params, outM.new_params
        np.testing.assert_array_equal(pA.data, pM.data)
        np.testing.assert_array_equal(outA.effective_lr, outM.effective_lr)


def test_bounded_s_matches_expansion_oracle():
    # feed adam and the bounded step the same gradients; adam's effective_lr
    # is the unbounded eta, so the oracle applied to that history must agree
    # with the incrementally maintained s
    h = HyperConfig(base_alpha=0.01, beta3=0.95)
    hA = HyperConfig(base_alpha=0.01)
    stA, stM = init_state(3), init_state(3)
    p = ParamVector(np.zeros(3))
    etas = []
    for t in range(1, 40):
        g = GradVector(np.array([1.0, 0.1, 10.0]) * (1.0 + np.sin(t)))
        etas.append(adam_step(p, g, stA, hA).effective_lr)
        adamod_step(p, g, stM, h)
        oracle = ema_expansion_oracle(etas, 0.95)
        np.testing.assert_allclose(stM.s, oracle, rtol=1e-10)


# ---------------------------------------------------------------------------
# Shared error contracts
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("step", [adam_step, adamod_step, sgdm_step])
def test_non_finite_gradient_names_first_coordinate(step):
    st = init_state(3)
    with pytest.raises(NumericError, match="coordinate 1"):
        step(ParamVector(np.zeros(3)), grad(1.0, np.nan, np.inf), st, HyperConfig())
    assert st.t == 0  # state untouched on error


@pytest.mark.parametrize("step", [adam_step, adamod_step, sgdm_step])
def test_gradient_length_mismatch(step):
    with pytest.raises(DimensionError):
        step(ParamVector(np.zeros(3)), grad(1.0), init_state(3), HyperConfig())


@pytest.mark.parametrize("step", [adam_step, adamod_step, sgdm_step])
def test_state_dimension_mismatch(step):
    with pytest.raises(DimensionError):
        step(ParamVector(np.zeros(3)), grad(1.0, 2.0, 3.0), init_state(2), HyperConfig())


@pytest.mark.parametrize("step", [adam_step, adamod_step, sgdm_step])
def test_step_counter_overflow_guard(step):
    st = init_state(1)
    st.t = _MAX_STEP
    with pytest.raises(StateError):
        step(scalar(0.0), grad(1.0), st, HyperConfig())
    # one short of the cap still works and lands exactly on it
    st.t = _MAX_STEP - 1
    step(scalar(0.0), grad(1.0), st, HyperConfig())
    assert st.t == _MAX_STEP


def test_t_increments_by_exactly_one():
    st = init_state(1)
    for expected in (1, 2, 3):
        adam_step(scalar(0.0), grad(1.0), st, HyperConfig())
        assert st.t == expected


# ---------------------------------------------------------------------------
# EMA expansion oracle
# ---------------------------------------------------------------------------


def test_oracle_single_entry():
    out = ema_expansion_oracle([np.array([0.004])], 0.9)
    np.testing.assert_allclose(out, [(1 - 0.9) * 0.004])


def test_oracle_constant_history_geometric_closed_form():
    # n copies of c: s_n = c*(1 - b3**n)
    c = 0.37
    for n in (1, 2, 5, 30):
        out = ema_expansion_oracle([np.array([c])] * n, 0.8)
        np.testing.assert_allclose(out, [c * (1.0 - 0.8**n)], rtol=1e-12)


def test_oracle_beta3_zero_returns_last():
    hist = [np.array([1.0, 2.0]), np.array([3.0, 4.0]), np.array([5.0, 6.0])]
    np.testing.assert_array_equal(ema_expansion_oracle(hist, 0.0), [5.0, 6.0])


def test_oracle_recurrence_hand_value():
    # s2 = 0.9*(0.1*0.001) + 0.1*0.002 = 0.00029
    out = ema_expansion_oracle([np.array([0.001]), np.array([0.002])], 0.9)
    np.testing.assert_allclose(out, [0.00029], rtol=1e-15)


def test_oracle_rejects_empty_history():
    with pytest.raises(ValueError):
        ema_expansion_oracle([], 0.9)
