import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from texloom.guidance import (
    DenoiseOutput,
    GuidanceWeights,
    SingularityError,
    cfg_combine,
    disentangle_texture_condition,
    multi_cond_combine,
    omega2_schedule,
    texture_noise,
)
from texloom.schedule import ContractError, NoiseSchedule, SamplerConfig, build_schedule

SCHED = build_schedule(SamplerConfig(total_steps=40))


def rand_pair(seed, shape=(4, 4, 2)):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(shape), rng.standard_normal(shape)


# -- cfg_combine ------------------------------------------------------------


def test_cfg_omega_zero_returns_uncond():
    c, u = rand_pair(1)
    assert np.array_equal(cfg_combine(DenoiseOutput(c, u), 0.0), u)


def test_cfg_omega_one_returns_cond():
    c, u = rand_pair(2)
    assert np.max(np.abs(cfg_combine(DenoiseOutput(c, u), 1.0) - c)) <= 1e-15


def test_cfg_hand_value():
    out = DenoiseOutput(np.array([0.6]), np.array([0.2]))
    assert cfg_combine(out, 7.5)[0] == pytest.approx(3.2, abs=1e-12)


# -- texture_noise ------------------------------------------------------------


def test_texture_noise_inverts_add_noise_exactly():
    rng = np.random.default_rng(3)
    g = rng.standard_normal((5, 5, 4))
    eps = rng.standard_normal(g.shape)
    for t in (1, 20, 40):
        x_t = SCHED.add_noise(g, eps, t)
        assert np.max(np.abs(texture_noise(x_t, g, t, SCHED) - eps)) <= 1e-12


@given(seed=st.integers(0, 2**31), t=st.integers(1, 40))
@settings(max_examples=50, deadline=None)
def test_texture_noise_pins_x0_to_render(seed, t):
    rng = np.random.default_rng(seed)
    x_t = rng.standard_normal((3, 3, 4))
    g = rng.standard_normal(x_t.shape)
    x0 = SCHED.predict_x0(x_t, texture_noise(x_t, g, t, SCHED), t)
    assert np.max(np.abs(x0 - g)) <= 1e-6


def test_texture_noise_hand_value():
    sched = NoiseSchedule([0.64])
    out = texture_noise(np.array([1.0]), np.array([0.875]), 1, sched)
    assert out[0] == pytest.approx((1 - 0.8 * 0.875) / 0.6, abs=1e-12)
    assert out[0] == pytest.approx(0.5, abs=1e-12)


def test_texture_noise_singularity_guard():
    sched = NoiseSchedule([1.0 - 1e-12])
    with pytest.raises(SingularityError):
        texture_noise(np.zeros(1), np.zeros(1), 1, sched)


# -- disentangle ------------------------------------------------------------


def test_disentangle_null_condition():
    _, u = rand_pair(4)
    assert np.array_equal(disentangle_texture_condition(u, u, 7.5), u)


@given(seed=st.integers(0, 2**31), omega=st.floats(0.5, 15.0))
@settings(max_examples=100, deadline=None)
def test_disentangle_combine_inverse_pair(seed, omega):
    rng = np.random.default_rng(seed)
    e = rng.standard_normal((3, 3, 2))
    u = rng.standard_normal(e.shape)
    back = u + omega * (disentangle_texture_condition(e, u, omega) - u)
    assert np.max(np.abs(back - e)) <= 1e-9


def test_disentangle_hand_value():
    out = disentangle_texture_condition(np.array([0.5]), np.array([0.2]), 7.5)
    assert out[0] == pytest.approx(0.24, abs=1e-12)


def test_disentangle_rejects_zero_omega():
    with pytest.raises(ContractError):
        disentangle_texture_condition(np.zeros(1), np.zeros(1), 0.0)


# -- multi_cond_combine --------------------------------------------------------


def test_multi_cond_reduces_to_cfg_when_texture_weight_zero():
    c, u = rand_pair(5)
    rng = np.random.default_rng(6)
    e_tex = rng.standard_normal(c.shape)
    out = DenoiseOutput(c, u)
    w = GuidanceWeights.text_only(7.5)
    assert np.array_equal(multi_cond_combine(out, e_tex, w, 11), cfg_combine(out, 7.5))


@given(seed=st.integers(0, 2**31), omega=st.floats(0.5, 15.0), t=st.integers(1, 40))
@settings(max_examples=100, deadline=None)
def test_multi_cond_with_zero_text_weight_collapses_to_recalculated_noise(seed, omega, t):
    rng = np.random.default_rng(seed)
    shape = (3, 3, 4)
    c = rng.standard_normal(shape)
    u = rng.standard_normal(shape)
    x_t = rng.standard_normal(shape)
    g = rng.standard_normal(shape)
    eps_hat = texture_noise(x_t, g, t, SCHED)
    e_tex = disentangle_texture_condition(eps_hat, u, omega)
    w = GuidanceWeights.texture_only(omega)
    merged = multi_cond_combine(DenoiseOutput(c, u), e_tex, w, t)
    assert np.max(np.abs(merged - eps_hat)) <= 1e-9


def test_multi_cond_hand_value():
    out = DenoiseOutput(np.array([0.6]), np.array([0.2]))
    w = GuidanceWeights(omega=7.5, texture_weight_fn=lambda t: 4.5)
    merged = multi_cond_combine(out, np.array([0.24]), w, 1)
    assert merged[0] == pytest.approx(0.2 + 3 * 0.4 + 4.5 * 0.04, abs=1e-12)
    assert merged[0] == pytest.approx(1.58, abs=1e-12)


# -- texture weight schedule ---------------------------------------------------


def test_weight_schedule_endpoints():
    assert omega2_schedule(40, 40, 7.5) == pytest.approx(7.5)
    assert omega2_schedule(1, 40, 7.5) == 0.0


def test_weight_schedule_mid_step_value():
    # 20th step in sampling order (t = 21 of 40): omega * 20 / 39.
    assert omega2_schedule(21, 40, 7.5) == pytest.approx(7.5 * 20 / 39, abs=1e-12)
    assert omega2_schedule(21, 40, 7.5) == pytest.approx(3.846, abs=5e-4)


def test_weight_schedule_single_step():
    assert omega2_schedule(1, 1, 7.5) == 0.0


@given(omega=st.floats(0.5, 15.0), total=st.integers(2, 100))
@settings(max_examples=60, deadline=None)
def test_weights_sum_exactly_and_decay_monotonically(omega, total):
    w = GuidanceWeights.linear_decay(omega, total)
    prev = None
    for t in range(total, 0, -1):
        # The text weight is defined as omega minus the texture weight, so
        # the constraint holds by construction (and the float sum is within
        # one rounding of omega).
        assert w.text_weight(t) == omega - w.texture_weight(t)
        assert w.text_weight(t) + w.texture_weight(t) == pytest.approx(omega, rel=1e-15, abs=0)
        if prev is not None:
            assert w.texture_weight(t) <= prev
        prev = w.texture_weight(t)
    assert w.texture_weight(total) == pytest.approx(omega)
    assert w.texture_weight(1) == 0.0
