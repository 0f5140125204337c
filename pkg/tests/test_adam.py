import numpy as np
import pytest

from vcbot.adam import AdamState, adam_step
from vcbot.errors import DivergenceError


def test_zero_gradient_keeps_params():
    theta = {"w": np.array([1.5, -0.5])}
    state = AdamState()
    for _ in range(5):
        adam_step(theta, {"w": np.zeros(2)}, state)
    assert np.array_equal(theta["w"], np.array([1.5, -0.5]))


def test_first_step_moves_by_learning_rate():
    theta = {"w": np.array([1.0])}
    adam_step(theta, {"w": np.array([1.0])}, AdamState())
    # bias-corrected m_hat = 1, v_hat = 1 -> step of alpha/(1 + eps)
    assert theta["w"][0] == pytest.approx(1.0 - 0.001, abs=1e-8)


def test_two_identical_steps_accumulate():
    theta = {"w": np.array([1.0])}
    state = AdamState()
    adam_step(theta, {"w": np.array([1.0])}, state)
    adam_step(theta, {"w": np.array([1.0])}, state)
    assert theta["w"][0] == pytest.approx(1.0 - 0.002, abs=1e-6)


def test_nonfinite_gradient_aborts():
    theta = {"w": np.array([1.0])}
    with pytest.raises(DivergenceError):
        adam_step(theta, {"w": np.array([np.nan])}, AdamState())


def test_moments_shaped_like_tensors():
    theta = {"w": np.zeros((3, 2)), "b": np.zeros(4)}
    grads = {"w": np.ones((3, 2)), "b": np.ones(4)}
    state = AdamState()
    adam_step(theta, grads, state)
    assert state.m["w"].shape == (3, 2)
    assert state.v["b"].shape == (4,)
    assert state.step == 1
