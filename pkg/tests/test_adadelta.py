"""Adadelta update rule against hand-evaluated values."""

import numpy as np
import pytest

from absacnn.embeddings import EmbeddingMatrix
from absacnn.errors import TrainingError
from absacnn.nn.adadelta import AdadeltaState, adadelta_step
from absacnn.nn.model import TextCnn
from absacnn.nn.ops import FilterBank


def scalar_model(value=1.0):
    """One trainable scalar in disguise: a single 1x1 bank bias is enough."""
    emb = EmbeddingMatrix(np.zeros((2, 1)), trainable=False)
    bank = FilterBank(1, np.array([[0.0]]), np.array([value]))
    return TextCnn(emb, [bank], np.zeros((1, 2)), np.zeros(2))


def zero_grads_like(model):
    return {name: np.zeros_like(a) for name, a in model.trainable_params()}


class TestUpdateRule:
    def test_first_step_hand_value(self):
        # rho=0.95, eps=1e-6, fresh accumulators, g=1:
        # E[g^2]=0.05, dx = -sqrt(1e-6)/sqrt(0.05+1e-6) ~ -0.004472
        model = scalar_model(value=0.0)
        state = AdadeltaState.for_model(model, rho=0.95, epsilon=1e-6)
        grads = zero_grads_like(model)
        grads["bank1_bias"][0] = 1.0
        adadelta_step(model, grads, state)
        expected = -np.sqrt(1e-6) / np.sqrt(0.05 + 1e-6)
        moved = model.banks[0].bias[0]
        assert abs(moved - expected) < 1e-12
        assert abs(moved - (-0.004472)) < 1e-6
        assert abs(state.sq_grad["bank1_bias"][0] - 0.05) < 1e-15

    def test_zero_gradient_decays_accumulators(self):
        model = scalar_model(value=3.0)
        state = AdadeltaState.for_model(model)
        state.sq_grad["bank1_bias"][0] = 0.8
        state.sq_delta["bank1_bias"][0] = 0.4
        adadelta_step(model, zero_grads_like(model), state)
        assert model.banks[0].bias[0] == 3.0
        assert abs(state.sq_grad["bank1_bias"][0] - 0.95 * 0.8) < 1e-15
        assert abs(state.sq_delta["bank1_bias"][0] - 0.95 * 0.4) < 1e-15

    def test_update_is_scale_free(self):
        # The first step magnitude is (almost) independent of |g|.
        steps = []
        for g in (1e-3, 1.0, 1e3):
            model = scalar_model(value=0.0)
            state = AdadeltaState.for_model(model)
            grads = zero_grads_like(model)
            grads["bank1_bias"][0] = g
            adadelta_step(model, grads, state)
            steps.append(abs(model.banks[0].bias[0]))
        assert steps[1] == pytest.approx(steps[2], rel=1e-3)
        # tiny gradients are damped by epsilon rather than amplified
        assert steps[0] < steps[1]

    def test_identical_runs_bitwise(self):
        def run():
            rng = np.random.default_rng(21)
            values = rng.uniform(-0.25, 0.25, size=(6, 4))
            values[0] = 0.0
            model = TextCnn.build(EmbeddingMatrix(values), 3, (2,), 3, rng)
            state = AdadeltaState.for_model(model)
            for step in range(10):
                grads = {
                    name: np.full_like(a, 0.01 * (step + 1))
                    for name, a in model.trainable_params()
                }
                adadelta_step(model, grads, state)
            return [a.copy() for _, a in model.trainable_params()]

        for first, second in zip(run(), run()):
            np.testing.assert_array_equal(first, second)

    def test_non_finite_gradient_aborts(self):
        model = scalar_model()
        state = AdadeltaState.for_model(model)
        grads = zero_grads_like(model)
        grads["out_weights"][0, 0] = np.nan
        with pytest.raises(TrainingError, match="out_weights"):
            adadelta_step(model, grads, state)

    def test_trainable_flag_respected(self):
        model = scalar_model()
        state = AdadeltaState.for_model(model)
        assert "word_emb" not in state.sq_grad  # frozen embeddings
