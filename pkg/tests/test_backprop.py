"""Forward/backward correctness: finite differences, routing, determinism."""

import numpy as np
import pytest

from absacnn.embeddings import EmbeddingMatrix
from absacnn.errors import ShapeError
from absacnn.nn.adadelta import AdadeltaState, adadelta_step
from absacnn.nn.gradcheck import demo_model, gradient_check, kink_margin
from absacnn.nn.model import DropoutPlan, TextCnn, inference_plan
from absacnn.nn.ops import FilterBank, cross_entropy
from absacnn.vocab import EncodedSentence


def small_embeddings(rows=10, dim=6, seed=0):
    rng = np.random.default_rng(seed)
    values = rng.uniform(-0.25, 0.25, size=(rows, dim))
    values[0] = 0.0
    return EmbeddingMatrix(values)


def small_sentence(rng, rows=10, length=8, padded=10):
    ids = np.zeros(padded, dtype=np.int64)
    ids[:length] = rng.integers(1, rows, size=length)
    return EncodedSentence(ids, length)


class TestGradientCheck:
    @pytest.mark.parametrize("task", ["aspect", "sentiment"])
    def test_analytic_matches_finite_differences(self, task):
        model, sentence, target, aspect_ids = demo_model(task, seed=2, k=6, m=3)
        assert gradient_check(model, sentence, target, aspect_ids) < 1e-4

    def test_corrupted_gradient_detected(self):
        model, sentence, _, aspect_ids = demo_model("aspect", seed=3, k=6, m=3)
        # One-hot target makes the target-class bias gradient large (~p-1),
        # so doubling it must break the tolerance decisively.
        target = np.zeros(model.num_classes)
        target[0] = 1.0
        plan = DropoutPlan(rate=0.0, mode="train")
        _, trace = model.forward(sentence, plan, aspect_ids)
        grads = model.backward(trace, target)
        assert abs(grads["out_bias"][0]) > 0.3
        grads["out_bias"][0] *= 2.0
        assert gradient_check(model, sentence, target, aspect_ids, grads=grads) > 0.3

    def test_epsilon_stability(self):
        model, sentence, target, aspect_ids = demo_model("sentiment", seed=4, k=6, m=2)
        base = gradient_check(model, sentence, target, aspect_ids, epsilon=1e-4)
        halved = gradient_check(model, sentence, target, aspect_ids, epsilon=5e-5)
        assert halved <= 10 * base + 1e-12

    def test_subsampling_is_deterministic(self):
        model, sentence, target, aspect_ids = demo_model("aspect", seed=5, k=6, m=3)
        first = gradient_check(model, sentence, target, aspect_ids, max_params=50, seed=1)
        second = gradient_check(model, sentence, target, aspect_ids, max_params=50, seed=1)
        assert first == second

    def test_avg_pooling_variant(self):
        model, sentence, target, _ = demo_model("aspect", seed=6, k=6, m=3, pooling="max_avg")
        assert model.pooling == "max_avg"
        assert gradient_check(model, sentence, target) < 1e-4

    def test_separate_aspect_space(self):
        for seed in range(20):  # skip configurations too close to a ReLU kink
            rng = np.random.default_rng(seed)
            aspect_emb = EmbeddingMatrix(rng.uniform(-0.25, 0.25, size=(5, 4)))
            aspect_emb.values[0] = 0.0
            model = TextCnn.build(
                small_embeddings(seed=seed),
                3,
                (2, 3),
                3,
                rng,
                aspect_mode="separate",
                aspect_embeddings=aspect_emb,
            )
            sentence = small_sentence(rng, length=7)
            if kink_margin(model, sentence, (2, 3)) >= 2e-3:
                break
        assert gradient_check(model, sentence, np.array([0.0, 1.0, 0.0]), (2, 3)) < 1e-4


class TestGradientRouting:
    def test_absent_token_row_gets_zero_gradient(self):
        rng = np.random.default_rng(8)
        model = TextCnn.build(small_embeddings(rows=10, seed=8), 3, (2,), 4, rng)
        ids = np.array([1, 2, 3, 0, 0], dtype=np.int64)
        sentence = EncodedSentence(ids, 3)
        _, trace = model.forward(sentence, DropoutPlan(rate=0.0, mode="train"))
        grads = model.backward(trace, np.array([1.0, 0.0, 0.0]))
        absent = sorted(set(range(10)) - {0, 1, 2, 3})
        np.testing.assert_array_equal(grads["word_emb"][absent], 0.0)

    def test_pad_row_gradient_zeroed(self):
        rng = np.random.default_rng(9)
        model = TextCnn.build(small_embeddings(seed=9), 3, (2,), 4, rng)
        sentence = small_sentence(rng, length=4, padded=8)
        _, trace = model.forward(sentence, DropoutPlan(rate=0.0, mode="train"))
        grads = model.backward(trace, np.array([0.0, 1.0, 0.0]))
        np.testing.assert_array_equal(grads["word_emb"][0], 0.0)

    def test_max_pool_routes_only_to_argmax_window(self):
        # One width-1 filter with weight 1 over scalar embeddings: the bank
        # weight gradient must equal the embedding value at the argmax row.
        emb = EmbeddingMatrix(np.array([[0.0], [0.3], [0.9], [0.5]]))
        bank = FilterBank(1, np.array([[1.0]]), np.zeros(1))
        model = TextCnn(emb, [bank], np.array([[1.0, -1.0]]), np.zeros(2))
        sentence = EncodedSentence(np.array([1, 2, 3], dtype=np.int64), 3)
        probs, trace = model.forward(sentence, DropoutPlan(rate=0.0, mode="train"))
        grads = model.backward(trace, np.array([1.0, 0.0]))
        dlogits_dmax = trace.probs[0] - 1.0  # logits are (max, -max)
        expected = (dlogits_dmax - trace.probs[1]) * 0.9
        assert abs(grads["bank1_weights"][0, 0] - expected) < 1e-12

    def test_backward_rejects_inference_trace(self):
        rng = np.random.default_rng(10)
        model = TextCnn.build(small_embeddings(seed=10), 3, (2,), 2, rng)
        sentence = small_sentence(rng)
        _, trace = model.forward(sentence, inference_plan())
        with pytest.raises(ValueError):
            model.backward(trace, np.array([1.0, 0.0, 0.0]))

    def test_backward_rejects_wrong_target_shape(self):
        rng = np.random.default_rng(11)
        model = TextCnn.build(small_embeddings(seed=11), 3, (2,), 2, rng)
        _, trace = model.forward(small_sentence(rng), DropoutPlan(rate=0.0, mode="train"))
        with pytest.raises(ShapeError):
            model.backward(trace, np.array([1.0, 0.0]))


class TestForward:
    def test_pooled_width_and_class_count(self):
        rng = np.random.default_rng(12)
        model = TextCnn.build(small_embeddings(seed=12), 7, (3, 4, 5), 100, rng)
        assert model.pooled_width == 300
        sentence = small_sentence(rng, length=9)
        probs, trace = model.forward(sentence, inference_plan())
        assert trace.pooled.shape == (300,)
        assert probs.shape == (7,)

    def test_avg_pooling_doubles_width(self):
        rng = np.random.default_rng(13)
        model = TextCnn.build(
            small_embeddings(seed=13), 3, (2, 3), 5, rng, pooling="max_avg"
        )
        assert model.pooled_width == 20
        _, trace = model.forward(small_sentence(rng), inference_plan())
        assert trace.pooled.shape == (20,)

    def test_inference_ignores_dropout_rate(self):
        rng = np.random.default_rng(14)
        model = TextCnn.build(small_embeddings(seed=14), 3, (2, 3), 4, rng)
        sentence = small_sentence(rng)
        lively = DropoutPlan(rate=0.5, rng=np.random.default_rng(0), mode="inference")
        silent = DropoutPlan(rate=0.0, mode="inference")
        p1, _ = model.forward(sentence, lively)
        p2, _ = model.forward(sentence, silent)
        np.testing.assert_array_equal(p1, p2)

    def test_all_pad_input_is_finite(self):
        rng = np.random.default_rng(15)
        model = TextCnn.build(small_embeddings(seed=15), 4, (2, 3), 3, rng)
        sentence = EncodedSentence(np.zeros(8, dtype=np.int64), 0)
        probs, _ = model.forward(sentence, inference_plan())
        assert np.isfinite(probs).all()
        assert abs(probs.sum() - 1.0) < 1e-9

    def test_out_of_range_index_rejected(self):
        rng = np.random.default_rng(16)
        model = TextCnn.build(small_embeddings(rows=5, seed=16), 3, (2,), 2, rng)
        sentence = EncodedSentence(np.array([1, 99, 0], dtype=np.int64), 2)
        with pytest.raises(ShapeError):
            model.forward(sentence, inference_plan())

    def test_random_index_rows_stay_in_bounds(self):
        rng = np.random.default_rng(17)
        model = TextCnn.build(small_embeddings(rows=9, seed=17), 3, (2, 3), 4, rng)
        for _ in range(100):
            ids = rng.integers(0, 9, size=10).astype(np.int64)
            probs, _ = model.forward(EncodedSentence(ids, 10), inference_plan())
            assert np.isfinite(probs).all()

    def test_aspect_expectations_enforced(self):
        rng = np.random.default_rng(17)
        plain = TextCnn.build(small_embeddings(seed=17), 3, (2,), 2, rng)
        shared = TextCnn.build(
            small_embeddings(seed=18), 3, (2,), 2, rng, aspect_mode="shared"
        )
        sentence = small_sentence(rng)
        with pytest.raises(ShapeError):
            plain.forward(sentence, inference_plan(), (1, 2))
        with pytest.raises(ShapeError):
            shared.forward(sentence, inference_plan())

    def test_dropout_plan_validation(self):
        with pytest.raises(ValueError):
            DropoutPlan(rate=1.0)
        with pytest.raises(ValueError):
            DropoutPlan(rate=0.5, mode="train")  # no generator
        with pytest.raises(ValueError):
            DropoutPlan(rate=0.1, mode="partial")


class TestTrainingDynamics:
    def _fixed_batch(self, seed):
        rng = np.random.default_rng(seed)
        model = TextCnn.build(small_embeddings(seed=seed), 3, (2, 3), 6, rng)
        batch = []
        for _ in range(8):
            sentence = small_sentence(rng, length=int(rng.integers(4, 9)))
            target = np.zeros(3)
            target[int(rng.integers(0, 3))] = 1.0
            batch.append((sentence, target))
        return model, batch

    def _batch_loss(self, model, batch):
        return float(
            np.mean([cross_entropy(model.predict_proba(s), t) for s, t in batch])
        )

    def test_loss_decreases_on_fixed_batch(self):
        model, batch = self._fixed_batch(seed=19)
        state = AdadeltaState.for_model(model)
        plan = DropoutPlan(rate=0.0, mode="train")
        losses = [self._batch_loss(model, batch)]
        for _ in range(25):
            grads = model.zero_grads()
            for sentence, target in batch:
                _, trace = model.forward(sentence, plan)
                model.backward(trace, target, out=grads)
            for g in grads.values():
                g /= len(batch)
            adadelta_step(model, grads, state)
            losses.append(self._batch_loss(model, batch))
        improvements = sum(1 for a, b in zip(losses, losses[1:]) if b < a)
        assert improvements >= 20

    def test_two_runs_identical(self):
        def run():
            model, batch = self._fixed_batch(seed=20)
            state = AdadeltaState.for_model(model)
            plan = DropoutPlan(rate=0.0, mode="train")
            trajectory = []
            for _ in range(5):
                grads = model.zero_grads()
                for sentence, target in batch:
                    _, trace = model.forward(sentence, plan)
                    model.backward(trace, target, out=grads)
                for g in grads.values():
                    g /= len(batch)
                adadelta_step(model, grads, state)
                trajectory.append(self._batch_loss(model, batch))
            return trajectory

        assert run() == run()
