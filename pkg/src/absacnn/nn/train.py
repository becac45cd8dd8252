"""Deterministic mini-batch training with Adadelta and early stopping."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..vocab import EncodedSentence
from .adadelta import AdadeltaState, adadelta_step
from .model import DropoutPlan, TextCnn, inference_plan
from .ops import cross_entropy

#: One training example: encoded sentence, aspect token ids (None for the
#: aspect-detection task), target distribution.
Example = tuple[EncodedSentence, tuple[int, ...] | None, np.ndarray]


def validation_pass(
    model: TextCnn, examples: Sequence[Example]
) -> tuple[float, np.ndarray]:
    """Mean inference-mode loss and the (N, C) probability matrix."""
    probs = np.empty((len(examples), model.num_classes))
    loss = 0.0
    plan = inference_plan()
    for i, (sentence, aspect_ids, target) in enumerate(examples):
        p, _ = model.forward(sentence, plan, aspect_ids)
        probs[i] = p
        loss += cross_entropy(p, target)
    return loss / len(examples), probs


def train_model(
    model: TextCnn,
    train_examples: Sequence[Example],
    valid_examples: Sequence[Example],
    *,
    batch_size: int,
    epochs: int,
    dropout_rate: float,
    patience: int,
    rng: np.random.Generator,
    rho: float = 0.95,
    epsilon: float = 1e-6,
    metric_name: str | None = None,
    metric_fn: Callable[[np.ndarray], float] | None = None,
) -> tuple[TextCnn, list[dict]]:
    """Train in place; return the best-validation snapshot and the history.

    Each epoch shuffles the training examples with ``rng``, averages
    gradients over mini-batches of ``batch_size`` (last batch short), and
    applies Adadelta. Validation loss drives early stopping: training stops
    after ``patience`` epochs without improvement, and the parameters from
    the best epoch are returned. ``metric_fn``, when given, maps the
    validation probability matrix to a reported per-epoch figure.

    History entries carry epoch number, train loss, valid loss, and the
    metric; with a fixed seed the whole trajectory is reproducible.
    """
    if len(train_examples) == 0:
        raise ValueError("training set is empty")
    if len(valid_examples) == 0:
        raise ValueError("validation set is empty")
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")

    state = AdadeltaState.for_model(model, rho=rho, epsilon=epsilon)
    plan = DropoutPlan(rate=dropout_rate, rng=rng, mode="train")
    history: list[dict] = []
    best_loss = np.inf
    best_model = model.copy()
    bad_epochs = 0

    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(train_examples))
        epoch_loss = 0.0
        for start in range(0, len(order), batch_size):
            batch = order[start : start + batch_size]
            grads = model.zero_grads()
            for j in batch:
                sentence, aspect_ids, target = train_examples[j]
                probs, trace = model.forward(sentence, plan, aspect_ids)
                epoch_loss += cross_entropy(probs, target)
                model.backward(trace, target, out=grads)
            for g in grads.values():
                g /= len(batch)
            adadelta_step(model, grads, state)
        train_loss = epoch_loss / len(train_examples)

        valid_loss, valid_probs = validation_pass(model, valid_examples)
        record = {
            "epoch": epoch,
            "train_loss": train_loss,
            "valid_loss": valid_loss,
        }
        if metric_fn is not None:
            record[metric_name or "metric"] = metric_fn(valid_probs)
        history.append(record)

        if valid_loss < best_loss:
            best_loss = valid_loss
            best_model = model.copy()
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= patience:
                break
    return best_model, history
