"""Central finite-difference verification of the hand-derived gradients."""

from __future__ import annotations

import numpy as np

from ..embeddings import EmbeddingMatrix
from ..vocab import EncodedSentence
from .model import DropoutPlan, TextCnn
from .ops import cross_entropy


def _pinned_scalars(model: TextCnn, name: str) -> int:
    """Flat scalar count pinned to zero at the start of an array (PAD rows)."""
    if name == "word_emb":
        return model.word_embeddings.dim
    if name == "aspect_emb":
        return model.aspect_embeddings.dim
    return 0


def kink_margin(
    model: TextCnn,
    sentence: EncodedSentence,
    aspect_token_indices: tuple[int, ...] | None = None,
) -> float:
    """How far this configuration sits from a ReLU/argmax non-smoothness.

    Finite differences are only a valid oracle where the loss is locally
    smooth; a pre-activation within epsilon of zero or an argmax near-tie
    makes the central difference straddle a kink. Returns the smallest
    distance over every relevant position: argmax uniqueness gaps for max
    pooling, distance below zero for all-negative filters, and |pre| over
    the averaged positions when average pooling is enabled.
    """
    plan = DropoutPlan(rate=0.0, mode="train")
    _, trace = model.forward(sentence, plan, aspect_token_indices)
    margin = np.inf
    for i, bank in enumerate(model.banks):
        pre, post = trace.pre[i], trace.post[i]
        for f in range(bank.count):
            top = np.sort(post[f])[::-1]
            if top[0] > 0:
                gap = top[0] - (top[1] if len(top) > 1 else 0.0)
                margin = min(margin, gap)
            else:
                margin = min(margin, -pre[f].max())
        if model.pooling == "max_avg":
            vc = trace.avg_counts[i]
            margin = min(margin, np.abs(pre[:, :vc]).min())
    return float(margin)


def gradient_check(
    model: TextCnn,
    sentence: EncodedSentence,
    target: np.ndarray,
    aspect_token_indices: tuple[int, ...] | None = None,
    epsilon: float = 1e-4,
    max_params: int | None = None,
    seed: int = 0,
    grads: dict[str, np.ndarray] | None = None,
) -> float:
    """Worst relative disagreement between backward() and finite differences.

    Perturbs every trainable scalar by +-epsilon (or a seeded random
    subsample of ``max_params`` scalars on larger models), recomputes the
    loss with dropout disabled, and compares the central difference against
    the analytic gradient as |analytic - numeric| / max(1, |analytic|).
    PAD embedding rows are pinned to zero rather than trained, so they are
    skipped. Pass precomputed ``grads`` only for fault-injection diagnostics.
    """
    plan = DropoutPlan(rate=0.0, mode="train")

    def loss() -> float:
        probs, _ = model.forward(sentence, plan, aspect_token_indices)
        return cross_entropy(probs, target)

    if grads is None:
        _, trace = model.forward(sentence, plan, aspect_token_indices)
        grads = model.backward(trace, target)

    params = model.trainable_params()
    candidates = []
    for name, array in params:
        start = _pinned_scalars(model, name)
        candidates.extend((name, i) for i in range(start, array.size))
    if max_params is not None and len(candidates) > max_params:
        rng = np.random.default_rng(seed)
        chosen = rng.choice(len(candidates), size=max_params, replace=False)
        candidates = [candidates[i] for i in sorted(chosen.tolist())]

    arrays = dict(params)
    worst = 0.0
    for name, i in candidates:
        flat = arrays[name].reshape(-1)
        analytic = grads[name].reshape(-1)[i]
        original = flat[i]
        flat[i] = original + epsilon
        upper = loss()
        flat[i] = original - epsilon
        lower = loss()
        flat[i] = original
        numeric = (upper - lower) / (2.0 * epsilon)
        worst = max(worst, abs(analytic - numeric) / max(1.0, abs(analytic)))
    return float(worst)


def demo_model(
    task: str,
    seed: int = 0,
    n: int = 10,
    k: int = 8,
    m: int = 4,
    pooling: str = "max",
    min_margin: float = 2e-3,
) -> tuple[TextCnn, EncodedSentence, np.ndarray, tuple[int, ...] | None]:
    """Small model plus one example, guaranteed safe to gradient-check.

    ``task`` picks the architecture: 'aspect' uses widths 3/4/5 with 5
    output classes and no aspect vector; 'sentiment' uses widths 4/5/6 with
    3 classes and a shared-space aspect vector. Candidate configurations
    whose kink margin falls below ``min_margin`` are re-rolled
    deterministically, so any seed yields a smooth check point.
    """
    if task not in ("aspect", "sentiment"):
        raise ValueError(f"unknown gradient-check task {task!r}")
    if task == "aspect":
        widths, num_classes, aspect_mode = (3, 4, 5), 5, None
    else:
        widths, num_classes, aspect_mode = (4, 5, 6), 3, "shared"
    vocab_rows = 12
    for attempt in range(64):
        rng = np.random.default_rng(np.random.SeedSequence([seed, attempt]))
        values = rng.uniform(-0.25, 0.25, size=(vocab_rows, k))
        values[0] = 0.0
        model = TextCnn.build(
            EmbeddingMatrix(values),
            num_classes,
            widths,
            filters_per_width=m,
            rng=rng,
            aspect_mode=aspect_mode,
            pooling=pooling,
        )
        true_length = n - 2  # leave a little padding in play
        ids = np.concatenate(
            [rng.integers(1, vocab_rows, size=true_length), np.zeros(2, dtype=np.int64)]
        )
        sentence = EncodedSentence(ids.astype(np.int64), true_length)
        aspect_ids = (2, 3) if task == "sentiment" else None
        if kink_margin(model, sentence, aspect_ids) >= min_margin:
            break
    target = np.zeros(num_classes)
    target[: num_classes // 2 + 1] = 1.0 / (num_classes // 2 + 1)
    return model, sentence, target, aspect_ids
