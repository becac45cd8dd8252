"""Fixed-architecture text CNN with hand-derived backpropagation.

One class covers both tasks: aspect detection embeds word tokens only
(input rows of width k), sentiment additionally concatenates an aspect
vector onto every row (width k + k_a). Convolution windows may cover PAD
rows; PAD embeds to zero, so such windows contribute only the filter bias.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..embeddings import EmbeddingMatrix
from ..errors import ShapeError
from ..vocab import PAD_INDEX, EncodedSentence
from .ops import (
    LOG_EPS,
    FilterBank,
    convolve_windows,
    relu,
    sliding_windows,
    softmax,
)

POOLING_MODES = ("max", "max_avg")


@dataclass
class DropoutPlan:
    """Inverted dropout on the pooled feature vector.

    Active only in train mode: kept components are scaled by 1/(1 - rate)
    so inference is a plain forward pass.
    """

    rate: float
    rng: np.random.Generator | None = None
    mode: str = "train"

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise ValueError(f"dropout rate must lie in [0, 1), got {self.rate}")
        if self.mode not in ("train", "inference"):
            raise ValueError(f"unknown dropout mode {self.mode!r}")
        if self.mode == "train" and self.rate > 0.0 and self.rng is None:
            raise ValueError("train-mode dropout with rate > 0 needs a generator")

    def draw_mask(self, size: int) -> np.ndarray:
        if self.mode != "train" or self.rate == 0.0:
            return np.ones(size)
        keep = self.rng.random(size) >= self.rate
        return keep / (1.0 - self.rate)


def inference_plan() -> DropoutPlan:
    return DropoutPlan(rate=0.0, mode="inference")


@dataclass
class ForwardTrace:
    """Everything backward() needs from one forward pass."""

    mode: str
    token_indices: np.ndarray
    aspect_token_indices: tuple[int, ...] | None
    x: np.ndarray
    windows: list[np.ndarray] = field(default_factory=list)
    pre: list[np.ndarray] = field(default_factory=list)
    post: list[np.ndarray] = field(default_factory=list)
    argmax: list[np.ndarray] = field(default_factory=list)
    avg_counts: list[int] = field(default_factory=list)
    pooled: np.ndarray | None = None
    drop_mask: np.ndarray | None = None
    dropped: np.ndarray | None = None
    logits: np.ndarray | None = None
    probs: np.ndarray | None = None


class TextCnn:
    """Multi-width convolution, pooling and softmax over embedded tokens."""

    def __init__(
        self,
        word_embeddings: EmbeddingMatrix,
        banks: list[FilterBank],
        out_weights: np.ndarray,
        out_bias: np.ndarray,
        aspect_mode: str | None = None,
        aspect_embeddings: EmbeddingMatrix | None = None,
        pooling: str = "max",
    ):
        if pooling not in POOLING_MODES:
            raise ValueError(f"unknown pooling mode {pooling!r}")
        if aspect_mode not in (None, "shared", "separate"):
            raise ValueError(f"unknown aspect mode {aspect_mode!r}")
        if (aspect_mode == "separate") != (aspect_embeddings is not None):
            raise ShapeError(
                "a separate aspect embedding matrix is required exactly when "
                "aspect_mode='separate'"
            )
        widths = [b.width for b in banks]
        if len(set(widths)) != len(widths):
            raise ShapeError(f"duplicate filter widths {widths}")
        self.word_embeddings = word_embeddings
        self.aspect_embeddings = aspect_embeddings
        self.aspect_mode = aspect_mode
        self.banks = list(banks)
        self.out_weights = out_weights
        self.out_bias = out_bias
        self.pooling = pooling
        expected = (self.pooled_width, self.num_classes)
        if out_weights.shape != expected:
            raise ShapeError(
                f"output layer weights {out_weights.shape}, expected {expected}"
            )
        for bank in banks:
            if bank.weights.shape[1] != bank.width * self.input_dim:
                raise ShapeError(
                    f"bank of width {bank.width} expects input width "
                    f"{bank.weights.shape[1] // bank.width}, model input is "
                    f"{self.input_dim}"
                )

    # ---- geometry ----------------------------------------------------

    @property
    def embedding_dim(self) -> int:
        return self.word_embeddings.dim

    @property
    def aspect_dim(self) -> int:
        if self.aspect_mode is None:
            return 0
        if self.aspect_mode == "shared":
            return self.word_embeddings.dim
        return self.aspect_embeddings.dim

    @property
    def input_dim(self) -> int:
        return self.embedding_dim + self.aspect_dim

    @property
    def pooled_width(self) -> int:
        total = sum(b.count for b in self.banks)
        return total * 2 if self.pooling == "max_avg" else total

    @property
    def num_classes(self) -> int:
        return self.out_bias.shape[0]

    # ---- construction ------------------------------------------------

    @classmethod
    def build(
        cls,
        word_embeddings: EmbeddingMatrix,
        num_classes: int,
        filter_widths: tuple[int, ...],
        filters_per_width: int,
        rng: np.random.Generator,
        aspect_mode: str | None = None,
        aspect_embeddings: EmbeddingMatrix | None = None,
        pooling: str = "max",
    ) -> "TextCnn":
        """Seeded construction; filters and the output layer get uniform
        Xavier-style init, biases start at zero."""
        k = word_embeddings.dim
        if aspect_mode is None:
            d = k
        elif aspect_mode == "shared":
            d = 2 * k
        else:
            d = k + aspect_embeddings.dim
        banks = []
        for h in filter_widths:
            fan_in, fan_out = h * d, filters_per_width
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            weights = rng.uniform(-bound, bound, size=(filters_per_width, h * d))
            banks.append(FilterBank(h, weights, np.zeros(filters_per_width)))
        pooled = filters_per_width * len(banks)
        if pooling == "max_avg":
            pooled *= 2
        bound = np.sqrt(6.0 / (pooled + num_classes))
        out_weights = rng.uniform(-bound, bound, size=(pooled, num_classes))
        return cls(
            word_embeddings,
            banks,
            out_weights,
            np.zeros(num_classes),
            aspect_mode=aspect_mode,
            aspect_embeddings=aspect_embeddings,
            pooling=pooling,
        )

    def copy(self) -> "TextCnn":
        aspect_emb = None
        if self.aspect_embeddings is not None:
            aspect_emb = EmbeddingMatrix(
                self.aspect_embeddings.values.copy(), self.aspect_embeddings.trainable
            )
        return TextCnn(
            EmbeddingMatrix(
                self.word_embeddings.values.copy(), self.word_embeddings.trainable
            ),
            [FilterBank(b.width, b.weights.copy(), b.bias.copy()) for b in self.banks],
            self.out_weights.copy(),
            self.out_bias.copy(),
            aspect_mode=self.aspect_mode,
            aspect_embeddings=aspect_emb,
            pooling=self.pooling,
        )

    # ---- parameter registry -------------------------------------------

    def all_arrays(self) -> list[tuple[str, np.ndarray]]:
        """Every parameter array in the fixed serialization order."""
        arrays = [("word_emb", self.word_embeddings.values)]
        if self.aspect_embeddings is not None:
            arrays.append(("aspect_emb", self.aspect_embeddings.values))
        for bank in self.banks:
            arrays.append((f"bank{bank.width}_weights", bank.weights))
            arrays.append((f"bank{bank.width}_bias", bank.bias))
        arrays.append(("out_weights", self.out_weights))
        arrays.append(("out_bias", self.out_bias))
        return arrays

    def trainable_params(self) -> list[tuple[str, np.ndarray]]:
        skip = set()
        if not self.word_embeddings.trainable:
            skip.add("word_emb")
        if self.aspect_embeddings is not None and not self.aspect_embeddings.trainable:
            skip.add("aspect_emb")
        return [(n, a) for n, a in self.all_arrays() if n not in skip]

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(array) for name, array in self.trainable_params()}

    # ---- forward -------------------------------------------------------

    def _aspect_matrix(self) -> np.ndarray:
        if self.aspect_mode == "separate":
            return self.aspect_embeddings.values
        return self.word_embeddings.values

    def forward(
        self,
        sentence: EncodedSentence,
        plan: DropoutPlan,
        aspect_token_indices: tuple[int, ...] | None = None,
    ) -> tuple[np.ndarray, ForwardTrace]:
        """Embed, convolve, pool, (dropout,) classify one sentence.

        ``aspect_token_indices`` is required when the model was built with
        an aspect mode; an empty tuple yields a zero aspect vector, which is
        the ablation hook used to measure aspect-blind behaviour.
        """
        emb = self.word_embeddings.values
        ids = sentence.indices
        if ids.min() < 0 or ids.max() >= emb.shape[0]:
            raise ShapeError("embed: token index outside the embedding matrix")
        k = self.embedding_dim
        if self.aspect_mode is None:
            if aspect_token_indices is not None:
                raise ShapeError("embed: this model does not take an aspect vector")
            x = emb[ids]
        else:
            if aspect_token_indices is None:
                raise ShapeError("embed: this model requires aspect token indices")
            amat = self._aspect_matrix()
            if len(aspect_token_indices) == 0:
                av = np.zeros(self.aspect_dim)
            else:
                av = amat[list(aspect_token_indices)].mean(axis=0)
            x = np.empty((len(ids), self.input_dim))
            x[:, :k] = emb[ids]
            x[:, k:] = av

        trace = ForwardTrace(
            mode=plan.mode,
            token_indices=ids,
            aspect_token_indices=aspect_token_indices,
            x=x,
        )
        max_blocks = []
        avg_blocks = []
        for bank in self.banks:
            windows = sliding_windows(x, bank.width)
            pre = convolve_windows(windows, bank)
            post = relu(pre)
            arg = np.argmax(post, axis=1)
            trace.windows.append(windows)
            trace.pre.append(pre)
            trace.post.append(post)
            trace.argmax.append(arg)
            max_blocks.append(post[np.arange(bank.count), arg])
            if self.pooling == "max_avg":
                length = post.shape[1]
                vc = min(max(sentence.true_length - bank.width + 1, 1), length)
                trace.avg_counts.append(vc)
                avg_blocks.append(post[:, :vc].mean(axis=1))

        pooled = np.concatenate(max_blocks + avg_blocks)
        mask = plan.draw_mask(pooled.shape[0])
        dropped = pooled * mask
        logits = dropped @ self.out_weights + self.out_bias
        probs = softmax(logits)
        trace.pooled = pooled
        trace.drop_mask = mask
        trace.dropped = dropped
        trace.logits = logits
        trace.probs = probs
        return probs, trace

    def predict_proba(
        self,
        sentence: EncodedSentence,
        aspect_token_indices: tuple[int, ...] | None = None,
    ) -> np.ndarray:
        probs, _ = self.forward(sentence, inference_plan(), aspect_token_indices)
        return probs

    # ---- backward -------------------------------------------------------

    def backward(
        self,
        trace: ForwardTrace,
        target: np.ndarray,
        out: dict[str, np.ndarray] | None = None,
    ) -> dict[str, np.ndarray]:
        """Exact gradients of cross_entropy(forward) for every trainable array.

        Max pooling routes gradient only to each filter's argmax position;
        the PAD embedding row is zeroed so padding never learns. When ``out``
        is given, gradients are accumulated into it (mini-batch use).
        """
        if trace.mode != "train":
            raise ValueError("backward requires a trace from a train-mode forward")
        probs = trace.probs
        if probs is None or target.shape != probs.shape:
            raise ShapeError(
                f"backward: target shape {target.shape} does not match "
                f"{None if probs is None else probs.shape}"
            )
        grads = out if out is not None else self.zero_grads()
        trainable = dict(self.trainable_params())

        # Loss is -sum(t * log(p + eps)); the eps shows up as p/(p + eps)
        # factors so the analytic gradient matches finite differences exactly.
        ratio = probs / (probs + LOG_EPS)
        dlogits = probs * np.dot(target, ratio) - target * ratio

        grads["out_weights"] += np.outer(trace.dropped, dlogits)
        grads["out_bias"] += dlogits
        dpooled = (self.out_weights @ dlogits) * trace.drop_mask

        total = sum(b.count for b in self.banks)
        dx = np.zeros_like(trace.x)
        offset = 0
        for i, bank in enumerate(self.banks):
            m = bank.count
            dpost = np.zeros_like(trace.post[i])
            dpost[np.arange(m), trace.argmax[i]] += dpooled[offset : offset + m]
            if self.pooling == "max_avg":
                vc = trace.avg_counts[i]
                davg = dpooled[total + offset : total + offset + m]
                dpost[:, :vc] += davg[:, None] / vc
            dpre = dpost * (trace.pre[i] > 0)
            grads[f"bank{bank.width}_weights"] += dpre @ trace.windows[i]
            grads[f"bank{bank.width}_bias"] += dpre.sum(axis=1)
            dwindows = dpre.T @ bank.weights
            length, d = dwindows.shape[0], trace.x.shape[1]
            for o in range(bank.width):
                dx[o : o + length] += dwindows[:, o * d : (o + 1) * d]
            offset += m

        k = self.embedding_dim
        if "word_emb" in trainable:
            np.add.at(grads["word_emb"], trace.token_indices, dx[:, :k])
        if self.aspect_mode is not None and trace.aspect_token_indices:
            dav = dx[:, k:].sum(axis=0) / len(trace.aspect_token_indices)
            name = "aspect_emb" if self.aspect_mode == "separate" else "word_emb"
            if name in trainable:
                np.add.at(grads[name], list(trace.aspect_token_indices), dav)
        for name in ("word_emb", "aspect_emb"):
            if name in grads:
                grads[name][PAD_INDEX] = 0.0
        return grads
