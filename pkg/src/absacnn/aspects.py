"""Aspect category detection as thresholded multi-label classification.

Rare aspects (train count below ``min_count``) are folded into a synthetic
OTHER class; a NONE class marks sentences without any aspect. Predictions
substitute OTHER with the most frequent folded aspect and drop NONE.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .base import BaseEstimator, check_fitted, check_fraction, derived_rng
from .corpus import AspectLabel, Dataset, Sentence, split_train_validation, tokenize
from .embeddings import EmbeddingMatrix, load_pretrained, random_init
from .metrics import micro_f1
from .nn.model import TextCnn
from .nn.serialize import load_model, save_model
from .nn.train import train_model, validation_pass
from .vocab import EncodedSentence, Vocabulary, build_vocabulary, encode

#: Searched decision thresholds; multi-aspect targets never exceed 0.5.
THRESHOLD_GRID: tuple[float, ...] = tuple(round(i * 0.01, 2) for i in range(1, 51))


def _rank_counts(counts: dict[AspectLabel, int]) -> list[tuple[AspectLabel, int]]:
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0].canonical))


@dataclass(frozen=True)
class AspectInventory:
    """A domain's aspect classes after the OTHER/NONE surgery.

    ``kept`` holds the aspects with train count >= min_count (most frequent
    first); classes are indexed in that order, followed by OTHER and NONE.
    """

    kept: tuple[tuple[AspectLabel, int], ...]
    other_members: tuple[tuple[AspectLabel, int], ...]
    min_count: int = 5

    def __post_init__(self):
        object.__setattr__(
            self,
            "_class_of",
            {label: i for i, (label, _) in enumerate(self.kept)}
            | {label: len(self.kept) for label, _ in self.other_members},
        )

    @property
    def num_classes(self) -> int:
        return len(self.kept) + 2

    @property
    def other_index(self) -> int:
        return len(self.kept)

    @property
    def none_index(self) -> int:
        return len(self.kept) + 1

    @property
    def most_frequent_replaced(self) -> AspectLabel | None:
        """The folded aspect emitted whenever OTHER is predicted."""
        if not self.other_members:
            return None
        return min(
            self.other_members, key=lambda lc: (-lc[1], lc[0].canonical)
        )[0]

    def class_index(self, label: AspectLabel) -> int | None:
        return self._class_of.get(label)

    def to_dict(self) -> dict:
        return {
            "kept": [[label.canonical, count] for label, count in self.kept],
            "other_members": [
                [label.canonical, count] for label, count in self.other_members
            ],
            "replacement": (
                self.most_frequent_replaced.canonical
                if self.most_frequent_replaced
                else None
            ),
            "min_count": self.min_count,
            "class_count": self.num_classes,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AspectInventory":
        return cls(
            kept=tuple(
                (AspectLabel.parse(label), count) for label, count in data["kept"]
            ),
            other_members=tuple(
                (AspectLabel.parse(label), count)
                for label, count in data["other_members"]
            ),
            min_count=data["min_count"],
        )


def build_inventory(train: Dataset, min_count: int = 5) -> AspectInventory:
    """Count aspects over all opinions and split them by ``min_count``."""
    counts: Counter[AspectLabel] = Counter()
    for sentence in train:
        for opinion in sentence.opinions:
            counts[opinion.category] += 1
    ranked = _rank_counts(counts)
    kept = tuple((label, c) for label, c in ranked if c >= min_count)
    other = tuple((label, c) for label, c in ranked if c < min_count)
    return AspectInventory(kept=kept, other_members=other, min_count=min_count)


def make_target(
    sentence: Sentence,
    inventory: AspectInventory,
    unseen_counter: Counter | None = None,
) -> np.ndarray:
    """Per-sentence multi-label target: each present class gets mass 1/n.

    Distinct aspects map to their class (folded ones to OTHER, aspects the
    inventory has never seen also to OTHER, counted in ``unseen_counter``);
    a sentence without opinions puts all mass on NONE.
    """
    classes: list[int] = []
    for opinion in sentence.opinions:
        index = inventory.class_index(opinion.category)
        if index is None:
            index = inventory.other_index
            if unseen_counter is not None:
                unseen_counter[opinion.category] += 1
        if index not in classes:
            classes.append(index)
    target = np.zeros(inventory.num_classes)
    if not classes:
        target[inventory.none_index] = 1.0
    else:
        target[classes] = 1.0 / len(classes)
    return target


def aspects_from_probs(
    probs: np.ndarray, threshold: float, inventory: AspectInventory
) -> set[AspectLabel]:
    """Aspect set for one probability row at a given threshold.

    Classes with probability >= threshold are kept; OTHER becomes the
    designated replacement aspect (nothing when no aspect was folded) and
    NONE is discarded from the output.
    """
    result: set[AspectLabel] = set()
    for index in np.flatnonzero(probs >= threshold):
        if index == inventory.none_index:
            continue
        if index == inventory.other_index:
            replacement = inventory.most_frequent_replaced
            if replacement is not None:
                result.add(replacement)
        else:
            result.add(inventory.kept[index][0])
    return result


def predict_aspects(
    model: TextCnn,
    sentence: EncodedSentence,
    threshold: float,
    inventory: AspectInventory,
) -> set[AspectLabel]:
    """Thresholded aspect set for one encoded sentence (possibly empty)."""
    return aspects_from_probs(model.predict_proba(sentence), threshold, inventory)


def select_threshold_from_probs(
    probs: np.ndarray,
    gold_sets: Sequence[set[AspectLabel]],
    inventory: AspectInventory,
    grid: Sequence[float] = THRESHOLD_GRID,
) -> tuple[float, float]:
    """Grid-search the threshold maximizing micro-F1 against gold sets.

    Gold sets use original labels; candidate predictions go through the
    OTHER/NONE post-processing first. Ties resolve to the smallest value.
    """
    best_tau, best_f1 = None, -1.0
    for tau in grid:
        pred = [aspects_from_probs(row, tau, inventory) for row in probs]
        score = micro_f1(gold_sets, pred).f1
        if score > best_f1:
            best_tau, best_f1 = tau, score
    return best_tau, best_f1


def select_threshold(
    model: TextCnn,
    valid: Dataset,
    inventory: AspectInventory,
    vocab: Vocabulary,
    max_len: int = 100,
    grid: Sequence[float] = THRESHOLD_GRID,
) -> float:
    """Tune the decision threshold on a validation dataset."""
    if len(valid) == 0:
        raise ValueError("validation set is empty")
    probs = np.stack(
        [model.predict_proba(encode(s.tokens, vocab, max_len)) for s in valid]
    )
    gold = [s.aspect_set() for s in valid]
    tau, _ = select_threshold_from_probs(probs, gold, inventory, grid)
    return tau


def train_aspect_model(
    train: Dataset,
    valid: Dataset,
    config: "ExperimentConfig | None" = None,
    **overrides,
) -> tuple[TextCnn, float, list[dict]]:
    """Train the aspect CNN end to end; returns (model, threshold, history).

    Convenience wrapper over :class:`AspectDetector` for callers that only
    need the trained network: builds vocabulary, embeddings and inventory
    from the training data per the configuration, trains with early
    stopping, and tunes the threshold on the validation set.
    """
    from .config import ExperimentConfig

    if config is None:
        config = ExperimentConfig()
    detector = AspectDetector(**{**config.aspect_params(), **overrides})
    detector.fit(train, valid)
    return detector.model_, detector.threshold_, detector.history_


class AspectDetector(BaseEstimator):
    """Multi-label aspect category detector with a tuned decision threshold.

    sklearn-style estimator: hyperparameters in ``__init__``, state learned
    by :meth:`fit` in trailing-underscore attributes. ``threshold=None``
    (the default) tunes the threshold on the validation split; a float
    fixes it.
    """

    def __init__(
        self,
        filter_widths=(3, 4, 5),
        num_filters=100,
        embedding_dim=300,
        max_len=100,
        vocab_size=10000,
        batch_size=10,
        dropout=0.5,
        epochs=15,
        patience=3,
        min_count=5,
        validation_fraction=0.2,
        threshold=None,
        use_avg_pooling=False,
        pretrained=None,
        init_scale=0.25,
        rho=0.95,
        epsilon=1e-6,
        seed=0,
    ):
        self.filter_widths = filter_widths
        self.num_filters = num_filters
        self.embedding_dim = embedding_dim
        self.max_len = max_len
        self.vocab_size = vocab_size
        self.batch_size = batch_size
        self.dropout = dropout
        self.epochs = epochs
        self.patience = patience
        self.min_count = min_count
        self.validation_fraction = validation_fraction
        self.threshold = threshold
        self.use_avg_pooling = use_avg_pooling
        self.pretrained = pretrained
        self.init_scale = init_scale
        self.rho = rho
        self.epsilon = epsilon
        self.seed = seed

    # ---- fitting -----------------------------------------------------

    def _embeddings(self, vocab: Vocabulary) -> tuple[EmbeddingMatrix, float | None]:
        if self.pretrained is None:
            return random_init(vocab, self.embedding_dim, self.seed, self.init_scale), None
        with open(self.pretrained, encoding="utf-8") as fh:
            matrix, coverage = load_pretrained(fh, vocab, self.seed, self.init_scale)
        if matrix.dim != self.embedding_dim:
            raise ValueError(
                f"pretrained embeddings are {matrix.dim}-dimensional but "
                f"embedding_dim={self.embedding_dim}; set embedding_dim to match"
            )
        return matrix, coverage

    def _encode_all(self, dataset: Dataset) -> list[EncodedSentence]:
        return [encode(s.tokens, self.vocab_, self.max_len) for s in dataset]

    def fit(self, train: Dataset, valid: Dataset | None = None) -> "AspectDetector":
        """Build vocabulary/inventory, train the CNN, tune the threshold.

        Without an explicit validation dataset, ``validation_fraction`` of
        the training sentences is split off with the estimator's seed.
        """
        if valid is None:
            check_fraction(self.validation_fraction, "validation_fraction")
            train, valid = split_train_validation(
                train, self.validation_fraction, self.seed
            )
        if len(train) == 0:
            raise ValueError("training set is empty")
        if len(valid) == 0:
            raise ValueError(
                "validation set is empty; pass more data or an explicit valid="
            )

        self.vocab_ = build_vocabulary(
            (s.tokens for s in train), max_size=self.vocab_size
        )
        embeddings, self.coverage_ = self._embeddings(self.vocab_)
        self.inventory_ = build_inventory(train, self.min_count)
        self.unseen_ = Counter()

        train_examples = [
            (enc, None, make_target(s, self.inventory_))
            for s, enc in zip(train, self._encode_all(train))
        ]
        valid_encoded = self._encode_all(valid)
        valid_examples = [
            (enc, None, make_target(s, self.inventory_, self.unseen_))
            for s, enc in zip(valid, valid_encoded)
        ]
        valid_gold = [s.aspect_set() for s in valid]

        rng = derived_rng(self.seed, 1)
        model = TextCnn.build(
            embeddings,
            self.inventory_.num_classes,
            tuple(self.filter_widths),
            self.num_filters,
            rng,
            pooling="max_avg" if self.use_avg_pooling else "max",
        )

        def epoch_f1(valid_probs: np.ndarray) -> float:
            if self.threshold is not None:
                pred = [
                    aspects_from_probs(row, self.threshold, self.inventory_)
                    for row in valid_probs
                ]
                return micro_f1(valid_gold, pred).f1
            return select_threshold_from_probs(
                valid_probs, valid_gold, self.inventory_
            )[1]

        self.model_, self.history_ = train_model(
            model,
            train_examples,
            valid_examples,
            batch_size=self.batch_size,
            epochs=self.epochs,
            dropout_rate=self.dropout,
            patience=self.patience,
            rng=rng,
            rho=self.rho,
            epsilon=self.epsilon,
            metric_name="valid_f1",
            metric_fn=epoch_f1,
        )

        if self.threshold is not None:
            self.threshold_ = float(self.threshold)
        else:
            _, best_probs = validation_pass(self.model_, valid_examples)
            self.threshold_, _ = select_threshold_from_probs(
                best_probs, valid_gold, self.inventory_
            )
        return self

    # ---- inference -----------------------------------------------------

    def _as_sentences(self, data) -> list[Sentence]:
        if isinstance(data, Dataset):
            return list(data)
        sentences = []
        for i, item in enumerate(data):
            if isinstance(item, Sentence):
                sentences.append(item)
            elif isinstance(item, str):
                sentences.append(
                    Sentence(id=str(i), text=item, tokens=tuple(tokenize(item)))
                )
            else:
                sentences.append(
                    Sentence(id=str(i), text=" ".join(item), tokens=tuple(item))
                )
        return sentences

    def predict_proba(self, data) -> np.ndarray:
        check_fitted(self, "model_")
        sentences = self._as_sentences(data)
        probs = np.empty((len(sentences), self.inventory_.num_classes))
        for i, s in enumerate(sentences):
            probs[i] = self.model_.predict_proba(
                encode(s.tokens, self.vocab_, self.max_len)
            )
        return probs

    def predict(self, data) -> list[set[AspectLabel]]:
        """Aspect set per sentence; accepts a Dataset, Sentences, raw strings
        or token lists."""
        probs = self.predict_proba(data)
        return [
            aspects_from_probs(row, self.threshold_, self.inventory_) for row in probs
        ]

    def score(self, data: Dataset) -> float:
        """Micro-averaged F1 against the gold aspect sets."""
        gold = [s.aspect_set() for s in data]
        return micro_f1(gold, self.predict(data)).f1

    # ---- persistence -----------------------------------------------------

    def save(self, path) -> None:
        check_fitted(self, "model_")
        config = dict(self.get_params())
        config["filter_widths"] = list(config["filter_widths"])
        if config["pretrained"] is not None:
            config["pretrained"] = str(config["pretrained"])
        save_model(
            path,
            self.model_,
            {
                "task": "aspect",
                "config": config,
                "vocabulary": list(self.vocab_.tokens),
                "inventory": self.inventory_.to_dict(),
                "threshold": self.threshold_,
            },
        )

    @classmethod
    def load(cls, path) -> "AspectDetector":
        model, manifest = load_model(path)
        if manifest.get("task") != "aspect":
            raise ValueError(f"{path} does not hold an aspect model")
        config = dict(manifest["config"])
        config["filter_widths"] = tuple(config["filter_widths"])
        detector = cls(**config)
        detector.model_ = model
        detector.vocab_ = Vocabulary(tuple(manifest["vocabulary"]))
        detector.inventory_ = AspectInventory.from_dict(manifest["inventory"])
        detector.threshold_ = manifest["threshold"]
        detector.history_ = None
        detector.coverage_ = None
        detector.unseen_ = Counter()
        return detector
