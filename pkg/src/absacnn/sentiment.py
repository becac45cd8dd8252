"""Sentiment polarity per (sentence, aspect): aspect-vector concatenation CNN.

The aspect label is split into its constituent tokens, their embeddings are
averaged into an aspect vector, and that vector is concatenated onto every
word embedding row before convolution. Aspect tokens live either in the
word embedding space (English-style, exploits pre-trained vectors) or in a
separate, possibly low-dimensional space.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .base import (
    BaseEstimator,
    check_fitted,
    check_fraction,
    derive_seed,
    derived_rng,
)
from .corpus import (
    AspectLabel,
    Dataset,
    Polarity,
    Sentence,
    split_train_validation,
    tokenize,
)
from .embeddings import EmbeddingMatrix, load_pretrained, random_init
from .errors import ShapeError
from .metrics import accuracy
from .nn.model import TextCnn
from .nn.serialize import load_model, save_model
from .nn.train import train_model
from .vocab import (
    RESERVED_TOKENS,
    EncodedSentence,
    Vocabulary,
    build_vocabulary,
    encode,
)

#: Fixed class order; argmax ties resolve to the earliest class.
POLARITY_CLASSES: tuple[Polarity, ...] = (
    Polarity.POSITIVE,
    Polarity.NEGATIVE,
    Polarity.NEUTRAL,
)


def aspect_tokens(label: AspectLabel) -> list[str]:
    """Lowercase constituent tokens: entity parts first, then attribute parts.

    Both sides of the '#' are additionally split on '_', so multiword
    attributes contribute one token per word.
    """
    tokens = []
    for part in (label.entity, label.attribute):
        tokens.extend(t.lower() for t in part.split("_") if t)
    return tokens


@dataclass
class AspectTokenSpace:
    """Where aspect tokens embed: the word space or a separate matrix."""

    mode: str
    vocab: Vocabulary
    embeddings: EmbeddingMatrix

    def __post_init__(self):
        if self.mode not in ("shared", "separate"):
            raise ValueError(f"unknown aspect token space mode {self.mode!r}")

    @classmethod
    def shared(cls, word_vocab: Vocabulary, word_embeddings: EmbeddingMatrix):
        return cls("shared", word_vocab, word_embeddings)

    @classmethod
    def separate(
        cls,
        labels: Sequence[AspectLabel],
        dim: int,
        seed: int,
        scale: float = 0.25,
    ):
        tokens = sorted({t for label in labels for t in aspect_tokens(label)})
        vocab = Vocabulary(RESERVED_TOKENS + tuple(tokens))
        return cls("separate", vocab, random_init(vocab, dim, seed, scale))

    @property
    def dim(self) -> int:
        return self.embeddings.dim

    def token_ids(self, label: AspectLabel) -> tuple[int, ...]:
        """Embedding rows of the label's tokens; unknown tokens use UNK."""
        ids = tuple(self.vocab.lookup(t) for t in aspect_tokens(label))
        return ids if ids else (self.vocab.lookup("<unk>"),)


def aspect_vector(label: AspectLabel, space: AspectTokenSpace) -> np.ndarray:
    """Mean of the constituent token embeddings."""
    return space.embeddings.values[list(space.token_ids(label))].mean(axis=0)


def build_input(
    sentence: EncodedSentence,
    word_embeddings: EmbeddingMatrix,
    vector: np.ndarray,
) -> np.ndarray:
    """Sentence matrix with the aspect vector concatenated onto every row.

    Row i is [word embedding of token i | aspect vector]; PAD rows therefore
    carry zeros on the left and the aspect vector on the right. With the
    default 100-token padding and 300-dim shared spaces this is the 100x600
    input matrix.
    """
    if vector.ndim != 1:
        raise ShapeError(f"build_input: aspect vector must be 1-D, got {vector.shape}")
    emb = word_embeddings.values
    ids = sentence.indices
    if ids.min() < 0 or ids.max() >= emb.shape[0]:
        raise ShapeError("build_input: token index outside the embedding matrix")
    n, k = len(ids), word_embeddings.dim
    matrix = np.empty((n, k + vector.shape[0]))
    matrix[:, :k] = emb[ids]
    matrix[:, k:] = vector
    return matrix


@dataclass(frozen=True)
class PolarityExample:
    """One (sentence, opinion) training pair."""

    sentence: EncodedSentence
    aspect: AspectLabel
    gold: Polarity


def polarity_examples(
    dataset: Dataset, vocab: Vocabulary, max_len: int = 100
) -> list[PolarityExample]:
    """One example per opinion that carries a polarity label."""
    examples = []
    for sentence in dataset:
        enc = encode(sentence.tokens, vocab, max_len)
        for opinion in sentence.opinions:
            if opinion.polarity is not None:
                examples.append(PolarityExample(enc, opinion.category, opinion.polarity))
    return examples


def polarity_from_probs(probs: np.ndarray) -> Polarity:
    """Argmax class; exact ties go to the earliest class in the fixed order."""
    return POLARITY_CLASSES[int(np.argmax(probs))]


def predict_polarity(
    model: TextCnn,
    sentence: EncodedSentence,
    aspect: AspectLabel | None,
    space: AspectTokenSpace,
) -> tuple[Polarity, np.ndarray]:
    """Polarity and class probabilities for one (sentence, aspect) pair.

    ``aspect=None`` feeds a zero aspect vector, the ablation hook for
    measuring how much the prediction depends on the aspect.
    """
    ids = () if aspect is None else space.token_ids(aspect)
    probs = model.predict_proba(sentence, ids)
    return polarity_from_probs(probs), probs


def one_hot(polarity: Polarity) -> np.ndarray:
    target = np.zeros(len(POLARITY_CLASSES))
    target[POLARITY_CLASSES.index(polarity)] = 1.0
    return target


def train_sentiment_model(
    train: Dataset,
    valid: Dataset,
    config: "ExperimentConfig | None" = None,
    **overrides,
) -> tuple[TextCnn, list[dict]]:
    """Train the polarity CNN end to end; returns (model, history).

    Convenience wrapper over :class:`SentimentClassifier`, mirroring
    :func:`absacnn.aspects.train_aspect_model`.
    """
    from .config import ExperimentConfig

    if config is None:
        config = ExperimentConfig()
    classifier = SentimentClassifier(**{**config.sentiment_params(), **overrides})
    classifier.fit(train, valid)
    return classifier.model_, classifier.history_


class SentimentClassifier(BaseEstimator):
    """Three-way polarity classifier over (sentence, aspect) pairs.

    ``aspect_space='shared'`` embeds aspect tokens in the word space (their
    tokens are granted vocabulary rows); ``'separate'`` gives them an
    independent space of ``aspect_dim`` dimensions (defaults to
    ``embedding_dim``).
    """

    def __init__(
        self,
        filter_widths=(4, 5, 6),
        num_filters=100,
        embedding_dim=300,
        max_len=100,
        vocab_size=10000,
        batch_size=10,
        dropout=0.5,
        epochs=15,
        patience=3,
        validation_fraction=0.2,
        aspect_space="shared",
        aspect_dim=None,
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
        self.validation_fraction = validation_fraction
        self.aspect_space = aspect_space
        self.aspect_dim = aspect_dim
        self.use_avg_pooling = use_avg_pooling
        self.pretrained = pretrained
        self.init_scale = init_scale
        self.rho = rho
        self.epsilon = epsilon
        self.seed = seed

    # ---- fitting -----------------------------------------------------

    def fit(
        self, train: Dataset, valid: Dataset | None = None
    ) -> "SentimentClassifier":
        """Train one polarity network for the dataset's language/domain."""
        if self.aspect_space not in ("shared", "separate"):
            raise ValueError(f"unknown aspect_space {self.aspect_space!r}")
        if valid is None:
            check_fraction(self.validation_fraction, "validation_fraction")
            train, valid = split_train_validation(
                train, self.validation_fraction, self.seed
            )

        labels = sorted(
            {op.category for s in train for op in s.opinions},
            key=lambda a: a.canonical,
        )
        extra = []
        if self.aspect_space == "shared":
            extra = sorted({t for label in labels for t in aspect_tokens(label)})
        self.vocab_ = build_vocabulary(
            (s.tokens for s in train), max_size=self.vocab_size, extra_tokens=extra
        )
        if self.pretrained is None:
            embeddings = random_init(
                self.vocab_, self.embedding_dim, self.seed, self.init_scale
            )
            self.coverage_ = None
        else:
            with open(self.pretrained, encoding="utf-8") as fh:
                embeddings, self.coverage_ = load_pretrained(
                    fh, self.vocab_, self.seed, self.init_scale
                )
            if embeddings.dim != self.embedding_dim:
                raise ValueError(
                    f"pretrained embeddings are {embeddings.dim}-dimensional but "
                    f"embedding_dim={self.embedding_dim}; set embedding_dim to match"
                )

        if self.aspect_space == "shared":
            self.space_ = AspectTokenSpace.shared(self.vocab_, embeddings)
            aspect_embeddings = None
        else:
            self.space_ = AspectTokenSpace.separate(
                labels,
                self.aspect_dim or self.embedding_dim,
                derive_seed(self.seed, 2),
                self.init_scale,
            )
            aspect_embeddings = self.space_.embeddings

        train_examples = self._nn_examples(polarity_examples(train, self.vocab_, self.max_len))
        valid_pol = polarity_examples(valid, self.vocab_, self.max_len)
        valid_examples = self._nn_examples(valid_pol)
        if not train_examples:
            raise ValueError("training set has no polarity-labelled opinions")
        if not valid_examples:
            raise ValueError("validation set has no polarity-labelled opinions")
        gold_idx = np.asarray(
            [POLARITY_CLASSES.index(e.gold) for e in valid_pol]
        )

        rng = derived_rng(self.seed, 1)
        model = TextCnn.build(
            embeddings,
            len(POLARITY_CLASSES),
            tuple(self.filter_widths),
            self.num_filters,
            rng,
            aspect_mode=self.aspect_space,
            aspect_embeddings=aspect_embeddings,
            pooling="max_avg" if self.use_avg_pooling else "max",
        )

        def epoch_accuracy(valid_probs: np.ndarray) -> float:
            return float(np.mean(np.argmax(valid_probs, axis=1) == gold_idx))

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
            metric_name="valid_accuracy",
            metric_fn=epoch_accuracy,
        )
        return self

    def _nn_examples(self, examples: Sequence[PolarityExample]):
        return [
            (e.sentence, self.space_.token_ids(e.aspect), one_hot(e.gold))
            for e in examples
        ]

    # ---- inference -----------------------------------------------------

    def _as_pairs(self, data) -> list[tuple[EncodedSentence, AspectLabel | None]]:
        if isinstance(data, Dataset):
            pairs = []
            for sentence in data:
                enc = encode(sentence.tokens, self.vocab_, self.max_len)
                for opinion in sentence.opinions:
                    pairs.append((enc, opinion.category))
            return pairs
        pairs = []
        for sentence, aspect in data:
            if isinstance(sentence, Sentence):
                tokens = sentence.tokens
            elif isinstance(sentence, str):
                tokens = tokenize(sentence)
            else:
                tokens = sentence
            if isinstance(aspect, str):
                aspect = AspectLabel.parse(aspect)
            pairs.append((encode(tokens, self.vocab_, self.max_len), aspect))
        return pairs

    def predict_proba(self, data) -> np.ndarray:
        """(N, 3) class probabilities; rows align with the dataset's
        (sentence, opinion) pairs or the given (sentence, aspect) pairs."""
        check_fitted(self, "model_")
        pairs = self._as_pairs(data)
        probs = np.empty((len(pairs), len(POLARITY_CLASSES)))
        for i, (enc, aspect) in enumerate(pairs):
            ids = () if aspect is None else self.space_.token_ids(aspect)
            probs[i] = self.model_.predict_proba(enc, ids)
        return probs

    def predict(self, data) -> list[Polarity]:
        return [polarity_from_probs(row) for row in self.predict_proba(data)]

    def score(self, data: Dataset) -> float:
        """Accuracy over the dataset's polarity-labelled (sentence, aspect)
        pairs, evaluated with gold aspects."""
        check_fitted(self, "model_")
        gold, pairs = [], []
        for sentence in data:
            enc = encode(sentence.tokens, self.vocab_, self.max_len)
            for opinion in sentence.opinions:
                if opinion.polarity is not None:
                    gold.append(opinion.polarity)
                    pairs.append((enc, opinion.category))
        pred = [
            polarity_from_probs(
                self.model_.predict_proba(enc, self.space_.token_ids(aspect))
            )
            for enc, aspect in pairs
        ]
        return accuracy(gold, pred).accuracy

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
                "task": "sentiment",
                "config": config,
                "vocabulary": list(self.vocab_.tokens),
                "aspect_vocabulary": (
                    list(self.space_.vocab.tokens)
                    if self.space_.mode == "separate"
                    else None
                ),
                "polarity_classes": [p.value for p in POLARITY_CLASSES],
            },
        )

    @classmethod
    def load(cls, path) -> "SentimentClassifier":
        model, manifest = load_model(path)
        if manifest.get("task") != "sentiment":
            raise ValueError(f"{path} does not hold a sentiment model")
        config = dict(manifest["config"])
        config["filter_widths"] = tuple(config["filter_widths"])
        classifier = cls(**config)
        classifier.model_ = model
        classifier.vocab_ = Vocabulary(tuple(manifest["vocabulary"]))
        if model.aspect_mode == "separate":
            classifier.space_ = AspectTokenSpace(
                "separate",
                Vocabulary(tuple(manifest["aspect_vocabulary"])),
                model.aspect_embeddings,
            )
        else:
            classifier.space_ = AspectTokenSpace.shared(
                classifier.vocab_, model.word_embeddings
            )
        classifier.history_ = None
        classifier.coverage_ = None
        return classifier
