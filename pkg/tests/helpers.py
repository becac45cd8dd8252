"""Shared test fixtures: synthetic corpora and independent reference oracles."""

from __future__ import annotations

import numpy as np

from absacnn import AspectLabel, Dataset, Opinion, Polarity, Sentence, tokenize
from absacnn.metrics import micro_f1

LISTING_XML = b"""<?xml version="1.0" encoding="UTF-8"?>
<sentences>
  <sentence id="347:0">
    <text>I bought it for really cheap also and its AMAZING.</text>
    <Opinions>
      <Opinion category="LAPTOP#PRICE" polarity="positive"/>
      <Opinion category="LAPTOP#GENERAL" polarity="positive"/>
    </Opinions>
  </sentence>
</sentences>
"""

FILLERS = [
    "the", "we", "it", "was", "really", "visit", "place", "again", "table",
    "day", "went", "saw", "thing", "quite", "rather", "some", "just", "very",
    "then", "there",
]

ASPECT_CUES = {
    "FOOD#QUALITY": "delicious",
    "SERVICE#GENERAL": "friendly",
    "PRICE#LEVEL": "expensive",
    "AMBIENCE#GENERAL": "cozy",
    "DRINKS#QUALITY": "refreshing",
    "LOCATION#GENERAL": "central",
    "STAFF#ATTITUDE": "rude",
    "MENU#VARIETY": "varied",
}


def naive_convolve(x: np.ndarray, weights: np.ndarray, bias: np.ndarray, width: int):
    """Triple-loop reference convolution, deliberately unvectorized."""
    n, d = x.shape
    m = weights.shape[0]
    out = np.zeros((m, n - width + 1))
    for f in range(m):
        for i in range(n - width + 1):
            acc = 0.0
            for j in range(width):
                for c in range(d):
                    acc += weights[f, j * d + c] * x[i + j, c]
            out[f, i] = acc + bias[f]
    return out


def brute_force_threshold(probs, gold_sets, inventory, grid):
    """Independent exhaustive grid search for the best threshold."""
    replacement = inventory.most_frequent_replaced
    best = None
    for tau in grid:
        pred_sets = []
        for row in probs:
            labels = set()
            for idx, p in enumerate(row):
                if p < tau:
                    continue
                if idx == inventory.none_index:
                    continue
                if idx == inventory.other_index:
                    if replacement is not None:
                        labels.add(replacement)
                else:
                    labels.add(inventory.kept[idx][0])
            pred_sets.append(labels)
        f1 = micro_f1(gold_sets, pred_sets).f1
        if best is None or f1 > best[1]:
            best = (tau, f1)
    return best


def _sentence(i: int, words: list[str], opinions) -> Sentence:
    text = " ".join(words)
    return Sentence(
        id=f"s{i}", text=text, tokens=tuple(tokenize(text)), opinions=tuple(opinions)
    )


def make_aspect_corpus(n_sentences: int = 500, seed: int = 42) -> Dataset:
    """Separable slot-1 corpus: each aspect is flagged by one cue token.

    Sentences carry 0-2 distinct aspects (20/40/40 mix); every aspect's cue
    word appears in the sentence, so the mapping is learnable.
    """
    rng = np.random.default_rng(seed)
    labels = [AspectLabel.parse(c) for c in ASPECT_CUES]
    cues = list(ASPECT_CUES.values())
    sentences = []
    for i in range(n_sentences):
        n_aspects = int(rng.choice([0, 1, 2], p=[0.2, 0.4, 0.4]))
        chosen = sorted(rng.choice(len(labels), size=n_aspects, replace=False).tolist())
        words = [FILLERS[j] for j in rng.integers(0, len(FILLERS), size=int(rng.integers(6, 13)))]
        for c in chosen:
            words.insert(int(rng.integers(0, len(words) + 1)), cues[c])
        opinions = [Opinion(labels[c], Polarity.POSITIVE) for c in chosen]
        sentences.append(_sentence(i, words, opinions))
    return Dataset(tuple(sentences), language="en", domain="synthetic")


SENTIMENT_ASPECTS = ("FOOD#QUALITY", "SERVICE#GENERAL")
SENTIMENT_CUES = ("crispy", "prompt")


def make_sentiment_corpus(n_sentences: int = 300, seed: int = 7) -> Dataset:
    """Slot-3 corpus where polarity depends jointly on cue word and aspect.

    Every sentence contains exactly one of two cue words and carries both
    aspects with opposite polarities (positive iff cue i pairs with aspect
    i), so any aspect-blind predictor gets exactly one of each pair right.
    """
    rng = np.random.default_rng(seed)
    label_a, label_b = (AspectLabel.parse(c) for c in SENTIMENT_ASPECTS)
    sentences = []
    for i in range(n_sentences):
        cue_idx = int(rng.integers(0, 2))
        words = [FILLERS[j] for j in rng.integers(0, len(FILLERS), size=int(rng.integers(6, 13)))]
        words.insert(int(rng.integers(0, len(words) + 1)), SENTIMENT_CUES[cue_idx])
        pol_a = Polarity.POSITIVE if cue_idx == 0 else Polarity.NEGATIVE
        pol_b = Polarity.POSITIVE if cue_idx == 1 else Polarity.NEGATIVE
        sentences.append(
            _sentence(i, words, [Opinion(label_a, pol_a), Opinion(label_b, pol_b)])
        )
    return Dataset(tuple(sentences), language="en", domain="synthetic")


def make_counted_corpus(counts: dict[str, int], seed: int = 0) -> Dataset:
    """Corpus realizing exact per-aspect opinion counts, one opinion per sentence."""
    rng = np.random.default_rng(seed)
    sentences = []
    i = 0
    for canonical, count in counts.items():
        label = AspectLabel.parse(canonical)
        for _ in range(count):
            words = [FILLERS[j] for j in rng.integers(0, len(FILLERS), size=5)]
            sentences.append(_sentence(i, words, [Opinion(label, Polarity.NEUTRAL)]))
            i += 1
    return Dataset(tuple(sentences), language="en", domain="counted")
