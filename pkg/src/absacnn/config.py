"""Experiment configuration: one place for every hyperparameter default."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path


@dataclass
class ExperimentConfig:
    """Hyperparameters for both tasks; defaults are the reference setup.

    Loadable from a JSON object with the same field names; unknown keys are
    rejected so typos fail loudly. CLI flags override file values.
    """

    language: str = ""
    domain: str = ""
    batch_size: int = 10
    max_len: int = 100
    embedding_dim: int = 300
    dropout: float = 0.5
    aspect_filter_widths: tuple[int, ...] = (3, 4, 5)
    sentiment_filter_widths: tuple[int, ...] = (4, 5, 6)
    num_filters: int = 100
    epochs: int = 15
    min_count: int = 5
    validation_fraction: float = 0.2
    vocab_size: int = 10000
    seed: int = 0
    threshold: float | None = None
    use_avg_pooling: bool = False
    aspect_space: str = "shared"
    aspect_dim: int | None = None
    pretrained: str | None = None
    patience: int = 3
    init_scale: float = 0.25
    rho: float = 0.95
    epsilon: float = 1e-6

    def __post_init__(self):
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must lie in [0, 1), got {self.dropout}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError(
                f"validation_fraction must lie in (0, 1), got {self.validation_fraction}"
            )
        for name in ("batch_size", "max_len", "embedding_dim", "num_filters", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        self.aspect_filter_widths = tuple(self.aspect_filter_widths)
        self.sentiment_filter_widths = tuple(self.sentiment_filter_widths)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["aspect_filter_widths"] = list(self.aspect_filter_widths)
        data["sentiment_filter_widths"] = list(self.sentiment_filter_widths)
        return data

    def override(self, **changes) -> "ExperimentConfig":
        """New config with the non-None entries of ``changes`` applied."""
        effective = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **effective)

    def aspect_params(self) -> dict:
        """Constructor kwargs for :class:`absacnn.aspects.AspectDetector`."""
        return {
            "filter_widths": self.aspect_filter_widths,
            "num_filters": self.num_filters,
            "embedding_dim": self.embedding_dim,
            "max_len": self.max_len,
            "vocab_size": self.vocab_size,
            "batch_size": self.batch_size,
            "dropout": self.dropout,
            "epochs": self.epochs,
            "patience": self.patience,
            "min_count": self.min_count,
            "validation_fraction": self.validation_fraction,
            "threshold": self.threshold,
            "use_avg_pooling": self.use_avg_pooling,
            "pretrained": self.pretrained,
            "init_scale": self.init_scale,
            "rho": self.rho,
            "epsilon": self.epsilon,
            "seed": self.seed,
        }

    def sentiment_params(self) -> dict:
        """Constructor kwargs for :class:`absacnn.sentiment.SentimentClassifier`."""
        return {
            "filter_widths": self.sentiment_filter_widths,
            "num_filters": self.num_filters,
            "embedding_dim": self.embedding_dim,
            "max_len": self.max_len,
            "vocab_size": self.vocab_size,
            "batch_size": self.batch_size,
            "dropout": self.dropout,
            "epochs": self.epochs,
            "patience": self.patience,
            "validation_fraction": self.validation_fraction,
            "aspect_space": self.aspect_space,
            "aspect_dim": self.aspect_dim,
            "use_avg_pooling": self.use_avg_pooling,
            "pretrained": self.pretrained,
            "init_scale": self.init_scale,
            "rho": self.rho,
            "epsilon": self.epsilon,
            "seed": self.seed,
        }
