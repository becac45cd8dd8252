"""Adadelta parameter updates with per-array accumulators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingError
from .model import TextCnn


@dataclass
class AdadeltaState:
    """Running E[g^2] and E[dx^2] accumulators mirroring the trainable arrays."""

    rho: float = 0.95
    epsilon: float = 1e-6
    sq_grad: dict[str, np.ndarray] = field(default_factory=dict)
    sq_delta: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_model(cls, model: TextCnn, rho: float = 0.95, epsilon: float = 1e-6):
        state = cls(rho=rho, epsilon=epsilon)
        for name, array in model.trainable_params():
            state.sq_grad[name] = np.zeros_like(array)
            state.sq_delta[name] = np.zeros_like(array)
        return state


def adadelta_step(
    model: TextCnn, grads: dict[str, np.ndarray], state: AdadeltaState
) -> None:
    """One in-place Adadelta update over every trainable array.

    Per scalar: E[g^2] <- rho E[g^2] + (1-rho) g^2;
    dx = -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g;
    E[dx^2] <- rho E[dx^2] + (1-rho) dx^2; x <- x + dx.

    Raises:
        TrainingError: a gradient contains a non-finite value.
    """
    rho, eps = state.rho, state.epsilon
    for name, array in model.trainable_params():
        g = grads[name]
        if not np.isfinite(g).all():
            raise TrainingError(f"non-finite gradient in parameter {name!r}")
        sq_g = state.sq_grad[name]
        sq_d = state.sq_delta[name]
        sq_g *= rho
        sq_g += (1.0 - rho) * g * g
        delta = -np.sqrt(sq_d + eps) / np.sqrt(sq_g + eps) * g
        sq_d *= rho
        sq_d += (1.0 - rho) * delta * delta
        array += delta
