"""From-scratch dense neural toolkit for the text CNNs.

Multi-width 1-D convolution over embedded token rows, ReLU, max/average
over-time pooling, dropout, softmax, cross-entropy, hand-derived
backpropagation, Adadelta updates, finite-difference gradient checking,
and a deterministic mini-batch training loop.
"""

from .ops import (
    avg_over_time,
    convolve,
    cross_entropy,
    max_over_time,
    relu,
    sliding_windows,
    softmax,
)
from .model import DropoutPlan, FilterBank, ForwardTrace, TextCnn
from .adadelta import AdadeltaState, adadelta_step
from .gradcheck import demo_model, gradient_check, kink_margin
from .train import train_model
from .serialize import load_model, save_model

__all__ = [
    "AdadeltaState",
    "DropoutPlan",
    "FilterBank",
    "ForwardTrace",
    "TextCnn",
    "adadelta_step",
    "avg_over_time",
    "convolve",
    "cross_entropy",
    "demo_model",
    "gradient_check",
    "kink_margin",
    "load_model",
    "max_over_time",
    "relu",
    "save_model",
    "sliding_windows",
    "softmax",
    "train_model",
]
