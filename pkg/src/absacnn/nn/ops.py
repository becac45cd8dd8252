"""Elementary tensor operations for the text CNN."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError

#: Added inside the cross-entropy log to avoid log(0).
LOG_EPS = 1e-12


@dataclass
class FilterBank:
    """m convolution filters of one window width over d-column inputs.

    ``weights`` holds one flattened filter per row (shape (m, width * d),
    window rows concatenated in order); ``bias`` is one scalar per filter.
    """

    width: int
    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ShapeError(
                f"filter bank of width {self.width}: weights "
                f"{self.weights.shape} and bias {self.bias.shape} mismatch"
            )

    @property
    def count(self) -> int:
        return self.weights.shape[0]


def sliding_windows(x: np.ndarray, width: int) -> np.ndarray:
    """Row-major flattened windows of ``width`` consecutive rows.

    For an (n, d) input returns an (n - width + 1, width * d) matrix whose
    row i is the concatenation of input rows i..i+width-1.
    """
    n, _ = x.shape
    if n < width:
        raise ShapeError(f"windows: input length {n} shorter than width {width}")
    length = n - width + 1
    return np.concatenate([x[o : o + length] for o in range(width)], axis=1)


def convolve_windows(windows: np.ndarray, bank: FilterBank) -> np.ndarray:
    """Feature maps from precomputed flattened windows (one per row)."""
    return bank.weights @ windows.T + bank.bias[:, None]


def convolve(x: np.ndarray, bank: FilterBank) -> np.ndarray:
    """Pre-activation feature maps for a filter bank slid over the rows of x.

    The result is (m, n - width + 1) with entry (f, i) equal to filter f
    dotted with the flattened window starting at row i, plus the bias.
    The nonlinearity is applied separately by the caller.
    """
    n, d = x.shape
    if bank.weights.shape[1] != bank.width * d:
        raise ShapeError(
            f"convolve: filters expect window size {bank.weights.shape[1]}, "
            f"input has width {d} and window {bank.width}"
        )
    return convolve_windows(sliding_windows(x, bank.width), bank)


def relu(v: np.ndarray) -> np.ndarray:
    return np.maximum(v, 0.0)


def max_over_time(values: np.ndarray) -> tuple[float, int]:
    """Maximum of a feature map and the smallest index attaining it."""
    if len(values) == 0:
        raise ShapeError("max_over_time: empty feature map")
    index = int(np.argmax(values))
    return float(values[index]), index


def avg_over_time(values: np.ndarray, valid_count: int | None = None) -> float:
    """Mean of the first ``valid_count`` feature-map entries (default: all)."""
    if len(values) == 0:
        raise ShapeError("avg_over_time: empty feature map")
    if valid_count is None:
        valid_count = len(values)
    valid_count = min(max(valid_count, 1), len(values))
    return float(np.mean(values[:valid_count]))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Probability vector over logits, computed with max-subtraction."""
    z = np.asarray(logits, dtype=np.float64)
    e = np.exp(z - z.max())
    return e / e.sum()


def cross_entropy(pred: np.ndarray, target: np.ndarray) -> float:
    """-sum(target * log(pred + eps)) for two aligned distributions."""
    if pred.shape != target.shape:
        raise ShapeError(
            f"cross_entropy: prediction shape {pred.shape} != target {target.shape}"
        )
    return float(-np.dot(target, np.log(pred + LOG_EPS)))
