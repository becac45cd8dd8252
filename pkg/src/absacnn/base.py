"""Estimator plumbing: sklearn-style parameter protocol and input checks."""

from __future__ import annotations

import inspect

import numpy as np

from .errors import NotFittedError


class BaseEstimator:
    """Minimal scikit-learn compatible estimator base.

    Subclasses declare every hyperparameter as an explicit keyword argument
    of ``__init__`` and store it verbatim under the same attribute name;
    that is all ``get_params``/``set_params`` (and sklearn's ``clone``)
    need, without a scikit-learn dependency.
    """

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return sorted(
            name
            for name, p in sig.parameters.items()
            if name != "self" and p.kind not in (p.VAR_POSITIONAL, p.VAR_KEYWORD)
        )

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params) -> "BaseEstimator":
        valid = set(self._param_names())
        for name, value in params.items():
            if name not in valid:
                raise ValueError(
                    f"unknown parameter {name!r} for {type(self).__name__}"
                )
            setattr(self, name, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in sorted(self.get_params().items()))
        return f"{type(self).__name__}({args})"


def check_fitted(estimator, attribute: str) -> None:
    if getattr(estimator, attribute, None) is None:
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )


def check_fraction(value: float, name: str = "fraction") -> float:
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")
    return value


def derived_rng(seed: int, stream: int) -> np.random.Generator:
    """Independent generator for (seed, stream), stable across runs."""
    return np.random.default_rng(np.random.SeedSequence([seed, stream]))


def derive_seed(seed: int, stream: int) -> int:
    """Derived integer seed for (seed, stream), stable across runs."""
    return int(np.random.SeedSequence([seed, stream]).generate_state(1)[0])
