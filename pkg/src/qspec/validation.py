"""Input validation helpers shared by the estimators and tests."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils import check_array

MIN_LENGTH = 8


class DataError(ValueError):
    """Input data cannot be used (too short, non-finite, malformed)."""


class NumericalIntegrityError(ArithmeticError):
    """A computed quantity violates an invariant it must satisfy (e.g. V_T <= 0)."""


def check_series(x, name: str = "series", min_length: int = MIN_LENGTH) -> np.ndarray:
    """Return ``x`` as a finite 1-d float array of length at least ``min_length``.

    A 2-d input with a single column is accepted and flattened, so a
    scikit-learn style ``X`` of shape ``(T, 1)`` works too.
    """
    try:
        arr = check_array(x, ensure_2d=False, dtype=np.float64, ensure_all_finite=True)
    except ValueError as exc:
        raise DataError(f"{name}: {exc}") from exc
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise DataError(f"{name}: expected a single column, got shape {arr.shape}")
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise DataError(f"{name}: expected a 1-d series, got shape {arr.shape}")
    if arr.size < min_length:
        raise DataError(f"{name}: need at least {min_length} observations, got {arr.size}")
    return arr


def check_bandwidth(M, T: int) -> int:
    if not isinstance(M, numbers.Integral) or M < 0:
        raise ValueError(f"bandwidth M must be a non-negative integer, got {M!r}")
    if M >= T:
        raise ValueError(f"bandwidth M={M} must be smaller than T={T}")
    return int(M)


def check_random_state(seed) -> np.random.Generator:
    """``None`` / int / SeedSequence / Generator -> Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
