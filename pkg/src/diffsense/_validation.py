"""Small input-validation helpers used across the estimators."""

from __future__ import annotations

import numbers

import numpy as np


def check_positive(value, name: str, *, strict: bool = True) -> float:
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    if strict and value <= 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    if not strict and value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return value


def check_range(bounds, name: str, *, allow_zero: bool = False) -> tuple[float, float]:
    """Validate a ``(min, max)`` pair of durations."""
    try:
        lo, hi = (float(b) for b in bounds)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a (min, max) pair, got {bounds!r}") from None
    if lo > hi:
        raise ValueError(f"{name}: min {lo} exceeds max {hi}")
    if lo < 0 or (lo == 0 and not allow_zero):
        raise ValueError(f"{name}: durations must be {'>= 0' if allow_zero else '> 0'}, got {lo}")
    return lo, hi


def check_complex_1d(x, name: str = "x") -> np.ndarray:
    """Return ``x`` as a 1-D complex array, rejecting non-finite samples."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.iscomplexobj(arr):
        arr = arr.astype(np.complex128)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite samples")
    return arr


def check_timestamps(t, name: str = "timestamps") -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    return t
