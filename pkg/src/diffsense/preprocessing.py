"""Receiver front-end cleanup: DC offset removal and I/Q imbalance correction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .recording import IQRecording

DEFAULT_DC_WINDOW = 2 ** 16


@dataclass(frozen=True)
class ImbalanceParams:
    """Gain and phase mismatch of the quadrature branch.

    The impaired branch is modelled as ``Q' = g * (Q cos(d) + I sin(d))``
    with the in-phase branch left untouched.
    """

    gain_mismatch: float = 1.0
    phase_mismatch: float = 0.0

    def __post_init__(self):
        if not self.gain_mismatch > 0:
            raise ValueError(f"gain_mismatch must be > 0, got {self.gain_mismatch}")
        if not np.isfinite(self.phase_mismatch):
            raise ValueError("phase_mismatch must be finite")

    @classmethod
    def coerce(cls, value) -> "ImbalanceParams":
        if value is None:
            return cls()
        if isinstance(value, cls):
            return value
        if isinstance(value, dict):
            return cls(**value)
        return cls(*value)


def running_mean(x: np.ndarray, window_length: int) -> np.ndarray:
    """Centered moving average; windows shrink near the edges."""
    x = np.asarray(x)
    n = x.size
    acc = np.zeros(n + 1, dtype=np.result_type(x.dtype, np.complex128))
    np.cumsum(x, out=acc[1:])
    k = np.arange(n)
    lo = np.maximum(k - (window_length - 1) // 2, 0)
    hi = np.minimum(k + window_length // 2 + 1, n)
    return (acc[hi] - acc[lo]) / (hi - lo)


def _remove_dc(x: np.ndarray, window_length: int) -> np.ndarray:
    if window_length >= x.size:
        return x - x.mean(dtype=np.complex128)
    return x - running_mean(x, window_length)


def remove_dc_offset(rec: IQRecording, window_length: int = DEFAULT_DC_WINDOW) -> IQRecording:
    """Subtract the centered running mean from each channel independently.

    Args:
        rec: Recording to clean.
        window_length: Averaging window in samples, ``1 <= window_length <= len(rec)``.
    """
    window_length = int(window_length)
    if window_length < 1:
        raise ValueError(f"window_length must be >= 1, got {window_length}")
    if len(rec) and window_length > len(rec):
        raise ValueError(f"window_length {window_length} exceeds recording length {len(rec)}")
    if not len(rec):
        return rec
    return rec.with_channels(_remove_dc(rec.channel1, window_length),
                             _remove_dc(rec.channel2, window_length))


def apply_iq_imbalance(x, params: ImbalanceParams) -> np.ndarray:
    """Impair complex samples with the quadrature gain/phase mismatch model."""
    x = np.asarray(x)
    i, q = x.real, x.imag
    g, d = params.gain_mismatch, params.phase_mismatch
    q_imp = g * (q * np.cos(d) + i * np.sin(d))
    return i + 1j * q_imp


def undo_iq_imbalance(x, params: ImbalanceParams) -> np.ndarray:
    """Exact inverse of :func:`apply_iq_imbalance`."""
    g, d = params.gain_mismatch, params.phase_mismatch
    c = np.cos(d)
    if abs(c) < 1e-12:
        raise ValueError("I/Q imbalance with cos(phase_mismatch) = 0 is not invertible")
    x = np.asarray(x)
    i, q_imp = x.real, x.imag
    q = (q_imp / g - i * np.sin(d)) / c
    return i + 1j * q


def correct_iq_imbalance(rec: IQRecording, channel1_params=None, channel2_params=None) -> IQRecording:
    """Apply the per-channel imbalance inverse to both channels of ``rec``."""
    p1 = ImbalanceParams.coerce(channel1_params)
    p2 = ImbalanceParams.coerce(channel2_params)
    return rec.with_channels(undo_iq_imbalance(rec.channel1, p1),
                             undo_iq_imbalance(rec.channel2, p2))


class DCOffsetRemover(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`remove_dc_offset`.

    Stateless; ``fit`` only validates the parameters so the object can sit in
    an sklearn :class:`~sklearn.pipeline.Pipeline`.
    """

    def __init__(self, window_length: int = DEFAULT_DC_WINDOW):
        self.window_length = window_length

    def fit(self, X: IQRecording, y=None):
        if int(self.window_length) < 1:
            raise ValueError("window_length must be >= 1")
        return self

    def transform(self, X: IQRecording) -> IQRecording:
        return remove_dc_offset(X, min(int(self.window_length), max(len(X), 1)))


class IQImbalanceCorrector(TransformerMixin, BaseEstimator):
    def __init__(self, channel1_params=None, channel2_params=None):
        self.channel1_params = channel1_params
        self.channel2_params = channel2_params

    def fit(self, X: IQRecording, y=None):
        for p in (self.channel1_params, self.channel2_params):
            p = ImbalanceParams.coerce(p)
            if abs(np.cos(p.phase_mismatch)) < 1e-12:
                raise ValueError("I/Q imbalance with cos(phase_mismatch) = 0 is not invertible")
        return self

    def transform(self, X: IQRecording) -> IQRecording:
        return correct_iq_imbalance(X, self.channel1_params, self.channel2_params)
