"""Relative channel estimation between the sensing and reference receivers.

For every aligned frame the sensing spectrum is divided bin by bin by the
reference spectrum. Anything that multiplies both receive chains alike (the
unknown transmit waveform, carrier offset, phase noise, device response)
drops out of that ratio. The per-bin ratios are averaged into one complex
value per frame and the temporal mean of the resulting series is removed,
leaving only what moves.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_timestamps
from .exceptions import UnusableFrameError, UnusableSeriesError
from .segmentation import AlignedFrameSet

DEFAULT_NULL_RATIO = 1e-3


@dataclass(frozen=True, eq=False)
class FrameSpectrumPair:
    reference: np.ndarray
    sensing: np.ndarray
    resolution: float

    def __post_init__(self):
        if self.reference.shape != self.sensing.shape:
            raise ValueError("spectra must have the same length")
        if not self.resolution > 0:
            raise ValueError("frequency resolution must be > 0")

    @classmethod
    def from_windows(cls, reference, sensing, sample_rate: float) -> "FrameSpectrumPair":
        n = len(reference)
        return cls(frame_spectrum(reference, n), frame_spectrum(sensing, n), sample_rate / n)


@dataclass(frozen=True, eq=False)
class RelativeChannelSeries:
    """Per-frame relative channel values on non-uniform timestamps.

    Attributes:
        timestamps: Frame start times in seconds, strictly increasing.
        values: Complex relative channel value of each frame.
        mean_removed: Whether the temporal mean has been subtracted.
        baseline: The subtracted mean (0 if none was removed).
    """

    timestamps: np.ndarray
    values: np.ndarray
    mean_removed: bool = False
    baseline: complex = 0j

    def __post_init__(self):
        t = check_timestamps(self.timestamps)
        v = np.asarray(self.values, dtype=np.complex128).reshape(-1)
        if t.shape != v.shape:
            raise ValueError("timestamps and values must have equal lengths")
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "real", "imag"])
            for t, v in zip(self.timestamps.tolist(), self.values.tolist()):
                writer.writerow([repr(t), repr(v.real), repr(v.imag)])

    @classmethod
    def from_csv(cls, path, mean_removed: bool = True) -> "RelativeChannelSeries":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        data = np.asarray(rows, dtype=float).reshape(-1, 3)
        return cls(data[:, 0], data[:, 1] + 1j * data[:, 2], mean_removed)


def symmetric_bin_index(n: int) -> np.ndarray:
    """Signed frequency index of each FFT bin, in the range ``(-n/2, n/2]``."""
    k = np.arange(n)
    return np.where(k <= n // 2, k, k - n)


def frame_spectrum(window, window_size: int | None = None) -> np.ndarray:
    """Unnormalized forward DFT of one frame, DC bin first."""
    window = np.asarray(window)
    if window.ndim != 1:
        raise ValueError("frame window must be one-dimensional")
    if window_size is not None and window.size != window_size:
        raise ValueError(f"frame window has {window.size} samples, expected {window_size}")
    return np.fft.fft(window)


def null_guard(reference_spectrum, null_ratio: float = DEFAULT_NULL_RATIO) -> np.ndarray:
    """Mask of bins whose reference magnitude is large enough to divide by.

    A bin is excluded when ``|R1| < null_ratio * median(|R1|)`` or when it is
    exactly zero. Works along the last axis.
    """
    mag = np.abs(reference_spectrum)
    floor = null_ratio * np.median(mag, axis=-1, keepdims=True)
    return (mag >= floor) & (mag > 0)


def relative_channel(pair: FrameSpectrumPair, null_ratio: float = DEFAULT_NULL_RATIO):
    """Bin-wise ratio ``sensing / reference`` with a spectral-null guard.

    Returns:
        ``(ratio, included)``: ratio is NaN on excluded bins.

    Raises:
        UnusableFrameError: every bin was excluded.
    """
    included = null_guard(pair.reference, null_ratio)
    if not included.any():
        raise UnusableFrameError("all frequency bins fall below the null guard")
    ratio = np.full(pair.reference.shape, np.nan + 0j)
    ratio[included] = pair.sensing[included] / pair.reference[included]
    return ratio, included


def spectral_average(ratio, included=None) -> complex:
    """Arithmetic mean of the bin-wise ratio over the included bins."""
    ratio = np.asarray(ratio)
    if included is None:
        included = np.ones(ratio.shape, dtype=bool)
    count = int(np.count_nonzero(included))
    if count == 0:
        raise UnusableFrameError("no frequency bins left to average")
    return complex(ratio[included].sum() / count)


def subtract_temporal_mean(series: RelativeChannelSeries) -> RelativeChannelSeries:
    """Remove the complex temporal mean (the static baseline) from a series."""
    if not len(series):
        raise ValueError("cannot remove the mean of an empty series")
    mean = complex(series.values.mean())
    return replace(series, values=series.values - mean, mean_removed=True,
                   baseline=series.baseline + mean)


def frame_relative_values(frames: AlignedFrameSet, null_ratio: float = DEFAULT_NULL_RATIO):
    """Spectrally averaged relative channel of every aligned frame.

    Returns:
        ``(values, usable)``; ``values`` is NaN where a frame is unusable.
    """
    r1 = np.fft.fft(frames.channel1, axis=-1)
    r2 = np.fft.fft(frames.channel2, axis=-1)
    included = null_guard(r1, null_ratio)
    safe = np.where(included, r1, 1.0)
    ratio = np.where(included, r2 / safe, 0.0)
    counts = included.sum(axis=-1)
    usable = counts > 0
    values = np.full(len(frames), np.nan + 0j)
    values[usable] = ratio[usable].sum(axis=-1) / counts[usable]
    return values, usable


def compute_differential_series(frames: AlignedFrameSet, null_ratio: float = DEFAULT_NULL_RATIO,
                                remove_mean: bool = True) -> RelativeChannelSeries:
    """Full differential stage: spectra, ratio, spectral average, mean removal.

    Unusable frames are dropped; the output keeps the surviving frames' own
    start times.

    Raises:
        UnusableSeriesError: no frame survived (or none was supplied).
    """
    if not len(frames):
        raise UnusableSeriesError("no aligned frames to process")
    values, usable = frame_relative_values(frames, null_ratio)
    if not usable.any():
        raise UnusableSeriesError("every frame was unusable")
    series = RelativeChannelSeries(frames.start_times[usable], values[usable])
    return subtract_temporal_mean(series) if remove_mean else series


class DifferentialChannel(TransformerMixin, BaseEstimator):
    """Turns an :class:`AlignedFrameSet` into a dynamic-only relative channel series.

    Attributes:
        n_frames_: Frames seen by the last ``transform``.
        n_unusable_: How many of them were dropped by the null guard.
    """

    def __init__(self, null_ratio: float = DEFAULT_NULL_RATIO, remove_mean: bool = True):
        self.null_ratio = null_ratio
        self.remove_mean = remove_mean

    def fit(self, X: AlignedFrameSet, y=None):
        if not self.null_ratio >= 0:
            raise ValueError("null_ratio must be >= 0")
        return self

    def transform(self, X: AlignedFrameSet) -> RelativeChannelSeries:
        series = compute_differential_series(X, self.null_ratio, self.remove_mean)
        self.n_frames_ = len(X)
        self.n_unusable_ = len(X) - len(series)
        return series
