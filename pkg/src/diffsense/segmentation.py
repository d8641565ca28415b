"""Energy-based burst segmentation and fixed-length frame alignment.

Bursts of the unknown ambient transmitter are found on the reference channel
with a dual-threshold detector: a frame opens on the first sample above the
start threshold and closes once ``end_count`` consecutive samples have fallen
below the end threshold. The same sample ranges are then cut from both
channels, trimmed to a common length chosen as a low percentile of the
detected durations.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import NoFramesDetectedError
from .recording import IQRecording

DEFAULT_END_COUNT = 16
DEFAULT_PERCENTILE = 5.0
DEFAULT_NOISE_PREFIX = 256
START_SIGMAS = 6.0
END_SIGMAS = 3.0
# Used when the noise prefix is exactly silent (noise-free simulations).
SILENT_START_FRACTION = 1e-3


@dataclass(frozen=True)
class SegmentationParams:
    start_threshold: float
    end_threshold: float
    end_count: int = DEFAULT_END_COUNT
    percentile: float = DEFAULT_PERCENTILE

    def __post_init__(self):
        if self.end_threshold > self.start_threshold:
            raise ValueError("end_threshold must not exceed start_threshold")
        if int(self.end_count) < 1:
            raise ValueError("end_count must be >= 1")
        if not 0 < self.percentile <= 100:
            raise ValueError("percentile must lie in (0, 100]")


@dataclass(frozen=True, eq=False)
class FrameTable:
    """Detected frames as start indices and durations (both in samples)."""

    starts: np.ndarray
    durations: np.ndarray

    def __post_init__(self):
        starts = np.asarray(self.starts, dtype=np.int64).reshape(-1)
        durations = np.asarray(self.durations, dtype=np.int64).reshape(-1)
        if starts.shape != durations.shape:
            raise ValueError("starts and durations must have equal lengths")
        if starts.size > 1:
            if np.any(np.diff(starts) <= 0):
                raise ValueError("frame starts must be strictly increasing")
            if np.any(starts[:-1] + durations[:-1] > starts[1:]):
                raise ValueError("frames overlap")
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "durations", durations)

    def __len__(self) -> int:
        return self.starts.size

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["start_index", "duration"])
            writer.writerows(zip(self.starts.tolist(), self.durations.tolist()))

    @classmethod
    def from_csv(cls, path) -> "FrameTable":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        data = np.asarray(rows, dtype=np.int64).reshape(-1, 2)
        return cls(data[:, 0], data[:, 1])


@dataclass(frozen=True, eq=False)
class AlignedFrameSet:
    """Equal-length windows cut from both channels at the same indices.

    Attributes:
        window_size: Samples per window.
        start_indices: First sample of each retained frame.
        start_times: ``start_indices / sample_rate`` in seconds.
        channel1, channel2: Arrays of shape ``(n_frames, window_size)``.
        sample_rate: Sampling rate of the source recording.
    """

    window_size: int
    start_indices: np.ndarray
    start_times: np.ndarray
    channel1: np.ndarray
    channel2: np.ndarray
    sample_rate: float

    def __len__(self) -> int:
        return self.start_indices.size


def detect_frames(reference, start_threshold: float, end_threshold: float,
                  end_count: int = DEFAULT_END_COUNT) -> FrameTable:
    """Dual-threshold frame detection on the reference channel.

    A frame starts at the first sample whose amplitude exceeds
    ``start_threshold``. Each later sample below ``end_threshold`` increments
    a counter, any other sample resets it; when the counter reaches
    ``end_count`` the frame ends at the first sample of that quiet run. A
    frame still open when the data runs out is closed after the final sample.

    The scan jumps between candidate start samples and closable quiet runs
    instead of visiting every sample, but it yields exactly what the
    sample-by-sample state machine yields.
    """
    amp = np.abs(np.asarray(reference))
    n = amp.size
    c = int(end_count)
    if c < 1:
        raise ValueError("end_count must be >= 1")
    if end_threshold > start_threshold:
        raise ValueError("end_threshold must not exceed start_threshold")
    if n == 0:
        return FrameTable(np.empty(0, np.int64), np.empty(0, np.int64))

    candidates = np.flatnonzero(amp > start_threshold)
    quiet = (amp < end_threshold).astype(np.int64)
    run = np.concatenate(([0], np.cumsum(quiet)))
    # closable[j]: samples j .. j+c-1 are all below the end threshold
    closable = np.flatnonzero(run[c:] - run[:-c] == c) if n >= c else np.empty(0, np.int64)

    starts, durations = [], []
    pos = 0
    while True:
        k = np.searchsorted(candidates, pos)
        if k == candidates.size:
            break
        s = int(candidates[k])
        m = np.searchsorted(closable, s + 1)
        starts.append(s)
        if m == closable.size:
            durations.append(n - s)
            break
        end = int(closable[m])
        durations.append(end - s)
        pos = end + c
    return FrameTable(np.asarray(starts, np.int64), np.asarray(durations, np.int64))


def estimate_thresholds(reference, noise_prefix: int = DEFAULT_NOISE_PREFIX) -> tuple[float, float]:
    """Adaptive (start, end) thresholds from a leading noise-only stretch.

    Returns ``mean + 6 std`` and ``mean + 3 std`` of the amplitude over the
    first ``noise_prefix`` samples. If that stretch is exactly silent the
    thresholds fall back to ``1e-3`` and ``5e-4`` of the peak amplitude.
    """
    amp = np.abs(np.asarray(reference))
    prefix = amp[: max(int(noise_prefix), 1)]
    mu, sigma = float(prefix.mean()), float(prefix.std())
    start, end = mu + START_SIGMAS * sigma, mu + END_SIGMAS * sigma
    if start <= 0:
        peak = float(amp.max()) if amp.size else 0.0
        start, end = SILENT_START_FRACTION * peak, 0.5 * SILENT_START_FRACTION * peak
    return start, end


def uniform_window_size(durations, percentile: float = DEFAULT_PERCENTILE) -> int:
    """Nearest-rank percentile of the frame durations."""
    d = np.sort(np.asarray(durations, dtype=np.int64).reshape(-1))
    if d.size == 0:
        raise ValueError("cannot choose a window size from an empty duration list")
    if not 0 < percentile <= 100:
        raise ValueError("percentile must lie in (0, 100]")
    rank = max(math.ceil(percentile / 100.0 * d.size), 1)
    return int(d[rank - 1])


def align_frames(rec: IQRecording, table: FrameTable, window_size: int) -> AlignedFrameSet:
    """Keep the first ``window_size`` samples of every long-enough frame.

    Frames shorter than ``window_size`` are discarded. Both channels are cut
    at identical index ranges.
    """
    window_size = int(window_size)
    if window_size <= 0:
        raise ValueError(f"window_size must be > 0, got {window_size}")
    if len(table) and int(table.starts[-1] + table.durations[-1]) > len(rec):
        raise ValueError("frame table extends past the end of the recording")
    keep = table.durations >= window_size
    starts = table.starts[keep]
    idx = starts[:, None] + np.arange(window_size)[None, :]
    return AlignedFrameSet(
        window_size=window_size,
        start_indices=starts,
        start_times=starts * rec.sample_period,
        channel1=np.asarray(rec.channel1)[idx],
        channel2=np.asarray(rec.channel2)[idx],
        sample_rate=rec.sample_rate,
    )


class FrameSegmenter(TransformerMixin, BaseEstimator):
    """Detect frames on channel 1 and cut aligned windows from both channels.

    Parameters:
        start_threshold, end_threshold: Absolute amplitude thresholds. When
            ``None`` they are estimated from the first ``noise_prefix``
            samples (see :func:`estimate_thresholds`).
        end_count: Consecutive quiet samples needed to close a frame.
        percentile: Percentile of detected durations used as window size.
        window_size: Fixed window size overriding the percentile rule.

    Attributes:
        thresholds_: The (start, end) thresholds actually used.
        frame_table_: Frames detected during ``fit``.
        window_size_: Window length chosen during ``fit``.
    """

    def __init__(self, start_threshold=None, end_threshold=None, end_count=DEFAULT_END_COUNT,
                 percentile=DEFAULT_PERCENTILE, noise_prefix=DEFAULT_NOISE_PREFIX, window_size=None):
        self.start_threshold = start_threshold
        self.end_threshold = end_threshold
        self.end_count = end_count
        self.percentile = percentile
        self.noise_prefix = noise_prefix
        self.window_size = window_size

    def _thresholds(self, rec: IQRecording) -> tuple[float, float]:
        est = None
        if self.start_threshold is None or self.end_threshold is None:
            est = estimate_thresholds(rec.channel1, self.noise_prefix)
        start = est[0] if self.start_threshold is None else float(self.start_threshold)
        end = est[1] if self.end_threshold is None else float(self.end_threshold)
        SegmentationParams(start, end, self.end_count, self.percentile)
        return start, end

    def fit(self, X: IQRecording, y=None):
        self.thresholds_ = self._thresholds(X)
        self.frame_table_ = detect_frames(X.channel1, *self.thresholds_, end_count=self.end_count)
        if not len(self.frame_table_):
            raise NoFramesDetectedError("no frames detected in the reference channel")
        if self.window_size is not None:
            self.window_size_ = int(self.window_size)
        else:
            self.window_size_ = uniform_window_size(self.frame_table_.durations, self.percentile)
        return self

    def transform(self, X: IQRecording) -> AlignedFrameSet:
        check_is_fitted(self, "window_size_")
        table = detect_frames(X.channel1, *self.thresholds_, end_count=self.end_count)
        return align_frames(X, table, self.window_size_)

    def fit_transform(self, X: IQRecording, y=None, **fit_params) -> AlignedFrameSet:
        self.fit(X)
        return align_frames(X, self.frame_table_, self.window_size_)
