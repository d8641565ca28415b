"""Doppler analysis of non-uniformly sampled relative channel series.

Frames arrive at irregular instants, so the short-time spectrum is evaluated
directly as a windowed sum over the actual frame times instead of through an
FFT. The module also holds the timestamp scaling that undoes the time
compression caused by acquisition dead time, Doppler peak picking, and the
conversion of Doppler shifts to radial velocities.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.constants import speed_of_light
from scipy.signal import find_peaks
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_positive
from .differential import RelativeChannelSeries

DB_FLOOR = -120.0
WINDOW_KINDS = ("hann", "gaussian", "rect")
# Gaussian windows are truncated at +-3 standard deviations.
GAUSSIAN_SIGMAS = 3.0


class LowSupportWarning(UserWarning):
    """Some spectrogram columns have a window span shorter than a frame gap."""


@dataclass(frozen=True)
class TimeCalibration:
    k_t: float

    def __post_init__(self):
        if not self.k_t > 0:
            raise ValueError(f"k_t must be > 0, got {self.k_t}")


def estimate_k_t(theoretical_duration: float, measured_duration: float) -> TimeCalibration:
    """Scale factor mapping recorded time onto wall-clock time."""
    theoretical_duration = check_positive(theoretical_duration, "theoretical_duration")
    measured_duration = check_positive(measured_duration, "measured_duration")
    return TimeCalibration(theoretical_duration / measured_duration)


def k_t_from_duty_ratio(duty_ratio: float) -> TimeCalibration:
    """Scale factor implied by a known acquisition duty ratio (kept / elapsed)."""
    duty_ratio = check_positive(duty_ratio, "duty_ratio")
    if duty_ratio > 1:
        raise ValueError(f"duty_ratio must not exceed 1, got {duty_ratio}")
    return TimeCalibration(1.0 / duty_ratio)


def calibrate_timestamps(series: RelativeChannelSeries, cal: TimeCalibration | float) -> RelativeChannelSeries:
    k_t = cal.k_t if isinstance(cal, TimeCalibration) else TimeCalibration(float(cal)).k_t
    return replace(series, timestamps=series.timestamps * k_t)


def measure_reversal_period(series: RelativeChannelSeries, smoothing: int = 9) -> float:
    """Mean time between sign reversals of the dominant Doppler shift.

    The sign of the frame-to-frame phase advance of the series tracks the
    direction of motion; it is median-filtered over ``smoothing`` frames and
    the spacing of its sign changes is averaged. Useful to time a to-and-fro
    motion whose real leg duration is known.

    Raises:
        ValueError: fewer than two reversals were found.
    """
    from scipy.ndimage import median_filter

    v = series.values
    if v.size < 3:
        raise ValueError("series too short to measure reversals")
    step = np.angle(v[1:] * np.conj(v[:-1]))
    direction = np.sign(median_filter(np.sign(step), size=max(int(smoothing), 1), mode="nearest"))
    t_mid = 0.5 * (series.timestamps[1:] + series.timestamps[:-1])
    nz = np.flatnonzero(direction)
    flips = nz[1:][direction[nz[1:]] != direction[nz[:-1]]]
    if flips.size < 2:
        raise ValueError("fewer than two motion reversals found")
    times = t_mid[flips]
    return float((times[-1] - times[0]) / (times.size - 1))


@dataclass(frozen=True)
class StftParams:
    """Analysis settings of the non-uniform STFT.

    Attributes:
        window_kind: ``"hann"``, ``"gaussian"`` or ``"rect"``.
        window_span: Full support of the analysis window, seconds.
        hop: Spacing of the analysis centres, seconds.
        doppler_grid: Strictly increasing Doppler frequencies in Hz.
        normalize: Divide each column by the sum of its window weights.
    """

    window_span: float
    hop: float
    doppler_grid: np.ndarray = field(default_factory=lambda: doppler_grid(400.0, 1.0))
    window_kind: str = "hann"
    normalize: bool = True

    def __post_init__(self):
        check_positive(self.window_span, "window_span")
        check_positive(self.hop, "hop")
        if self.window_kind not in WINDOW_KINDS:
            raise ValueError(f"window_kind must be one of {WINDOW_KINDS}, got {self.window_kind!r}")
        grid = np.asarray(self.doppler_grid, dtype=np.float64).reshape(-1)
        if grid.size == 0 or np.any(np.diff(grid) <= 0):
            raise ValueError("doppler_grid must be non-empty and strictly increasing")
        object.__setattr__(self, "doppler_grid", grid)


def doppler_grid(limit: float, step: float) -> np.ndarray:
    """Symmetric grid ``-limit .. +limit`` with spacing ``step`` (0 included)."""
    limit = check_positive(limit, "limit")
    step = check_positive(step, "step")
    n = int(round(limit / step))
    return np.arange(-n, n + 1) * step


def window_weights(offsets, span: float, kind: str = "hann") -> np.ndarray:
    """Window value at time offsets from the centre; zero outside ``span/2``."""
    x = np.asarray(offsets, dtype=np.float64)
    half = 0.5 * span
    inside = np.abs(x) <= half
    if kind == "hann":
        w = 0.5 * (1.0 + np.cos(2.0 * np.pi * x / span))
    elif kind == "gaussian":
        sigma = half / GAUSSIAN_SIGMAS
        w = np.exp(-0.5 * (x / sigma) ** 2)
    elif kind == "rect":
        w = np.ones_like(x)
    else:
        raise ValueError(f"unknown window kind {kind!r}")
    return np.where(inside, w, 0.0)


@dataclass(frozen=True, eq=False)
class DopplerSpectrogram:
    """Complex spectrogram, rows are analysis times and columns Doppler bins."""

    times: np.ndarray
    frequencies: np.ndarray
    values: np.ndarray
    low_support: np.ndarray | None = None
    weight_sums: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64).reshape(-1)
        freqs = np.asarray(self.frequencies, dtype=np.float64).reshape(-1)
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != (times.size, freqs.size):
            raise ValueError(f"values shape {values.shape} does not match grids "
                             f"({times.size}, {freqs.size})")
        if not np.all(np.isfinite(values)):
            raise ValueError("spectrogram values must be finite")
        if self.low_support is None:
            object.__setattr__(self, "low_support", np.zeros(times.size, dtype=bool))
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "values", values)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    def to_db(self, floor: float = DB_FLOOR) -> np.ndarray:
        with np.errstate(divide="ignore"):
            db = 20.0 * np.log10(self.magnitude)
        return np.maximum(db, floor)

    def to_csv(self, path, floor: float = DB_FLOOR) -> None:
        """dB matrix: first row is the Doppler grid, first column the time grid."""
        db = self.to_db(floor)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["tau_s\\doppler_hz"] + [repr(float(f)) for f in self.frequencies])
            for tau, row in zip(self.times.tolist(), db.tolist()):
                writer.writerow([repr(tau)] + [f"{x:.6f}" for x in row])

    def save(self, path) -> Path:
        """Raw complex64 dump (row-major) plus a JSON sidecar describing the grids."""
        sidecar = Path(path)
        if sidecar.suffix != ".json":
            sidecar = sidecar.with_suffix(".json")
        sidecar.parent.mkdir(parents=True, exist_ok=True)
        data_name = sidecar.stem + ".c64"
        np.ascontiguousarray(self.values, dtype="<c8").tofile(sidecar.parent / data_name)
        header = {
            "data_file": data_name,
            "dtype": "complex64_le",
            "layout": "row-major [tau, doppler]",
            "shape": [int(self.times.size), int(self.frequencies.size)],
            "tau_s": self.times.tolist(),
            "doppler_hz": self.frequencies.tolist(),
            "low_support": self.low_support.astype(bool).tolist(),
            "metadata": self.metadata,
        }
        sidecar.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
        return sidecar

    @classmethod
    def load(cls, path) -> "DopplerSpectrogram":
        sidecar = Path(path)
        if sidecar.suffix != ".json":
            sidecar = sidecar.with_suffix(".json")
        try:
            header = json.loads(sidecar.read_text())
            shape = tuple(int(s) for s in header["shape"])
            values = np.fromfile(sidecar.parent / header["data_file"], dtype="<c8")
            times = np.asarray(header["tau_s"], dtype=np.float64)
            freqs = np.asarray(header["doppler_hz"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed spectrogram artifact {sidecar}: {exc}") from exc
        if values.size != shape[0] * shape[1] or shape != (times.size, freqs.size):
            raise ValueError(f"malformed spectrogram artifact {sidecar}: size mismatch")
        low = header.get("low_support")
        return cls(times, freqs, values.reshape(shape).astype(np.complex128),
                   None if low is None else np.asarray(low, dtype=bool),
                   metadata=header.get("metadata") or {})


def analysis_times(t_start: float, t_stop: float, hop: float) -> np.ndarray:
    n = int(np.floor((t_stop - t_start) / hop + 1e-9)) + 1
    return t_start + hop * np.arange(max(n, 1))


def nu_stft(series: RelativeChannelSeries, params: StftParams, times=None) -> DopplerSpectrogram:
    """Windowed Fourier sum over the series' own timestamps.

    For every analysis time ``tau`` and Doppler frequency ``f``::

        S(tau, f) = sum_i h_i * w(t_i - tau) * exp(-2j*pi*f*t_i)

    Only samples inside the window support enter the sum. With
    ``params.normalize`` each column is divided by ``sum_i w(t_i - tau)``.
    Columns whose window is narrower than the largest gap between frames
    touching it are flagged in ``low_support`` (and a warning is issued).

    Args:
        series: Relative channel series (timestamps need not be uniform).
        params: Window, hop and Doppler grid.
        times: Explicit analysis centres; default spans the series at ``hop``.
    """
    t = series.timestamps
    h = series.values
    if t.size == 0:
        raise ValueError("cannot analyse an empty series")
    f = params.doppler_grid
    tau = analysis_times(t[0], t[-1], params.hop) if times is None else np.asarray(times, float)
    half = 0.5 * params.window_span
    out = np.zeros((tau.size, f.size), dtype=np.complex128)
    wsum = np.zeros(tau.size)
    low = np.zeros(tau.size, dtype=bool)
    lo_idx = np.searchsorted(t, tau - half, side="left")
    hi_idx = np.searchsorted(t, tau + half, side="right")
    for k in range(tau.size):
        lo, hi = lo_idx[k], hi_idx[k]
        # gap check spans one sample beyond each edge of the support
        neighborhood = t[max(lo - 1, 0):min(hi + 1, t.size)]
        if neighborhood.size < 2 or np.max(np.diff(neighborhood)) >= params.window_span:
            low[k] = True
        if hi <= lo:
            continue
        ti = t[lo:hi]
        w = window_weights(ti - tau[k], params.window_span, params.window_kind)
        nz = w != 0
        if not nz.any():
            continue
        ti, wi = ti[nz], w[nz]
        kernel = np.exp(-2j * np.pi * np.outer(ti, f))
        out[k] = (h[lo:hi][nz] * wi) @ kernel
        wsum[k] = wi.sum()
    if params.normalize:
        nonzero = wsum > 0
        out[nonzero] /= wsum[nonzero, None]
    if low.any():
        warnings.warn(f"{int(low.sum())} of {tau.size} spectrogram columns have low frame support",
                      LowSupportWarning, stacklevel=2)
    return DopplerSpectrogram(tau, f, out, low, wsum)


def global_doppler_spectrum(series: RelativeChannelSeries, doppler_frequencies,
                            normalize: bool = True):
    """Magnitude spectrum of the whole series (one rectangular window).

    Returns:
        ``(frequencies, magnitude)``.
    """
    t, h = series.timestamps, series.values
    if t.size == 0:
        raise ValueError("cannot analyse an empty series")
    f = np.asarray(doppler_frequencies, dtype=np.float64).reshape(-1)
    spec = np.empty(f.size, dtype=np.complex128)
    # chunked over frequency to bound the kernel size
    step = max(1, 2_000_000 // max(t.size, 1))
    for i in range(0, f.size, step):
        spec[i:i + step] = h @ np.exp(-2j * np.pi * np.outer(t, f[i:i + step]))
    if normalize:
        spec /= t.size
    return f, np.abs(spec)


@dataclass(frozen=True)
class DopplerPeak:
    time: float
    frequency: float
    magnitude: float


def peak_doppler(spec: DopplerSpectrogram, per_column: bool = True, top_k: int = 1,
                 rel_threshold: float | None = None) -> list[DopplerPeak]:
    """Strongest Doppler component(s) per column, or over the whole grid.

    Args:
        spec: Spectrogram to search.
        per_column: Search each analysis time separately; otherwise return
            the single global maximum.
        top_k: With more than one, return up to ``top_k`` distinct local
            maxima per column ranked by magnitude.
        rel_threshold: Keep only peaks whose magnitude is strictly greater
            than ``rel_threshold`` times the column median.
    """
    mag = spec.magnitude
    peaks: list[DopplerPeak] = []
    if mag.size == 0:
        return peaks
    if not per_column:
        r, c = np.unravel_index(int(np.argmax(mag)), mag.shape)
        med = float(np.median(mag[r]))
        if rel_threshold is None or mag[r, c] > rel_threshold * med:
            peaks.append(DopplerPeak(float(spec.times[r]), float(spec.frequencies[c]), float(mag[r, c])))
        return peaks
    for r, col in enumerate(mag):
        if top_k <= 1:
            idx = np.array([int(np.argmax(col))])
        else:
            padded = np.concatenate(([-np.inf], col, [-np.inf]))
            idx, _ = find_peaks(padded)
            idx = idx - 1
            idx = idx[np.argsort(col[idx], kind="stable")[::-1][:top_k]]
        if rel_threshold is not None:
            med = float(np.median(col))
            idx = idx[col[idx] > rel_threshold * med]
        peaks.extend(DopplerPeak(float(spec.times[r]), float(spec.frequencies[c]), float(col[c]))
                     for c in idx)
    return peaks


def wavelength(center_frequency: float) -> float:
    return speed_of_light / check_positive(center_frequency, "center_frequency")


def doppler_to_velocity(doppler_hz, center_frequency: float):
    """Radial velocity ``v = f_d * lambda / 2`` (positive means approaching)."""
    v = np.asarray(doppler_hz, dtype=np.float64) * wavelength(center_frequency) / 2.0
    return float(v) if v.ndim == 0 else v


def velocity_to_doppler(velocity, center_frequency: float):
    f = 2.0 * np.asarray(velocity, dtype=np.float64) / wavelength(center_frequency)
    return float(f) if f.ndim == 0 else f


class TimestampCalibrator(TransformerMixin, BaseEstimator):
    """Multiply series timestamps by ``k_t``; ``k_t=None`` leaves them untouched."""

    def __init__(self, k_t: float | None = None):
        self.k_t = k_t

    def fit(self, X, y=None):
        if self.k_t is not None:
            TimeCalibration(float(self.k_t))
        return self

    def transform(self, X: RelativeChannelSeries) -> RelativeChannelSeries:
        return X if self.k_t is None else calibrate_timestamps(X, float(self.k_t))


class NUSTFT(TransformerMixin, BaseEstimator):
    """Estimator form of :func:`nu_stft`.

    ``doppler_limit`` and ``doppler_step`` build the default symmetric grid;
    an explicit ``doppler_frequencies`` array takes precedence.
    """

    def __init__(self, window_span: float = 0.1, hop: float = 0.025, window_kind: str = "hann",
                 doppler_limit: float = 400.0, doppler_step: float = 1.0,
                 doppler_frequencies=None, normalize: bool = True):
        self.window_span = window_span
        self.hop = hop
        self.window_kind = window_kind
        self.doppler_limit = doppler_limit
        self.doppler_step = doppler_step
        self.doppler_frequencies = doppler_frequencies
        self.normalize = normalize

    def _params(self) -> StftParams:
        grid = (doppler_grid(self.doppler_limit, self.doppler_step)
                if self.doppler_frequencies is None else self.doppler_frequencies)
        return StftParams(self.window_span, self.hop, grid, self.window_kind, self.normalize)

    def fit(self, X, y=None):
        self.params_ = self._params()
        return self

    def transform(self, X: RelativeChannelSeries) -> DopplerSpectrogram:
        return nu_stft(X, getattr(self, "params_", None) or self._params())
