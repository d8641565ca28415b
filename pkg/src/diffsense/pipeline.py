"""End-to-end processing of a recording into Doppler artifacts.

The stages are ordinary sklearn-compatible transformers chained in a
:class:`sklearn.pipeline.Pipeline`; :func:`run_pipeline` walks the chain by
hand so intermediate products (frame table, relative channel series) can be
written out next to the spectrogram.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from sklearn.pipeline import Pipeline

from .differential import DEFAULT_NULL_RATIO, DifferentialChannel, RelativeChannelSeries
from .exceptions import ConfigError, NoFramesDetectedError
from .preprocessing import DEFAULT_DC_WINDOW, DCOffsetRemover, IQImbalanceCorrector
from .recording import IQRecording, read_recording
from .segmentation import (DEFAULT_END_COUNT, DEFAULT_NOISE_PREFIX, DEFAULT_PERCENTILE, FrameSegmenter,
                           FrameTable)
from .spectrogram import (NUSTFT, DopplerSpectrogram, TimestampCalibrator, doppler_grid, doppler_to_velocity,
                          estimate_k_t, global_doppler_spectrum, k_t_from_duty_ratio,
                          measure_reversal_period, peak_doppler)

CALIBRATION_SOURCES = ("none", "explicit", "event", "metadata")

PROFILES = {
    "plate": {"window_span": 1.0, "hop": 0.1, "doppler_limit": 15.0, "doppler_step": 0.05},
    "human": {"window_span": 0.1, "hop": 0.025, "doppler_limit": 400.0, "doppler_step": 1.0},
}


@dataclass
class PreprocessingConfig:
    dc_window: int | None = DEFAULT_DC_WINDOW
    iq_imbalance: list | None = None


@dataclass
class SegmentationConfig:
    start_threshold: float | None = None
    end_threshold: float | None = None
    end_count: int = DEFAULT_END_COUNT
    percentile: float = DEFAULT_PERCENTILE
    noise_prefix: int = DEFAULT_NOISE_PREFIX
    window_size: int | None = None


@dataclass
class DifferentialConfig:
    null_ratio: float = DEFAULT_NULL_RATIO


@dataclass
class StftConfig:
    window_kind: str = "hann"
    window_span: float = PROFILES["human"]["window_span"]
    hop: float = PROFILES["human"]["hop"]
    doppler_limit: float = PROFILES["human"]["doppler_limit"]
    doppler_step: float = PROFILES["human"]["doppler_step"]
    normalize: bool = True


@dataclass
class CalibrationConfig:
    """Where the time-scaling factor comes from.

    ``explicit`` uses ``k_t``; ``event`` divides ``theoretical_duration`` by
    ``measured_duration`` (measured from the motion reversals of the data when
    left unset); ``metadata`` uses the duty ratio stored with the recording.
    """

    source: str = "none"
    k_t: float | None = None
    theoretical_duration: float | None = None
    measured_duration: float | None = None


@dataclass
class PeakConfig:
    top_k: int = 1
    rel_threshold: float | None = None


@dataclass
class PipelineConfig:
    input: str | None = None
    output_dir: str = "out"
    preprocessing: PreprocessingConfig = field(default_factory=PreprocessingConfig)
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    differential: DifferentialConfig = field(default_factory=DifferentialConfig)
    stft: StftConfig = field(default_factory=StftConfig)
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    peaks: PeakConfig = field(default_factory=PeakConfig)

    def validate(self) -> "PipelineConfig":
        if not self.input:
            raise ConfigError("an input recording path is required", "input")
        cal = self.calibration
        if cal.source not in CALIBRATION_SOURCES:
            raise ConfigError(f"must be one of {CALIBRATION_SOURCES}", "calibration.source")
        if cal.source == "explicit" and not (cal.k_t and cal.k_t > 0):
            raise ConfigError("explicit calibration needs k_t > 0", "calibration.k_t")
        if cal.source == "event" and not (cal.theoretical_duration and cal.theoretical_duration > 0):
            raise ConfigError("event calibration needs theoretical_duration > 0",
                              "calibration.theoretical_duration")
        if self.preprocessing.dc_window is not None and int(self.preprocessing.dc_window) < 1:
            raise ConfigError("must be >= 1 or null", "preprocessing.dc_window")
        seg = self.segmentation
        if int(seg.end_count) < 1:
            raise ConfigError("must be >= 1", "segmentation.end_count")
        if not 0 < seg.percentile <= 100:
            raise ConfigError("must lie in (0, 100]", "segmentation.percentile")
        if (seg.start_threshold is not None and seg.end_threshold is not None
                and seg.end_threshold > seg.start_threshold):
            raise ConfigError("must not exceed start_threshold", "segmentation.end_threshold")
        st = self.stft
        for name in ("window_span", "hop", "doppler_limit", "doppler_step"):
            if not getattr(st, name) > 0:
                raise ConfigError("must be > 0", f"stft.{name}")
        if st.window_kind not in ("hann", "gaussian", "rect"):
            raise ConfigError("must be hann, gaussian or rect", "stft.window_kind")
        if self.differential.null_ratio < 0:
            raise ConfigError("must be >= 0", "differential.null_ratio")
        return self

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PipelineConfig":
        if "config" in data and isinstance(data["config"], dict):
            data = data["config"]  # a run manifest
        sections = {"preprocessing": PreprocessingConfig, "segmentation": SegmentationConfig,
                    "differential": DifferentialConfig, "stft": StftConfig,
                    "calibration": CalibrationConfig, "peaks": PeakConfig}
        kwargs = {}
        for key, value in data.items():
            if key in sections:
                if not isinstance(value, dict):
                    raise ConfigError("expected an object", key)
                names = {f.name for f in dataclasses.fields(sections[key])}
                unknown = sorted(set(value) - names)
                if unknown:
                    raise ConfigError(f"unknown field(s): {', '.join(unknown)}", key)
                kwargs[key] = sections[key](**value)
            elif key in ("input", "output_dir"):
                kwargs[key] = value
            else:
                raise ConfigError("unknown field", key)
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must hold a JSON object")
        return cls.from_dict(data)


def apply_profile(config: PipelineConfig, profile: str) -> PipelineConfig:
    """Fill the STFT section with a named profile (``plate`` or ``human``)."""
    try:
        values = PROFILES[profile]
    except KeyError:
        raise ConfigError(f"unknown profile {profile!r}; choose from {', '.join(PROFILES)}", "profile") from None
    config.stft = dataclasses.replace(config.stft, **values)
    return config


def build_pipeline(config: PipelineConfig) -> Pipeline:
    """sklearn pipeline from preprocessing to the spectrogram.

    The calibration step starts with ``k_t=None``; :func:`run_pipeline`
    resolves the factor and sets it before the step runs.
    """
    steps = []
    pre = config.preprocessing
    if pre.dc_window:
        steps.append(("dc", DCOffsetRemover(int(pre.dc_window))))
    if pre.iq_imbalance:
        p1, p2 = pre.iq_imbalance
        steps.append(("iq", IQImbalanceCorrector(p1, p2)))
    seg = config.segmentation
    steps += [
        ("segment", FrameSegmenter(seg.start_threshold, seg.end_threshold, seg.end_count,
                                   seg.percentile, seg.noise_prefix, seg.window_size)),
        ("differential", DifferentialChannel(config.differential.null_ratio)),
        ("calibrate", TimestampCalibrator(None)),
        ("stft", NUSTFT(config.stft.window_span, config.stft.hop, config.stft.window_kind,
                        config.stft.doppler_limit, config.stft.doppler_step,
                        normalize=config.stft.normalize)),
    ]
    return Pipeline(steps)


def resolve_k_t(config: CalibrationConfig, rec: IQRecording, series: RelativeChannelSeries) -> tuple[float, dict]:
    """Time-scaling factor for the configured calibration source, plus details."""
    if config.source == "none":
        return 1.0, {}
    if config.source == "explicit":
        return float(config.k_t), {}
    if config.source == "metadata":
        duty = rec.metadata.get("duty_ratio")
        if duty is None:
            raise ConfigError("recording metadata has no duty_ratio", "calibration.source")
        return k_t_from_duty_ratio(float(duty)).k_t, {"duty_ratio": float(duty)}
    measured = config.measured_duration
    detail = {}
    if measured is None:
        measured = measure_reversal_period(series)
        detail["measured_from"] = "motion reversals"
    detail["measured_duration"] = float(measured)
    return estimate_k_t(config.theoretical_duration, measured).k_t, detail


@dataclass(eq=False)
class PipelineResult:
    config: PipelineConfig
    frame_table: FrameTable
    window_size: int
    frames_retained: int
    frames_unusable: int
    thresholds: tuple[float, float]
    k_t: float
    calibration_detail: dict
    series: RelativeChannelSeries
    spectrogram: DopplerSpectrogram
    global_frequencies: np.ndarray
    global_magnitude: np.ndarray
    center_frequency: float

    @property
    def global_peak(self) -> float:
        return float(self.global_frequencies[int(np.argmax(self.global_magnitude))])

    def summary(self) -> dict[str, Any]:
        return {
            "thresholds": [float(x) for x in self.thresholds],
            "window_size": int(self.window_size),
            "frames_detected": len(self.frame_table),
            "frames_retained": int(self.frames_retained),
            "frames_discarded": len(self.frame_table) - int(self.frames_retained),
            "frames_unusable": int(self.frames_unusable),
            "k_t": float(self.k_t),
            "calibration_detail": self.calibration_detail,
            "global_peak_hz": self.global_peak,
            "center_frequency_hz": float(self.center_frequency),
        }


def run_pipeline(config: PipelineConfig, recording: IQRecording | None = None) -> PipelineResult:
    """Run every stage on ``recording`` (or the file named in ``config.input``).

    Raises:
        NoFramesDetectedError: segmentation found nothing usable.
        UnusableSeriesError: every frame failed the null guard.
    """
    if recording is None:
        config.validate()
        recording = read_recording(config.input)
    pipe = build_pipeline(config)
    x: Any = recording
    series_raw = None
    segmenter = pipe.named_steps["segment"]
    for name, step in pipe.steps:
        if name == "calibrate":
            series_raw = x
            k_t, detail = resolve_k_t(config.calibration, recording, x)
            step.set_params(k_t=k_t)
        x = step.fit_transform(x)
        if name == "segment" and len(x) == 0:
            raise NoFramesDetectedError("no frame is at least as long as the chosen window")
    spectrogram = x
    series = pipe.named_steps["calibrate"].transform(series_raw)
    grid = doppler_grid(config.stft.doppler_limit, config.stft.doppler_step)
    gf, gm = global_doppler_spectrum(series, grid)
    diff = pipe.named_steps["differential"]
    return PipelineResult(
        config=config,
        frame_table=segmenter.frame_table_,
        window_size=segmenter.window_size_,
        frames_retained=diff.n_frames_,
        frames_unusable=diff.n_unusable_,
        thresholds=segmenter.thresholds_,
        k_t=k_t,
        calibration_detail=detail,
        series=series,
        spectrogram=dataclasses.replace(spectrogram, metadata={
            "center_frequency_hz": recording.center_frequency, "k_t": k_t,
            "scenario": recording.metadata.get("scenario")}),
        global_frequencies=gf,
        global_magnitude=gm,
        center_frequency=recording.center_frequency,
    )


def write_outputs(result: PipelineResult, output_dir=None) -> dict[str, Path]:
    """Write every artifact plus ``manifest.json``; returns their paths."""
    out = Path(output_dir or result.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "frames": out / "frames.csv",
        "series": out / "series.csv",
        "spectrogram_csv": out / "spectrogram.csv",
        "global_spectrum": out / "global_spectrum.csv",
        "peaks": out / "peaks.csv",
        "manifest": out / "manifest.json",
    }
    result.frame_table.to_csv(paths["frames"])
    result.series.to_csv(paths["series"])
    result.spectrogram.to_csv(paths["spectrogram_csv"])
    paths["spectrogram"] = result.spectrogram.save(out / "spectrogram.json")
    with open(paths["global_spectrum"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doppler_hz", "magnitude"])
        writer.writerows(zip(map(repr, result.global_frequencies.tolist()),
                             map(repr, result.global_magnitude.tolist())))
    pk = result.config.peaks
    peaks = peak_doppler(result.spectrogram, True, pk.top_k, pk.rel_threshold)
    with open(paths["peaks"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau_s", "doppler_hz", "magnitude", "velocity_mps"])
        for p in peaks:
            writer.writerow([repr(p.time), repr(p.frequency), repr(p.magnitude),
                             repr(doppler_to_velocity(p.frequency, result.center_frequency))])
    manifest = {
        "config": result.config.to_dict(),
        "results": result.summary(),
        "artifacts": {k: v.name for k, v in sorted(paths.items())},
    }
    paths["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return paths


# Table-style summary of Doppler components ----------------------------------

@dataclass(frozen=True)
class DopplerComponent:
    doppler_hz: float
    sign: str
    velocity_mps: float
    strength_db: tuple[float, float]
    columns: int

    def label(self) -> str:
        return f"{self.sign}{abs(self.doppler_hz):g}"


def summarize_components(spec: DopplerSpectrogram, center_frequency: float | None = None,
                         reference_floor_db: float | None = None, top_k: int = 3,
                         dynamic_range_db: float = 25.0, min_prominence_db: float = 10.0,
                         min_fraction: float = 0.1) -> list[DopplerComponent]:
    """Group per-column Doppler peaks into components.

    Peaks within ``dynamic_range_db`` of the strongest cell and at least
    ``min_prominence_db`` above the floor are clustered by absolute Doppler
    shift; clusters present in fewer than ``min_fraction`` of the columns
    are dropped. Strengths are reported relative to ``reference_floor_db``
    (default: the median level of ``spec`` itself).
    """
    if center_frequency is None:
        center_frequency = spec.metadata.get("center_frequency_hz")
    if center_frequency is None:
        raise ValueError("center frequency unknown")
    if spec.values.size == 0 or not np.any(spec.magnitude > 0):
        return []
    db = spec.to_db()
    floor = float(np.median(db)) if reference_floor_db is None else float(reference_floor_db)
    top = float(db.max())
    peaks = [p for p in peak_doppler(spec, True, top_k)
             if p.magnitude > 0 and 20 * np.log10(p.magnitude) >= max(top - dynamic_range_db,
                                                                        floor + min_prominence_db)]
    if not peaks:
        return []
    step = float(np.min(np.diff(spec.frequencies))) if spec.frequencies.size > 1 else 1.0
    order = sorted(peaks, key=lambda p: abs(p.frequency))
    clusters, current = [], [order[0]]
    for p in order[1:]:
        prev = abs(current[-1].frequency)
        if abs(p.frequency) - prev > max(3 * step, 0.2 * abs(p.frequency)):
            clusters.append(current)
            current = [p]
        else:
            current.append(p)
    clusters.append(current)

    min_cols = max(3, int(np.ceil(min_fraction * spec.times.size)))
    rows = []
    for cl in clusters:
        cols = len({p.time for p in cl})
        if cols < min_cols:
            continue
        f = np.array([p.frequency for p in cl])
        key = float(np.median(np.abs(f)))
        pos = float(np.mean(f > 0))
        sign = "+" if pos >= 0.8 else ("-" if pos <= 0.2 else "±")
        level = 20 * np.log10([p.magnitude for p in cl]) - floor
        strength = (float(np.percentile(level, 10)), float(np.percentile(level, 90)))
        rows.append(DopplerComponent(key if sign != "-" else -key, sign,
                                     doppler_to_velocity(key if sign != "-" else -key, center_frequency),
                                     strength, cols))
    return sorted(rows, key=lambda r: -abs(r.doppler_hz))


def write_report(rows: list[DopplerComponent], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doppler_hz", "sign", "velocity_mps", "strength_db_low", "strength_db_high", "columns"])
        for r in rows:
            writer.writerow([f"{r.doppler_hz:.4f}", r.sign, f"{r.velocity_mps:.5f}",
                             f"{r.strength_db[0]:.2f}", f"{r.strength_db[1]:.2f}", r.columns])
