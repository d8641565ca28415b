"""Passive differential mmWave Doppler sensing.

Two receive chains share one local oscillator: a reference antenna faces an
unknown ambient transmitter, a sensing antenna faces the scene. Dividing the
sensing spectrum by the reference spectrum per burst cancels the unknown
waveform and every distortion common to both chains, leaving the motion
signature that a non-uniform STFT turns into a Doppler spectrogram.
"""

from .differential import (DifferentialChannel, FrameSpectrumPair, RelativeChannelSeries,
                           compute_differential_series, frame_spectrum, relative_channel,
                           spectral_average, subtract_temporal_mean)
from .exceptions import (ChannelLengthMismatchError, ConfigError, DiffsenseError, MetadataMissingError,
                         NoFramesDetectedError, RecordingFormatError, UnusableFrameError,
                         UnusableSeriesError)
from .preprocessing import (DCOffsetRemover, ImbalanceParams, IQImbalanceCorrector, correct_iq_imbalance,
                            remove_dc_offset)
from .recording import IQRecording, read_recording, write_recording
from .segmentation import (AlignedFrameSet, FrameSegmenter, FrameTable, SegmentationParams, align_frames,
                           detect_frames, uniform_window_size)
from .spectrogram import (NUSTFT, DopplerSpectrogram, StftParams, TimeCalibration, TimestampCalibrator,
                          calibrate_timestamps, doppler_to_velocity, estimate_k_t, global_doppler_spectrum,
                          nu_stft, peak_doppler, velocity_to_doppler)

__version__ = "0.1.0"

__all__ = [
    "IQRecording", "read_recording", "write_recording",
    "ImbalanceParams", "remove_dc_offset", "correct_iq_imbalance", "DCOffsetRemover", "IQImbalanceCorrector",
    "SegmentationParams", "FrameTable", "AlignedFrameSet", "detect_frames", "uniform_window_size",
    "align_frames", "FrameSegmenter",
    "FrameSpectrumPair", "RelativeChannelSeries", "frame_spectrum", "relative_channel", "spectral_average",
    "subtract_temporal_mean", "compute_differential_series", "DifferentialChannel",
    "TimeCalibration", "StftParams", "DopplerSpectrogram", "estimate_k_t", "calibrate_timestamps",
    "nu_stft", "global_doppler_spectrum", "peak_doppler", "doppler_to_velocity", "velocity_to_doppler",
    "TimestampCalibrator", "NUSTFT",
    "DiffsenseError", "ConfigError", "RecordingFormatError", "MetadataMissingError",
    "ChannelLengthMismatchError", "NoFramesDetectedError", "UnusableFrameError", "UnusableSeriesError",
]
