"""Two-channel I/Q recordings and their on-disk representation.

A recording on disk is one JSON sidecar plus one raw file per channel. Each
raw file holds interleaved little-endian float32 ``I, Q, I, Q, ...`` pairs,
the usual ``cf32`` capture layout, so it can be memory-mapped directly.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .exceptions import ChannelLengthMismatchError, MetadataMissingError, RecordingFormatError

FORMAT_TAG = "cf32_le"
_CF32 = np.dtype("<c8")


@dataclass(frozen=True, eq=False)
class IQRecording:
    """Synchronized samples of the reference (``channel1``) and sensing
    (``channel2``) receivers.

    Attributes:
        channel1: Complex baseband samples of the reference receiver.
        channel2: Complex baseband samples of the sensing receiver.
        sample_rate: Samples per second.
        center_frequency: RF carrier the baseband is referred to, in Hz.
        metadata: Free-form JSON-serializable acquisition details.
    """

    channel1: np.ndarray
    channel2: np.ndarray
    sample_rate: float
    center_frequency: float
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        c1 = np.asarray(self.channel1)
        c2 = np.asarray(self.channel2)
        if c1.ndim != 1 or c2.ndim != 1:
            raise ValueError("channels must be one-dimensional")
        if c1.shape != c2.shape:
            raise ChannelLengthMismatchError(
                f"channel lengths differ: {c1.size} vs {c2.size}")
        if not np.iscomplexobj(c1):
            c1 = c1.astype(np.complex128)
        if not np.iscomplexobj(c2):
            c2 = c2.astype(np.complex128)
        if not (np.all(np.isfinite(c1)) and np.all(np.isfinite(c2))):
            raise ValueError("recording contains non-finite samples")
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be > 0, got {self.sample_rate}")
        object.__setattr__(self, "channel1", c1)
        object.__setattr__(self, "channel2", c2)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))
        object.__setattr__(self, "center_frequency", float(self.center_frequency))
        object.__setattr__(self, "metadata", dict(self.metadata))

    def __len__(self) -> int:
        return self.channel1.size

    @property
    def sample_period(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def with_channels(self, channel1, channel2, **metadata_updates) -> "IQRecording":
        """Copy of this recording with new samples (and optionally extra metadata)."""
        meta = {**self.metadata, **metadata_updates}
        return replace(self, channel1=channel1, channel2=channel2, metadata=meta)


def _sidecar_path(path) -> Path:
    path = Path(path)
    if path.is_dir():
        return path / "recording.json"
    if path.suffix != ".json":
        return path.with_suffix(".json")
    return path


def write_recording(rec: IQRecording, path) -> Path:
    """Write ``rec`` as a JSON sidecar plus two ``cf32`` channel files.

    ``path`` names the sidecar; channel files are placed next to it. Samples
    are stored as complex64, so only complex64 recordings round-trip exactly.

    Returns:
        The path of the written sidecar.
    """
    sidecar = _sidecar_path(path)
    sidecar.parent.mkdir(parents=True, exist_ok=True)
    stem = sidecar.stem
    files = [f"{stem}.ch1.cf32", f"{stem}.ch2.cf32"]
    for name, samples in zip(files, (rec.channel1, rec.channel2)):
        np.ascontiguousarray(samples, dtype=_CF32).tofile(sidecar.parent / name)
    header = {
        "format": FORMAT_TAG,
        "sample_rate_hz": rec.sample_rate,
        "center_freq_hz": rec.center_frequency,
        "num_samples": len(rec),
        "channel_files": files,
        "metadata": rec.metadata,
    }
    sidecar.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    return sidecar


def read_recording(path, *, mmap: bool = False) -> IQRecording:
    """Load a recording written by :func:`write_recording`.

    Raises:
        MetadataMissingError: the sidecar does not exist.
        RecordingFormatError: the sidecar is malformed or a channel file is
            truncated or missing.
        ChannelLengthMismatchError: the channel files differ in length.
    """
    sidecar = _sidecar_path(path)
    if not sidecar.is_file():
        raise MetadataMissingError(f"recording metadata missing: {sidecar}")
    try:
        header = json.loads(sidecar.read_text())
    except json.JSONDecodeError as exc:
        raise RecordingFormatError(f"malformed sidecar {sidecar}: {exc}") from exc
    if not isinstance(header, dict):
        raise RecordingFormatError(f"malformed sidecar {sidecar}: expected an object")
    missing = [k for k in ("sample_rate_hz", "center_freq_hz", "channel_files") if k not in header]
    if missing:
        raise RecordingFormatError(f"sidecar {sidecar} lacks keys: {', '.join(missing)}")
    if header.get("format", FORMAT_TAG) != FORMAT_TAG:
        raise RecordingFormatError(f"unsupported sample format {header['format']!r}")
    files = header["channel_files"]
    if not isinstance(files, list) or len(files) != 2:
        raise RecordingFormatError("channel_files must list exactly two files")

    channels = []
    for name in files:
        fpath = sidecar.parent / name
        if not fpath.is_file():
            raise RecordingFormatError(f"channel file missing: {fpath}")
        nbytes = os.path.getsize(fpath)
        if nbytes % _CF32.itemsize:
            raise RecordingFormatError(
                f"{fpath} is truncated: {nbytes} bytes is not a whole number of I/Q pairs")
        if mmap and nbytes:
            channels.append(np.memmap(fpath, dtype=_CF32, mode="r"))
        else:
            channels.append(np.fromfile(fpath, dtype=_CF32))

    if channels[0].size != channels[1].size:
        raise ChannelLengthMismatchError(
            f"channel lengths differ: {channels[0].size} vs {channels[1].size}")
    expected = header.get("num_samples")
    if expected is not None and channels[0].size != expected:
        raise RecordingFormatError(
            f"channel files hold {channels[0].size} samples, header declares {expected}")
    try:
        return IQRecording(channels[0], channels[1], header["sample_rate_hz"],
                           header["center_freq_hz"], header.get("metadata") or {})
    except (TypeError, ValueError) as exc:
        if isinstance(exc, RecordingFormatError):
            raise
        raise RecordingFormatError(f"invalid recording {sidecar}: {exc}") from exc
