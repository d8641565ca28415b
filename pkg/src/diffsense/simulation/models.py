"""Configuration types describing a simulated sensing scene."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .._validation import check_positive, check_range
from ..exceptions import ConfigError

MODULATIONS = ("random-QPSK", "random-complex-gaussian")
TRAJECTORY_KINDS = ("constant-velocity", "piecewise-to-and-fro", "sinusoidal")
AMPLITUDE_MODELS = ("constant", "inverse-distance")
DYNAMIC_UPDATES = ("sample", "burst")


@dataclass(frozen=True)
class TxBurstModel:
    """Bursty, unknown ambient transmitter.

    Attributes:
        burst_duration_range: ``(min, max)`` burst length in seconds.
        gap_duration_range: ``(min, max)`` silence between bursts in seconds.
        symbol_rate: Symbols per second; each symbol is held for
            ``round(sample_rate / symbol_rate)`` samples.
        modulation: ``"random-QPSK"`` or ``"random-complex-gaussian"``.
        power: RMS amplitude of the bursts.
        seed: Seed of the burst schedule and symbols.
        lead_in: Guaranteed silence at the start of the stream, seconds.
    """

    burst_duration_range: tuple[float, float] = (1e-3, 3e-3)
    gap_duration_range: tuple[float, float] = (1e-3, 4e-3)
    symbol_rate: float = 100e3
    modulation: str = "random-QPSK"
    power: float = 1.0
    seed: int = 0
    lead_in: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "burst_duration_range",
                           check_range(self.burst_duration_range, "burst_duration_range"))
        object.__setattr__(self, "gap_duration_range",
                           check_range(self.gap_duration_range, "gap_duration_range", allow_zero=True))
        check_positive(self.symbol_rate, "symbol_rate")
        check_positive(self.power, "power", strict=False)
        check_positive(self.lead_in, "lead_in", strict=False)
        if self.modulation not in MODULATIONS:
            raise ValueError(f"modulation must be one of {MODULATIONS}, got {self.modulation!r}")


@dataclass(frozen=True)
class StaticPath:
    complex_amplitude: complex = 1.0 + 0j
    delay: float = 0.0
    arrival_angle: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "complex_amplitude", complex(self.complex_amplitude))
        if not np.isfinite(self.complex_amplitude):
            raise ValueError("complex_amplitude must be finite")
        check_positive(self.delay, "delay", strict=False)


@dataclass(frozen=True)
class TrajectorySpec:
    """Motion of one scatterer, expressed as its total propagation path length.

    ``speed`` is the target's radial speed; with ``round_trip`` the path
    length changes twice as fast. Positive ``direction`` means the path
    initially shortens (target approaching). Motion happens only between
    ``start_time`` and ``stop_time``; the path length is frozen outside.

    Kinds:
        constant-velocity: straight-line radial motion.
        piecewise-to-and-fro: direction flips every ``segment_duration``.
        sinusoidal: oscillation with period ``2 * segment_duration`` and peak
            radial speed ``speed``.
    """

    kind: str = "constant-velocity"
    speed: float = 0.0
    segment_duration: float = 1.0
    initial_path_distance: float = 1.0
    round_trip: bool = True
    direction: int = 1
    start_time: float = 0.0
    stop_time: float | None = None

    def __post_init__(self):
        if self.kind not in TRAJECTORY_KINDS:
            raise ValueError(f"kind must be one of {TRAJECTORY_KINDS}, got {self.kind!r}")
        check_positive(self.speed, "speed", strict=False)
        check_positive(self.initial_path_distance, "initial_path_distance")
        if self.kind != "constant-velocity":
            check_positive(self.segment_duration, "segment_duration")
        if self.direction not in (1, -1):
            raise ValueError("direction must be +1 (approaching) or -1 (receding)")
        if self.stop_time is not None and self.stop_time < self.start_time:
            raise ValueError("stop_time precedes start_time")

    @property
    def path_rate(self) -> float:
        """Magnitude of the path-length rate of change while moving, m/s."""
        return self.speed * (2.0 if self.round_trip else 1.0)


@dataclass(frozen=True)
class DynamicPath:
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    base_amplitude: complex = 0.1 + 0j
    arrival_angle: float = math.pi
    amplitude_model: str = "constant"

    def __post_init__(self):
        object.__setattr__(self, "base_amplitude", complex(self.base_amplitude))
        if self.amplitude_model not in AMPLITUDE_MODELS:
            raise ValueError(f"amplitude_model must be one of {AMPLITUDE_MODELS}")


@dataclass(frozen=True)
class CommonDistortion:
    """Impairments shared by both receive chains."""

    cfo: float = 0.0
    phase_noise_linewidth: float = 0.0
    device_response: complex = 1.0 + 0j
    seed: int = 1

    def __post_init__(self):
        check_positive(self.phase_noise_linewidth, "phase_noise_linewidth", strict=False)
        object.__setattr__(self, "device_response", complex(self.device_response))
        if self.device_response == 0:
            raise ValueError("device_response must be nonzero")


@dataclass(frozen=True)
class AntennaPattern:
    """Cosine-power directivity with a back-lobe floor.

    ``g(theta) = max(cos(theta - boresight) ** exponent, floor)`` where the
    cosine is clipped at zero, so the gain is 1 on boresight.
    """

    boresight_angle: float = 0.0
    exponent: float = 2.0
    back_lobe_floor: float = 0.05

    def __post_init__(self):
        check_positive(self.exponent, "exponent", strict=False)
        if not 0 < self.back_lobe_floor <= 1:
            raise ValueError("back_lobe_floor must lie in (0, 1]")

    def gain(self, theta):
        c = np.clip(np.cos(np.asarray(theta, dtype=np.float64) - self.boresight_angle), 0.0, None)
        g = np.maximum(c ** self.exponent, self.back_lobe_floor)
        return float(g) if g.ndim == 0 else g


@dataclass(frozen=True)
class AcquisitionModel:
    """Block-wise capture with ``dead_time`` seconds lost after every block."""

    block_duration: float = 1.0
    dead_time: float = 0.0

    def __post_init__(self):
        check_positive(self.block_duration, "block_duration")
        check_positive(self.dead_time, "dead_time", strict=False)


@dataclass(frozen=True)
class PlateGeometry:
    """Rectangular conducting plate illuminated at normal incidence."""

    width: float = 0.1
    height: float = 0.1
    carrier_frequency: float = 25.1e9
    incident_amplitude: float = 1.0

    def __post_init__(self):
        check_positive(self.width, "width")
        check_positive(self.height, "height")
        check_positive(self.carrier_frequency, "carrier_frequency")


@dataclass(frozen=True)
class ImbalanceSpec:
    gain_mismatch: float = 1.0
    phase_mismatch: float = 0.0


@dataclass(frozen=True)
class Scene:
    """Everything needed to synthesize a two-channel recording.

    Attributes:
        reference_paths: Multipath seen by the reference receiver (Rx1).
        sensing_static_paths: Static multipath seen by the sensing receiver (Rx2).
        dynamic_paths: Moving scatterers seen by the sensing receiver.
        snr_db: Per-channel AWGN level relative to the mean reference-channel
            burst power; ``None`` disables noise.
        narrowband: Apply path delays as carrier phase only (no baseband delay).
        dynamic_update: ``"sample"`` evaluates moving paths at every sample,
            ``"burst"`` holds them fixed over each burst (stop-and-hop).
    """

    label: str = "custom"
    sample_rate: float = 100e3
    center_frequency: float = 25.1e9
    duration: float = 1.0
    tx: TxBurstModel = field(default_factory=TxBurstModel)
    rx1_pattern: AntennaPattern = field(default_factory=AntennaPattern)
    rx2_pattern: AntennaPattern = field(default_factory=lambda: AntennaPattern(boresight_angle=math.pi))
    reference_paths: tuple[StaticPath, ...] = (StaticPath(),)
    sensing_static_paths: tuple[StaticPath, ...] = ()
    dynamic_paths: tuple[DynamicPath, ...] = ()
    distortion: CommonDistortion = field(default_factory=CommonDistortion)
    snr_db: float | None = None
    noise_seed: int = 2
    acquisition: AcquisitionModel | None = None
    iq_imbalance: tuple[ImbalanceSpec, ImbalanceSpec] | None = None
    dc_offset: tuple[complex, complex] = (0j, 0j)
    narrowband: bool = False
    dynamic_update: str = "sample"

    def __post_init__(self):
        check_positive(self.sample_rate, "sample_rate")
        check_positive(self.center_frequency, "center_frequency")
        check_positive(self.duration, "duration")
        if not self.reference_paths:
            raise ValueError("reference_paths must not be empty: the reference receiver has to see the source")
        if self.dynamic_update not in DYNAMIC_UPDATES:
            raise ValueError(f"dynamic_update must be one of {DYNAMIC_UPDATES}")
        object.__setattr__(self, "reference_paths", tuple(self.reference_paths))
        object.__setattr__(self, "sensing_static_paths", tuple(self.sensing_static_paths))
        object.__setattr__(self, "dynamic_paths", tuple(self.dynamic_paths))
        object.__setattr__(self, "dc_offset", tuple(complex(c) for c in self.dc_offset))

    def replace(self, **changes) -> "Scene":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return _encode(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Scene":
        return _decode(cls, data, "scene")


# JSON encoding -------------------------------------------------------------

def _encode(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _encode(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (tuple, list)):
        return [_encode(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


_NESTED = {
    "tx": TxBurstModel,
    "rx1_pattern": AntennaPattern,
    "rx2_pattern": AntennaPattern,
    "distortion": CommonDistortion,
    "acquisition": AcquisitionModel,
    "trajectory": TrajectorySpec,
}
_LISTS = {
    "reference_paths": StaticPath,
    "sensing_static_paths": StaticPath,
    "dynamic_paths": DynamicPath,
    "iq_imbalance": ImbalanceSpec,
}
_COMPLEX = {"complex_amplitude", "base_amplitude", "device_response"}


def _as_complex(value, where: str) -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, dict) and set(value) == {"re", "im"}:
        return complex(value["re"], value["im"])
    raise ConfigError(f"expected a number or [re, im] pair, got {value!r}", where)


def _decode(cls, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"expected an object, got {type(data).__name__}", where)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown field(s): {', '.join(unknown)}", where)
    kwargs = {}
    for key, value in data.items():
        path = f"{where}.{key}"
        if value is None:
            kwargs[key] = None
        elif key in _NESTED:
            kwargs[key] = _decode(_NESTED[key], value, path)
        elif key in _LISTS:
            if not isinstance(value, list):
                raise ConfigError("expected a list", path)
            kwargs[key] = tuple(_decode(_LISTS[key], v, f"{path}[{i}]") for i, v in enumerate(value))
        elif key in _COMPLEX:
            kwargs[key] = _as_complex(value, path)
        elif key == "dc_offset":
            kwargs[key] = tuple(_as_complex(v, f"{path}[{i}]") for i, v in enumerate(value))
        elif key.endswith("_range"):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), where) from exc
