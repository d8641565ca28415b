"""Ready-made scenes for the validation and activity scenarios.

Plate scenes reproduce the controlled slider experiment (10 cm plate, 3.3 m
from the sensing antenna, 3.125 cm/s). Human scenes approximate body motion
with configured trajectories; they reproduce the shape of the signatures,
not the measured data.
"""

from __future__ import annotations

import math

from ..spectrogram import doppler_to_velocity
from .models import (AcquisitionModel, CommonDistortion, DynamicPath, PlateGeometry, Scene,
                     TrajectorySpec, TxBurstModel)
from .scattering import plate_scattered_field
from .synthesis import static_path

CARRIER_HZ = 25.1e9
PLATE_SPEED = 0.03125
PLATE_LEG_S = 3.2
PLATE_RANGE_M = 3.3
TX_TO_RX1_M = 2.2
# A 2.2 m line-of-sight link at 25 GHz into a 100 kHz capture band is far above
# this; 45 dB is a conservative stand-in.
PLATE_SNR_DB = 45.0
# Short blocks keep the kept/lost pattern fine-grained relative to the
# Doppler period, so the dead time compresses the time axis uniformly.
PLATE_ACQUISITION = AcquisitionModel(block_duration=0.019, dead_time=0.013)


def plate_echo_amplitude(range_m: float = PLATE_RANGE_M) -> float:
    """Echo amplitude of the 10 cm plate relative to the reference LOS path.

    The incident field at the plate is taken as the LOS field at Rx1 scaled
    by ``TX_TO_RX1_M / range_m``.
    """
    plate = PlateGeometry(0.1, 0.1, CARRIER_HZ, TX_TO_RX1_M / range_m)
    return abs(plate_scattered_field(plate, range_m))


def _reference_paths():
    return (static_path(1.0, TX_TO_RX1_M, 0.0),
            static_path(0.25 * complex(math.cos(1.1), math.sin(1.1)), 7.4, 0.5))


def _sensing_static_paths():
    return (static_path(1.0, TX_TO_RX1_M + 0.01, 0.0),  # LOS leaking through the back lobe
            static_path(0.3 * complex(math.cos(-0.7), math.sin(-0.7)), 6.1, math.pi - 0.3),
            static_path(0.15, 4.3, math.pi + 0.6))


def _plate_scene(label: str, trajectory: TrajectorySpec | None, duration: float) -> Scene:
    dynamic = ()
    if trajectory is not None:
        dynamic = (DynamicPath(trajectory, plate_echo_amplitude(), math.pi, "constant"),)
    return Scene(
        label=label,
        sample_rate=100e3,
        center_frequency=CARRIER_HZ,
        duration=duration,
        tx=TxBurstModel((1e-3, 3e-3), (1e-3, 4e-3), 100e3, "random-QPSK", 1.0, seed=11, lead_in=5e-3),
        reference_paths=_reference_paths(),
        sensing_static_paths=_sensing_static_paths(),
        dynamic_paths=dynamic,
        distortion=CommonDistortion(cfo=1e3, phase_noise_linewidth=5.0,
                                    device_response=0.9 * complex(math.cos(0.4), math.sin(0.4)), seed=12),
        snr_db=PLATE_SNR_DB,
        noise_seed=13,
        acquisition=PLATE_ACQUISITION,
    )


def plate_to_and_fro(legs: int = 4) -> Scene:
    traj = TrajectorySpec("piecewise-to-and-fro", PLATE_SPEED, PLATE_LEG_S, 2 * PLATE_RANGE_M, True)
    return _plate_scene("plate-to-and-fro", traj, legs * PLATE_LEG_S)


def plate_continuous(duration: float = 16.0) -> Scene:
    traj = TrajectorySpec("constant-velocity", PLATE_SPEED, PLATE_LEG_S, 2 * PLATE_RANGE_M, True)
    return _plate_scene("plate-continuous", traj, duration)


def static_background(legs: int = 4) -> Scene:
    """The plate scene with the plate removed (same Tx power and noise)."""
    return _plate_scene("static-background", None, legs * PLATE_LEG_S)


def _speed_for(doppler_hz: float) -> float:
    return doppler_to_velocity(doppler_hz, CARRIER_HZ)


def _human_scene(label: str, dynamic, duration: float = 4.0) -> Scene:
    return Scene(
        label=label,
        sample_rate=1e6,
        center_frequency=CARRIER_HZ,
        duration=duration,
        tx=TxBurstModel((100e-6, 200e-6), (50e-6, 250e-6), 1e6, "random-QPSK", 1.0, seed=21, lead_in=200e-6),
        reference_paths=_reference_paths(),
        sensing_static_paths=_sensing_static_paths(),
        dynamic_paths=tuple(dynamic),
        distortion=CommonDistortion(cfo=1e3, phase_noise_linewidth=5.0,
                                    device_response=0.9 * complex(math.cos(0.4), math.sin(0.4)), seed=22),
        snr_db=30.0,
        noise_seed=23,
    )


def walk_unidirectional() -> Scene:
    torso = TrajectorySpec("constant-velocity", _speed_for(200.0), 1.0, 10.0, True,
                           start_time=0.5, stop_time=3.0)
    return _human_scene("walk-unidirectional", [DynamicPath(torso, 0.05, math.pi, "inverse-distance")])


def walk_back_and_forth() -> Scene:
    torso = TrajectorySpec("piecewise-to-and-fro", _speed_for(200.0), 1.0, 8.0, True)
    limbs = TrajectorySpec("sinusoidal", _speed_for(260.0), 0.25, 8.0, True)
    return _human_scene("walk-back-and-forth", [DynamicPath(torso, 0.06, math.pi),
                                                DynamicPath(limbs, 0.015, math.pi)])


def hand_wave() -> Scene:
    hand = TrajectorySpec("sinusoidal", _speed_for(350.0), 0.4, 1.5, True)
    return _human_scene("hand-wave", [DynamicPath(hand, 0.06, math.pi)])


def two_target() -> Scene:
    far = TrajectorySpec("piecewise-to-and-fro", _speed_for(200.0), 1.0, 12.0, True)
    near = TrajectorySpec("piecewise-to-and-fro", _speed_for(50.0), 0.7, 3.0, True, direction=-1)
    return _human_scene("two-target", [DynamicPath(far, 0.05, math.pi),
                                       DynamicPath(near, 0.15, math.pi + 0.3)])


PRESETS = {
    "plate-to-and-fro": plate_to_and_fro,
    "plate-continuous": plate_continuous,
    "static-background": static_background,
    "walk-unidirectional": walk_unidirectional,
    "walk-back-and-forth": walk_back_and_forth,
    "hand-wave": hand_wave,
    "two-target": two_target,
}

# Suggested processing profile for each preset (see diffsense.pipeline.PROFILES).
PRESET_PROFILES = {name: ("plate" if name.startswith(("plate", "static")) else "human") for name in PRESETS}


def get_preset(name: str) -> Scene:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
