"""Far-field physical-optics scattering of a flat rectangular plate."""

from __future__ import annotations

import numpy as np
from scipy.constants import speed_of_light

from .models import PlateGeometry, TrajectorySpec
from .trajectory import trajectory_path_distance


def wavenumber(carrier_frequency: float) -> float:
    return 2.0 * np.pi * carrier_frequency / speed_of_light


def plate_scattered_field(plate: PlateGeometry, r):
    """Scattered field of a plate at normal incidence and observation.

    ``E = -j * E0 * (a * b * beta / (2 * pi)) * exp(-j * beta * r) / r`` with
    ``beta`` the free-space wavenumber at the plate's carrier frequency.

    Args:
        plate: Plate size, carrier and incident amplitude.
        r: Plate-to-receiver distance(s) in metres, must be > 0.
    """
    r = np.asarray(r, dtype=np.float64)
    if np.any(r <= 0) or not np.all(np.isfinite(r)):
        raise ValueError("plate_scattered_field requires finite r > 0 (far field)")
    beta = wavenumber(plate.carrier_frequency)
    scale = -1j * plate.incident_amplitude * plate.width * plate.height * beta / (2.0 * np.pi)
    e = scale * np.exp(-1j * beta * r) / r
    return complex(e) if e.ndim == 0 else e


def plate_echo_series(plate: PlateGeometry, trajectory: TrajectorySpec, times) -> np.ndarray:
    """Noise-free received echo of a moving plate sampled at ``times``.

    For a round-trip trajectory the plate distance is half the path length
    and the incident wave picks up the same propagation phase as the
    scattered one, so the echo rotates at the two-way Doppler rate.
    """
    d = trajectory_path_distance(trajectory, times)
    if trajectory.round_trip:
        r = 0.5 * d
        return plate_scattered_field(plate, r) * np.exp(-1j * wavenumber(plate.carrier_frequency) * r)
    return plate_scattered_field(plate, d)
