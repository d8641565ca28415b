"""Synthetic two-channel receiver data for passive differential sensing."""

from .models import (AcquisitionModel, AntennaPattern, CommonDistortion, DynamicPath, ImbalanceSpec,
                     PlateGeometry, Scene, StaticPath, TrajectorySpec, TxBurstModel)
from .presets import PRESET_PROFILES, PRESETS, get_preset
from .scattering import plate_echo_series, plate_scattered_field, wavenumber
from .synthesis import (SimulationResult, TxBursts, apply_acquisition_model, common_distortion_factor,
                        generate_tx_bursts, simulate_scene, static_path, synthesize_channels)
from .trajectory import trajectory_path_distance, trajectory_path_rate

__all__ = [
    "AcquisitionModel", "AntennaPattern", "CommonDistortion", "DynamicPath", "ImbalanceSpec",
    "PlateGeometry", "Scene", "StaticPath", "TrajectorySpec", "TxBurstModel",
    "PRESETS", "PRESET_PROFILES", "get_preset",
    "plate_scattered_field", "plate_echo_series", "wavenumber",
    "SimulationResult", "TxBursts", "apply_acquisition_model", "common_distortion_factor",
    "generate_tx_bursts", "simulate_scene", "static_path", "synthesize_channels",
    "trajectory_path_distance", "trajectory_path_rate",
]
