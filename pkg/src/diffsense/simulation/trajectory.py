"""Path-length trajectories of moving scatterers."""

from __future__ import annotations

import numpy as np

from .models import TrajectorySpec


def _elapsed(traj: TrajectorySpec, t) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    stop = np.inf if traj.stop_time is None else traj.stop_time
    return np.clip(t, traj.start_time, stop) - traj.start_time


def _triangle(u: np.ndarray, half_period: float) -> np.ndarray:
    m = np.mod(u, 2.0 * half_period)
    return np.where(m < half_period, m, 2.0 * half_period - m)


def trajectory_path_distance(traj: TrajectorySpec, t):
    """Total propagation path length of the scatterer at time(s) ``t``."""
    u = _elapsed(traj, t)
    rate = traj.path_rate * traj.direction
    if traj.kind == "constant-velocity":
        shift = rate * u
    elif traj.kind == "piecewise-to-and-fro":
        shift = rate * _triangle(u, traj.segment_duration)
    else:
        period = 2.0 * traj.segment_duration
        shift = rate * period / (2.0 * np.pi) * np.sin(2.0 * np.pi * u / period)
    d = traj.initial_path_distance - shift
    return float(d) if d.ndim == 0 else d


def trajectory_path_rate(traj: TrajectorySpec, t):
    """Time derivative of :func:`trajectory_path_distance` (m/s).

    At the instants where the piecewise motion reverses, the rate of the
    segment that is starting is returned.
    """
    t = np.asarray(t, dtype=np.float64)
    stop = np.inf if traj.stop_time is None else traj.stop_time
    moving = (t >= traj.start_time) & (t < stop)
    u = _elapsed(traj, t)
    rate = traj.path_rate * traj.direction
    if traj.kind == "constant-velocity":
        v = np.full(t.shape, -rate)
    elif traj.kind == "piecewise-to-and-fro":
        leg = np.floor(u / traj.segment_duration)
        v = np.where(np.mod(leg, 2) == 0, -rate, rate)
    else:
        period = 2.0 * traj.segment_duration
        v = -rate * np.cos(2.0 * np.pi * u / period)
    v = np.where(moving, v, 0.0)
    return float(v) if v.ndim == 0 else v
