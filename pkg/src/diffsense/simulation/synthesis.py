"""Synthesis of two-channel receiver data from a :class:`Scene`."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import fft as sfft
from scipy.constants import speed_of_light

from ..preprocessing import ImbalanceParams, apply_iq_imbalance
from ..recording import IQRecording, write_recording
from .models import AcquisitionModel, Scene, StaticPath, TxBurstModel
from .trajectory import trajectory_path_distance, trajectory_path_rate

_QPSK = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class TxBursts:
    """Transmit stream and its ground-truth burst schedule (sample units)."""

    samples: np.ndarray
    starts: np.ndarray
    lengths: np.ndarray
    sample_rate: float

    def __len__(self) -> int:
        return self.starts.size

    def schedule_seconds(self) -> list[tuple[float, float]]:
        return [(s / self.sample_rate, n / self.sample_rate)
                for s, n in zip(self.starts.tolist(), self.lengths.tolist())]

    def burst_index(self) -> np.ndarray:
        """Index of the burst each sample belongs to, -1 in the gaps."""
        idx = np.full(self.samples.size, -1, dtype=np.int64)
        for i, (s, n) in enumerate(zip(self.starts, self.lengths)):
            idx[s:s + n] = i
        return idx


def generate_tx_bursts(model: TxBurstModel, total_duration: float, sample_rate: float) -> TxBursts:
    """Random bursts separated by random silences, exactly zero in between.

    The schedule alternates gap, burst, gap, burst, ... after ``lead_in``; a
    burst running past the end of the stream is truncated.
    """
    if not total_duration > 0:
        raise ValueError(f"total_duration must be > 0, got {total_duration}")
    if not sample_rate > 0:
        raise ValueError(f"sample_rate must be > 0, got {sample_rate}")
    n_total = int(round(total_duration * sample_rate))
    rng = np.random.default_rng(model.seed)
    starts, lengths = [], []
    pos = int(round(model.lead_in * sample_rate))
    while True:
        pos += int(round(rng.uniform(*model.gap_duration_range) * sample_rate))
        if pos >= n_total:
            break
        length = max(1, int(round(rng.uniform(*model.burst_duration_range) * sample_rate)))
        length = min(length, n_total - pos)
        starts.append(pos)
        lengths.append(length)
        pos += length

    sps = max(1, int(round(sample_rate / model.symbol_rate)))
    n_sym = -(-n_total // sps)
    if model.modulation == "random-QPSK":
        symbols = _QPSK[rng.integers(0, 4, n_sym)]
    else:
        symbols = (rng.standard_normal(n_sym) + 1j * rng.standard_normal(n_sym)) / np.sqrt(2.0)
    stream = np.repeat(symbols, sps)[:n_total] * model.power
    mask = np.zeros(n_total, dtype=bool)
    for s, n in zip(starts, lengths):
        mask[s:s + n] = True
    stream[~mask] = 0.0
    return TxBursts(stream, np.asarray(starts, np.int64), np.asarray(lengths, np.int64), float(sample_rate))


def _carrier_cycles(path_length, center_frequency: float, reference: float):
    """``center_frequency * path_length / c`` split to keep float64 precision."""
    base = center_frequency * reference / speed_of_light
    return (center_frequency / speed_of_light) * (np.asarray(path_length) - reference) + (base - np.floor(base))


class _DelayLine:
    """Fractional delays of one stream via a frequency-domain phase ramp."""

    def __init__(self, x: np.ndarray, sample_rate: float, max_delay: float):
        self.n = x.size
        pad = int(np.ceil(max_delay * sample_rate)) + 16
        self.nfft = sfft.next_fast_len(self.n + pad)
        self.spectrum = sfft.fft(x, self.nfft)
        self.freqs = sfft.fftfreq(self.nfft, 1.0 / sample_rate)

    def filtered(self, response: np.ndarray) -> np.ndarray:
        return sfft.ifft(self.spectrum * response)[: self.n]

    def response(self, paths, gain_fn, center_frequency: float, narrowband: bool) -> np.ndarray:
        h = np.zeros(self.nfft, dtype=np.complex128)
        for p in paths:
            coeff = gain_fn(p.arrival_angle) * p.complex_amplitude
            coeff *= np.exp(-2j * np.pi * _carrier_cycles(p.delay, center_frequency, 0.0))
            if narrowband:
                h += coeff
            else:
                h += coeff * np.exp(-2j * np.pi * self.freqs * p.delay)
        return h


def common_distortion_factor(scene: Scene, n: int) -> np.ndarray:
    """Shared CFO, Wiener phase noise and device response for ``n`` samples."""
    d = scene.distortion
    t = np.arange(n) / scene.sample_rate
    phase = 2.0 * np.pi * d.cfo * t
    if d.phase_noise_linewidth > 0:
        rng = np.random.default_rng(d.seed)
        step = np.sqrt(2.0 * np.pi * d.phase_noise_linewidth / scene.sample_rate)
        phase = phase + np.cumsum(rng.standard_normal(n) * step)
    return d.device_response * np.exp(1j * phase)


def synthesize_channels(scene: Scene, tx, bursts: TxBursts | None = None):
    """Propagate ``tx`` through both receive channels of ``scene``.

    Static paths are applied as one frequency response per channel; each
    moving path delays ``tx`` by its initial path length and rotates it by
    the carrier phase of its current path length. Both outputs are then
    multiplied by the same CFO, phase-noise and device-response factor,
    independent AWGN is added, followed by the optional per-channel I/Q
    imbalance and DC offset.

    Args:
        scene: Scene description.
        tx: Transmit stream sampled at ``scene.sample_rate``.
        bursts: Burst schedule of ``tx``; required for ``dynamic_update="burst"``.

    Returns:
        ``(channel1, channel2)`` complex arrays.
    """
    if not scene.reference_paths:
        raise ValueError("reference_paths must not be empty")
    tx = np.asarray(tx, dtype=np.complex128)
    fs, fc = scene.sample_rate, scene.center_frequency
    n = tx.size
    t = np.arange(n) / fs

    all_delays = [p.delay for p in scene.reference_paths + scene.sensing_static_paths]
    all_delays += [dp.trajectory.initial_path_distance / speed_of_light for dp in scene.dynamic_paths]
    line = _DelayLine(tx, fs, max(all_delays))

    r1 = line.filtered(line.response(scene.reference_paths, scene.rx1_pattern.gain, fc, scene.narrowband))
    if scene.sensing_static_paths:
        r2 = line.filtered(line.response(scene.sensing_static_paths, scene.rx2_pattern.gain, fc,
                                         scene.narrowband))
    else:
        r2 = np.zeros(n, dtype=np.complex128)

    if scene.dynamic_paths:
        if scene.dynamic_update == "burst":
            if bursts is None:
                raise ValueError("dynamic_update='burst' needs the burst schedule")
            bidx = bursts.burst_index()
            t_eval = np.where(bidx >= 0, bursts.starts[np.maximum(bidx, 0)] / fs, t)
        else:
            t_eval = t
        for dp in scene.dynamic_paths:
            traj = dp.trajectory
            d = trajectory_path_distance(traj, t_eval)
            if np.any(d <= 0):
                raise ValueError("dynamic path length must stay positive over the simulation")
            d0 = traj.initial_path_distance
            if scene.narrowband:
                delayed = tx
            else:
                delayed = line.filtered(np.exp(-2j * np.pi * line.freqs * d0 / speed_of_light))
            amp = dp.base_amplitude * scene.rx2_pattern.gain(dp.arrival_angle)
            if dp.amplitude_model == "inverse-distance":
                amp = amp * (d0 / d)
            r2 = r2 + amp * np.exp(-2j * np.pi * _carrier_cycles(d, fc, d0)) * delayed

    common = common_distortion_factor(scene, n)
    r1 = r1 * common
    r2 = r2 * common

    if scene.snr_db is not None:
        active = tx != 0
        power = float(np.mean(np.abs(r1[active]) ** 2)) if active.any() else 0.0
        sigma = np.sqrt(power / 10.0 ** (scene.snr_db / 10.0) / 2.0)
        rng = np.random.default_rng(scene.noise_seed)
        r1 = r1 + sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        r2 = r2 + sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))

    if scene.iq_imbalance is not None:
        p1, p2 = (ImbalanceParams(s.gain_mismatch, s.phase_mismatch) for s in scene.iq_imbalance)
        r1 = apply_iq_imbalance(r1, p1)
        r2 = apply_iq_imbalance(r2, p2)
    dc1, dc2 = scene.dc_offset
    return r1 + dc1, r2 + dc2


def acquisition_keep_mask(n: int, acq: AcquisitionModel, sample_rate: float) -> np.ndarray:
    block = max(1, int(round(acq.block_duration * sample_rate)))
    dead = int(round(acq.dead_time * sample_rate))
    if dead == 0:
        return np.ones(n, dtype=bool)
    return np.mod(np.arange(n), block + dead) < block


def apply_acquisition_model(channel1, channel2, acq: AcquisitionModel | None, sample_rate: float,
                            center_frequency: float, metadata: dict | None = None) -> IQRecording:
    """Drop ``dead_time`` after every ``block_duration`` and splice the rest.

    The retained blocks are concatenated with no record of the missing time,
    so naive timestamps run slow by the duty ratio. The true duty ratio and
    the matching time-scaling factor are stored in the metadata.
    """
    channel1 = np.asarray(channel1)
    channel2 = np.asarray(channel2)
    n = channel1.size
    meta = dict(metadata or {})
    if acq is None or acq.dead_time == 0:
        keep = None
        duty = 1.0
    else:
        keep = acquisition_keep_mask(n, acq, sample_rate)
        block = max(1, int(round(acq.block_duration * sample_rate)))
        duty = block / (block + int(round(acq.dead_time * sample_rate)))
    if keep is not None:
        channel1, channel2 = channel1[keep], channel2[keep]
    meta.update({
        "duty_ratio": duty,
        "k_t_true": 1.0 / duty,
        "true_duration_s": n / sample_rate,
        "recorded_duration_s": channel1.size / sample_rate,
        "block_duration_s": None if acq is None else acq.block_duration,
        "dead_time_s": 0.0 if acq is None else acq.dead_time,
    })
    return IQRecording(channel1, channel2, sample_rate, center_frequency, meta)


@dataclass(frozen=True, eq=False)
class SimulationResult:
    recording: IQRecording
    bursts: TxBursts
    ground_truth: dict = field(default_factory=dict)

    def write(self, directory, name: str = "recording") -> dict[str, Path]:
        """Write the recording and a ``<name>.truth.json`` ground-truth sidecar."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        rec_path = write_recording(self.recording, directory / f"{name}.json")
        truth_path = directory / f"{name}.truth.json"
        truth_path.write_text(json.dumps(self.ground_truth, indent=2, sort_keys=True) + "\n")
        return {"recording": rec_path, "ground_truth": truth_path}


def _ground_truth(scene: Scene, bursts: TxBursts, truth_rate: float = 100.0) -> dict:
    t = np.arange(0.0, scene.duration, 1.0 / truth_rate)
    paths = []
    for dp in scene.dynamic_paths:
        d = trajectory_path_distance(dp.trajectory, t)
        rate = trajectory_path_rate(dp.trajectory, t)
        paths.append({
            "t_s": t.tolist(),
            "path_distance_m": np.atleast_1d(d).tolist(),
            "doppler_hz": (-np.atleast_1d(rate) * scene.center_frequency / speed_of_light).tolist(),
        })
    keep_duty = 1.0
    if scene.acquisition is not None and scene.acquisition.dead_time > 0:
        block = max(1, int(round(scene.acquisition.block_duration * scene.sample_rate)))
        keep_duty = block / (block + int(round(scene.acquisition.dead_time * scene.sample_rate)))
    return {
        "label": scene.label,
        "sample_rate_hz": scene.sample_rate,
        "burst_start_index": bursts.starts.tolist(),
        "burst_length": bursts.lengths.tolist(),
        "k_t_true": 1.0 / keep_duty,
        "dynamic_paths": paths,
        "scene": scene.to_dict(),
    }


def simulate_scene(scene: Scene) -> SimulationResult:
    """Bursts, channel synthesis and acquisition in one call (pure function of ``scene``)."""
    bursts = generate_tx_bursts(scene.tx, scene.duration, scene.sample_rate)
    r1, r2 = synthesize_channels(scene, bursts.samples, bursts)
    meta = {"scenario": scene.label, "tx_seed": scene.tx.seed, "noise_seed": scene.noise_seed,
            "distortion_seed": scene.distortion.seed}
    rec = apply_acquisition_model(r1, r2, scene.acquisition, scene.sample_rate,
                                  scene.center_frequency, meta)
    return SimulationResult(rec, bursts, _ground_truth(scene, bursts))


def static_path(amplitude: complex, distance: float, angle: float) -> StaticPath:
    """Static path from a propagation distance (metres) instead of a delay."""
    return StaticPath(complex(amplitude), distance / speed_of_light, angle)
