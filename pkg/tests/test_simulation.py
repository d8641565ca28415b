import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.constants import speed_of_light

from diffsense import ConfigError
from diffsense.simulation import (PRESETS, AcquisitionModel, AntennaPattern, CommonDistortion, DynamicPath,
                                  PlateGeometry, Scene, StaticPath, TrajectorySpec, TxBurstModel,
                                  apply_acquisition_model, generate_tx_bursts, get_preset, plate_echo_series,
                                  plate_scattered_field, simulate_scene, static_path, synthesize_channels,
                                  trajectory_path_distance, trajectory_path_rate, wavenumber)

FC = 25.1e9
# |E| and E for a = b = 0.1 m, f_c = 25.1 GHz, E0 = 1, r = 3.3 m, evaluated at
# 40 significant digits with mpmath (c = 299792458 m/s).
PLATE_ORACLE = complex(-0.2452818160778795723241022644686973388704, 0.06485397042366473577954450473889772117342)
PLATE_ORACLE_ABS = 0.2537108724082914074044538040400137771513
# 0.0625 m/s path rate * f_c / c, same evaluation.
PLATE_DOPPLER_HZ = 5.232786743421010277716859708325284153746


def _identity_scene(**changes):
    base = Scene(
        sample_rate=1e4, duration=0.2,
        tx=TxBurstModel((5e-3, 10e-3), (2e-3, 5e-3), 1e4, "random-QPSK", 1.0, seed=7),
        reference_paths=(StaticPath(1.0, 0.0, 0.0),),
        sensing_static_paths=(StaticPath(1.0, 0.0, math.pi),),
        distortion=CommonDistortion(0.0, 0.0, 1.0),
    )
    return base.replace(**changes)


# transmitter ---------------------------------------------------------------

def test_single_burst_spans_stream():
    model = TxBurstModel((1.0, 1.0), (0.0, 0.0), 1e3, seed=1)
    b = generate_tx_bursts(model, 1.0, 1e3)
    assert b.starts.tolist() == [0] and b.lengths.tolist() == [1000]
    assert np.all(b.samples != 0)


def test_zero_power_keeps_schedule():
    b = generate_tx_bursts(TxBurstModel(power=0.0, seed=2), 0.1, 1e5)
    assert len(b) > 5 and not np.any(b.samples)


def test_bursts_deterministic_ordered_and_silent_between():
    model = TxBurstModel(seed=9, lead_in=1e-3)
    a, b = generate_tx_bursts(model, 0.3, 1e5), generate_tx_bursts(model, 0.3, 1e5)
    assert a.samples.tobytes() == b.samples.tobytes()
    ends = a.starts + a.lengths
    assert np.all(ends[:-1] < a.starts[1:])
    mask = a.burst_index() >= 0
    assert not np.any(a.samples[~mask]) and np.all(np.abs(a.samples[mask]) > 0)
    assert a.starts[0] >= 100 + 100  # lead-in plus the minimum gap
    assert np.all((a.lengths[:-1] >= 100) & (a.lengths[:-1] <= 300))
    sched = a.schedule_seconds()
    assert sched[0][0] == pytest.approx(a.starts[0] / 1e5)


def test_gaussian_modulation_and_symbol_hold():
    b = generate_tx_bursts(TxBurstModel((0.01, 0.01), (0.0, 0.0), 1e3, "random-complex-gaussian", seed=4),
                           0.02, 1e4)
    x = b.samples[: b.lengths[0]]
    assert np.all(x[0::10] == x[9::10])


@pytest.mark.parametrize("kwargs", [dict(burst_duration_range=(2e-3, 1e-3)),
                                    dict(gap_duration_range=(-1.0, 1.0)),
                                    dict(modulation="ofdm"), dict(power=-1.0)])
def test_tx_model_validation(kwargs):
    with pytest.raises(ValueError):
        TxBurstModel(**kwargs)
    with pytest.raises(ValueError):
        generate_tx_bursts(TxBurstModel(), 0.0, 1e5)


# plate scattering -------------------------------------------------------------

def test_plate_field_matches_arbitrary_precision_oracle():
    plate = PlateGeometry(0.1, 0.1, FC, 1.0)
    e = plate_scattered_field(plate, 3.3)
    assert abs(e) == pytest.approx(PLATE_ORACLE_ABS, rel=1e-12)
    assert abs(e - PLATE_ORACLE) <= 1e-11 * PLATE_ORACLE_ABS


def test_plate_inverse_distance_law():
    plate = PlateGeometry()
    for r in (0.5, 3.3, 17.0):
        assert abs(plate_scattered_field(plate, r)) / abs(plate_scattered_field(plate, 2 * r)) == pytest.approx(2.0, rel=1e-13)


def test_plate_half_wavelength_phase_step():
    plate = PlateGeometry()
    lam = speed_of_light / plate.carrier_frequency
    ratio = plate_scattered_field(plate, 3.3 + lam / 2) / plate_scattered_field(plate, 3.3)
    assert abs(np.angle(ratio)) == pytest.approx(math.pi, abs=1e-9)


def test_plate_domain_errors():
    with pytest.raises(ValueError):
        plate_scattered_field(PlateGeometry(), 0.0)
    with pytest.raises(ValueError):
        plate_scattered_field(PlateGeometry(), np.array([1.0, -2.0]))
    with pytest.raises(ValueError):
        PlateGeometry(width=0.0)
    assert wavenumber(FC) == pytest.approx(526.0571005098721, rel=1e-14)


def test_plate_echo_rotates_at_round_trip_doppler():
    traj = TrajectorySpec("constant-velocity", 0.03125, 3.2, 6.6, True)
    t = np.linspace(0, 2, 2001)
    echo = plate_echo_series(PlateGeometry(), traj, t)
    slope = np.polyfit(t, np.unwrap(np.angle(echo)), 1)[0]
    assert slope / (2 * np.pi) == pytest.approx(PLATE_DOPPLER_HZ, rel=1e-6)


# trajectories -------------------------------------------------------------------

def test_stationary_path_is_constant():
    traj = TrajectorySpec("constant-velocity", 0.0, 1.0, 4.2)
    np.testing.assert_array_equal(trajectory_path_distance(traj, np.linspace(0, 10, 7)), 4.2)


def test_to_and_fro_rate_alternates():
    traj = TrajectorySpec("piecewise-to-and-fro", 0.03125, 3.2, 6.6, True)
    t = np.array([0.5, 2.0, 3.5, 6.0, 7.0, 9.0, 10.0, 12.5])
    rate = trajectory_path_rate(traj, t)
    np.testing.assert_allclose(rate, [-0.0625, -0.0625, 0.0625, 0.0625, -0.0625, -0.0625, 0.0625, 0.0625])
    d = trajectory_path_distance(traj, t)
    np.testing.assert_allclose(np.gradient(trajectory_path_distance(traj, [1.0, 1.001]), 0.001), -0.0625)
    assert trajectory_path_distance(traj, 6.4) == pytest.approx(6.6)
    assert trajectory_path_distance(traj, 3.2) == pytest.approx(6.6 - 0.2)
    assert np.all(d > 0)


def test_one_way_path_rate():
    traj = TrajectorySpec("constant-velocity", 0.5, 1.0, 10.0, round_trip=False, direction=-1)
    assert trajectory_path_rate(traj, 1.0) == 0.5
    assert trajectory_path_distance(traj, 2.0) == pytest.approx(11.0)


def test_sinusoid_matches_closed_form(rng):
    traj = TrajectorySpec("sinusoidal", 0.4, 0.25, 3.0, True)
    t = rng.uniform(0, 5, 10)
    d = trajectory_path_distance(traj, t) - trajectory_path_distance(traj, 0.0)
    amplitude = 2 * 0.4 * 0.5 / (2 * math.pi)  # path rate * period / (2 pi)
    expected = [-amplitude * math.sin(2 * math.pi * ti / 0.5) for ti in t]
    np.testing.assert_allclose(d, expected, rtol=0, atol=1e-12)
    h = 1e-6
    np.testing.assert_allclose(trajectory_path_rate(traj, t),
                               (trajectory_path_distance(traj, t + h) - trajectory_path_distance(traj, t - h)) / (2 * h),
                               atol=1e-6)


def test_motion_window():
    traj = TrajectorySpec("constant-velocity", 1.0, 1.0, 10.0, True, start_time=0.5, stop_time=1.5)
    assert trajectory_path_distance(traj, 0.2) == 10.0
    assert trajectory_path_distance(traj, 1.0) == pytest.approx(9.0)
    assert trajectory_path_distance(traj, 3.0) == pytest.approx(8.0)
    assert trajectory_path_rate(traj, 0.2) == 0.0 and trajectory_path_rate(traj, 1.0) == -2.0


def test_trajectory_validation():
    with pytest.raises(ValueError):
        TrajectorySpec("zigzag")
    with pytest.raises(ValueError):
        TrajectorySpec(speed=-1.0)
    with pytest.raises(ValueError):
        TrajectorySpec("sinusoidal", segment_duration=0.0)
    with pytest.raises(ValueError):
        TrajectorySpec(direction=0)


def test_antenna_pattern():
    p = AntennaPattern(0.0, 2.0, 0.05)
    assert p.gain(0.0) == 1.0
    assert p.gain(math.pi / 3) == pytest.approx(0.25)
    assert p.gain(math.pi) == 0.05
    assert np.all(p.gain(np.linspace(-4, 4, 50)) >= 0.05)


# channel synthesis ------------------------------------------------------------------

def test_identity_channel():
    scene = _identity_scene()
    tx = generate_tx_bursts(scene.tx, scene.duration, scene.sample_rate).samples
    r1, r2 = synthesize_channels(scene, tx)
    np.testing.assert_allclose(r1, tx, atol=1e-12)
    np.testing.assert_allclose(r2, tx, atol=1e-12)


def test_cfo_leaves_channel_ratio_unchanged():
    scene = _identity_scene(sensing_static_paths=(static_path(0.3 * np.exp(0.7j), 4.0, math.pi),
                                                  static_path(0.1, 9.0, math.pi - 0.2)))
    tx = generate_tx_bursts(scene.tx, scene.duration, scene.sample_rate).samples
    a1, a2 = synthesize_channels(scene, tx)
    shifted = scene.replace(distortion=CommonDistortion(1e3, 5.0, 0.9 * np.exp(0.4j), seed=3))
    b1, b2 = synthesize_channels(shifted, tx)
    on = np.abs(a1) > 1e-3
    assert not np.allclose(a1[on], b1[on])
    np.testing.assert_allclose(b2[on] / b1[on], a2[on] / a1[on], rtol=1e-9)


def test_dynamic_term_rotates_at_round_trip_doppler():
    traj = TrajectorySpec("constant-velocity", 0.03125, 3.2, 6.6, True)
    scene = _identity_scene(sensing_static_paths=(), duration=1.0, narrowband=True,
                            tx=TxBurstModel((1.0, 1.0), (0.0, 0.0), 1e4, seed=1),
                            dynamic_paths=(DynamicPath(traj, 0.2, math.pi),))
    tx = generate_tx_bursts(scene.tx, scene.duration, scene.sample_rate).samples
    r1, r2 = synthesize_channels(scene, tx)
    ratio = r2 / r1
    t = np.arange(ratio.size) / scene.sample_rate
    slope = np.polyfit(t, np.unwrap(np.angle(ratio)), 1)[0] / (2 * np.pi)
    assert slope == pytest.approx(0.0625 * FC / speed_of_light, rel=1e-6)
    assert slope == pytest.approx(5.23, rel=0.02)
    np.testing.assert_allclose(np.abs(ratio), 0.2, rtol=1e-9)


def test_amplitude_scales_with_tx_power():
    scene = _identity_scene()
    tx = generate_tx_bursts(scene.tx, scene.duration, scene.sample_rate).samples
    a1, _ = synthesize_channels(scene, tx)
    b1, _ = synthesize_channels(scene, 3.0 * tx)
    np.testing.assert_allclose(b1, 3.0 * a1, atol=1e-12)


def test_noise_level_follows_snr():
    scene = _identity_scene(snr_db=20.0, duration=1.0)
    tx = generate_tx_bursts(scene.tx, scene.duration, scene.sample_rate).samples
    r1, r2 = synthesize_channels(scene, tx)
    noise = r1 - tx
    snr = 10 * np.log10(np.mean(np.abs(tx[tx != 0]) ** 2) / np.mean(np.abs(noise) ** 2))
    assert snr == pytest.approx(20.0, abs=0.2)
    assert not np.allclose(r1 - tx, r2 - tx)  # independent per channel


def test_burst_update_requires_schedule():
    scene = _identity_scene(dynamic_update="burst",
                            dynamic_paths=(DynamicPath(TrajectorySpec(speed=1.0, initial_path_distance=5.0)),))
    with pytest.raises(ValueError):
        synthesize_channels(scene, np.ones(100))


def test_path_length_must_stay_positive():
    traj = TrajectorySpec("constant-velocity", 1.0, 1.0, 0.5, True)
    scene = _identity_scene(dynamic_paths=(DynamicPath(traj),), duration=1.0)
    with pytest.raises(ValueError):
        simulate_scene(scene)


# acquisition ------------------------------------------------------------------------

def test_no_dead_time_is_identity(rng):
    x = rng.standard_normal(500) + 0j
    rec = apply_acquisition_model(x, 2 * x, AcquisitionModel(0.1, 0.0), 1e3, FC)
    np.testing.assert_array_equal(rec.channel1, x)
    assert rec.metadata["duty_ratio"] == 1.0


def test_plate_duty_ratio():
    n = int(3.2 * 1e3)
    rec = apply_acquisition_model(np.ones(n), np.ones(n), AcquisitionModel(1.9, 1.3), 1e3, FC)
    assert len(rec) / n == pytest.approx(1.9 / 3.2)
    assert rec.metadata["k_t_true"] == pytest.approx(3.2 / 1.9)
    assert rec.metadata["recorded_duration_s"] == pytest.approx(1.9)


def test_half_duty_blocks():
    n = 10_000
    x = np.arange(n) + 0j
    rec = apply_acquisition_model(x, x, AcquisitionModel(1.0, 1.0), 1e3, FC)
    assert len(rec) == 5000
    np.testing.assert_array_equal(rec.channel1[:1000], x[:1000])
    np.testing.assert_array_equal(rec.channel1[1000:2000], x[2000:3000])


# whole scenes -------------------------------------------------------------------------

def test_simulation_is_deterministic(tmp_path):
    scene = get_preset("static-background").replace(duration=0.3)
    a = simulate_scene(scene)
    b = simulate_scene(scene)
    assert a.recording.channel1.tobytes() == b.recording.channel1.tobytes()
    pa = a.write(tmp_path / "a")
    pb = b.write(tmp_path / "b")
    for key in pa:
        assert pa[key].read_bytes() == pb[key].read_bytes()
    for suffix in (".ch1.cf32", ".ch2.cf32"):
        assert (tmp_path / "a" / f"recording{suffix}").read_bytes() == (tmp_path / "b" / f"recording{suffix}").read_bytes()


def test_ground_truth_contents():
    res = simulate_scene(get_preset("plate-continuous").replace(duration=0.5))
    truth = res.ground_truth
    assert truth["burst_start_index"] == res.bursts.starts.tolist()
    np.testing.assert_allclose(truth["dynamic_paths"][0]["doppler_hz"], PLATE_DOPPLER_HZ, rtol=1e-12)
    assert truth["k_t_true"] == pytest.approx(32 / 19)
    assert res.recording.metadata["duty_ratio"] == pytest.approx(19 / 32)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_serialize_round_trip(name):
    scene = get_preset(name)
    assert Scene.from_dict(scene.to_dict()) == scene


def test_scene_config_errors_name_the_field():
    data = get_preset("hand-wave").to_dict()
    data["tx"]["burst_duration_range"] = [3e-3, 1e-3]
    with pytest.raises(ConfigError, match=r"^scene\.tx: ") as info:
        Scene.from_dict(data)
    assert info.value.field == "scene.tx"
    data = get_preset("hand-wave").to_dict()
    data["dynamic_paths"][0]["base_amplitude"] = "big"
    with pytest.raises(ConfigError, match=r"scene\.dynamic_paths\[0\]\.base_amplitude"):
        Scene.from_dict(data)
    with pytest.raises(ConfigError, match="unknown field"):
        Scene.from_dict({"colour": "red"})
    with pytest.raises(ConfigError):
        Scene.from_dict({"reference_paths": []})
    with pytest.raises(KeyError):
        get_preset("nope")


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_complex_amplitudes_round_trip(re, im):
    scene = Scene(reference_paths=(StaticPath(complex(re, im), 1e-8, 0.3),))
    back = Scene.from_dict(scene.to_dict())
    assert back.reference_paths[0].complex_amplitude == complex(re, im)
