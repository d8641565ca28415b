import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffsense import (FrameSegmenter, FrameTable, NoFramesDetectedError, SegmentationParams, align_frames,
                       detect_frames, uniform_window_size)
from diffsense.segmentation import estimate_thresholds
from diffsense.simulation import TxBurstModel, generate_tx_bursts

from conftest import make_recording


def state_machine_oracle(amp, start_th, end_th, c_end):
    """Sample-by-sample detector; an open frame is closed after the last sample."""
    starts, durations = [], []
    in_signal, counter, start_idx = False, 0, 0
    for idx, a in enumerate(amp):
        if in_signal:
            counter = counter + 1 if a < end_th else 0
            if counter >= c_end:
                durations.append(idx - c_end + 1 - start_idx)
                in_signal = False
        elif a > start_th:
            start_idx = idx
            starts.append(idx)
            in_signal = True
            counter = 0
    if in_signal:
        durations.append(len(amp) - start_idx)
    return starts, durations


def burst_signal(n, spans, level=1.0):
    x = np.zeros(n, complex)
    for a, b in spans:
        x[a:b] = level
    return x


def test_all_zero_gives_empty_table():
    assert len(detect_frames(np.zeros(1000), 0.5, 0.3, 8)) == 0


def test_rectangular_burst_hand_trace():
    table = detect_frames(burst_signal(1000, [(100, 500)]), 0.5, 0.3, 8)
    assert table.starts.tolist() == [100]
    assert table.durations.tolist() == [400]


def test_open_frame_closed_at_stream_end():
    table = detect_frames(burst_signal(600, [(100, 600)]), 0.5, 0.3, 8)
    assert table.starts.tolist() == [100] and table.durations.tolist() == [500]


def test_short_dropout_does_not_split_frame():
    x = burst_signal(1000, [(100, 300), (305, 500)])
    table = detect_frames(x, 0.5, 0.3, 8)
    assert table.starts.tolist() == [100] and table.durations.tolist() == [400]
    split = detect_frames(x, 0.5, 0.3, 4)
    assert split.starts.tolist() == [100, 305]


def test_hysteresis_band_keeps_frame_open():
    x = burst_signal(400, [(50, 100)])
    x[100:200] = 0.4  # between the two thresholds
    table = detect_frames(x, 0.5, 0.3, 8)
    assert table.starts.tolist() == [50] and table.durations.tolist() == [150]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=0, max_size=300),
       st.floats(0.05, 0.95), st.floats(0, 1), st.integers(1, 12))
def test_vectorized_scan_matches_state_machine(amp, start_th, frac, c_end):
    end_th = start_th * frac
    amp = np.asarray(amp)
    table = detect_frames(amp, start_th, end_th, c_end)
    starts, durations = state_machine_oracle(amp, start_th, end_th, c_end)
    assert table.starts.tolist() == starts
    assert table.durations.tolist() == durations


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0.1, 0.8), st.floats(0.01, 0.2))
def test_raising_start_threshold_never_adds_frames(seed, th, delta):
    amp = np.abs(np.random.default_rng(seed).standard_normal(500))
    low = detect_frames(amp, th, 0.5 * th, 4)
    high = detect_frames(amp, th + delta, 0.5 * th, 4)
    assert len(high) <= len(low)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_frames_ordered_and_disjoint(seed):
    amp = np.abs(np.random.default_rng(seed).standard_normal(800))
    table = detect_frames(amp, 1.0, 0.4, 3)
    ends = table.starts + table.durations
    assert np.all(np.diff(table.starts) > 0)
    assert np.all(ends[:-1] <= table.starts[1:])


def test_simulator_bursts_recovered_at_20db():
    model = TxBurstModel((100e-6, 200e-6), (50e-6, 250e-6), 1e6, "random-QPSK", 1.0, seed=3, lead_in=300e-6)
    bursts = generate_tx_bursts(model, 0.05, 1e6)
    rng = np.random.default_rng(0)
    sigma = 10 ** (-20 / 20) / np.sqrt(2)
    x = bursts.samples + sigma * (rng.standard_normal(bursts.samples.size)
                                  + 1j * rng.standard_normal(bursts.samples.size))
    table = detect_frames(x, 0.5, 0.3, 16)
    assert len(table) == len(bursts)
    assert np.max(np.abs(table.starts - bursts.starts)) <= 16
    # durations include at most the quiet-run hangover
    assert np.all(np.abs(table.durations - bursts.lengths) <= 16)


def test_exact_bursts_match_schedule():
    model = TxBurstModel((1e-3, 3e-3), (1e-3, 4e-3), 1e5, "random-QPSK", 1.0, seed=5)
    bursts = generate_tx_bursts(model, 0.5, 1e5)
    table = detect_frames(bursts.samples, 0.5, 0.3, 16)
    np.testing.assert_array_equal(table.starts, bursts.starts)
    np.testing.assert_array_equal(table.durations, bursts.lengths)


def test_adaptive_thresholds_from_noise_prefix(rng):
    noise = 0.01 * (rng.standard_normal(4096) + 1j * rng.standard_normal(4096))
    start, end = estimate_thresholds(noise, 4096)
    amp = np.abs(noise)
    assert start == pytest.approx(amp.mean() + 6 * amp.std())
    assert end == pytest.approx(amp.mean() + 3 * amp.std())


def test_silent_prefix_falls_back_to_peak_fraction():
    x = burst_signal(1000, [(400, 600)], level=2.0)
    assert estimate_thresholds(x, 256) == pytest.approx((2e-3, 1e-3))


def test_nearest_rank_percentile():
    durations = list(range(100, 1001, 100))
    assert uniform_window_size(durations, 5) == 100
    assert uniform_window_size(durations, 100) == 1000
    assert uniform_window_size(durations, 50) == 500
    assert uniform_window_size([321] * 7, 37) == 321
    with pytest.raises(ValueError):
        uniform_window_size([], 5)


def test_short_frame_between_long_ones_is_dropped(rng):
    spans = [(100, 400), (500, 560), (700, 1000)]
    x = burst_signal(1200, spans) * np.exp(2j * np.pi * rng.random(1200))
    rec = make_recording(x, 2 * x)
    table = detect_frames(x, 0.5, 0.3, 8)
    assert table.durations.tolist() == [300, 60, 300]
    frames = align_frames(rec, table, 300)
    assert frames.start_indices.tolist() == [100, 700]
    np.testing.assert_array_equal(frames.channel1[1], x[700:1000])
    np.testing.assert_array_equal(frames.channel2[0], 2 * x[100:400])


def test_single_frame_window_equals_frame(rng):
    x = burst_signal(500, [(50, 250)]) * (1 + rng.random(500))
    rec = make_recording(x)
    frames = align_frames(rec, detect_frames(x, 0.5, 0.3, 8), 200)
    np.testing.assert_array_equal(frames.channel1[0], x[50:250])
    assert frames.start_times[0] == pytest.approx(50 / rec.sample_rate)


def test_long_frames_all_kept():
    x = burst_signal(2000, [(10, 300), (400, 800), (900, 1500)])
    table = detect_frames(x, 0.5, 0.3, 8)
    assert len(align_frames(make_recording(x), table, 200)) == 3


def test_window_first_sample_exceeds_start_threshold(rng):
    x = rng.standard_normal(5000) + 1j * rng.standard_normal(5000)
    seg = FrameSegmenter(start_threshold=2.0, end_threshold=1.0, end_count=4)
    frames = seg.fit_transform(make_recording(x))
    assert len(frames) > 0
    assert np.all(np.abs(frames.channel1[:, 0]) > 2.0)


def test_segmenter_estimator_attributes():
    x = burst_signal(3000, [(300, 600), (900, 1300), (2000, 2400)])
    rec = make_recording(x)
    seg = FrameSegmenter(end_count=8, percentile=5)
    frames = seg.fit_transform(rec)
    assert seg.window_size_ == 300 and len(seg.frame_table_) == 3
    assert seg.thresholds_[0] > seg.thresholds_[1] > 0
    assert len(seg.transform(rec)) == len(frames)
    assert FrameSegmenter(window_size=123).fit(rec).window_size_ == 123
    assert "percentile" in seg.get_params()


def test_segmenter_rejects_silence():
    with pytest.raises(NoFramesDetectedError):
        FrameSegmenter().fit(make_recording(np.zeros(1000)))


def test_parameter_validation():
    with pytest.raises(ValueError):
        SegmentationParams(0.3, 0.5)
    with pytest.raises(ValueError):
        SegmentationParams(0.5, 0.3, end_count=0)
    with pytest.raises(ValueError):
        detect_frames(np.ones(4), 0.3, 0.5)
    with pytest.raises(ValueError):
        FrameTable([5, 3], [1, 1])
    with pytest.raises(ValueError):
        FrameTable([0, 3], [5, 1])


def test_frame_table_csv_round_trip(tmp_path):
    table = FrameTable([3, 40, 90], [20, 30, 5])
    table.to_csv(tmp_path / "f.csv")
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "start_index,duration"
    back = FrameTable.from_csv(tmp_path / "f.csv")
    assert back.starts.tolist() == [3, 40, 90] and back.durations.tolist() == [20, 30, 5]
    FrameTable([], []).to_csv(tmp_path / "e.csv")
    assert len(FrameTable.from_csv(tmp_path / "e.csv")) == 0
