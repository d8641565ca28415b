"""Command-line entry point: ``diffsense simulate | process | report``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .exceptions import (ConfigError, NoFramesDetectedError, RecordingFormatError, UnusableSeriesError)
from .pipeline import (PROFILES, PipelineConfig, apply_profile, run_pipeline, summarize_components,
                       write_outputs, write_report)
from .simulation import PRESET_PROFILES, PRESETS, Scene, get_preset, simulate_scene
from .spectrogram import DopplerSpectrogram, LowSupportWarning

log = logging.getLogger("diffsense")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_EMPTY = 4


def _load_scene(args) -> Scene:
    if args.preset:
        try:
            scene = get_preset(args.preset)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0]), "preset") from None
    else:
        try:
            data = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}", str(args.config)) from exc
        scene = Scene.from_dict(data)
    if args.seed is not None:
        s = int(args.seed)
        scene = scene.replace(tx=dataclasses.replace(scene.tx, seed=s),
                              distortion=dataclasses.replace(scene.distortion, seed=s + 1),
                              noise_seed=s + 2)
    return scene


def cmd_simulate(args) -> int:
    if args.list_presets:
        for name in PRESETS:
            print(f"{name}\t(profile: {PRESET_PROFILES[name]})")
        return EXIT_OK
    if args.dump_preset:
        try:
            scene = get_preset(args.dump_preset)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0]), "preset") from None
        print(json.dumps(scene.to_dict(), indent=2, sort_keys=True))
        return EXIT_OK
    if bool(args.preset) == bool(args.config):
        raise ConfigError("give exactly one of --preset or --config", "input")
    if not args.out:
        raise ConfigError("--out is required", "out")
    scene = _load_scene(args)
    log.info("simulating %s (%.1f s at %.0f S/s)", scene.label, scene.duration, scene.sample_rate)
    result = simulate_scene(scene)
    out = Path(args.out)
    paths = result.write(out, args.name)
    (out / f"{args.name}.scene.json").write_text(json.dumps(scene.to_dict(), indent=2, sort_keys=True) + "\n")
    meta = result.recording.metadata
    print(f"scenario:        {scene.label}")
    print(f"true duration:   {meta['true_duration_s']:.3f} s")
    print(f"recorded:        {meta['recorded_duration_s']:.3f} s ({len(result.recording)} samples)")
    print(f"bursts:          {len(result.bursts)}")
    print(f"duty ratio:      {meta['duty_ratio']:.5f} (k_t = {meta['k_t_true']:.5f})")
    print(f"recording:       {paths['recording']}")
    print(f"ground truth:    {paths['ground_truth']}")
    return EXIT_OK


def _process_config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    if args.profile:
        apply_profile(cfg, args.profile)
    if args.input:
        cfg.input = str(args.input)
    if args.out:
        cfg.output_dir = str(args.out)
    seg, st, cal = cfg.segmentation, cfg.stft, cfg.calibration
    overrides = [
        (seg, "start_threshold", args.start_threshold), (seg, "end_threshold", args.end_threshold),
        (seg, "end_count", args.end_count), (seg, "percentile", args.percentile),
        (seg, "window_size", args.window_size), (cfg.differential, "null_ratio", args.null_ratio),
        (st, "window_kind", args.window), (st, "window_span", args.window_span), (st, "hop", args.hop),
        (st, "doppler_limit", args.doppler_limit), (st, "doppler_step", args.doppler_step),
        (cal, "source", args.calibration), (cal, "k_t", args.k_t),
        (cal, "theoretical_duration", args.event_duration),
        (cal, "measured_duration", args.measured_duration),
        (cfg.peaks, "top_k", args.top_k),
    ]
    for obj, name, value in overrides:
        if value is not None:
            setattr(obj, name, value)
    if args.k_t is not None and args.calibration is None:
        cal.source = "explicit"
    if args.dc_window is not None:
        cfg.preprocessing.dc_window = args.dc_window or None
    return cfg.validate()


def cmd_process(args) -> int:
    cfg = _process_config(args)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LowSupportWarning)
        result = run_pipeline(cfg)
    paths = write_outputs(result)
    s = result.summary()
    print(f"frames detected/retained/discarded: {s['frames_detected']}/{s['frames_retained']}"
          f"/{s['frames_discarded']} (window {s['window_size']} samples)")
    print(f"k_t: {s['k_t']:.5f}   global peak: {s['global_peak_hz']:+.3f} Hz")
    print(f"manifest: {paths['manifest']}")
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        spec = DopplerSpectrogram.load(args.spectrogram)
    except (ValueError, KeyError) as exc:
        raise RecordingFormatError(str(exc)) from exc
    floor = None
    if args.reference:
        ref = DopplerSpectrogram.load(args.reference)
        floor = float(np.median(ref.to_db()))
    fc = args.center_frequency or spec.metadata.get("center_frequency_hz")
    if fc is None:
        raise ConfigError("center frequency unknown; pass --center-frequency", "center_frequency")
    rows = summarize_components(spec, fc, floor)
    ref_label = "static reference" if floor is not None else "spectrogram median"
    print(f"{'Doppler (Hz)':>14} {'Velocity (m/s)':>15} {'Strength (dB rel. ' + ref_label + ')':>40}")
    for r in rows:
        print(f"{r.sign + format(abs(r.doppler_hz), '.2f'):>14} "
              f"{r.sign + format(abs(r.velocity_mps), '.4f'):>15} "
              f"{r.strength_db[0]:>18.1f} ~ {r.strength_db[1]:.1f}")
    if not rows:
        print("(no Doppler components)")
    if args.out:
        write_report(rows, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diffsense", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="synthesize a two-channel recording from a scene")
    sim.add_argument("--preset", choices=sorted(PRESETS))
    sim.add_argument("--config", type=Path, help="scene JSON file")
    sim.add_argument("--out", type=Path, help="output directory")
    sim.add_argument("--name", default="recording", help="file stem of the outputs")
    sim.add_argument("--seed", type=int, help="override all scene seeds")
    sim.add_argument("--list-presets", action="store_true")
    sim.add_argument("--dump-preset", metavar="NAME", help="print a preset scene as JSON")
    sim.set_defaults(func=cmd_simulate)

    proc = sub.add_parser("process", help="recording -> spectrogram, peaks and manifest")
    proc.add_argument("--input", type=Path, help="recording sidecar (.json)")
    proc.add_argument("--config", type=Path, help="pipeline config or a previous manifest.json")
    proc.add_argument("--out", type=Path)
    proc.add_argument("--profile", choices=sorted(PROFILES))
    proc.add_argument("--dc-window", type=int, help="running-mean window, 0 disables")
    proc.add_argument("--start-threshold", type=float)
    proc.add_argument("--end-threshold", type=float)
    proc.add_argument("--end-count", type=int)
    proc.add_argument("--percentile", type=float)
    proc.add_argument("--window-size", type=int)
    proc.add_argument("--null-ratio", type=float)
    proc.add_argument("--window", choices=["hann", "gaussian", "rect"])
    proc.add_argument("--window-span", type=float)
    proc.add_argument("--hop", type=float)
    proc.add_argument("--doppler-limit", type=float)
    proc.add_argument("--doppler-step", type=float)
    proc.add_argument("--calibration", choices=["none", "explicit", "event", "metadata"])
    proc.add_argument("--k-t", type=float)
    proc.add_argument("--event-duration", type=float, help="true duration of a known event, s")
    proc.add_argument("--measured-duration", type=float, help="its duration in the recording, s")
    proc.add_argument("--top-k", type=int)
    proc.set_defaults(func=cmd_process)

    rep = sub.add_parser("report", help="velocity-annotated Doppler component table")
    rep.add_argument("spectrogram", type=Path, help="spectrogram sidecar (.json)")
    rep.add_argument("--reference", type=Path, help="static-scene spectrogram for the strength floor")
    rep.add_argument("--center-frequency", type=float)
    rep.add_argument("--out", type=Path, help="write the table as CSV")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoFramesDetectedError, UnusableSeriesError) as exc:
        print(f"empty result: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (OSError, RecordingFormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
