"""Command-line interface: analyze, synth, beatmap, and mode subcommands.

Exit codes: 0 success, 1 usage error, 2 input error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

import numpy as np

from .beatmap import (
    DEFAULT_BASE_F0,
    DEFAULT_INTERVAL_STEP,
    DEFAULT_PARTIALS_PER_TONE,
    DEFAULT_SEED,
    compute_beat_map,
)
from .config import AnalysisConfig, load_config
from .errors import InputError, UsageError
from .modal import estimate_poles, fold_to_pitch_classes, infer_mode
from .notes import parse_frequency
from .report import (
    EXIT_INPUT,
    EXIT_INTERNAL,
    EXIT_OK,
    EXIT_USAGE,
    StemSet,
    analyze,
    emit_plot_data,
    load_pitch_track_csv,
    load_segments,
    report_to_json,
    write_beatmap_csv,
)
from .synth import (
    Bass808Patch,
    ComplexToneSpec,
    Envelope,
    Partial,
    WaveshaperSpec,
    glide,
    synth_808,
    synth_complex_tone,
    unison,
    waveshape,
)
from .wavio import save_wav


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="pitchlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analyze stems into a JSON report")
    p.add_argument("--stems", required=True,
                   help="directory of .wav files, or comma-separated paths")
    p.add_argument("--final", help="final override: note name or Hz (e.g. B1, 61.7)")
    p.add_argument("--segments", help="CSV of start_s,end_s,label")
    p.add_argument("--weighting", choices=["on", "off"])
    p.add_argument("--config", help="flat JSON config file")
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--plot", action="append", default=[],
                   metavar="KIND:PATH",
                   help="also emit plot CSV (spectrum|pitch_track|histogram), repeatable")

    p = sub.add_parser("synth", help="render a synthesis spec to WAV")
    p.add_argument("--spec", required=True, help="JSON spec file")
    p.add_argument("--out", required=True, help="output WAV path")
    p.add_argument("--sample-rate", type=int, default=48000)
    p.add_argument("--encoding", choices=["float32", "int16", "int24"], default="float32")

    p = sub.add_parser("beatmap", help="compute the interval/beat-frequency map")
    p.add_argument("--base", type=float, default=DEFAULT_BASE_F0, help="base f0 in Hz")
    p.add_argument("--partials", type=int, default=DEFAULT_PARTIALS_PER_TONE)
    p.add_argument("--step", type=float, default=DEFAULT_INTERVAL_STEP,
                   help="interval step in semitones")
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--stop", type=float, default=12.0)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", required=True, help="CSV output path (+ .json sidecar)")

    p = sub.add_parser("mode", help="infer a mode from a pitch-track CSV")
    p.add_argument("--track", required=True, help="pitch-track CSV")
    p.add_argument("--final", required=True, help="final: note name or Hz")
    p.add_argument("--out", help="JSON output path (default: stdout)")
    return parser


def _spec_from_json(data: dict) -> ComplexToneSpec:
    partials = tuple(
        Partial(
            harmonic=p.get("harmonic"),
            frequency_hz=p.get("frequency_hz"),
            amplitude=p.get("amplitude", 1.0),
            cent_offset=p.get("cent_offset", 0.0),
        )
        for p in data["partials"]
    )
    env = data.get("envelope", {})
    return ComplexToneSpec(
        f0=data["f0"],
        partials=partials,
        duration_s=data.get("duration_s", 1.0),
        envelope=Envelope(env.get("kind", "constant"), env.get("time_constant_s", 0.5)),
    )


def _render_spec(data: dict, sample_rate: int):
    kind = data.get("kind")
    if kind == "complex_tone":
        sig = synth_complex_tone(_spec_from_json(data), sample_rate)
    elif kind == "bass_808":
        fields = {k: data[k] for k in (
            "target_f0", "mode", "amount_db", "glide_depth_cents",
            "glide_time_constant_s", "decay_s", "n_harmonics",
            "overtone_db", "overtone_rolloff") if k in data}
        sig = synth_808(Bass808Patch(**fields), sample_rate)
    elif kind == "unison":
        sig = unison(_spec_from_json(data["tone"]), data["voices"],
                     data["detune_spread_cents"], sample_rate)
    elif kind == "glide":
        sig = glide(_spec_from_json(data["tone"]), data["contour"],
                    data.get("contour_kind", "bend"), sample_rate)
    else:
        raise InputError(
            f"unknown spec kind {kind!r}; expected complex_tone, bass_808, unison, or glide"
        )
    if "waveshaper" in data:
        ws = data["waveshaper"]
        sig = waveshape(sig, WaveshaperSpec(
            tuple(ws["coefficients"]), ws.get("drive", 1.0), ws.get("mix", 1.0)))
    return sig


def _cmd_analyze(args) -> int:
    config = load_config(args.config) if args.config else AnalysisConfig()
    overrides = {}
    if args.weighting is not None:
        overrides["weighting"] = args.weighting == "on"
    config = config.replace(**overrides)

    stems_arg = args.stems
    stems = {}
    path = Path(stems_arg)
    if path.is_dir():
        for wav in sorted(path.glob("*.wav")):
            stems[wav.stem] = str(wav)
        if not stems:
            raise InputError(f"no .wav files in directory {stems_arg}")
    else:
        for item in stems_arg.split(","):
            item = item.strip()
            if item:
                stems[Path(item).stem] = item
    segments = load_segments(args.segments) if args.segments else ()
    final_hz = parse_frequency(args.final) if args.final else None

    report = analyze(StemSet(stems=stems, segments=segments, final_hz=final_hz), config)
    text = report_to_json(report)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    for item in args.plot:
        if ":" not in item:
            raise UsageError(f"--plot needs KIND:PATH, got {item!r}")
        kind, out_path = item.split(":", 1)
        emit_plot_data(report, kind, out_path)
    return EXIT_OK


def _cmd_synth(args) -> int:
    try:
        data = json.loads(Path(args.spec).read_text())
    except FileNotFoundError as exc:
        raise InputError(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.spec}: invalid JSON: {exc}") from exc
    try:
        sig = _render_spec(data, args.sample_rate)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{args.spec}: bad synthesis spec: {exc}") from exc
    save_wav(sig, args.out, encoding=args.encoding)
    return EXIT_OK


def _cmd_beatmap(args) -> int:
    bm = compute_beat_map(
        base_f0=args.base,
        partials_per_tone=args.partials,
        interval_start=args.start,
        interval_stop=args.stop,
        interval_step=args.step,
        seed=args.seed,
    )
    write_beatmap_csv(bm, args.out)
    return EXIT_OK


def _cmd_mode(args) -> int:
    track = load_pitch_track_csv(args.track)
    final_hz = parse_frequency(args.final)
    values, weights = fold_to_pitch_classes(track, final_hz)
    poles = estimate_poles(values, weights, reference_hz=final_hz)
    if not poles:
        raise InputError("no poles found in track")
    mode = infer_mode(poles, reference_hz=final_hz, final_override_cents=0.0)
    out = {
        "final_hz": mode.final_hz,
        "degrees": [
            {"cents": d.cents, "label": d.label, "offset_cents": d.offset_cents, "mass": d.mass}
            for d in mode.degrees
        ],
        "ambiguous": [list(p) for p in mode.ambiguous],
    }
    text = json.dumps(out, sort_keys=True, indent=1)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return EXIT_OK


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command == "beatmap":
            return _cmd_beatmap(args)
        if args.command == "mode":
            return _cmd_mode(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
