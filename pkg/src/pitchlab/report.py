"""Full analysis pipeline, JSON report emission, and CSV plot data.

Reports are deterministic: collections are emitted in sorted order and
floats at fixed precision, so identical inputs and config give
byte-identical JSON.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import AnalysisConfig
from .errors import InputError
from .inharmonicity import detect_salient_partials, inharmonicity
from .loudness import LoudnessContour, default_contour
from .modal import Segment, estimate_poles, estimate_tuning_offset, fold_to_pitch_classes, infer_mode
from .notes import A4_HZ
from .pitch import (
    PitchFrame,
    PitchTrack,
    autocorrelation_track,
    gcd_f0_track,
    lowest_partial_track,
    partial_spacing_track,
    pitch_discrepancy,
)
from .signal import Signal
from .spectral import frame_snapshots, stft, track_partials
from .wavio import load_wav

SCHEMA_VERSION = 1
FOLD_REFERENCE_HZ = A4_HZ * 2.0 ** (3.0 / 12.0) / 8.0  # C2 on the A440 grid

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3


@dataclass(frozen=True)
class StemSet:
    """Named stems plus optional shared segment list and final override."""

    stems: dict  # label -> path
    segments: tuple = ()
    final_hz: float | None = None

    def __post_init__(self):
        if len(set(self.stems)) != len(self.stems):
            raise InputError("stem labels must be unique")
        for label, path in self.stems.items():
            if not Path(path).exists():
                raise InputError(f"stem {label!r}: no such file: {path}")


def _round_floats(obj, ndigits=6):
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return None
        r = round(obj, ndigits)
        return 0.0 if r == 0 else r
    if isinstance(obj, (np.floating,)):
        return _round_floats(float(obj), ndigits)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _round_floats(v, ndigits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v, ndigits) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_round_floats(v, ndigits) for v in obj.tolist()]
    return obj


def report_to_json(report: dict) -> str:
    return json.dumps(_round_floats(report), sort_keys=True, indent=1)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def _pitch_track_rows(track: PitchTrack) -> list:
    rows = []
    for fr in track.frames:
        rows.append(
            {
                "time_s": float(fr.time),
                "frequency_hz": float(fr.best) if fr.voiced else None,
                "salience": float(fr.saliences[0]) if fr.voiced else None,
                "voiced": bool(fr.voiced),
            }
        )
    return rows


def analyze_signal(
    sig: Signal,
    config: AnalysisConfig,
    contour: LoudnessContour | None = None,
    segments: tuple = (),
    final_hz: float | None = None,
) -> dict:
    """Run the whole per-stem pipeline and return a plain-dict summary."""
    contour = contour if contour is not None else (default_contour() if config.weighting else None)
    spec = stft(sig, config.frame_length, config.hop, config.window,
                weighting=contour if config.weighting else None)
    snapshots = frame_snapshots(spec, config.peak_threshold_db, config.peak_prominence_db)
    tracks = track_partials(
        spec,
        config.peak_threshold_db,
        config.peak_prominence_db,
        config.max_jump_cents,
        config.min_track_duration_s,
    )
    times = spec.frame_times

    pitch_tracks = {
        "lowest_partial": lowest_partial_track(tracks, times),
        "gcd_f0": gcd_f0_track(spec, config.peak_threshold_db, config.peak_prominence_db,
                               config.gcd_tolerance_cents, config.min_f0_hz),
        "partial_spacing": partial_spacing_track(
            spec, config.peak_threshold_db, config.peak_prominence_db),
    }
    autocorr_ok = config.frame_length >= 2.0 * sig.sample_rate / config.autocorr_fmin_hz
    if autocorr_ok:
        pitch_tracks["autocorrelation"] = autocorrelation_track(
            sig, config.frame_length, config.hop,
            config.autocorr_fmin_hz, config.autocorr_fmax_hz)

    inharm_rows, salience_rows = [], []
    for t, snap in zip(times, snapshots):
        if len(snap) >= 2:
            rep = inharmonicity(snap, config.inharmonicity_tolerance_cents,
                                config.harmonic_max_dev_cents, config.quasi_harmonic_max_dev_cents)
            inharm_rows.append(
                {
                    "time_s": float(t),
                    "f0_ref_hz": rep.f0_ref,
                    "stretch_b": rep.stretch_b,
                    "stretch_residual_cents": rep.stretch_residual_cents,
                    "max_abs_deviation_cents": rep.max_abs_deviation_cents,
                    "classification": rep.classification,
                }
            )
        if len(snap) >= 1:
            # spectrogram magnitudes are already weighted when configured
            sal = detect_salient_partials(snap, contour=None,
                                          margin_db=config.salience_margin_db)
            salience_rows.append(
                {
                    "time_s": float(t),
                    "fundamental_hz": sal.fundamental_hz,
                    "salient": list(sal.salient),
                    "carrier_runs": [list(r) for r in sal.carrier_runs],
                    "carrier_center_hz": sal.carrier_center_hz,
                }
            )

    discrepancy = []
    if autocorr_ok:
        ta, cents = pitch_discrepancy(
            pitch_tracks["lowest_partial"], pitch_tracks["autocorrelation"])
        discrepancy = [{"time_s": float(t), "cents": float(c)} for t, c in zip(ta, cents)]

    fold_track = pitch_tracks.get(config.fold_method) or pitch_tracks["gcd_f0"]
    voiced_any = bool(np.any(fold_track.voiced))
    poles_out, mode_out, tuning_out, folded_hist = [], None, None, None
    notes = []
    reference = final_hz if final_hz is not None else FOLD_REFERENCE_HZ
    if voiced_any:
        folded, weights = fold_to_pitch_classes(fold_track, reference,
                                                config.weight_by_salience)
        counts, edges = np.histogram(folded, bins=int(round(1200 / config.histogram_bin_cents)),
                                     range=(0.0, 1200.0), weights=weights)
        folded_hist = {
            "cents_bin": [float(e) for e in edges[:-1]],
            "count": [float(c) for c in counts],
        }
        if folded.size >= 100:
            poles = estimate_poles(
                folded, weights,
                min_mass=config.pole_min_mass,
                bin_cents=config.histogram_bin_cents,
                bandwidth_cents=config.kde_bandwidth_cents,
                assign_radius_cents=config.pole_assign_radius_cents,
                reference_hz=reference,
            )
            for p in poles:
                poles_out.append(
                    {
                        "cents": p.pole_cents,
                        "hz": p.pole_hz,
                        "mass": p.mass,
                        "q_cents": p.q_cents,
                    }
                )
            if poles:
                best = fold_track.best_frequencies()
                hint = float(np.nanmedian(best)) if np.any(~np.isnan(best)) else None
                tuning_global = estimate_tuning_offset(fold_track, None,
                                                       config.weight_by_salience)
                mode = infer_mode(
                    poles,
                    reference_hz=reference,
                    final_override_cents=(0.0 if final_hz is not None else None),
                    ambiguity_min_mass=config.pole_min_mass,
                    octave_hint_hz=hint,
                    tuning_offset_cents=tuning_global,
                )
                mode_out = {
                    "final_hz": mode.final_hz,
                    "degrees": [
                        {
                            "cents": d.cents,
                            "label": d.label,
                            "offset_cents": d.offset_cents,
                            "mass": d.mass,
                        }
                        for d in mode.degrees
                    ],
                    "ambiguous": [list(pair) for pair in mode.ambiguous],
                    "tuning_offset_cents": mode.tuning_offset_cents,
                }
                seg_rows = []
                if segments:
                    offsets = estimate_tuning_offset(fold_track, list(segments),
                                                     config.weight_by_salience)
                    for seg, off in zip(segments, offsets):
                        seg_rows.append(
                            {
                                "label": seg.label,
                                "start_s": seg.start,
                                "end_s": seg.end,
                                "offset_cents": off,
                            }
                        )
                tuning_out = {"global_cents": tuning_global, "segments": seg_rows}
        else:
            notes.append("fewer than 100 voiced observations; poles not estimated")
    else:
        notes.append("stem is unvoiced")

    return {
        "duration_s": sig.duration,
        "sample_rate": sig.sample_rate,
        "n_samples": len(sig),
        "voiced": voiced_any,
        "partial_tracks": [
            {
                "index": tr.index,
                "birth_time_s": float(tr.times[0]),
                "death_time_s": float(tr.times[-1]),
                "n_frames": len(tr.times),
                "median_frequency_hz": tr.median_frequency,
                "min_frequency_hz": float(np.min(tr.frequencies)),
                "max_frequency_hz": float(np.max(tr.frequencies)),
            }
            for tr in tracks
        ],
        "pitch_tracks": {name: _pitch_track_rows(tr) for name, tr in pitch_tracks.items()},
        "inharmonicity": inharm_rows,
        "salience": salience_rows,
        "discrepancy_lowest_vs_autocorrelation": discrepancy,
        "poles": poles_out,
        "residual_pole_mass": (1.0 - sum(p["mass"] for p in poles_out)) if poles_out else None,
        "mode": mode_out,
        "tuning": tuning_out,
        "folded_histogram": folded_hist,
        "spectrum": {
            "frequency_hz": [float(f) for f in spec.bin_frequencies],
            "magnitude_mean": [float(m) for m in np.mean(spec.magnitudes, axis=0)],
        },
        "notes": notes,
    }


def analyze(stemset: StemSet, config: AnalysisConfig | None = None) -> dict:
    """Analyze every stem; failures are isolated per stem."""
    config = config or AnalysisConfig()
    contour = default_contour() if config.weighting else None
    stems_out, inputs, errors = {}, {}, {}
    for label in sorted(stemset.stems):
        path = stemset.stems[label]
        try:
            sig = load_wav(path)
            inputs[label] = {
                "path": str(path),
                "sha256": _sha256(path),
                "sample_rate": sig.sample_rate,
                "n_samples": len(sig),
            }
            stems_out[label] = analyze_signal(
                sig, config, contour, stemset.segments, stemset.final_hz
            )
        except Exception as exc:  # per-stem isolation is part of the contract
            errors[label] = f"{type(exc).__name__}: {exc}"
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "pitchlab", "version": __version__},
        "config": config.to_dict(),
        "final_override_hz": stemset.final_hz,
        "inputs": inputs,
        "stems": stems_out,
        "errors": errors,
    }


def load_segments(path) -> tuple:
    """Read a segments CSV: start_s,end_s,label (header optional)."""
    segments = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower() in ("start_s", "start"):
                continue
            if len(row) < 2:
                raise InputError(f"{path}: segment rows need start_s,end_s[,label]")
            label = row[2].strip() if len(row) > 2 else ""
            try:
                segments.append(Segment(float(row[0]), float(row[1]), label))
            except ValueError as exc:
                raise InputError(f"{path}: bad segment row {row!r}: {exc}") from exc
    return tuple(segments)


def _first_stem(report: dict, stem: str | None) -> tuple[str, dict]:
    stems = report.get("stems", {})
    if not stems:
        raise InputError("report contains no analyzed stems")
    if stem is None:
        stem = sorted(stems)[0]
    if stem not in stems:
        raise InputError(f"no stem {stem!r} in report; have: {', '.join(sorted(stems))}")
    return stem, stems[stem]


def emit_plot_data(report: dict, kind: str, path, stem: str | None = None) -> None:
    """Write one plot-ready CSV extracted from a report."""
    available = []
    if report.get("stems"):
        _, stem_data = _first_stem(report, stem)
        if stem_data.get("spectrum"):
            available.append("spectrum")
        if stem_data.get("pitch_tracks"):
            available.append("pitch_track")
        if stem_data.get("folded_histogram"):
            available.append("histogram")
    if report.get("beatmap"):
        available.append("beatmap")
    if kind not in available:
        raise InputError(
            f"plot kind {kind!r} not present in report; available: "
            + (", ".join(available) if available else "none")
        )

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if kind == "spectrum":
            _, stem_data = _first_stem(report, stem)
            writer.writerow(["frequency_hz", "magnitude_mean"])
            spec = stem_data["spectrum"]
            for f, m in zip(spec["frequency_hz"], spec["magnitude_mean"]):
                writer.writerow([f, m])
        elif kind == "pitch_track":
            _, stem_data = _first_stem(report, stem)
            writer.writerow(["time_s", "frequency_hz", "salience", "method", "voiced"])
            for method in sorted(stem_data["pitch_tracks"]):
                for row in stem_data["pitch_tracks"][method]:
                    writer.writerow([
                        row["time_s"],
                        "" if row["frequency_hz"] is None else row["frequency_hz"],
                        "" if row["salience"] is None else row["salience"],
                        method,
                        int(row["voiced"]),
                    ])
        elif kind == "histogram":
            _, stem_data = _first_stem(report, stem)
            writer.writerow(["cents_bin", "count"])
            hist = stem_data["folded_histogram"]
            for c, n in zip(hist["cents_bin"], hist["count"]):
                writer.writerow([c, n])
        elif kind == "beatmap":
            bm = report["beatmap"]
            writer.writerow(["interval_semitones"] + [f"{f}" for f in bm["beat_frequencies_hz"]])
            for interval, row in zip(bm["intervals_semitones"], bm["matrix"]):
                writer.writerow([interval] + list(row))


def write_beatmap_csv(beat_map, path) -> None:
    """Matrix CSV: header row of beat frequencies, first column intervals."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["interval_semitones"] + [float(f) for f in beat_map.beat_frequencies_hz])
        for interval, row in zip(beat_map.intervals_semitones, beat_map.matrix):
            writer.writerow([float(interval)] + [float(v) for v in row])
    sidecar = Path(str(path) + ".json")
    sidecar.write_text(json.dumps(_round_floats(beat_map.recipe()), sort_keys=True, indent=1))


def export_pitch_track_csv(track: PitchTrack, path) -> None:
    """CSV schema: time_s, frequency_hz, salience, method, voiced."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "frequency_hz", "salience", "method", "voiced"])
        for fr in track.frames:
            writer.writerow([
                fr.time,
                "" if not fr.voiced else float(fr.frequencies[0]),
                "" if not fr.voiced else float(fr.saliences[0]),
                track.method,
                int(fr.voiced),
            ])


def load_pitch_track_csv(path) -> PitchTrack:
    frames = []
    method = "unknown"
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"time_s", "frequency_hz", "salience", "method", "voiced"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise InputError(f"{path}: pitch-track CSV needs columns {sorted(required)}")
        for row in reader:
            t = float(row["time_s"])
            voiced = row["voiced"].strip() not in ("0", "", "false", "False")
            method = row["method"] or method
            if voiced and row["frequency_hz"]:
                sal = float(row["salience"]) if row["salience"] else 1.0
                frames.append(PitchFrame(t, np.array([float(row["frequency_hz"])]),
                                         np.array([sal]), method))
            else:
                frames.append(PitchFrame(t, np.empty(0), np.empty(0), method))
    if not frames:
        raise InputError(f"{path}: empty pitch-track CSV")
    return PitchTrack(tuple(frames), method)


def export_partial_tracks_csv(tracks, path) -> None:
    """CSV: track_index, time_s, frequency_hz, magnitude."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["track_index", "time_s", "frequency_hz", "magnitude"])
        for tr in tracks:
            for t, f, m in zip(tr.times, tr.frequencies, tr.magnitudes):
                writer.writerow([tr.index, float(t), float(f), float(m)])


def export_spectrogram_csv(spec, path) -> None:
    """Matrix CSV: header row of bin frequencies, first column frame times."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s"] + [float(f) for f in spec.bin_frequencies])
        for t, row in zip(spec.frame_times, spec.magnitudes):
            writer.writerow([float(t)] + [float(v) for v in row])
