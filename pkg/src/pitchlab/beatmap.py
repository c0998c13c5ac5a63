"""Interval-vs-beat-frequency map for two superposed harmonic tones.

For each interval the two-tone mixture is synthesized, its RMS envelope
taken, and the envelope's spectrum (DC removed) stored as one map row.
Pure small-integer ratios produce no beats and show up as minima of the
integrated modulation energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .signal import Signal, rms_envelope

DEFAULT_BASE_F0 = 220.0
DEFAULT_PARTIALS_PER_TONE = 8
DEFAULT_INTERVAL_STEP = 0.05
DEFAULT_SAMPLE_RATE = 16000
DEFAULT_DURATION_S = 2.0
DEFAULT_BEAT_MAX_HZ = 30.0
DEFAULT_BEAT_MIN_HZ = 2.5  # slower modulation is unresolved at the default step
DEFAULT_PHASE_DRAWS = 4
DEFAULT_SEED = 0
_RMS_FRAME_S = 0.02
_RMS_HOP_S = 0.0025  # envelope rate 400 Hz: beats that alias into the
                     # 0-30 Hz band must start above 370 Hz, where the
                     # frame's own low-pass has already crushed them
_MIN_DEPTH_RATIO = 0.7  # a minimum must dip at least this far below its neighborhood
_NEIGHBORHOOD_ST = 0.25
_SIGNIFICANT_LEVEL = 1e-5  # neighborhoods quieter than this fraction of the map max are noise


@dataclass(frozen=True)
class BeatMap:
    intervals_semitones: np.ndarray
    beat_frequencies_hz: np.ndarray
    matrix: np.ndarray  # (n_intervals, n_beat_bins) RMS-modulation magnitude
    base_f0: float
    partials_per_tone: int
    seed: int
    sample_rate: int
    duration_s: float

    def __post_init__(self):
        if np.any(self.matrix < 0):
            raise ValueError("matrix must be non-negative")
        if np.any(np.diff(self.intervals_semitones) <= 0) and len(self.intervals_semitones) > 1:
            raise ValueError("interval axis must be strictly increasing")

    def integrated_energy(self, min_hz: float = DEFAULT_BEAT_MIN_HZ) -> np.ndarray:
        """Total modulation energy per interval (sum of squared magnitudes).

        Beat frequencies below min_hz are excluded: at the default 5-cent
        interval step a grid point next to a pure ratio already beats at
        ~1 Hz, and counting that unresolved near-DC region would wash out
        the beat-free notches at the pure ratios themselves.
        """
        keep = self.beat_frequencies_hz >= min_hz
        return np.sum(self.matrix[:, keep] ** 2, axis=1)

    def recipe(self) -> dict:
        return {
            "base_f0_hz": self.base_f0,
            "partials_per_tone": self.partials_per_tone,
            "amplitude_rolloff": "1/n",
            "seed": self.seed,
            "sample_rate_hz": self.sample_rate,
            "duration_s": self.duration_s,
            "phase_draws": DEFAULT_PHASE_DRAWS,
        }


def _mixture_row(
    f_low: float,
    f_high: float,
    n_partials: int,
    sample_rate: int,
    duration_s: float,
    phases: np.ndarray,
    beat_max_hz: float,
) -> tuple[np.ndarray, np.ndarray]:
    """One map row: mean envelope-spectrum magnitude over the phase draws.

    Tones are passed in canonical (low, high) order so that swapping the
    two tones cannot change the result.
    """
    n = int(round(duration_s * sample_rate))
    t = np.arange(n) / sample_rate
    frame_n = int(round(_RMS_FRAME_S * sample_rate))
    hop_n = int(round(_RMS_HOP_S * sample_rate))
    rows = []
    beat_freqs = None
    for draw in range(phases.shape[0]):
        x = np.zeros(n)
        for tone, f0 in enumerate((f_low, f_high)):
            for h in range(1, n_partials + 1):
                x += (1.0 / h) * np.sin(2.0 * math.pi * f0 * h * t + phases[draw, tone, h - 1])
        env = rms_envelope(Signal(x / (2 * n_partials), sample_rate), frame_n, hop_n)
        env = env - np.mean(env)
        # window the envelope so slow beats do not leak across the whole axis
        env = env * np.hanning(len(env))
        spec = np.abs(np.fft.rfft(env))
        freqs = np.fft.rfftfreq(len(env), d=_RMS_HOP_S)
        keep = (freqs > 0) & (freqs <= beat_max_hz)
        beat_freqs = freqs[keep]
        rows.append(spec[keep])
    return beat_freqs, np.mean(rows, axis=0)


def compute_beat_map(
    base_f0: float = DEFAULT_BASE_F0,
    partials_per_tone: int = DEFAULT_PARTIALS_PER_TONE,
    interval_start: float = 0.0,
    interval_stop: float = 12.0,
    interval_step: float = DEFAULT_INTERVAL_STEP,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    duration_s: float = DEFAULT_DURATION_S,
    beat_max_hz: float = DEFAULT_BEAT_MAX_HZ,
    seed: int = DEFAULT_SEED,
) -> BeatMap:
    """Beat map over [interval_start, interval_stop] semitones.

    Both tones have partials_per_tone harmonics with 1/n amplitude rolloff.
    Each row averages the envelope spectrum over four seeded random
    relative-phase draws.
    """
    n_steps = int(math.floor((interval_stop - interval_start) / interval_step + 1e-9)) + 1
    intervals = interval_start + interval_step * np.arange(max(n_steps, 0))
    nyquist = sample_rate / 2.0
    for i in intervals:
        top = max(base_f0, base_f0 * 2.0 ** (i / 12.0)) * partials_per_tone
        if top >= nyquist:
            raise ValueError(
                f"partials exceed Nyquist at interval {i:.2f} semitones ({top:.0f} Hz)"
            )
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * math.pi,
                         size=(DEFAULT_PHASE_DRAWS, 2, partials_per_tone))
    rows = []
    beat_freqs = np.empty(0)
    for i in intervals:
        f2 = base_f0 * 2.0 ** (i / 12.0)
        f_low, f_high = sorted((base_f0, f2))
        beat_freqs, row = _mixture_row(
            f_low, f_high, partials_per_tone, sample_rate, duration_s, phases, beat_max_hz
        )
        rows.append(row)
    matrix = np.array(rows) if rows else np.empty((0, 0))
    return BeatMap(
        intervals_semitones=intervals,
        beat_frequencies_hz=beat_freqs,
        matrix=matrix,
        base_f0=base_f0,
        partials_per_tone=partials_per_tone,
        seed=seed,
        sample_rate=sample_rate,
        duration_s=duration_s,
    )


def pure_ratio_cents(max_den: int = 8) -> dict[str, float]:
    """Small-integer frequency ratios p/q (p, q <= max_den) within one octave."""
    out = {}
    for q in range(1, max_den + 1):
        for p in range(q, 2 * q + 1):
            frac = Fraction(p, q)
            if frac.numerator <= max_den and 1 <= frac <= 2:
                out[f"{frac.numerator}:{frac.denominator}"] = 1200.0 * math.log2(float(frac))
    return out


def find_beat_minima(
    beat_map: BeatMap,
    max_den: int = 8,
    label_tolerance_cents: float = 5.0,
) -> list[tuple[float, str | None]]:
    """Local minima of integrated modulation energy, labeled with the
    nearest small-integer ratio when one lies within label_tolerance_cents.

    A minimum counts only if it dips below 70% of the loudest energy within
    +/-0.25 semitones, and that neighborhood itself carries real beating
    (at least 1e-5 of the map-wide maximum) - this rejects noise-floor
    wiggles in beat-free regions.
    """
    energy = beat_map.integrated_energy()
    intervals = beat_map.intervals_semitones
    if energy.size == 0:
        return []
    e_max = float(np.max(energy))
    if e_max <= 0:
        return []
    step = float(intervals[1] - intervals[0]) if len(intervals) > 1 else 1.0
    half_window = max(1, int(round(_NEIGHBORHOOD_ST / step)))
    ratios = pure_ratio_cents(max_den)

    out = []
    for k in range(len(energy)):
        left_ok = k == 0 or energy[k] < energy[k - 1]
        right_ok = k == len(energy) - 1 or energy[k] < energy[k + 1]
        if not (left_ok and right_ok):
            continue
        lo, hi = max(0, k - half_window), min(len(energy), k + half_window + 1)
        neighborhood = float(np.max(energy[lo:hi]))
        if neighborhood < _SIGNIFICANT_LEVEL * e_max:
            continue
        if energy[k] > _MIN_DEPTH_RATIO * neighborhood:
            continue
        cents = intervals[k] * 100.0
        label = None
        best = label_tolerance_cents
        for name, rc in ratios.items():
            if abs(cents - rc) <= best:
                best = abs(cents - rc)
                label = name
        out.append((float(intervals[k]), label))
    return out
