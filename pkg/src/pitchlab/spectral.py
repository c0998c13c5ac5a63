"""Spectral transforms, peak picking, and partial tracking.

Peaks are local spectral maxima refined by quadratic interpolation of
log-magnitude over the three bins around each maximum. Tracking is greedy
nearest-in-cents linking from frame to frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from .loudness import LoudnessContour, weight_spectrum
from .signal import DEFAULT_FRAME_LENGTH, DEFAULT_HOP, DEFAULT_WINDOW, Signal, frame

DEFAULT_PEAK_THRESHOLD_DB = -60.0
DEFAULT_PEAK_PROMINENCE_DB = 6.0
DEFAULT_MAX_JUMP_CENTS = 50.0
DEFAULT_MIN_TRACK_DURATION_S = 0.05

_DB_FLOOR = 1e-150  # keeps log() defined on silent bins


@dataclass(frozen=True)
class Spectrogram:
    """Magnitude spectrogram: frames x bins, with axis metadata."""

    magnitudes: np.ndarray  # shape (n_frames, n_bins), >= 0
    bin_frequencies: np.ndarray  # Hz, strictly increasing
    frame_times: np.ndarray  # seconds, frame centers
    weighted: bool = False

    def __post_init__(self):
        mags = np.asarray(self.magnitudes, dtype=np.float64)
        if np.any(mags < 0):
            raise ValueError("magnitudes must be non-negative")
        if np.any(np.diff(self.bin_frequencies) <= 0):
            raise ValueError("bin frequencies must be strictly increasing")
        object.__setattr__(self, "magnitudes", mags)

    @property
    def n_frames(self) -> int:
        return self.magnitudes.shape[0]


@dataclass(frozen=True)
class ComplexToneSnapshot:
    """Partials observed at one frame: (frequency, magnitude) pairs."""

    frequencies: np.ndarray  # Hz, ascending
    magnitudes: np.ndarray  # linear
    f0_candidate: float | None = None

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=np.float64)
        m = np.asarray(self.magnitudes, dtype=np.float64)
        if f.shape != m.shape:
            raise ValueError("frequencies and magnitudes must align")
        if np.any(f <= 0):
            raise ValueError("partial frequencies must be positive")
        order = np.argsort(f)
        object.__setattr__(self, "frequencies", f[order])
        object.__setattr__(self, "magnitudes", m[order])

    def __len__(self) -> int:
        return len(self.frequencies)


@dataclass
class PartialTrack:
    """One sinusoidal component followed over time."""

    index: int  # ordinal, 1 = lowest-frequency track
    times: np.ndarray
    frequencies: np.ndarray
    magnitudes: np.ndarray
    birth_frame: int
    death_frame: int  # last frame index the track is alive

    @property
    def median_frequency(self) -> float:
        return float(np.median(self.frequencies))

    def frequency_at_frame(self, frame_index: int) -> float | None:
        if self.birth_frame <= frame_index <= self.death_frame:
            return float(self.frequencies[frame_index - self.birth_frame])
        return None


def stft(
    signal: Signal,
    frame_length: int = DEFAULT_FRAME_LENGTH,
    hop: int = DEFAULT_HOP,
    window: str = DEFAULT_WINDOW,
    weighting: LoudnessContour | None = None,
) -> Spectrogram:
    """Magnitude STFT; if a contour is given every frame is loudness-weighted."""
    frames = frame(signal, frame_length, hop, window)
    spec = np.abs(np.fft.rfft(frames.windowed(), axis=1))
    bin_freqs = np.fft.rfftfreq(frame_length, d=1.0 / signal.sample_rate)
    if weighting is not None:
        spec = weight_spectrum(bin_freqs, spec, weighting)
    return Spectrogram(spec, bin_freqs, frames.times, weighted=weighting is not None)


def _refine_peak(db: np.ndarray, k: int) -> tuple[float, float]:
    """Quadratic-interpolate a local maximum at bin k; returns (bin, dB)."""
    if k == 0 or k == len(db) - 1:
        return float(k), float(db[k])
    a, b, c = db[k - 1], db[k], db[k + 1]
    denom = a - 2.0 * b + c
    if denom == 0:
        return float(k), float(b)
    p = 0.5 * (a - c) / denom
    return k + p, b - 0.25 * (a - c) * p


def pick_peaks(
    magnitudes: np.ndarray,
    bin_frequencies: np.ndarray,
    threshold_db: float = DEFAULT_PEAK_THRESHOLD_DB,
    min_prominence_db: float = DEFAULT_PEAK_PROMINENCE_DB,
) -> ComplexToneSnapshot:
    """Local maxima of one frame spectrum above a frame-relative threshold.

    threshold_db is relative to the frame maximum (e.g. -60 keeps peaks
    within 60 dB of the loudest bin). Peaks closer than 1 cent are merged,
    keeping the larger one.
    """
    magnitudes = np.asarray(magnitudes, dtype=np.float64)
    if magnitudes.size == 0:
        raise ValueError("empty spectrum")
    peak = magnitudes.max()
    if peak <= 0:
        return ComplexToneSnapshot(np.empty(0), np.empty(0))
    db = 20.0 * np.log10(np.maximum(magnitudes, peak * _DB_FLOOR))
    height = db.max() + threshold_db
    idx, _ = scipy.signal.find_peaks(db, height=height, prominence=min_prominence_db)

    freqs, mags = [], []
    for k in idx:
        pos, level_db = _refine_peak(db, int(k))
        f = float(np.interp(pos, np.arange(len(bin_frequencies)), bin_frequencies))
        if f <= 0:
            continue
        freqs.append(f)
        mags.append(10.0 ** (level_db / 20.0))

    # merge peaks within 1 cent
    order = np.argsort(freqs)
    out_f, out_m = [], []
    for i in order:
        if out_f and 1200.0 * np.log2(freqs[i] / out_f[-1]) < 1.0:
            if mags[i] > out_m[-1]:
                out_f[-1], out_m[-1] = freqs[i], mags[i]
        else:
            out_f.append(freqs[i])
            out_m.append(mags[i])
    return ComplexToneSnapshot(np.array(out_f), np.array(out_m))


def frame_snapshots(
    spectrogram: Spectrogram,
    threshold_db: float = DEFAULT_PEAK_THRESHOLD_DB,
    min_prominence_db: float = DEFAULT_PEAK_PROMINENCE_DB,
) -> list[ComplexToneSnapshot]:
    return [
        pick_peaks(spectrogram.magnitudes[i], spectrogram.bin_frequencies,
                   threshold_db, min_prominence_db)
        for i in range(spectrogram.n_frames)
    ]


@dataclass
class _LiveTrack:
    birth: int
    times: list = field(default_factory=list)
    freqs: list = field(default_factory=list)
    mags: list = field(default_factory=list)


def track_partials(
    spectrogram: Spectrogram,
    threshold_db: float = DEFAULT_PEAK_THRESHOLD_DB,
    min_prominence_db: float = DEFAULT_PEAK_PROMINENCE_DB,
    max_jump_cents: float = DEFAULT_MAX_JUMP_CENTS,
    min_duration_s: float = DEFAULT_MIN_TRACK_DURATION_S,
) -> list[PartialTrack]:
    """Link per-frame peaks into tracks, greedily by cent distance.

    A track continues to the closest unclaimed peak within max_jump_cents
    of its last frequency; otherwise it dies. Unclaimed peaks start new
    tracks. Tracks shorter than min_duration_s are dropped. Returned
    tracks are ordered and indexed by ascending median frequency (1 = lowest).
    """
    snapshots = frame_snapshots(spectrogram, threshold_db, min_prominence_db)
    live: list[_LiveTrack] = []
    done: list[_LiveTrack] = []

    for i, snap in enumerate(snapshots):
        t = spectrogram.frame_times[i]
        n_peaks = len(snap)
        # all (track, peak) pairs within the jump limit, nearest first
        pairs = []
        for ti, tr in enumerate(live):
            last = tr.freqs[-1]
            for pi in range(n_peaks):
                dist = abs(1200.0 * np.log2(snap.frequencies[pi] / last))
                if dist <= max_jump_cents:
                    pairs.append((dist, ti, pi))
        pairs.sort()
        taken_tracks, taken_peaks = set(), set()
        for dist, ti, pi in pairs:
            if ti in taken_tracks or pi in taken_peaks:
                continue
            taken_tracks.add(ti)
            taken_peaks.add(pi)
            live[ti].times.append(t)
            live[ti].freqs.append(float(snap.frequencies[pi]))
            live[ti].mags.append(float(snap.magnitudes[pi]))

        survivors = []
        for ti, tr in enumerate(live):
            if ti in taken_tracks:
                survivors.append(tr)
            else:
                done.append(tr)
        live = survivors
        for pi in range(n_peaks):
            if pi not in taken_peaks:
                tr = _LiveTrack(birth=i)
                tr.times.append(t)
                tr.freqs.append(float(snap.frequencies[pi]))
                tr.mags.append(float(snap.magnitudes[pi]))
                live.append(tr)
    done.extend(live)

    hop_s = float(np.median(np.diff(spectrogram.frame_times))) if spectrogram.n_frames > 1 else 0.0
    tracks = []
    for tr in done:
        duration = (len(tr.times) - 1) * hop_s if hop_s else 0.0
        if len(tr.times) > 1 and duration < min_duration_s:
            continue
        if len(tr.times) == 1 and min_duration_s > 0 and hop_s:
            continue
        tracks.append(tr)
    tracks.sort(key=lambda tr: float(np.median(tr.freqs)))
    out = []
    for rank, tr in enumerate(tracks, start=1):
        out.append(
            PartialTrack(
                index=rank,
                times=np.array(tr.times),
                frequencies=np.array(tr.freqs),
                magnitudes=np.array(tr.mags),
                birth_frame=tr.birth,
                death_frame=tr.birth + len(tr.times) - 1,
            )
        )
    return out
