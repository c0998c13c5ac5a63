"""Pitch estimators: spectral (GCD-sense f0, lowest partial), temporal
(autocorrelation), and partial-spacing views, plus their discrepancy.

Per-frame candidates are kept in full; nothing here forces one pitch per
frame, and no octave correction is applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal import Signal, frame
from .spectral import ComplexToneSnapshot, PartialTrack, Spectrogram, frame_snapshots

DEFAULT_MIN_F0 = 20.0
DEFAULT_GCD_TOLERANCE_CENTS = 30.0
DEFAULT_AUTOCORR_FMIN = 25.0
DEFAULT_AUTOCORR_FMAX = 1200.0
AUTOCORR_SALIENCE_THRESHOLD = 0.3

METHODS = ("lowest_partial", "gcd_f0", "autocorrelation", "partial_spacing")


@dataclass(frozen=True)
class PitchFrame:
    """Pitch candidates at one instant, sorted by descending salience."""

    time: float
    frequencies: np.ndarray
    saliences: np.ndarray
    method: str

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=np.float64)
        s = np.asarray(self.saliences, dtype=np.float64)
        if f.shape != s.shape:
            raise ValueError("frequencies and saliences must align")
        if np.any(f <= 0):
            raise ValueError("candidate frequencies must be positive")
        order = np.argsort(-s, kind="stable")
        object.__setattr__(self, "frequencies", f[order])
        object.__setattr__(self, "saliences", s[order])

    @property
    def voiced(self) -> bool:
        return len(self.frequencies) > 0

    @property
    def best(self) -> float | None:
        return float(self.frequencies[0]) if self.voiced else None


@dataclass(frozen=True)
class PitchTrack:
    """A sequence of PitchFrames on a uniform time grid."""

    frames: tuple
    method: str

    @property
    def times(self) -> np.ndarray:
        return np.array([fr.time for fr in self.frames])

    @property
    def voiced(self) -> np.ndarray:
        return np.array([fr.voiced for fr in self.frames], dtype=bool)

    def best_frequencies(self) -> np.ndarray:
        """Top candidate per frame; NaN where unvoiced."""
        return np.array(
            [fr.best if fr.voiced else np.nan for fr in self.frames], dtype=np.float64
        )

    def __len__(self) -> int:
        return len(self.frames)


def _deviation_cents(partials: np.ndarray, f: float) -> np.ndarray:
    n = np.maximum(1, np.round(partials / f))
    return 1200.0 * np.log2(partials / (n * f))


def f0_gcd(
    snapshot: ComplexToneSnapshot,
    tolerance_cents: float = DEFAULT_GCD_TOLERANCE_CENTS,
    min_f0: float = DEFAULT_MIN_F0,
) -> float | None:
    """GCD-sense fundamental: the largest f for which every partial sits
    within tolerance_cents of an integer multiple of f.

    For inharmonic tones this is the fundamental of the least-deviating
    harmonic series: within the highest feasible candidate region, the sum
    of squared cent deviations is minimized and the result refined in
    closed form. Returns None when nothing above min_f0 fits.
    """
    if len(snapshot) == 0:
        raise ValueError("snapshot has no partials")
    partials = snapshot.frequencies
    lowest = partials[0]
    upper = lowest * 2.0 ** (tolerance_cents / 1200.0)
    if upper < min_f0:
        return None
    step_cents = min(1.0, tolerance_cents / 4.0)
    n_steps = int(np.ceil(1200.0 * np.log2(upper / min_f0) / step_cents)) + 1
    grid = min_f0 * 2.0 ** (np.arange(n_steps) * step_cents / 1200.0)
    grid = grid[grid <= upper * 1.0000001]
    if grid.size == 0:
        return None

    harmonics = np.maximum(1, np.round(partials[None, :] / grid[:, None]))
    devs = 1200.0 * np.log2(partials[None, :] / (harmonics * grid[:, None]))
    feasible = np.max(np.abs(devs), axis=1) <= tolerance_cents
    if not np.any(feasible):
        return None

    # contiguous feasible runs; keep the highest-frequency one
    idx = np.flatnonzero(feasible)
    breaks = np.flatnonzero(np.diff(idx) > 1)
    run_start = idx[breaks[-1] + 1] if breaks.size else idx[0]
    run = idx[idx >= run_start]
    costs = np.sum(devs[run] ** 2, axis=1)
    best = run[np.argmin(costs)]

    # closed-form least-squares refinement with the winning assignment
    n = np.maximum(1, np.round(partials / grid[best]))
    f_star = float(np.exp(np.mean(np.log(partials / n))))
    if f_star >= min_f0 and np.max(np.abs(_deviation_cents(partials, f_star))) <= tolerance_cents:
        return f_star
    return float(grid[best])


def autocorrelation_pitch(
    samples: np.ndarray,
    sample_rate: int,
    fmin: float = DEFAULT_AUTOCORR_FMIN,
    fmax: float = DEFAULT_AUTOCORR_FMAX,
    time: float = 0.0,
) -> PitchFrame:
    """Pitch candidates from normalized (unbiased) autocorrelation.

    Candidates are interior local maxima above 0.3 normalized height within
    the lag range for [fmin, fmax]; lags are refined by quadratic
    interpolation and salience is the (clipped) peak height.
    """
    x = np.asarray(samples, dtype=np.float64)
    n = len(x)
    if n < 2.0 * sample_rate / fmin:
        raise ValueError(f"frame shorter than 2/min_freq ({fmin} Hz needs "
                         f"{int(np.ceil(2 * sample_rate / fmin))} samples, got {n})")
    x = x - np.mean(x)
    spec = np.fft.rfft(x, 2 * n)
    r = np.fft.irfft(spec * np.conj(spec))[:n]
    if r[0] <= 0:
        return PitchFrame(time, np.empty(0), np.empty(0), "autocorrelation")
    lags = np.arange(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = (r / r[0]) * (n / np.maximum(n - lags, 1))

    lo = max(1, int(np.floor(sample_rate / fmax)))
    hi = min(n - 2, int(np.ceil(sample_rate / fmin)))
    freqs, sals = [], []
    for k in range(lo, hi + 1):
        if rho[k] > rho[k - 1] and rho[k] >= rho[k + 1] and rho[k] >= AUTOCORR_SALIENCE_THRESHOLD:
            a, b, c = rho[k - 1], rho[k], rho[k + 1]
            denom = a - 2.0 * b + c
            p = 0.5 * (a - c) / denom if denom != 0 else 0.0
            lag = k + p
            height = b - 0.25 * (a - c) * p
            f = sample_rate / lag
            if fmin <= f <= fmax:
                freqs.append(f)
                sals.append(min(max(float(height), 0.0), 1.0))
    return PitchFrame(time, np.array(freqs), np.array(sals), "autocorrelation")


def partial_spacing_pitch(snapshot: ComplexToneSnapshot) -> float | None:
    """Median of consecutive-partial frequency differences; None if < 2 partials."""
    if len(snapshot) < 2:
        return None
    return float(np.median(np.diff(snapshot.frequencies)))


def pitch_discrepancy(track_a: PitchTrack, track_b: PitchTrack) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame interval between two tracks' top candidates, in cents.

    Frames where either track is unvoiced are skipped. Returns (times, cents)
    with cents = 1200*log2(f_a / f_b).
    """
    ta, tb = track_a.times, track_b.times
    if len(ta) != len(tb) or not np.allclose(ta, tb, atol=1e-9):
        raise ValueError("tracks must share the same frame grid")
    fa = track_a.best_frequencies()
    fb = track_b.best_frequencies()
    mask = track_a.voiced & track_b.voiced
    cents = 1200.0 * np.log2(fa[mask] / fb[mask])
    return ta[mask], cents


# ---------------------------------------------------------------------------
# track builders


def autocorrelation_track(
    signal: Signal,
    frame_length: int,
    hop: int,
    fmin: float = DEFAULT_AUTOCORR_FMIN,
    fmax: float = DEFAULT_AUTOCORR_FMAX,
) -> PitchTrack:
    frames = frame(signal, frame_length, hop, window="rectangular")
    raw = frames.raw()
    times = frames.times
    out = [
        autocorrelation_pitch(raw[i], signal.sample_rate, fmin, fmax, time=float(times[i]))
        for i in range(frames.count)
    ]
    return PitchTrack(tuple(out), "autocorrelation")


def lowest_partial_track(tracks: list[PartialTrack], frame_times: np.ndarray) -> PitchTrack:
    """Frequency of the lowest-indexed partial track surviving at each frame."""
    by_index = sorted(tracks, key=lambda tr: tr.index)
    frames = []
    for i, t in enumerate(frame_times):
        freq = None
        for tr in by_index:
            freq = tr.frequency_at_frame(i)
            if freq is not None:
                break
        if freq is None:
            frames.append(PitchFrame(float(t), np.empty(0), np.empty(0), "lowest_partial"))
        else:
            frames.append(PitchFrame(float(t), np.array([freq]), np.array([1.0]), "lowest_partial"))
    return PitchTrack(tuple(frames), "lowest_partial")


def gcd_f0_track(
    spectrogram: Spectrogram,
    threshold_db: float = -60.0,
    min_prominence_db: float = 6.0,
    tolerance_cents: float = DEFAULT_GCD_TOLERANCE_CENTS,
    min_f0: float = DEFAULT_MIN_F0,
) -> PitchTrack:
    frames = []
    for snap, t in zip(frame_snapshots(spectrogram, threshold_db, min_prominence_db),
                       spectrogram.frame_times):
        f0 = f0_gcd(snap, tolerance_cents, min_f0) if len(snap) else None
        if f0 is None:
            frames.append(PitchFrame(float(t), np.empty(0), np.empty(0), "gcd_f0"))
        else:
            frames.append(PitchFrame(float(t), np.array([f0]), np.array([1.0]), "gcd_f0"))
    return PitchTrack(tuple(frames), "gcd_f0")


def partial_spacing_track(
    spectrogram: Spectrogram,
    threshold_db: float = -60.0,
    min_prominence_db: float = 6.0,
) -> PitchTrack:
    frames = []
    for snap, t in zip(frame_snapshots(spectrogram, threshold_db, min_prominence_db),
                       spectrogram.frame_times):
        f = partial_spacing_pitch(snap) if len(snap) >= 2 else None
        if f is None or f <= 0:
            frames.append(PitchFrame(float(t), np.empty(0), np.empty(0), "partial_spacing"))
        else:
            frames.append(PitchFrame(float(t), np.array([f]), np.array([1.0]), "partial_spacing"))
    return PitchTrack(tuple(frames), "partial_spacing")
