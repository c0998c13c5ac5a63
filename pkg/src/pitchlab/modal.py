"""Pole distributions, mode inference, and tuning-offset estimation.

Pitch candidates are folded to cents-in-octave relative to a reference,
histogrammed circularly, and kernel-smoothed; local maxima become poles.
The distribution width Q is the interquartile range (cents) of the
observations assigned to each pole.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.ndimage

from .notes import A4_HZ, PITCH_CLASS_NAMES
from .pitch import PitchTrack

DEFAULT_HISTOGRAM_BIN_CENTS = 5.0
DEFAULT_KDE_BANDWIDTH_CENTS = 10.0
DEFAULT_MIN_POLE_MASS = 0.05
POLE_ASSIGN_RADIUS_CENTS = 250.0
DEGREE_DEDUP_CENTS = 50.0
AMBIGUITY_RANGE_CENTS = (80.0, 120.0)
MIN_FOLD_OBSERVATIONS = 100


@dataclass(frozen=True)
class Segment:
    start: float
    end: float
    label: str = ""

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError(f"segment end must follow start ({self.label!r})")


@dataclass(frozen=True)
class PoleDistribution:
    """One scale degree's pitch distribution."""

    pole_cents: float  # relative to the fold reference, in [0, 1200)
    pole_hz: float | None  # in-octave representative, if a reference was given
    histogram_bins: np.ndarray  # bin centers, cents relative to the pole
    histogram_counts: np.ndarray  # (weighted) counts of assigned observations
    q_cents: float  # interquartile range of assigned observations
    mass: float  # fraction of total observation weight assigned


@dataclass(frozen=True)
class Degree:
    cents: float  # relative to the final, in [0, 1200)
    label: str  # nearest chromatic degree name (final = C)
    offset_cents: float  # cents from that chromatic degree
    mass: float


@dataclass(frozen=True)
class ModeEstimate:
    final_hz: float | None
    degrees: tuple  # Degree, ascending cents; includes the final at 0
    ambiguous: tuple  # pairs of degree labels within a semitone, both massive
    tuning_offset_cents: float | None = None


def fold_to_pitch_classes(
    track: PitchTrack,
    final_hz: float,
    weight_by_salience: bool = True,
    segment: Segment | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Map every voiced candidate to cents-in-octave relative to final_hz.

    Returns (values, weights); values in [0, 1200). Weights are candidate
    saliences, or ones when weight_by_salience is off.
    """
    values, weights = [], []
    for fr in track.frames:
        if not fr.voiced:
            continue
        if segment is not None and not (segment.start <= fr.time < segment.end):
            continue
        c = np.mod(1200.0 * np.log2(fr.frequencies / final_hz), 1200.0)
        values.append(c)
        weights.append(fr.saliences if weight_by_salience else np.ones_like(c))
    if not values:
        raise ValueError("empty track: no voiced frames")
    return np.concatenate(values), np.concatenate(weights)


def _circular_delta(values: np.ndarray, center: float, period: float = 1200.0) -> np.ndarray:
    return np.mod(values - center + period / 2.0, period) - period / 2.0


def _weighted_quantile(values: np.ndarray, weights: np.ndarray, q: float) -> float:
    order = np.argsort(values)
    v, w = values[order], weights[order]
    cum = np.cumsum(w) - 0.5 * w
    cum /= np.sum(w)
    return float(np.interp(q, cum, v))


def estimate_poles(
    values: np.ndarray,
    weights: np.ndarray | None = None,
    min_mass: float = DEFAULT_MIN_POLE_MASS,
    bin_cents: float = DEFAULT_HISTOGRAM_BIN_CENTS,
    bandwidth_cents: float = DEFAULT_KDE_BANDWIDTH_CENTS,
    assign_radius_cents: float = POLE_ASSIGN_RADIUS_CENTS,
    reference_hz: float | None = None,
) -> list[PoleDistribution]:
    """Find poles in folded pitch-class values.

    The weighted histogram (circular, bin_cents wide) is smoothed with a
    Gaussian kernel; local maxima become pole candidates. Observations are
    assigned to the nearest pole within assign_radius_cents; candidates
    whose mass stays below min_mass are dropped (weakest first) and their
    observations reassigned. Returns poles sorted by position.
    """
    values = np.asarray(values, dtype=np.float64)
    weights = np.ones_like(values) if weights is None else np.asarray(weights, dtype=np.float64)
    if values.size < MIN_FOLD_OBSERVATIONS:
        raise ValueError(f"need at least {MIN_FOLD_OBSERVATIONS} observations, got {values.size}")
    total_weight = float(np.sum(weights))
    n_bins = int(round(1200.0 / bin_cents))
    hist, _ = np.histogram(np.mod(values, 1200.0), bins=n_bins, range=(0.0, 1200.0),
                           weights=weights)
    sigma_bins = bandwidth_cents / bin_cents
    smooth = scipy.ndimage.gaussian_filter1d(hist.astype(np.float64), sigma_bins, mode="wrap")

    # circular local maxima with parabolic sub-bin refinement
    left = np.roll(smooth, 1)
    right = np.roll(smooth, -1)
    peak_bins = np.flatnonzero((smooth > left) & (smooth >= right) & (smooth > 0))
    candidates = []
    for k in peak_bins:
        a, b, c = left[k], smooth[k], right[k]
        denom = a - 2.0 * b + c
        p = 0.5 * (a - c) / denom if denom != 0 else 0.0
        candidates.append(np.mod((k + 0.5 + p) * bin_cents, 1200.0))

    def assign(poles):
        deltas = np.stack([_circular_delta(values, p) for p in poles])
        nearest = np.argmin(np.abs(deltas), axis=0)
        dist = np.abs(deltas[nearest, np.arange(values.size)])
        nearest = np.where(dist <= assign_radius_cents, nearest, -1)
        return nearest, deltas

    while candidates:
        nearest, deltas = assign(candidates)
        masses = np.array([
            float(np.sum(weights[nearest == i])) / total_weight for i in range(len(candidates))
        ])
        if np.all(masses >= min_mass):
            break
        candidates.pop(int(np.argmin(masses)))
    if not candidates:
        return []

    nearest, deltas = assign(candidates)
    poles = []
    half_bins = int(round(assign_radius_cents / bin_cents))
    bin_centers = (np.arange(-half_bins, half_bins) + 0.5) * bin_cents
    for i, pole in enumerate(candidates):
        sel = nearest == i
        w = weights[sel]
        d = deltas[i][sel]
        counts, _ = np.histogram(d, bins=2 * half_bins,
                                 range=(-assign_radius_cents, assign_radius_cents), weights=w)
        if d.size:
            q = _weighted_quantile(d, w, 0.75) - _weighted_quantile(d, w, 0.25)
        else:
            q = 0.0
        poles.append(
            PoleDistribution(
                pole_cents=float(np.mod(pole, 1200.0)),
                pole_hz=(reference_hz * 2.0 ** (np.mod(pole, 1200.0) / 1200.0)
                         if reference_hz else None),
                histogram_bins=bin_centers,
                histogram_counts=counts,
                q_cents=float(q),
                mass=float(np.sum(w)) / total_weight,
            )
        )
    poles.sort(key=lambda p: p.pole_cents)
    return poles


def _degree_label(cents: float) -> tuple[str, float]:
    k = int(round(cents / 100.0))
    offset = cents - 100.0 * k
    return PITCH_CLASS_NAMES[k % 12], offset


def infer_mode(
    poles: list[PoleDistribution],
    reference_hz: float | None = None,
    final_override_cents: float | None = None,
    ambiguity_min_mass: float = DEFAULT_MIN_POLE_MASS,
    octave_hint_hz: float | None = None,
    tuning_offset_cents: float | None = None,
) -> ModeEstimate:
    """Label poles as scale degrees relative to a final.

    The final is the highest-mass pole by default; final_override_cents
    picks the pole nearest that position instead. Degrees within 50 cents
    of each other are merged (larger mass wins). Degree pairs 80-120 cents
    apart with both masses >= ambiguity_min_mass are flagged ambiguous.
    """
    if not poles:
        raise ValueError("need at least one pole")
    if final_override_cents is not None:
        final_pole = min(poles, key=lambda p: abs(_circular_delta(
            np.array([p.pole_cents]), final_override_cents)[0]))
    else:
        final_pole = max(poles, key=lambda p: (p.mass, -p.pole_cents))

    entries = []
    for p in poles:
        d = float(np.mod(p.pole_cents - final_pole.pole_cents, 1200.0))
        entries.append((d, p.mass))
    entries.sort()
    merged: list[list[float]] = []
    for d, mass in entries:
        if merged and d - merged[-1][0] < DEGREE_DEDUP_CENTS:
            if mass > merged[-1][1]:
                merged[-1] = [d, mass]
        else:
            merged.append([d, mass])
    # wraparound dedup between the last and first degrees
    if len(merged) > 1 and (1200.0 - merged[-1][0]) + merged[0][0] < DEGREE_DEDUP_CENTS:
        keep = merged[-1] if merged[-1][1] > merged[0][1] else merged[0]
        merged = [keep] + merged[1:-1] if keep is merged[0] else merged[:-1]

    degrees = []
    for d, mass in merged:
        label, offset = _degree_label(d)
        degrees.append(Degree(cents=d, label=label, offset_cents=offset, mass=mass))

    lo, hi = AMBIGUITY_RANGE_CENTS
    ambiguous = []
    for i in range(len(degrees)):
        for j in range(i + 1, len(degrees)):
            gap = degrees[j].cents - degrees[i].cents
            if lo <= gap <= hi and degrees[i].mass >= ambiguity_min_mass \
                    and degrees[j].mass >= ambiguity_min_mass:
                ambiguous.append((degrees[i].label, degrees[j].label))

    final_hz = None
    if reference_hz is not None:
        final_hz = reference_hz * 2.0 ** (final_pole.pole_cents / 1200.0)
        if octave_hint_hz is not None and final_hz > 0:
            shift = round(np.log2(octave_hint_hz / final_hz))
            final_hz = final_hz * 2.0**shift

    return ModeEstimate(
        final_hz=final_hz,
        degrees=tuple(degrees),
        ambiguous=tuple(ambiguous),
        tuning_offset_cents=tuning_offset_cents,
    )


def _grid_offset(values: np.ndarray, weights: np.ndarray) -> float:
    """Offset (cents) minimizing summed squared circular distance (mod 100)
    of the values to the nearest equal-tempered grid point."""
    residues = np.mod(values, 100.0)
    grid = np.arange(-50.0, 50.0, 0.25)
    deltas = np.mod(residues[None, :] - grid[:, None] + 50.0, 100.0) - 50.0
    costs = np.sum(weights[None, :] * deltas**2, axis=1)
    k = int(np.argmin(costs))
    a, b, c = costs[(k - 1) % len(grid)], costs[k], costs[(k + 1) % len(grid)]
    denom = a - 2.0 * b + c
    p = 0.5 * (a - c) / denom if denom != 0 else 0.0
    return float(np.mod(grid[k] + p * 0.25 + 50.0, 100.0) - 50.0)


def estimate_tuning_offset(
    track: PitchTrack,
    segments: list[Segment] | None = None,
    weight_by_salience: bool = True,
):
    """Tuning offset vs the A440 equal-tempered grid, in cents.

    With segments, returns a list of offsets parallel to the segments
    (None for segments with no voiced frames); otherwise a single global
    offset.
    """
    def collect(segment):
        values, weights = [], []
        for fr in track.frames:
            if not fr.voiced:
                continue
            if segment is not None and not (segment.start <= fr.time < segment.end):
                continue
            c = 1200.0 * np.log2(fr.frequencies / A4_HZ)
            values.append(c)
            weights.append(fr.saliences if weight_by_salience else np.ones(len(c)))
        if not values:
            return None
        return np.concatenate(values), np.concatenate(weights)

    if segments is None:
        data = collect(None)
        if data is None:
            raise ValueError("empty track: no voiced frames")
        return _grid_offset(*data)
    out = []
    for seg in segments:
        data = collect(seg)
        out.append(None if data is None else _grid_offset(*data))
    return out
