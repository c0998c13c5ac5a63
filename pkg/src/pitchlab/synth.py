"""Parameterized stimulus generators: complex tones, 808-style bass,
waveshaping, ring modulation, unison, and pitch glides.

Every generator is deterministic (phase 0 at onset, no free-running
state): the same spec and sample rate produce bit-identical output.
Outputs are scaled down if needed so the peak stays below 1.0 - 1e-6;
waveshape() is exempt, since clipping may be the point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import polynomial as P

from .loudness import LoudnessContour
from .signal import Signal

PEAK_LIMIT = 1.0 - 1e-6

# Harmonic-boost pattern per 808 mode. Modes 1-3 follow the documented
# behaviour of the modelled patch; slots 4-7 are non-normative defaults
# and may be overridden via the boost_patterns argument.
BOOST_PATTERNS: dict[int, object] = {
    1: (3, 5),
    2: (8, 10),
    3: "even",
    4: (5, 7),
    5: (2, 3),
    6: "odd",
    7: (4, 8, 12),
}


@dataclass(frozen=True)
class Partial:
    """One partial: either a harmonic number or an exact frequency."""

    harmonic: int | None = None
    frequency_hz: float | None = None
    amplitude: float = 1.0
    cent_offset: float = 0.0

    def __post_init__(self):
        if (self.harmonic is None) == (self.frequency_hz is None):
            raise ValueError("set exactly one of harmonic or frequency_hz")
        if self.harmonic is not None and self.harmonic < 1:
            raise ValueError("harmonic numbers start at 1")
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")

    def resolve_hz(self, f0: float) -> float:
        base = self.frequency_hz if self.frequency_hz is not None else self.harmonic * f0
        return base * 2.0 ** (self.cent_offset / 1200.0)


@dataclass(frozen=True)
class Envelope:
    kind: str = "constant"  # constant | exponential
    time_constant_s: float = 0.5

    def __post_init__(self):
        if self.kind not in ("constant", "exponential"):
            raise ValueError(f"unknown envelope kind {self.kind!r}")
        if self.time_constant_s <= 0:
            raise ValueError("time constant must be positive")

    def values(self, t: np.ndarray) -> np.ndarray:
        if self.kind == "constant":
            return np.ones_like(t)
        return np.exp(-t / self.time_constant_s)


@dataclass(frozen=True)
class ComplexToneSpec:
    f0: float
    partials: tuple
    duration_s: float = 1.0
    envelope: Envelope = field(default_factory=Envelope)

    def __post_init__(self):
        if not self.partials:
            raise ValueError("need at least one partial")
        if self.f0 <= 0 or self.duration_s <= 0:
            raise ValueError("f0 and duration must be positive")
        object.__setattr__(self, "partials", tuple(self.partials))


@dataclass(frozen=True)
class Bass808Patch:
    """Decaying pseudo-sinusoid with a descending pitch glide.

    mode selects the harmonic-boost pattern, amount_db its gain. The glide
    starts glide_depth_cents above target_f0 and decays exponentially with
    glide_time_constant_s. decay_s is the note length; the amplitude
    envelope reaches -60 dB at t = decay_s. The base spectrum is a
    dominant fundamental with an overtone shelf (overtone_db at harmonic 2,
    then a power-law tail) - a model of the observable behaviour, not of
    any particular circuit.
    """

    target_f0: float
    mode: int = 1
    amount_db: float = 20.0
    glide_depth_cents: float = 100.0
    glide_time_constant_s: float = 0.05
    decay_s: float = 1.0
    n_harmonics: int = 12
    overtone_db: float = -16.0
    overtone_rolloff: float = 2.0

    def __post_init__(self):
        if not 1 <= self.mode <= 7:
            raise ValueError("mode must be in 1..7")
        if self.decay_s <= 0:
            raise ValueError("decay must be positive")
        if self.target_f0 < 20.0:
            raise ValueError("target_f0 must be at least 20 Hz")


@dataclass(frozen=True)
class WaveshaperSpec:
    """Polynomial transfer function y = mix*poly(drive*x) + (1-mix)*x."""

    coefficients: tuple  # ascending powers, constant term first
    drive: float = 1.0
    mix: float = 1.0

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if len(coeffs) < 2:
            raise ValueError("transfer polynomial must have degree >= 1")
        if not 0.0 <= self.mix <= 1.0:
            raise ValueError("mix must be in [0, 1]")
        object.__setattr__(self, "coefficients", coeffs)


def _limit_peak(x: np.ndarray) -> np.ndarray:
    peak = np.max(np.abs(x)) if x.size else 0.0
    if peak > PEAK_LIMIT:
        x = x * (PEAK_LIMIT / peak)
    return x


def synth_complex_tone(spec: ComplexToneSpec, sample_rate: int) -> Signal:
    """Sum of sinusoids at the spec's partial frequencies, enveloped."""
    nyquist = sample_rate / 2.0
    freqs = [p.resolve_hz(spec.f0) for p in spec.partials]
    bad = [f"{f:.1f} Hz (partial {i + 1})" for i, f in enumerate(freqs) if f >= nyquist]
    if bad:
        raise ValueError("partials at or above Nyquist: " + ", ".join(bad))
    n = int(round(spec.duration_s * sample_rate))
    t = np.arange(n) / sample_rate
    x = np.zeros(n)
    for p, f in zip(spec.partials, freqs):
        if p.amplitude > 0:
            x += p.amplitude * np.sin(2.0 * math.pi * f * t)
    x *= spec.envelope.values(t)
    return Signal(_limit_peak(x), sample_rate)


def resolve_boost_pattern(mode: int, n_harmonics: int,
                          patterns: dict | None = None) -> tuple:
    patterns = BOOST_PATTERNS if patterns is None else patterns
    entry = patterns[mode]
    if entry == "even":
        return tuple(n for n in range(2, n_harmonics + 1, 2))
    if entry == "odd":
        return tuple(n for n in range(3, n_harmonics + 1, 2))
    return tuple(n for n in entry if n <= n_harmonics)


def synth_808(patch: Bass808Patch, sample_rate: int,
              boost_patterns: dict | None = None) -> Signal:
    """Render the 808-style bass model.

    Instantaneous f0 starts glide_depth_cents above target and decays
    exponentially to it; harmonics ride the glide phase-continuously, with
    the mode's boost pattern applied as per-harmonic gain.
    """
    boosted = resolve_boost_pattern(patch.mode, patch.n_harmonics, boost_patterns)
    start_f0 = patch.target_f0 * 2.0 ** (patch.glide_depth_cents / 1200.0)
    if boosted and start_f0 * max(boosted) >= sample_rate / 4.0:
        raise ValueError(
            f"glide start puts boosted harmonic {max(boosted)} at "
            f"{start_f0 * max(boosted):.0f} Hz, at or above a quarter of the sample rate"
        )
    if start_f0 * patch.n_harmonics >= sample_rate / 2.0:
        raise ValueError(
            f"harmonic {patch.n_harmonics} starts at "
            f"{start_f0 * patch.n_harmonics:.0f} Hz, at or above Nyquist"
        )

    n = int(round(patch.decay_s * sample_rate))
    t = np.arange(n) / sample_rate
    inst_f0 = patch.target_f0 * 2.0 ** (
        patch.glide_depth_cents * np.exp(-t / patch.glide_time_constant_s) / 1200.0
    )
    phase = 2.0 * math.pi * np.concatenate(([0.0], np.cumsum(inst_f0[:-1]))) / sample_rate
    envelope = np.exp(-t * (math.log(1000.0) / patch.decay_s))

    boost_gain = 10.0 ** (patch.amount_db / 20.0)
    shelf = 10.0 ** (patch.overtone_db / 20.0)
    x = np.zeros(n)
    for h in range(1, patch.n_harmonics + 1):
        amp = 1.0 if h == 1 else shelf * (2.0 / h) ** patch.overtone_rolloff
        if h in boosted:
            amp *= boost_gain
        x += amp * np.sin(h * phase)
    x *= envelope
    return Signal(_limit_peak(x), sample_rate)


def waveshape(signal: Signal, spec: WaveshaperSpec) -> Signal:
    """Per-sample polynomial transfer, mixed with the dry signal."""
    x = signal.samples
    shaped = P.polyval(spec.drive * x, spec.coefficients)
    y = spec.mix * shaped + (1.0 - spec.mix) * x
    return Signal(y, signal.sample_rate)


def ring_modulate(a: Signal, b: Signal) -> Signal:
    """Per-sample product of two signals."""
    if a.sample_rate != b.sample_rate:
        raise ValueError(f"sample rates differ: {a.sample_rate} vs {b.sample_rate}")
    if len(a) != len(b):
        raise ValueError(f"lengths differ: {len(a)} vs {len(b)}")
    return Signal(a.samples * b.samples, a.sample_rate)


def unison(spec: ComplexToneSpec, voices: int, detune_spread_cents: float,
           sample_rate: int) -> Signal:
    """Sum of voices re-rendered at detunes evenly spaced across the spread,
    normalized by 1/voices."""
    if voices < 1:
        raise ValueError("need at least one voice")
    if voices == 1:
        detunes = np.array([0.0])
    else:
        detunes = np.linspace(-detune_spread_cents / 2.0, detune_spread_cents / 2.0, voices)
    acc = None
    for d in detunes:
        shifted = replace(
            spec,
            partials=tuple(replace(p, cent_offset=p.cent_offset + d) for p in spec.partials),
        )
        rendered = synth_complex_tone(shifted, sample_rate)
        acc = rendered.samples.copy() if acc is None else acc + rendered.samples
    return Signal(acc / voices, sample_rate)


def _screw_contour(times: np.ndarray, nodes_t: np.ndarray, nodes_c: np.ndarray) -> np.ndarray:
    """Exponential-rate preset: each segment relaxes toward its target with
    a time constant of one third of the segment length."""
    out = np.empty_like(times)
    current = nodes_c[0]
    for i in range(len(nodes_t) - 1):
        t0, t1 = nodes_t[i], nodes_t[i + 1]
        target = nodes_c[i + 1]
        tau = max((t1 - t0) / 3.0, 1e-9)
        sel = (times >= t0) & (times <= t1) if i == len(nodes_t) - 2 else \
              (times >= t0) & (times < t1)
        out[sel] = target + (current - target) * np.exp(-(times[sel] - t0) / tau)
        current = target + (current - target) * math.exp(-(t1 - t0) / tau)
    out[times < nodes_t[0]] = nodes_c[0]
    out[times > nodes_t[-1]] = current
    return out


def glide(spec: ComplexToneSpec, contour: list, kind: str = "bend",
          sample_rate: int = 48000) -> Signal:
    """Phase-continuous pitch trajectory applied to a complex tone.

    contour is a list of (time_s, cents) nodes. kind="bend" interpolates
    linearly in cents; kind="screw" uses the exponential-rate preset.
    """
    if kind not in ("bend", "screw"):
        raise ValueError(f"unknown contour kind {kind!r}")
    nodes = sorted((float(t), float(c)) for t, c in contour)
    if not nodes:
        raise ValueError("contour needs at least one node")
    nodes_t = np.array([t for t, _ in nodes])
    nodes_c = np.array([c for _, c in nodes])
    if np.max(np.abs(nodes_c)) > 2400.0:
        raise ValueError("contour exceeds +/-2400 cents")

    n = int(round(spec.duration_s * sample_rate))
    t = np.arange(n) / sample_rate
    if kind == "bend" or len(nodes) == 1:
        cents = np.interp(t, nodes_t, nodes_c)
    else:
        cents = _screw_contour(t, nodes_t, nodes_c)

    nyquist = sample_rate / 2.0
    max_ratio = 2.0 ** (np.max(cents) / 1200.0)
    base = [p.resolve_hz(spec.f0) for p in spec.partials]
    bad = [f"{f * max_ratio:.1f} Hz (partial {i + 1})"
           for i, f in enumerate(base) if f * max_ratio >= nyquist]
    if bad:
        raise ValueError("contour pushes partials to or above Nyquist: " + ", ".join(bad))

    ratio = 2.0 ** (cents / 1200.0)
    x = np.zeros(n)
    for p, f in zip(spec.partials, base):
        if p.amplitude <= 0:
            continue
        inst = f * ratio
        phase = 2.0 * math.pi * np.concatenate(([0.0], np.cumsum(inst[:-1]))) / sample_rate
        x += p.amplitude * np.sin(phase)
    x *= spec.envelope.values(t)
    return Signal(_limit_peak(x), sample_rate)


def boosted_partial_tone(
    f0: float,
    boosted: tuple,
    n_partials: int,
    boost_db: float = 20.0,
    contour: LoudnessContour | None = None,
    weighted_rolloff: float = 0.3,
    duration_s: float = 1.0,
    envelope: Envelope | None = None,
) -> ComplexToneSpec:
    """Harmonic tone whose loudness-weighted spectrum falls gently with
    harmonic number, with selected harmonics boosted by boost_db.

    Amplitudes are designed in the weighted domain (level of harmonic n is
    -20*weighted_rolloff*log10(n) dB re the fundamental, plus the boost),
    then divided by the contour gain so the analysis sees exactly that
    profile. With contour=None the design is in the raw domain.
    """
    partials = []
    for h in range(1, n_partials + 1):
        level_db = -20.0 * weighted_rolloff * math.log10(h)
        if h in boosted:
            level_db += boost_db
        amp = 10.0 ** (level_db / 20.0)
        if contour is not None:
            amp /= float(contour.gain(h * f0))
        partials.append(Partial(harmonic=h, amplitude=amp))
    scale = 1.0 / partials[0].amplitude
    partials = [replace(p, amplitude=p.amplitude * scale) for p in partials]
    return ComplexToneSpec(
        f0=f0,
        partials=tuple(partials),
        duration_s=duration_s,
        envelope=envelope or Envelope(),
    )
