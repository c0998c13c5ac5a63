"""Audio containers and frame decomposition.

A `Signal` is immutable mono audio; `frame` cuts it into (optionally
windowed) analysis frames. The last frame is always zero-padded so no
samples are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.signal

DEFAULT_FRAME_LENGTH = 4096
DEFAULT_HOP = 1024
DEFAULT_WINDOW = "hann"

WINDOW_NAMES = ("rectangular", "hann")


@dataclass(frozen=True)
class Signal:
    """Mono sampled audio. Samples are dimensionless, nominally in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional (mono)")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite (no NaN/Inf)")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def _window_values(window: str, length: int) -> np.ndarray:
    if window == "rectangular":
        return np.ones(length)
    if window == "hann":
        return scipy.signal.get_window("hann", length, fftbins=True)
    raise ValueError(f"unknown window {window!r}; expected one of {WINDOW_NAMES}")


def frame_count(n_samples: int, frame_length: int, hop: int) -> int:
    """Frames needed to cover `n_samples`, final frame zero-padded."""
    if n_samples <= frame_length:
        return 1
    return int(np.ceil((n_samples - frame_length) / hop)) + 1


@dataclass(frozen=True)
class FrameSequence:
    """Ordered frames cut from a Signal, materialized lazily."""

    signal: Signal
    frame_length: int
    hop: int
    window: str
    count: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "count", frame_count(len(self.signal), self.frame_length, self.hop)
        )

    @property
    def times(self) -> np.ndarray:
        """Frame-center times in seconds."""
        starts = np.arange(self.count) * self.hop
        return (starts + self.frame_length / 2.0) / self.signal.sample_rate

    def raw(self) -> np.ndarray:
        """(count, frame_length) array of unwindowed frames, zero-padded."""
        x = self.signal.samples
        out = np.zeros((self.count, self.frame_length))
        for i in range(self.count):
            chunk = x[i * self.hop : i * self.hop + self.frame_length]
            out[i, : len(chunk)] = chunk
        return out

    def windowed(self) -> np.ndarray:
        return self.raw() * _window_values(self.window, self.frame_length)


def frame(
    signal: Signal,
    frame_length: int = DEFAULT_FRAME_LENGTH,
    hop: int = DEFAULT_HOP,
    window: str = DEFAULT_WINDOW,
) -> FrameSequence:
    if len(signal) == 0:
        raise ValueError("empty input")
    if hop <= 0 or hop > frame_length:
        raise ValueError(f"invalid hop {hop}: need 0 < hop <= frame_length")
    if frame_length <= 0:
        raise ValueError("frame_length must be positive")
    _window_values(window, frame_length)  # validate the name early
    return FrameSequence(signal, frame_length, hop, window)


def rms_envelope(signal: Signal, frame_length: int, hop: int) -> np.ndarray:
    """Per-frame root-mean-square level (rectangular frames)."""
    frames = frame(signal, frame_length, hop, window="rectangular").raw()
    return np.sqrt(np.mean(frames**2, axis=1))
