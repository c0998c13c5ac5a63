"""Equal-loudness weighting of spectra.

Gains derive from the ISO 226 50-phon contour shipped as a data file, and
are normalized so the gain at 1 kHz is exactly 1. Interpolation between
anchors is monotone piecewise cubic (PCHIP) in log-frequency / dB space.
Frequencies outside the anchored range are clamped to the nearest anchor.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import InputError

REFERENCE_HZ = 1000.0


@dataclass(frozen=True)
class LoudnessContour:
    """Tabulated equal-loudness contour: SPL (dB) vs frequency anchors."""

    frequencies: np.ndarray
    levels_db: np.ndarray
    phon_level: float = 50.0

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=np.float64)
        levels = np.asarray(self.levels_db, dtype=np.float64)
        if freqs.size < 2:
            raise ValueError("degenerate contour: need at least 2 anchor points")
        if freqs.shape != levels.shape:
            raise ValueError("frequencies and levels must have the same length")
        if np.any(np.diff(freqs) <= 0):
            raise ValueError("contour frequencies must be strictly increasing")
        freqs.setflags(write=False)
        levels.setflags(write=False)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "levels_db", levels)

    def level_db(self, frequencies) -> np.ndarray:
        """Interpolated contour SPL at the given frequencies (clamped)."""
        f = np.clip(np.asarray(frequencies, dtype=np.float64),
                    self.frequencies[0], self.frequencies[-1])
        interp = PchipInterpolator(np.log(self.frequencies), self.levels_db)
        return interp(np.log(f))

    def gain_db(self, frequencies) -> np.ndarray:
        """Weighting gain in dB: contour level at 1 kHz minus level at f."""
        ref = self.level_db(REFERENCE_HZ)
        return np.asarray(ref - self.level_db(frequencies), dtype=np.float64)

    def gain(self, frequencies) -> np.ndarray:
        """Linear magnitude gain, exactly 1 at 1 kHz."""
        return 10.0 ** (self.gain_db(frequencies) / 20.0)


def load_contour(path) -> LoudnessContour:
    """Read a contour from a text table of "frequency_hz level_db" rows.

    Lines starting with '#' are comments.
    """
    freqs, levels = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise InputError(f"{path}:{lineno}: expected 'frequency_hz level_db'")
            freqs.append(float(parts[0]))
            levels.append(float(parts[1]))
    return LoudnessContour(np.array(freqs), np.array(levels))


def default_contour() -> LoudnessContour:
    """The packaged ISO 226 50-phon contour."""
    ref = resources.files("pitchlab.data").joinpath("iso226_50phon.txt")
    with resources.as_file(ref) as path:
        return load_contour(path)


def weight_spectrum(frequencies, magnitudes, contour: LoudnessContour) -> np.ndarray:
    """Apply the contour's magnitude gain to each spectral bin."""
    magnitudes = np.asarray(magnitudes, dtype=np.float64)
    return magnitudes * contour.gain(frequencies)
