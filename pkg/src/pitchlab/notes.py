"""Note names, frequencies, and cent conversions.

All conversions are relative to an explicit reference; the equal-tempered
grid is anchored at A4 = 440 Hz.
"""

from __future__ import annotations

import math
import re

from .errors import InputError

A4_HZ = 440.0

# Flat spellings, matching common usage for the modes this toolkit reports.
PITCH_CLASS_NAMES = ("C", "Db", "D", "Eb", "E", "F", "Gb", "G", "Ab", "A", "Bb", "B")

_NOTE_RE = re.compile(
    r"^\s*([A-Ga-g])\s*([#b♯♭]?)\s*(-?\d{1,2})"
    r"\s*(?:([+-]\s*\d+(?:\.\d+)?)\s*(?:c|cents?)?)?\s*$"
)
_BASE_SEMITONE = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}


def cents_between(f: float, reference: float) -> float:
    """Signed interval from `reference` to `f` in cents."""
    return 1200.0 * math.log2(f / reference)


def shift_by_cents(f: float, cents: float) -> float:
    return f * 2.0 ** (cents / 1200.0)


def note_to_hz(name: str) -> float:
    """Parse scientific pitch notation with an optional cent offset.

    Accepts forms like "A4", "D#1", "Eb3", "E2+41c", "B1-12.5c".
    """
    m = _NOTE_RE.match(name)
    if m is None:
        raise InputError(f"cannot parse note name {name!r}")
    letter, accidental, octave, cents = m.groups()
    semitone = _BASE_SEMITONE[letter.upper()]
    if accidental in ("#", "♯"):
        semitone += 1
    elif accidental in ("b", "♭"):
        semitone -= 1
    midi = 12 * (int(octave) + 1) + semitone
    cent_offset = float(cents.replace(" ", "")) if cents else 0.0
    return A4_HZ * 2.0 ** ((midi - 69) / 12.0 + cent_offset / 1200.0)


def hz_to_note_name(f: float) -> str:
    """Nearest note in scientific pitch notation, with the cent offset."""
    if f <= 0:
        raise ValueError("frequency must be positive")
    midi_float = 69.0 + 12.0 * math.log2(f / A4_HZ)
    midi = round(midi_float)
    cents = (midi_float - midi) * 100.0
    name = PITCH_CLASS_NAMES[midi % 12]
    octave = midi // 12 - 1
    if abs(cents) < 0.5:
        return f"{name}{octave}"
    return f"{name}{octave}{cents:+.0f}c"


def parse_frequency(text: str) -> float:
    """Parse either a frequency in Hz ("61.7") or a note name ("B1")."""
    try:
        value = float(text)
    except ValueError:
        return note_to_hz(text)
    if value <= 0:
        raise InputError(f"frequency must be positive, got {text!r}")
    return value
