"""Analysis configuration.

Defaults are sourced from the module that documents each knob, so the
config echo in reports always matches the library defaults. Config files
are flat JSON objects whose keys mirror the field names; CLI flags
override file values.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

from . import inharmonicity, modal, pitch, signal, spectral
from .errors import InputError


@dataclass(frozen=True)
class AnalysisConfig:
    frame_length: int = signal.DEFAULT_FRAME_LENGTH
    hop: int = signal.DEFAULT_HOP
    window: str = signal.DEFAULT_WINDOW
    weighting: bool = True
    peak_threshold_db: float = spectral.DEFAULT_PEAK_THRESHOLD_DB
    peak_prominence_db: float = spectral.DEFAULT_PEAK_PROMINENCE_DB
    max_jump_cents: float = spectral.DEFAULT_MAX_JUMP_CENTS
    min_track_duration_s: float = spectral.DEFAULT_MIN_TRACK_DURATION_S
    gcd_tolerance_cents: float = pitch.DEFAULT_GCD_TOLERANCE_CENTS
    min_f0_hz: float = pitch.DEFAULT_MIN_F0
    autocorr_fmin_hz: float = pitch.DEFAULT_AUTOCORR_FMIN
    autocorr_fmax_hz: float = pitch.DEFAULT_AUTOCORR_FMAX
    salience_margin_db: float = inharmonicity.DEFAULT_SALIENCE_MARGIN_DB
    inharmonicity_tolerance_cents: float = inharmonicity.WIDE_GCD_TOLERANCE_CENTS
    harmonic_max_dev_cents: float = inharmonicity.HARMONIC_MAX_DEV_CENTS
    quasi_harmonic_max_dev_cents: float = inharmonicity.QUASI_HARMONIC_MAX_DEV_CENTS
    histogram_bin_cents: float = modal.DEFAULT_HISTOGRAM_BIN_CENTS
    kde_bandwidth_cents: float = modal.DEFAULT_KDE_BANDWIDTH_CENTS
    pole_min_mass: float = modal.DEFAULT_MIN_POLE_MASS
    pole_assign_radius_cents: float = modal.POLE_ASSIGN_RADIUS_CENTS
    fold_method: str = "gcd_f0"
    weight_by_salience: bool = True

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **overrides) -> "AnalysisConfig":
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **overrides)


def load_config(path) -> AnalysisConfig:
    """Read a flat JSON config file; unknown keys are an error."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid config JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError(f"{path}: config must be a flat JSON object")
    known = {f.name for f in dataclasses.fields(AnalysisConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise InputError(f"{path}: unknown config keys: {', '.join(unknown)}")
    return AnalysisConfig().replace(**data)
