"""Deviation-from-harmonicity metrics and salient-partial detection.

The stretch coefficient uses the string-stiffness model
f_n = n * f0 * sqrt(1 + B * n^2). For irregular inharmonicity the
per-partial deviation vector is the primary output; B is descriptive.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .loudness import LoudnessContour
from .pitch import f0_gcd
from .spectral import ComplexToneSnapshot

WIDE_GCD_TOLERANCE_CENTS = 50.0
HARMONIC_MAX_DEV_CENTS = 3.0
QUASI_HARMONIC_MAX_DEV_CENTS = 10.0
HARMONIC_ASSIGN_LIMIT_CENTS = 50.0
DEFAULT_SALIENCE_MARGIN_DB = 0.0


@dataclass(frozen=True)
class InharmonicityReport:
    f0_ref: float
    harmonic_numbers: np.ndarray
    deviations_cents: np.ndarray  # from nearest integer multiple of f0_ref
    stretch_b: float | None  # None when under-determined (< 3 partials)
    stretch_residual_cents: float | None  # RMS residual of the stretch fit
    classification: str  # harmonic | quasi_harmonic | inharmonic
    harmonic_threshold_cents: float = HARMONIC_MAX_DEV_CENTS
    quasi_harmonic_threshold_cents: float = QUASI_HARMONIC_MAX_DEV_CENTS

    @property
    def max_abs_deviation_cents(self) -> float:
        return float(np.max(np.abs(self.deviations_cents)))


@dataclass(frozen=True)
class SalienceReport:
    fundamental_hz: float
    harmonic_numbers: np.ndarray
    weighted_magnitudes_db: np.ndarray  # relative to the fundamental's
    salient: tuple  # overtone indices at/above the fundamental + margin
    carrier_runs: tuple  # runs of >= 3 consecutive salient indices
    carrier_center_hz: float | None

    @property
    def has_carrier(self) -> bool:
        return len(self.carrier_runs) > 0


def _classify(max_dev: float, harmonic_max: float, quasi_max: float) -> str:
    if max_dev <= harmonic_max:
        return "harmonic"
    if max_dev <= quasi_max:
        return "quasi_harmonic"
    return "inharmonic"


def inharmonicity(
    snapshot: ComplexToneSnapshot,
    wide_tolerance_cents: float = WIDE_GCD_TOLERANCE_CENTS,
    harmonic_max_dev_cents: float = HARMONIC_MAX_DEV_CENTS,
    quasi_harmonic_max_dev_cents: float = QUASI_HARMONIC_MAX_DEV_CENTS,
) -> InharmonicityReport:
    """Quantify deviation from the least-deviating harmonic series.

    Requires >= 2 partials; with exactly 2 only deviations are reported
    (the stretch fit is under-determined).
    """
    if len(snapshot) < 2:
        raise ValueError("insufficient partials")
    partials = snapshot.frequencies
    f0_ref = f0_gcd(snapshot, tolerance_cents=wide_tolerance_cents)
    if f0_ref is None:
        # fall back to the lowest partial as the series reference
        f0_ref = float(partials[0])
    n = np.maximum(1, np.round(partials / f0_ref))
    deviations = 1200.0 * np.log2(partials / (n * f0_ref))

    stretch_b = None
    residual = None
    if len(partials) >= 3:
        def model_residual(params):
            f0, b = params
            pred = n * f0 * np.sqrt(np.maximum(1.0 + b * n**2, 1e-12))
            return 1200.0 * np.log2(partials / pred)

        fit = scipy.optimize.least_squares(
            model_residual, x0=[f0_ref, 0.0], method="lm", max_nfev=200
        )
        stretch_b = float(fit.x[1])
        residual = float(np.sqrt(np.mean(fit.fun**2)))

    classification = _classify(
        float(np.max(np.abs(deviations))), harmonic_max_dev_cents, quasi_harmonic_max_dev_cents
    )
    return InharmonicityReport(
        f0_ref=float(f0_ref),
        harmonic_numbers=n.astype(int),
        deviations_cents=deviations,
        stretch_b=stretch_b,
        stretch_residual_cents=residual,
        classification=classification,
        harmonic_threshold_cents=harmonic_max_dev_cents,
        quasi_harmonic_threshold_cents=quasi_harmonic_max_dev_cents,
    )


def _harmonic_indices(snapshot: ComplexToneSnapshot) -> np.ndarray:
    """Harmonic numbers relative to the lowest partial (nearest integer)."""
    return np.maximum(1, np.round(snapshot.frequencies / snapshot.frequencies[0])).astype(int)


def detect_salient_partials(
    snapshot: ComplexToneSnapshot,
    contour: LoudnessContour | None = None,
    margin_db: float = DEFAULT_SALIENCE_MARGIN_DB,
) -> SalienceReport:
    """Overtones whose loudness-weighted magnitude rivals the fundamental's.

    The fundamental is the lowest partial in the snapshot. An overtone is
    salient when its weighted magnitude is at least the fundamental's plus
    margin_db. Pass contour=None when the snapshot magnitudes are already
    weighted (or weighting is disabled). Runs of >= 3 consecutive salient
    harmonic numbers are flagged as a carrier.
    """
    if len(snapshot) == 0:
        raise ValueError("snapshot has no partials")
    freqs = snapshot.frequencies
    mags = snapshot.magnitudes.copy()
    if contour is not None:
        mags = mags * contour.gain(freqs)
    numbers = _harmonic_indices(snapshot)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(np.maximum(mags, 1e-300))
    rel_db = db - db[0]

    salient = []
    for k in range(1, len(freqs)):
        if rel_db[k] >= margin_db and numbers[k] not in salient:
            salient.append(int(numbers[k]))
    salient.sort()

    runs = []
    start = 0
    for i in range(1, len(salient) + 1):
        if i == len(salient) or salient[i] != salient[i - 1] + 1:
            if i - start >= 3:
                runs.append(tuple(salient[start:i]))
            start = i

    center = None
    if runs:
        # center of the longest run, weighted by partial magnitude
        run = max(runs, key=len)
        sel = np.isin(numbers, run)
        center = float(np.sum(freqs[sel] * mags[sel]) / np.sum(mags[sel]))

    return SalienceReport(
        fundamental_hz=float(freqs[0]),
        harmonic_numbers=numbers,
        weighted_magnitudes_db=rel_db,
        salient=tuple(salient),
        carrier_runs=tuple(runs),
        carrier_center_hz=center,
    )


def odd_harmonic_profile(snapshot: ComplexToneSnapshot) -> tuple[float, bool | None]:
    """Ratio of odd- to even-harmonic energy, and whether odd dominates.

    Harmonic numbers are assigned from the least-deviating series; if any
    partial sits further than 50 cents from its assigned position the flag
    is None (assignment unreliable) and the ratio uses nearest integers.
    Returns (ratio, odd_dominant); ratio is inf when even energy is zero.
    """
    if len(snapshot) < 4:
        raise ValueError("need at least 4 partials with assigned harmonic numbers")
    f0_ref = f0_gcd(snapshot, tolerance_cents=WIDE_GCD_TOLERANCE_CENTS)
    assignable = True
    if f0_ref is None:
        f0_ref = float(snapshot.frequencies[0])
        assignable = False
    n = np.maximum(1, np.round(snapshot.frequencies / f0_ref))
    dev = np.abs(1200.0 * np.log2(snapshot.frequencies / (n * f0_ref)))
    if np.max(dev) > HARMONIC_ASSIGN_LIMIT_CENTS:
        assignable = False
    if not assignable:
        warnings.warn(
            "harmonic numbers unassignable within tolerance; "
            "odd/even ratio uses nearest-integer assignment",
            RuntimeWarning,
            stacklevel=2,
        )
    energy = snapshot.magnitudes**2
    odd = float(np.sum(energy[n.astype(int) % 2 == 1]))
    even = float(np.sum(energy[n.astype(int) % 2 == 0]))
    ratio = float("inf") if even == 0 else odd / even
    odd_dominant = (even < 0.1 * odd) if assignable else None
    return ratio, odd_dominant
