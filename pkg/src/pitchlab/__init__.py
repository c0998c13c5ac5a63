"""pitchlab: analysis and synthesis of pitch-uncertainty phenomena.

Analysis side: spectral transforms, partial tracking, spectral vs temporal
pitch estimates, inharmonicity and salient-partial metrics, pole/mode/
tuning inference. Synthesis side: deterministic generators (complex tones,
808-style bass, waveshaping, ring modulation, unison, glides) that double
as ground-truth oracles for the analyzers.
"""

__version__ = "0.1.0"

from .beatmap import BeatMap, compute_beat_map, find_beat_minima, pure_ratio_cents
from .config import AnalysisConfig, load_config
from .errors import InputError, UsageError
from .inharmonicity import (
    InharmonicityReport,
    SalienceReport,
    detect_salient_partials,
    inharmonicity,
    odd_harmonic_profile,
)
from .loudness import LoudnessContour, default_contour, load_contour, weight_spectrum
from .modal import (
    Degree,
    ModeEstimate,
    PoleDistribution,
    Segment,
    estimate_poles,
    estimate_tuning_offset,
    fold_to_pitch_classes,
    infer_mode,
)
from .notes import hz_to_note_name, note_to_hz, parse_frequency
from .pitch import (
    PitchFrame,
    PitchTrack,
    autocorrelation_pitch,
    autocorrelation_track,
    f0_gcd,
    gcd_f0_track,
    lowest_partial_track,
    partial_spacing_pitch,
    partial_spacing_track,
    pitch_discrepancy,
)
from .report import StemSet, analyze, analyze_signal, emit_plot_data, report_to_json
from .signal import FrameSequence, Signal, frame, frame_count, rms_envelope
from .spectral import (
    ComplexToneSnapshot,
    PartialTrack,
    Spectrogram,
    frame_snapshots,
    pick_peaks,
    stft,
    track_partials,
)
from .synth import (
    Bass808Patch,
    ComplexToneSpec,
    Envelope,
    Partial,
    WaveshaperSpec,
    boosted_partial_tone,
    glide,
    ring_modulate,
    synth_808,
    synth_complex_tone,
    unison,
    waveshape,
)
from .wavio import WavFormatError, load_wav, save_wav
