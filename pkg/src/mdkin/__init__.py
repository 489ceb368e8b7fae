"""Micro-Doppler kinematics: FMCW slow-time simulation, spectrograms,
velocity envelopes, sign kinematics and kinematic sifting of synthetic data."""

from mdkin.errors import (
    CalibrationError,
    ConfigurationError,
    DomainError,
    MdkinError,
    ParseError,
    ShapeError,
)
from mdkin.radar_sim import (
    IQSeries,
    RadarConfig,
    ScattererTrajectory,
    SyntheticSign,
    SyntheticSignSpec,
    beat_to_range,
    doppler_shift,
    range_resolution,
    simulate_returns,
    synth_sign_trajectory,
    transmit_chirp_phase,
    velocity_resolution,
)
from mdkin.tf_analysis import Spectrogram, column_energy, stft_spectrogram, total_energy
from mdkin.envelopes import EnvelopePair, envelope_to_velocity, extract_envelopes
from mdkin.dtw import WarpResult, dtw_distance, pairwise_dtw_stats
from mdkin.kinematics import (
    ClassStats,
    KinematicProfile,
    PeakConfig,
    average_hand_speed,
    calibrate_handedness_threshold,
    classify_handedness,
    corpus_kinematic_stats,
    count_strokes,
)
from mdkin.sifter import (
    AnalysisConfig,
    Sample,
    SignLexeme,
    SiftConfig,
    SiftReport,
    SiftVerdict,
    analyze_sample,
    rule_energy,
    rule_envelope,
    rule_strokes,
    sift_corpus,
)

__version__ = "0.1.0"
