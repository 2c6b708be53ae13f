"""Coherent-state quantum fingerprinting: encoding, detection model and referee."""

from .bits import BitString, flip_fraction, from_file, hamming_distance, random_bits
from .information import (
    InfoReport,
    advantage_report,
    best_known_classical,
    classical_limit,
    quantum_info_bound,
)
from .optics import PAPER_LOSSES_DB, SystemParams, expected_counts, paper_params
from .referee import (
    DecisionRule,
    DegenerateConfigError,
    Verdict,
    choose_threshold,
    decide,
    poisson_cdf,
    poisson_sf,
    protocol_error_bound,
)
from .simulate import (
    CaseKind,
    ExperimentConfig,
    RunSummary,
    SamplingMode,
    TrialOutcome,
    compare_files,
    run_experiment,
    run_trial,
    sample_counts,
    sweep,
)
from .toeplitz import (
    ToeplitzCode,
    codeword_length,
    codeword_weight,
    encode,
    encode_dense,
    encode_streaming,
    estimate_min_distance,
    new_code,
)

__version__ = "0.1.0"
