"""Cloning one photon of an entangled pair and looking at the result.

Two independent engines: closed-form generating functions with truncated
power-series arithmetic (:mod:`macroqubit.cloners`, :mod:`macroqubit.detection`,
:mod:`macroqubit.micro_micro`, :mod:`macroqubit.micro_macro`) and a brute-force
truncated Fock-space simulator (:mod:`macroqubit.oracle`) used to check them.
"""

__version__ = "0.1.0"

from .cloners import ClonerSpec, RestrictedGen, fidelity, mean_total_photons, photon_numbers, restricted_gen
from .detection import EYE, AnalyzerOutcome, DetectorSpec, analyzer_probs, see_probability
from .errors import (
    ContractViolation,
    InvalidArgument,
    MacroQubitError,
    NumericError,
    SeriesDomainError,
    TruncationError,
)
from .micro_macro import WitnessPoint, trace_threshold_curve, witness_loss_before, witness_phase_covariant, witness_universal
from .micro_micro import RestrictedOp, VisibilityPoint, chsh_assess, restricted_povm, sample_events, visibility
from .series import BiSeries, UniSeries

__all__ = [
    "__version__",
    "ClonerSpec",
    "RestrictedGen",
    "fidelity",
    "mean_total_photons",
    "photon_numbers",
    "restricted_gen",
    "EYE",
    "AnalyzerOutcome",
    "DetectorSpec",
    "analyzer_probs",
    "see_probability",
    "ContractViolation",
    "InvalidArgument",
    "MacroQubitError",
    "NumericError",
    "SeriesDomainError",
    "TruncationError",
    "WitnessPoint",
    "trace_threshold_curve",
    "witness_loss_before",
    "witness_phase_covariant",
    "witness_universal",
    "RestrictedOp",
    "VisibilityPoint",
    "chsh_assess",
    "restricted_povm",
    "sample_events",
    "visibility",
    "BiSeries",
    "UniSeries",
]
