"""Optimal data-driven singular value shrinkage for low-rank matrix denoising."""
__version__ = "0.1.0"

from .asymptotics import (
    AsymptoticPrediction,
    effective_rank,
    limiting_mse,
    phase_transition_p,
    predict_spike,
)
from .dtransform import (
    MpParams,
    NoiseSpectrum,
    PoleProximityError,
    empirical_d,
    empirical_d_derivative,
    mp_d_transform,
    mp_d_transform_derivative,
)
from .linalg import (
    SignalSpec,
    SvdFactors,
    ValidationError,
    frobenius_norm_sq,
    sample_gaussian_matrix,
    sample_mask,
    sample_orthonormal_frame,
    svd,
)
from .oracle import OracleDiagonal, exact_squared_error, oracle_diagonal, oracle_weights, rank_regularized_weights
from .shrinkage import DenoiseReport, ShrinkageWeights, eym_weights, optshrink, reconstruct, svt_weights

__all__ = [
    "AsymptoticPrediction", "DenoiseReport", "MpParams", "NoiseSpectrum", "OracleDiagonal",
    "PoleProximityError", "ShrinkageWeights", "SignalSpec", "SvdFactors", "ValidationError",
    "effective_rank", "empirical_d", "empirical_d_derivative", "eym_weights", "exact_squared_error",
    "frobenius_norm_sq", "limiting_mse", "mp_d_transform", "mp_d_transform_derivative", "optshrink",
    "oracle_diagonal", "oracle_weights", "phase_transition_p", "predict_spike", "rank_regularized_weights",
    "reconstruct", "sample_gaussian_matrix", "sample_mask", "sample_orthonormal_frame", "svd", "svt_weights",
]
