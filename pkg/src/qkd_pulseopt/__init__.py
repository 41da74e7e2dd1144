"""Mode-mismatch analysis and transmit pulse optimization for Gaussian-modulated CV-QKD."""

from .mode_overlap import OverlapCoefficients, isi_summary, mode_overlap
from .optimizers import (
    OptimizationTrace,
    OptimizerConfig,
    objective,
    optimize,
    optimize_gradient,
    optimize_reinforce,
)
from .pulse_shaping import TapVector, frequency_response, normalize_energy, rrc_taps
from .security_rate import (
    LinkParams,
    SkrReport,
    channel_transmittance,
    excess_noise,
    g,
    key_spectral_efficiency,
    secret_key_rate,
    symplectic_eigenvalues,
    zero_mismatch_bound,
)

__version__ = "0.1.0"

__all__ = [
    "LinkParams",
    "OptimizationTrace",
    "OptimizerConfig",
    "OverlapCoefficients",
    "SkrReport",
    "TapVector",
    "channel_transmittance",
    "excess_noise",
    "frequency_response",
    "g",
    "isi_summary",
    "key_spectral_efficiency",
    "mode_overlap",
    "normalize_energy",
    "objective",
    "optimize",
    "optimize_gradient",
    "optimize_reinforce",
    "rrc_taps",
    "secret_key_rate",
    "symplectic_eigenvalues",
    "zero_mismatch_bound",
]
