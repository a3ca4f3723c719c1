"""Compression and recovery of low-CP-rank tensors with subgaussian measurements."""

from .conditioning import (
    KappaReport,
    NormalizedCpForm,
    generate_conditioned_factor,
    generate_conditioned_model,
    kappa,
    normalize,
)
from .recovery import RecoveryConfig, RecoveryReport, objective, recover, residual_jacobian
from .sensing import SensingOperator, adjoint_apply, apply, create_operator
from .tensor_core import (
    CpModel,
    DimensionMismatch,
    frobenius_norm,
    khatri_rao,
    khatri_rao_chain,
    mse,
    reconstruct,
    sigma_min,
    spectral_norm,
    vec,
)
from .theory_bounds import (
    BoundInputs,
    RipProbeResult,
    covering_log_cardinality,
    prop2_measurement_bound,
    rip_probe,
    theorem1_measurement_bound,
)

__version__ = "0.1.0"

__all__ = [
    "BoundInputs", "CpModel", "DimensionMismatch", "KappaReport",
    "NormalizedCpForm", "RecoveryConfig", "RecoveryReport", "RipProbeResult",
    "SensingOperator", "adjoint_apply", "apply", "covering_log_cardinality",
    "create_operator", "frobenius_norm", "generate_conditioned_factor",
    "generate_conditioned_model", "kappa", "khatri_rao", "khatri_rao_chain",
    "mse", "normalize", "objective", "prop2_measurement_bound", "reconstruct",
    "recover", "residual_jacobian", "rip_probe", "sigma_min", "spectral_norm",
    "theorem1_measurement_bound", "vec",
]
