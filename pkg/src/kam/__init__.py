"""Kubo-Ando means on matrix algebras and a verifier for maps preserving
the norm of a symmetric mean."""

__version__ = "0.1.0"

from kam.errors import (
    AffineMeanError,
    ConditioningError,
    ConeError,
    DiagnosticError,
    DomainError,
    HypothesisError,
    KamError,
    SchemaError,
)
from kam.hermitian import (
    DEFAULT_POLICY,
    Cone,
    Projection,
    SpectralDecomposition,
    TolerancePolicy,
    cone_membership,
    eig_hermitian,
    hermitian,
    loewner_leq,
    max_lambda_compression,
    operator_norm,
    range_projection,
    spectral_apply,
    spectral_projection_below,
)
from kam.functions import (
    DiscreteMeasure,
    RepresentingFunction,
    builtin_catalog,
    eval_from_measure,
    h_decomposition,
    is_symmetric,
    transpose,
)
from kam.means import (
    EpsLadder,
    MeanDescriptor,
    get_mean,
    mean_psd_limit,
    mean_quadrature,
    mean_spectral,
    norm_mean_projection,
    norm_of_mean,
    parallel_sum,
)

__all__ = [
    "__version__",
    "AffineMeanError",
    "ConditioningError",
    "ConeError",
    "DiagnosticError",
    "DomainError",
    "HypothesisError",
    "KamError",
    "SchemaError",
    "DEFAULT_POLICY",
    "Cone",
    "Projection",
    "SpectralDecomposition",
    "TolerancePolicy",
    "cone_membership",
    "eig_hermitian",
    "hermitian",
    "loewner_leq",
    "max_lambda_compression",
    "operator_norm",
    "range_projection",
    "spectral_apply",
    "spectral_projection_below",
    "DiscreteMeasure",
    "RepresentingFunction",
    "builtin_catalog",
    "eval_from_measure",
    "h_decomposition",
    "is_symmetric",
    "transpose",
    "EpsLadder",
    "MeanDescriptor",
    "get_mean",
    "mean_psd_limit",
    "mean_quadrature",
    "mean_spectral",
    "norm_mean_projection",
    "norm_of_mean",
    "parallel_sum",
]
