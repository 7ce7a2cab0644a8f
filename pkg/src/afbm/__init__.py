"""Analytic fractional Brownian motion: kernels, exact sampling, signatures,
Chen-series solution of linear rough differential equations, and moment
verification."""

from .exceptions import (
    AfbmError,
    CapExceededError,
    DegenerateFitError,
    DimensionMismatchError,
    DomainError,
    FactorizationError,
    InsufficientSamplesError,
    IntervalMismatchError,
    QuadratureError,
    SingularInputError,
)
from .kernels import (
    ContourPath,
    HurstIndex,
    build_contour,
    c_alpha,
    cov_halfplane,
    cov_realline,
    cov_Y,
    cross_cov_re_im,
    deriv_cov_halfplane,
    deriv_cov_Y,
    var_Y_increment,
)
from .linsolve import (
    ChenSeriesSolver,
    LinearFields,
    SeriesResult,
    SolveConfig,
    chen_series_solve,
    euler_solve,
    euler_step,
    ode_oracle,
    random_fields,
    word_matrix,
)
from .moments import (
    FactorialDecayFit,
    HolderMomentFit,
    MomentReport,
    PairingSet,
    admissible_permutations,
    factorial_decay_fit,
    holder_moment_fit,
    mc_variance,
    wick_variance_gamma,
    wick_variance_Y,
)
from .sampler import AfbmSampler, ComplexGrid, SamplePaths, YSampler, sample_afbm, sample_Y
from .signature import (
    IteratedIntegrals,
    SignatureTransformer,
    chen_concat,
    check_geometricity,
    check_multiplicativity,
    holder_norm,
    path_signature,
    segment_signature,
    shuffle_words,
)

__version__ = "0.1.0"

__all__ = [
    "AfbmError",
    "AfbmSampler",
    "CapExceededError",
    "ChenSeriesSolver",
    "ComplexGrid",
    "ContourPath",
    "DegenerateFitError",
    "DimensionMismatchError",
    "DomainError",
    "FactorialDecayFit",
    "FactorizationError",
    "HolderMomentFit",
    "HurstIndex",
    "InsufficientSamplesError",
    "IntervalMismatchError",
    "IteratedIntegrals",
    "LinearFields",
    "MomentReport",
    "PairingSet",
    "QuadratureError",
    "SamplePaths",
    "SeriesResult",
    "SignatureTransformer",
    "SingularInputError",
    "SolveConfig",
    "YSampler",
    "admissible_permutations",
    "build_contour",
    "c_alpha",
    "check_geometricity",
    "check_multiplicativity",
    "chen_concat",
    "chen_series_solve",
    "cov_Y",
    "cov_halfplane",
    "cov_realline",
    "cross_cov_re_im",
    "deriv_cov_Y",
    "deriv_cov_halfplane",
    "euler_solve",
    "euler_step",
    "factorial_decay_fit",
    "holder_moment_fit",
    "holder_norm",
    "mc_variance",
    "ode_oracle",
    "path_signature",
    "random_fields",
    "sample_Y",
    "sample_afbm",
    "segment_signature",
    "shuffle_words",
    "var_Y_increment",
    "wick_variance_Y",
    "wick_variance_gamma",
    "word_matrix",
]
