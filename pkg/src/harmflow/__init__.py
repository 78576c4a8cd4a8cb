"""harmflow: gradient-flow verification of the level-set curvature identity.

For a harmonic field u with nonvanishing gradient, the norm of the gradient
along a unit-speed flow line of N = grad u/|grad u| changes by
exp((n-1) * integral of the level-set mean curvature H over arc length).
This package provides exactly differentiable test fields, level-set
geometry, an RK4 flow tracer, and verification/convergence tooling around
that identity, plus a CLI (``harmflow``).
"""

from ._kernels import available_backends, backend_name
from .diffgeo import (
    LevelSetFrame,
    default_eps_grad,
    frame_at,
    mean_curvature,
    mean_curvature_by_averaging,
    mean_curvature_by_circle,
    mean_curvature_by_tangent_trace,
    normal_section_curvature,
)
from .errors import (
    CriticalPoint,
    DimensionMismatch,
    HarmflowError,
    InvalidFieldSpec,
    NonfiniteValue,
    NotHarmonic,
    NotTangent,
    ScenarioError,
    SingularPoint,
)
from .fields import (
    Jet2,
    ScalarField,
    combine,
    eval_jet,
    fd_jet,
    field_from_descriptor,
    laplacian,
    make_dipole,
    make_harmonic_polynomial,
    make_linear,
    make_newtonian,
    make_polynomial,
)
from .flow import (
    FlowTrace,
    check_log_derivative,
    gradient_norm_along,
    second_derivative_identity,
    trace_flow,
    write_csv,
)
from .verify import (
    ConvergenceStudy,
    VerificationRecord,
    batch_run,
    convergence_study,
    record_for_trace,
    verify_identity,
)

__version__ = "0.1.0"

__all__ = [
    "available_backends", "backend_name",
    "LevelSetFrame", "default_eps_grad", "frame_at", "mean_curvature",
    "mean_curvature_by_averaging", "mean_curvature_by_circle",
    "mean_curvature_by_tangent_trace", "normal_section_curvature",
    "CriticalPoint", "DimensionMismatch", "HarmflowError", "InvalidFieldSpec",
    "NonfiniteValue", "NotHarmonic", "NotTangent", "ScenarioError", "SingularPoint",
    "Jet2", "ScalarField", "combine", "eval_jet", "fd_jet",
    "field_from_descriptor", "laplacian", "make_dipole",
    "make_harmonic_polynomial", "make_linear", "make_newtonian", "make_polynomial",
    "FlowTrace", "check_log_derivative", "gradient_norm_along",
    "second_derivative_identity", "trace_flow", "write_csv",
    "ConvergenceStudy", "VerificationRecord", "batch_run", "convergence_study",
    "record_for_trace", "verify_identity",
    "__version__",
]
