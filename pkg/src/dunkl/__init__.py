"""Kernels of finite reflection groups and their growth estimates.

Evaluate the joint eigenfunction kernel over a whole group orbit, test the
exponential bounds it satisfies, certify covering cones, and extract the
large-argument limit of the normalized oscillatory form.
"""

from .asymptotics import (
    AdmissibleCurvePair,
    derivative_residuals,
    estimate_v,
    f_normalized,
    integrate_F,
    ode_matrix_A,
)
from .geometry import (
    ConeSpec,
    CoveringResult,
    Polytope,
    coordinates_in_basis,
    h_constant,
    in_chamber,
    in_cone_delta,
    lemma_covering,
    nesting_coefficient,
    x_star,
)
from .kernel import (
    BatchEvaluation,
    EvalContext,
    KernelEvaluation,
    OrbitVector,
    coupling_operator,
    eval_imaginary,
    eval_orbit,
    eval_orbit_batch,
    series_coefficients,
)
from .kernel1d import (
    Rank1Kernel,
    check_d1_estimates,
    e1_hyp1f1,
    e1_series,
    rank1_eval,
    reconcile_hyp1f1,
)
from .rootsys import (
    ConfigError,
    GroupElement,
    NumericError,
    RootSystem,
    build_root_system,
    dual_basis,
    generate_group,
    orbit_rep_plus,
    reflection,
    sign_of_root,
    weight_w_k,
)
from .verify import (
    VerificationReport,
    verify_corollary_imaginary,
    verify_ez,
    verify_lemma_boundedness,
    verify_lemma_polytope,
    verify_main_theorem,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissibleCurvePair", "BatchEvaluation", "ConeSpec", "ConfigError",
    "CoveringResult", "EvalContext", "GroupElement", "KernelEvaluation",
    "NumericError", "OrbitVector", "Polytope", "Rank1Kernel", "RootSystem",
    "VerificationReport", "build_root_system", "check_d1_estimates",
    "coordinates_in_basis", "coupling_operator", "derivative_residuals",
    "dual_basis", "e1_hyp1f1", "e1_series", "estimate_v", "eval_imaginary",
    "eval_orbit", "eval_orbit_batch", "f_normalized", "generate_group",
    "h_constant", "in_chamber", "in_cone_delta", "integrate_F",
    "lemma_covering", "nesting_coefficient", "ode_matrix_A",
    "orbit_rep_plus", "rank1_eval", "reconcile_hyp1f1", "reflection",
    "series_coefficients", "sign_of_root", "verify_corollary_imaginary",
    "verify_ez", "verify_lemma_boundedness", "verify_lemma_polytope",
    "verify_main_theorem", "weight_w_k", "x_star",
]
