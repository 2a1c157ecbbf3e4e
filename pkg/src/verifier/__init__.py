# Sampling-based certificate verification
from src.verifier.region import (
    OperationalRegion,
    certificate_center,
    iter_region,
    project_to_level,
    sample_region,
    split_point,
)
from src.verifier.checks import (
    VerificationReport,
    Violation,
    ball_minimum,
    band_convergence,
    boundary_points,
    check_abc_bound,
    check_cbf_boundary,
    check_clf_region,
    check_containment,
    check_input_feasibility,
    check_nominal_invariance,
    ball_line_crossings,
    joint_residual,
    run_all,
    write_report,
)

__all__ = [
    "OperationalRegion",
    "certificate_center",
    "iter_region",
    "project_to_level",
    "sample_region",
    "split_point",
    "VerificationReport",
    "Violation",
    "ball_minimum",
    "band_convergence",
    "boundary_points",
    "check_abc_bound",
    "check_cbf_boundary",
    "check_clf_region",
    "check_containment",
    "check_input_feasibility",
    "check_nominal_invariance",
    "ball_line_crossings",
    "joint_residual",
    "run_all",
    "write_report",
]
