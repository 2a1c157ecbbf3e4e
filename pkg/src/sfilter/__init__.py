# CBF/CLF safety filter
from src.sfilter.certificate import (
    CertificateFormatError,
    PolynomialCertificate,
    default_certificates,
    eval_certificate,
    load_certificates,
    parse_certificates,
    state_point,
)
from src.sfilter.qp import ActiveSet, DegenerateCbfError, QpResult, qp_solve
from src.sfilter.safety_filter import (
    FilterDiagnostics,
    FilterParams,
    SafetyFilter,
    allowable_margin,
    constraint_row,
    filter_step,
    nominal_control,
    refined_nominal_control,
)

__all__ = [
    "CertificateFormatError",
    "PolynomialCertificate",
    "default_certificates",
    "eval_certificate",
    "load_certificates",
    "parse_certificates",
    "state_point",
    "ActiveSet",
    "DegenerateCbfError",
    "QpResult",
    "qp_solve",
    "FilterDiagnostics",
    "FilterParams",
    "SafetyFilter",
    "allowable_margin",
    "constraint_row",
    "filter_step",
    "nominal_control",
    "refined_nominal_control",
]
