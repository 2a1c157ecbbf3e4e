# Conventional current-limiting baselines
from src.clc.baselines import (
    AviState,
    ClcKind,
    ClcParams,
    SccState,
    avi_impedance,
    avi_step,
    rlcc_reference,
    rlcc_step,
    scc_step,
)

__all__ = [
    "AviState",
    "ClcKind",
    "ClcParams",
    "SccState",
    "avi_impedance",
    "avi_step",
    "rlcc_reference",
    "rlcc_step",
    "scc_step",
]
