# Reference frames, per-unit vectors and impedance arithmetic
from src.frames.transforms import (
    DqVector,
    Dq0Vector,
    Impedance,
    SingularImpedanceError,
    OMEGA_N,
    impedance_apply,
    impedance_solve,
    park_inverse,
    park_forward,
    rotate,
)

__all__ = [
    "DqVector",
    "Dq0Vector",
    "Impedance",
    "SingularImpedanceError",
    "OMEGA_N",
    "impedance_apply",
    "impedance_solve",
    "park_inverse",
    "park_forward",
    "rotate",
]
