"""
Reference Frame Transforms
Per-unit dq/dq0 vectors, amplitude-invariant Park transforms and
impedance arithmetic shared by the plant, the controllers and the filter
"""

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

# Nominal angular frequency (60 Hz grid), the only SI constant linking
# per-unit states to seconds
OMEGA_N = 2.0 * math.pi * 60.0

# 90 degree rotation in the dq plane
J = np.array([[0.0, -1.0], [1.0, 0.0]])

_SHIFTS = (0.0, 2.0 * math.pi / 3.0, -2.0 * math.pi / 3.0)


class SingularImpedanceError(ValueError):
    """Raised when an impedance with r = l = 0 has to be inverted"""


def _require_finite(name: str, *values: float) -> None:
    for value in values:
        if not math.isfinite(value):
            raise ValueError(f"{name} components must be finite, got {values}")


@dataclass(frozen=True)
class DqVector:
    """Two-component (d, q) per-unit quantity"""

    d: float = 0.0
    q: float = 0.0

    def __post_init__(self):
        _require_finite("DqVector", self.d, self.q)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "DqVector":
        return cls(float(values[0]), float(values[1]))

    def as_array(self) -> np.ndarray:
        return np.array([self.d, self.q])

    def amplitude(self) -> float:
        return math.hypot(self.d, self.q)

    def dot(self, other: "DqVector") -> float:
        return self.d * other.d + self.q * other.q

    def __add__(self, other: "DqVector") -> "DqVector":
        return DqVector(self.d + other.d, self.q + other.q)

    def __sub__(self, other: "DqVector") -> "DqVector":
        return DqVector(self.d - other.d, self.q - other.q)

    def __neg__(self) -> "DqVector":
        return DqVector(-self.d, -self.q)

    def scaled(self, factor: float) -> "DqVector":
        return DqVector(factor * self.d, factor * self.q)

    def to_dict(self) -> dict:
        return {"d": self.d, "q": self.q}


@dataclass(frozen=True)
class Dq0Vector:
    """dq vector extended with the zero-sequence component"""

    d: float = 0.0
    q: float = 0.0
    zero: float = 0.0

    def __post_init__(self):
        _require_finite("Dq0Vector", self.d, self.q, self.zero)

    @property
    def dq(self) -> DqVector:
        return DqVector(self.d, self.q)

    def as_array(self) -> np.ndarray:
        return np.array([self.d, self.q, self.zero])


@dataclass(frozen=True)
class Impedance:
    """
    Series r-l impedance in per-unit

    At per-unit frequency omega the dq impedance matrix is r*I + omega*l*J.
    """

    r: float
    l: float

    def __post_init__(self):
        _require_finite("Impedance", self.r, self.l)
        if self.r < 0.0:
            raise ValueError(f"Impedance resistance must be non-negative, got r={self.r}")
        if self.l <= 0.0:
            raise ValueError(f"Impedance inductance must be positive, got l={self.l}")

    def matrix(self, omega: float = 1.0) -> np.ndarray:
        return self.r * np.eye(2) + omega * self.l * J

    def magnitude(self, omega: float = 1.0) -> float:
        return math.hypot(self.r, omega * self.l)


def impedance_apply(Z: Impedance, omega: float, i: DqVector) -> DqVector:
    """
    Voltage across an impedance carrying current i

    Args:
        Z: Series impedance
        omega: Per-unit angular frequency of the dq frame (> 0)
        i: Current through the impedance

    Returns:
        v = (r*I + omega*l*J) i
    """
    if omega <= 0.0:
        raise ValueError(f"omega must be positive, got {omega}")
    x = omega * Z.l
    return DqVector(Z.r * i.d - x * i.q, x * i.d + Z.r * i.q)


def impedance_solve(r: float, l: float, omega: float, v: DqVector) -> DqVector:
    """
    Current that produces voltage v across (r*I + omega*l*J)

    Takes raw r and l so that a purely resistive or purely inductive
    element can be inverted; only r = omega*l = 0 is singular.
    """
    x = omega * l
    det = r * r + x * x
    if det <= 0.0:
        raise SingularImpedanceError("impedance with r = 0 and l = 0 cannot be inverted")
    return DqVector((r * v.d + x * v.q) / det, (r * v.q - x * v.d) / det)


def rotate(v: DqVector, angle: float) -> DqVector:
    """Rotate v by +angle; moves a vector from a frame at phase a into a frame at phase a - angle"""
    c, s = math.cos(angle), math.sin(angle)
    return DqVector(c * v.d - s * v.q, s * v.d + c * v.q)


def _inverse_matrix(theta: float) -> np.ndarray:
    rows = [
        (math.cos(theta - shift), -math.sin(theta - shift), 1.0)
        for shift in _SHIFTS
    ]
    return np.array(rows)


def park_inverse(theta: float, i_dq0: Dq0Vector) -> Tuple[float, float, float]:
    """
    Amplitude-invariant inverse Park transform

    Row k is (cos(theta - k*2pi/3), -sin(theta - k*2pi/3), 1).

    Returns:
        Phase quantities (a, b, c)
    """
    _require_finite("theta", theta)
    a, b, c = _inverse_matrix(theta) @ i_dq0.as_array()
    return float(a), float(b), float(c)


def park_forward(theta: float, iabc: Sequence[float]) -> Dq0Vector:
    """
    Amplitude-invariant Park transform, the exact inverse of park_inverse

    Args:
        theta: Frame angle in radians
        iabc: Phase quantities (a, b, c)
    """
    _require_finite("theta", theta)
    x = np.asarray(iabc, dtype=float)
    cos_k = np.array([math.cos(theta - shift) for shift in _SHIFTS])
    sin_k = np.array([math.sin(theta - shift) for shift in _SHIFTS])
    d = 2.0 / 3.0 * float(cos_k @ x)
    q = -2.0 / 3.0 * float(sin_k @ x)
    zero = float(x.sum()) / 3.0
    return Dq0Vector(d, q, zero)
