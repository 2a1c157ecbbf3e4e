"""
Converter Current Model
Averaged converter-side current dynamics and the filtered PCC-voltage
deviation, in the control-affine form x_dot = f(x) + G u
"""

import cmath
import math
from dataclasses import dataclass

import numpy as np

from src.frames.transforms import OMEGA_N, DqVector, Impedance, impedance_apply


@dataclass(frozen=True)
class NonStationaryState:
    """x = [i, dv_pcc_f]: converter current and filtered PCC-voltage deviation"""

    i: DqVector
    dv_pcc_f: DqVector

    def as_array(self) -> np.ndarray:
        return np.array([self.i.d, self.i.q, self.dv_pcc_f.d, self.dv_pcc_f.q])

    @classmethod
    def from_array(cls, values) -> "NonStationaryState":
        return cls(DqVector(float(values[0]), float(values[1])),
                   DqVector(float(values[2]), float(values[3])))


@dataclass(frozen=True)
class StationaryState:
    """z = [i_r, i_0]: current reference and zero-component current"""

    i_r: DqVector
    i_0: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.i_r.d, self.i_r.q, self.i_0])

    @classmethod
    def from_array(cls, values) -> "StationaryState":
        return cls(DqVector(float(values[0]), float(values[1])), float(values[2]))


def converter_current_derivative(x: NonStationaryState, u: DqVector, z_c: Impedance,
                                 tau_v: float, omega: float = 1.0) -> NonStationaryState:
    """
    Time derivative of x under input u = v_c - v_pcc

    Args:
        x: Current and filtered voltage deviation
        u: Voltage across the transformer
        z_c: Transformer impedance (r_c, l_c)
        tau_v: PCC-voltage filter time constant in seconds
        omega: Per-unit frequency of the dq frame

    Returns:
        di/dt = (w_n/l_c)(u - Z_c i) and d(dv)/dt = -dv/tau_v, per second
    """
    if tau_v <= 0.0:
        raise ValueError(f"tau_v must be positive, got {tau_v}")
    k = OMEGA_N / z_c.l
    di = (u - impedance_apply(z_c, omega, x.i)).scaled(k)
    ddv = x.dv_pcc_f.scaled(-1.0 / tau_v)
    return NonStationaryState(di, ddv)


def drift(x: np.ndarray, z_c: Impedance, tau_v: float, omega: float = 1.0) -> np.ndarray:
    """f(x) for one state (shape (4,)) or a batch (shape (N, 4))"""
    x = np.asarray(x, dtype=float)
    k = OMEGA_N / z_c.l
    i = x[..., 0:2]
    zi = i @ z_c.matrix(omega).T
    return np.concatenate([-k * zi, -x[..., 2:4] / tau_v], axis=-1)


def input_matrix(z_c: Impedance) -> np.ndarray:
    """G = [(w_n/l_c) I2; 0], shape (4, 2)"""
    k = OMEGA_N / z_c.l
    return np.vstack([k * np.eye(2), np.zeros((2, 2))])


def hold_response(x: NonStationaryState, u: DqVector, z_c: Impedance, tau_v: float,
                  omega: float, t: float) -> NonStationaryState:
    """
    Exact state reached after holding u for t seconds

    The current relaxes toward Z_c^-1 u with the complex rate (w_n/l_c) Z_c
    and dv_pcc_f decays with tau_v.
    """
    if tau_v <= 0.0:
        raise ValueError(f"tau_v must be positive, got {tau_v}")
    z = complex(z_c.r, omega * z_c.l)
    i = complex(x.i.d, x.i.q)
    i_ss = complex(u.d, u.q) / z
    i_t = i_ss + (i - i_ss) * cmath.exp(-OMEGA_N / z_c.l * z * t)
    return NonStationaryState(DqVector(i_t.real, i_t.imag),
                              x.dv_pcc_f.scaled(math.exp(-t / tau_v)))
