"""
Conventional Current Limiting
Switched current control (SCC), reference-limited proportional current
control (RL-CC) and adaptive virtual impedance (AVI). Each maps the GFM
voltage reference and the measurements to a terminal-voltage command.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Tuple

from src.frames.transforms import DqVector, Impedance, impedance_apply
from src.gfm.voltage_limitation import limit_current_reference

logger = logging.getLogger(__name__)


class ClcKind(Enum):
    """Current-limiting stage selected for a scenario"""
    NONE = "none"
    SCC = "scc"
    RLCC = "rlcc"
    AVI = "avi"
    SF = "sf"
    SF_NOCLF = "sf_noclf"


@dataclass(frozen=True)
class ClcParams:
    """Current-controller and virtual-impedance tuning"""

    kp_cc: float = 0.342
    ti_cc: float = 0.002
    i_th: float = 1.18
    h_scc: float = 0.05
    K_X: float = 10.0
    eta: float = 16.0


@dataclass(frozen=True)
class SccState:
    active: bool = False
    pi_integrator: DqVector = DqVector()


@dataclass(frozen=True)
class AviState:
    """Virtual reactance x_v and resistance r_v = x_v / eta"""

    x_v: float = 0.0
    r_v: float = 0.0


def scc_step(s: SccState, v_ref: DqVector, i: DqVector, i_r: DqVector, v_pcc_f: DqVector,
             dt: float, z_c: Impedance, omega: float = 1.0,
             params: ClcParams = ClcParams()) -> Tuple[DqVector, SccState]:
    """
    Switched current control with hysteresis

    Activates when |i| >= i_th and releases when |i| <= i_th - h, resetting
    the PI integrator. While active the converter tracks i_r through a PI
    current controller with feed-forward v_pcc_f + Z_c i_r.

    Returns:
        (terminal voltage command, new state)
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    amplitude = i.amplitude()
    if not s.active and amplitude >= params.i_th:
        logger.debug(f"SCC engaged at |i|={amplitude:.4f}")
        s = SccState(active=True)
    elif s.active and amplitude <= params.i_th - params.h_scc:
        logger.debug(f"SCC released at |i|={amplitude:.4f}")
        return v_ref, SccState(active=False)

    if not s.active:
        return v_ref, s

    error = i_r - i
    integrator = s.pi_integrator + error.scaled(params.kp_cc / params.ti_cc * dt)
    v_c = v_pcc_f + impedance_apply(z_c, omega, i_r) + error.scaled(params.kp_cc) + integrator
    return v_c, replace(s, pi_integrator=integrator)


def rlcc_reference(v_ref: DqVector, i: DqVector, v_pcc_f: DqVector, z_c: Impedance,
                   kp: float, omega: float = 1.0) -> DqVector:
    """Fictitious reference i_r' that a proportional controller would track to output v_ref"""
    if kp <= 0.0:
        raise ValueError(f"kp must be positive, got {kp}")
    return i + (v_ref - v_pcc_f - impedance_apply(z_c, omega, i)).scaled(1.0 / kp)


def rlcc_step(v_ref: DqVector, i: DqVector, v_pcc_f: DqVector, z_c: Impedance,
              kp: float = 0.342, i_th: float = 1.18, omega: float = 1.0) -> DqVector:
    """
    Reference-limited proportional current control

    Passes v_ref through while |i_r'| <= i_th. Otherwise i_r' is clamped
    (d priority) and tracked by the proportional controller.
    """
    i_r_fict = rlcc_reference(v_ref, i, v_pcc_f, z_c, kp, omega)
    if i_r_fict.amplitude() <= i_th:
        return v_ref
    clamped = limit_current_reference(i_r_fict, i_th)
    return v_pcc_f + impedance_apply(z_c, omega, i) + (clamped - i).scaled(kp)


def avi_impedance(i: DqVector, K_X: float, eta: float, i_th: float) -> AviState:
    """x_v = K_X max(0, |i| - i_th), r_v = x_v / eta"""
    if K_X < 0.0:
        raise ValueError(f"K_X must be non-negative, got {K_X}")
    if eta <= 0.0:
        raise ValueError(f"eta must be positive, got {eta}")
    x_v = K_X * max(0.0, i.amplitude() - i_th)
    return AviState(x_v=x_v, r_v=x_v / eta)


def avi_step(v_ref: DqVector, i: DqVector, K_X: float = 10.0, eta: float = 16.0,
             i_th: float = 1.18, omega: float = 1.0) -> DqVector:
    """Adaptive virtual impedance: v_c = v_ref - (r_v I + omega x_v J) i"""
    z_v = avi_impedance(i, K_X, eta, i_th)
    if z_v.x_v == 0.0:
        return v_ref
    drop = DqVector(z_v.r_v * i.d - omega * z_v.x_v * i.q,
                    omega * z_v.x_v * i.d + z_v.r_v * i.q)
    return v_ref - drop
