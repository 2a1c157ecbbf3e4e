"""
Grid-Forming Controller
Chains the PLL, the power loop (VSM or EDPC), the voltage droop and the
voltage reference limitation into one sampled controller
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from src.frames.transforms import DqVector, Impedance, rotate
from src.gfm.pll import PllParams, PllState, pll_advance, pll_update
from src.gfm.power_control import (
    EdpcState, VsmState, edpc_step, inverse_frequency_droop, voltage_droop, vsm_step
)
from src.gfm.voltage_limitation import GfmReference, limit_voltage_reference

logger = logging.getLogger(__name__)


class GfmScheme(Enum):
    """Power loop used to set the converter phase"""
    VSM = "vsm"
    EDPC = "edpc"


@dataclass(frozen=True)
class GfmParams:
    """Grid-forming control parameters (defaults from the simulation table)"""

    D_f: float = 0.02
    D_v: float = 0.05
    H: float = 3.0
    K_d: float = 50.0
    kp_edpc: float = 0.45
    ti_edpc: float = 0.12
    tau_d: float = 0.01
    tau_v: float = 0.1
    p_star: float = 0.0
    omega_star: float = 1.0
    q_star: float = 0.0
    v_star: float = 1.0
    pll: PllParams = field(default_factory=PllParams)


@dataclass(frozen=True)
class GfmOutput:
    """Everything the current-limiting stage needs, in the controller frame"""

    theta_c: float
    omega_pll: float
    p: float
    q: float
    i: DqVector
    v_pcc: DqVector
    v_pcc_f: DqVector
    reference: GfmReference

    @property
    def dv_pcc_f(self) -> DqVector:
        return self.v_pcc_f - self.v_pcc


def instantaneous_power(v: DqVector, i: DqVector) -> tuple:
    """p = v_d i_d + v_q i_q, q = v_q i_d - v_d i_q"""
    return v.d * i.d + v.q * i.q, v.q * i.d - v.d * i.q


class GfmController:
    """
    Sampled grid-forming controller

    Measurements arrive in the plant's network frame together with that
    frame's angle; outputs are expressed in the controller frame anchored
    at theta_c. The stored state belongs to the previous sample: each step
    first moves the PLL and converter phases on at their held frequencies,
    then measures and builds the reference at the new instant.
    """

    def __init__(self, params: GfmParams, scheme: GfmScheme, z_c: Impedance, i_th: float,
                 pll: Optional[PllState] = None, omega_c: float = 1.0, theta_c: float = 0.0,
                 q_f: float = 0.0, v_pcc_f: Optional[DqVector] = None,
                 theta_r: Optional[float] = None):
        """
        Initialize GfmController

        Args:
            params: Control parameters
            scheme: VSM or EDPC power loop
            z_c: Transformer impedance used by the reference limitation
            i_th: Current threshold of the reference limitation
            pll: Initial PLL state
            omega_c: Initial VSM frequency
            theta_c: Initial converter phase (absolute)
            q_f: Initial filtered reactive power
            v_pcc_f: Initial filtered PCC voltage in the controller frame
            theta_r: Initial EDPC integrator; defaults to theta_c - pll.theta
        """
        self.params = params
        self.scheme = scheme
        self.z_c = z_c
        self.i_th = i_th
        self.pll = pll or PllState(theta=theta_c, integrator=omega_c - 1.0,
                                   omega_filtered=omega_c, omega=omega_c)
        self.vsm = VsmState(omega_c=omega_c, theta_c=theta_c)
        if theta_r is None:
            theta_r = theta_c - self.pll.theta
        self.edpc = EdpcState(integrator=theta_r, theta_c=theta_c)
        self.q_f = q_f
        self.v_pcc_f = v_pcc_f or DqVector(1.0, 0.0)

    @property
    def theta_c(self) -> float:
        return self.vsm.theta_c if self.scheme is GfmScheme.VSM else self.edpc.theta_c

    def step(self, v_pcc_net: DqVector, i_net: DqVector, theta_net: float,
             dt: float) -> GfmOutput:
        """
        Run one control sample

        Args:
            v_pcc_net: Measured PCC voltage, network frame
            i_net: Measured converter current, network frame
            theta_net: Angle of the network frame
            dt: Sample time in seconds

        Returns:
            Controller-frame measurements and the limited GFM reference
        """
        prm = self.params
        pll = pll_advance(self.pll, dt)
        self.pll = pll_update(pll, rotate(v_pcc_net, theta_net - pll.theta), dt, prm.pll)
        omega_pll = self.pll.omega_filtered

        p, q = instantaneous_power(v_pcc_net, i_net)
        alpha_q = 1.0 - math.exp(-dt / prm.tau_d)
        self.q_f += alpha_q * (q - self.q_f)

        p_r = inverse_frequency_droop(omega_pll, prm.p_star, prm.omega_star, prm.D_f)
        if self.scheme is GfmScheme.VSM:
            self.vsm = vsm_step(self.vsm, p_r, p, omega_pll, dt, prm.H, prm.K_d)
        else:
            self.edpc = edpc_step(self.edpc, self.pll.theta, p_r, p, dt,
                                  prm.kp_edpc, prm.ti_edpc)
        v_hat = voltage_droop(self.q_f, prm.v_star, prm.q_star, prm.D_v)

        to_ctrl = theta_net - self.theta_c
        v_pcc = rotate(v_pcc_net, to_ctrl)
        alpha_v = 1.0 - math.exp(-dt / prm.tau_v)
        self.v_pcc_f = self.v_pcc_f + (v_pcc - self.v_pcc_f).scaled(alpha_v)
        reference = limit_voltage_reference(DqVector(v_hat, 0.0), self.v_pcc_f, self.z_c,
                                            self.i_th, omega_pll)
        return GfmOutput(
            theta_c=self.theta_c,
            omega_pll=omega_pll,
            p=p,
            q=q,
            i=rotate(i_net, to_ctrl),
            v_pcc=v_pcc,
            v_pcc_f=self.v_pcc_f,
            reference=reference,
        )

    def to_network(self, v_ctrl: DqVector, theta_net: float) -> DqVector:
        """Express a controller-frame vector in the network frame"""
        return rotate(v_ctrl, self.theta_c - theta_net)
