"""
Grid Models
High-inertia grid (single synchronous machine behind an impedance) and
low-inertia grid (aggregated grid-following converter with DC-link control)
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Tuple

from src.frames.transforms import OMEGA_N, DqVector, Impedance, rotate
from src.gfm.pll import PllParams, PllState, pll_advance, pll_update

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SmGridState:
    """Synchronous machine: mechanical frequency, rotor phase, mechanical power"""

    omega_sm: float = 1.0
    theta_sm: float = 0.0
    p_m: float = 0.9


def sm_grid_derivative(g: SmGridState, p_sm: float, H: float) -> Tuple[float, float]:
    """
    Swing equation 2H d(omega_sm)/dt = p_m - p_sm

    Returns:
        (d omega_sm/dt in p.u./s, d theta_sm/dt in rad/s)
    """
    if H <= 0.0:
        raise ValueError(f"H must be positive, got {H}")
    return (g.p_m - p_sm) / (2.0 * H), OMEGA_N * g.omega_sm


@dataclass(frozen=True)
class GflParams:
    """Aggregated grid-following converter"""

    z_gfl: Impedance = Impedance(r=0.01, l=0.16)
    kp_cc: float = 0.342
    ti_cc: float = 0.002
    kp_dc: float = 2.0
    ti_dc: float = 0.05
    tau_dc: float = 0.05
    i_limit: float = 1.2
    pll: PllParams = field(default_factory=PllParams)


@dataclass(frozen=True)
class GflGridState:
    """
    Grid-following converter state

    v_dc and i_gfl are the plant quantities sampled at the last control
    instant; i_gfl is the current injected into the PCC (network frame).
    """

    v_dc: float = 1.0
    pll: PllState = field(default_factory=PllState)
    dc_int: float = 0.0
    cc_int: DqVector = DqVector()
    i_gfl: DqVector = DqVector()
    i_r_gfl: float = -0.9


def dc_link_derivative(v_dc: float, i_r_gfl: float, p_ac: float, tau_dc: float) -> float:
    """tau_dc dv_dc/dt = i_r_gfl - p_ac / v_dc, with p_ac the power fed into the AC side"""
    if v_dc <= 0.0:
        raise ValueError(f"DC-link voltage collapsed to {v_dc}")
    return (i_r_gfl - p_ac / v_dc) / tau_dc


def gfl_grid_step(g: GflGridState, v_pcc: DqVector, dt: float, theta_net: float = 0.0,
                  params: GflParams = GflParams()) -> Tuple[GflGridState, DqVector]:
    """
    One control sample of the grid-following converter

    The DC-voltage PI sets the d-axis current reference in the GFL's PLL
    frame and the inner PI current controller (with voltage feed-forward and
    dq decoupling) computes the terminal voltage.

    Args:
        g: GFL state with freshly sampled v_dc and i_gfl
        v_pcc: PCC voltage, network frame
        dt: Sample time in seconds
        theta_net: Angle of the network frame
        params: GFL parameters

    Returns:
        (updated state, terminal voltage command in the network frame)
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    pll = pll_advance(g.pll, dt)
    pll = pll_update(pll, rotate(v_pcc, theta_net - pll.theta), dt, params.pll)
    to_pll = theta_net - pll.theta

    dc_error = g.v_dc - 1.0
    dc_int = g.dc_int + params.kp_dc / params.ti_dc * dc_error * dt
    dc_int = min(max(dc_int, -params.i_limit), params.i_limit)
    i_d_ref = min(max(params.kp_dc * dc_error + dc_int, -params.i_limit), params.i_limit)

    i_pll = rotate(g.i_gfl, to_pll)
    v_pll = rotate(v_pcc, to_pll)
    error = DqVector(i_d_ref, 0.0) - i_pll
    cc_int = g.cc_int + error.scaled(params.kp_cc / params.ti_cc * dt)
    x = pll.omega_filtered * params.z_gfl.l
    decoupling = DqVector(-x * i_pll.q, x * i_pll.d)
    e_pll = v_pll + decoupling + error.scaled(params.kp_cc) + cc_int

    new_state = replace(g, pll=pll, dc_int=dc_int, cc_int=cc_int)
    return new_state, rotate(e_pll, -to_pll)
