"""
Operating Point
Steady state of the converter, grid filter and grid branch at the droop
equilibrium, solved on the phasor equations with scipy's fsolve
"""

import cmath
import logging
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy.optimize import fsolve

from src.frames.transforms import Impedance
from src.gfm.controller import GfmParams
from src.plant.network import GridKind, NetworkParams

logger = logging.getLogger(__name__)

RESIDUAL_TOLERANCE = 1e-9


class OperatingPointError(ValueError):
    """The steady-state equations have no solution near the initial guess"""


@dataclass(frozen=True)
class OperatingPoint:
    """
    Network-frame phasors at t = 0 of a steady state at grid frequency omega

    i flows from the converter into the PCC; i_g and i_lf leave the PCC. e is
    the source of the grid branch and delta_sm the machine phase.
    """

    omega: float
    v: complex
    i: complex
    i_g: complex
    i_lf: complex
    v_cf: complex
    v_c: complex
    e: complex
    delta_sm: float = 0.0

    @property
    def p(self) -> float:
        return (self.v * self.i.conjugate()).real

    @property
    def q(self) -> float:
        return (self.v * self.i.conjugate()).imag

    def rotated(self, angle: float) -> "OperatingPoint":
        """Same steady state seen from a frame shifted by -angle"""
        r = cmath.exp(1j * angle)
        return OperatingPoint(self.omega, self.v * r, self.i * r, self.i_g * r, self.i_lf * r,
                              self.v_cf * r, self.v_c * r, self.e * r, self.delta_sm + angle)


def _z(imp: Impedance, omega: float) -> complex:
    return complex(imp.r, omega * imp.l)


def branch_phasors(net: NetworkParams, omega: float, v: complex, e: complex) -> OperatingPoint:
    """Currents and converter voltage for a PCC voltage v and grid source e"""
    i_g = (v - e) / _z(net.z_grid, omega)
    i_lf = v / (_z(net.z_f, omega) - 1j / (omega * net.c_f))
    i = i_g + i_lf
    return OperatingPoint(
        omega=omega, v=v, i=i, i_g=i_g, i_lf=i_lf,
        v_cf=-1j * i_lf / (omega * net.c_f),
        v_c=v + _z(net.z_c, omega) * i,
        e=e,
        delta_sm=cmath.phase(e),
    )


def _droop_residuals(op: OperatingPoint, gfm: GfmParams) -> Tuple[float, float]:
    v_hat = gfm.v_star + gfm.D_v * (gfm.q_star - op.q)
    p_r = gfm.p_star - (op.omega - gfm.omega_star) / gfm.D_f
    return abs(op.v_c) - v_hat, op.p - p_r


def _solve(residuals: Callable[[np.ndarray], np.ndarray], guess: np.ndarray,
           grid: GridKind) -> np.ndarray:
    y, info, ier, msg = fsolve(residuals, guess, full_output=True, xtol=1e-13)
    worst = float(np.max(np.abs(info["fvec"])))
    if ier != 1 or not np.isfinite(worst) or worst > RESIDUAL_TOLERANCE:
        raise OperatingPointError(f"no {grid.value} operating point: {msg} "
                                  f"(residual {worst:.3e})")
    return y


def solve_operating_point(grid: GridKind, net: NetworkParams, gfm: GfmParams,
                          p_m: float = 0.9, i_r_gfl: float = -0.9) -> OperatingPoint:
    """
    Droop equilibrium of the converter against the selected grid

    The converter holds |v_c| at the voltage-droop set point and injects the
    power its inverse frequency droop asks for at the common frequency. The
    machine grid balances p_m at its terminals, the grid-following converter
    draws i_r_gfl through a balanced DC link, and the stiff grid fixes the
    frequency at 1 with its source on the d axis.

    Args:
        grid: Grid connected at the PCC
        net: Passive network parameters
        gfm: Grid-forming control parameters
        p_m: Machine mechanical power
        i_r_gfl: GFL DC-side current reference

    Returns:
        Operating point with the PCC voltage on the d axis, except for the
        stiff grid whose source is on the d axis

    Raises:
        OperatingPointError: If the solve does not converge
    """
    if grid is GridKind.HIGH_INERTIA:
        def residuals(y):
            op = branch_phasors(net, y[2], complex(y[0], 0.0), cmath.exp(1j * y[1]))
            p_sm = (op.e * (-op.i_g).conjugate()).real
            return np.array([*_droop_residuals(op, gfm), p_sm - p_m])

        omega = gfm.omega_star + gfm.D_f * (gfm.p_star + p_m)
        y = _solve(residuals, np.array([gfm.v_star, 0.3, omega]), grid)
        op = branch_phasors(net, y[2], complex(y[0], 0.0), cmath.exp(1j * y[1]))

    elif grid is GridKind.LOW_INERTIA:
        def phasors(y):
            v = complex(y[0], 0.0)
            return branch_phasors(net, y[2], v, v + _z(net.z_grid, y[2]) * y[1])

        def residuals(y):
            op = phasors(y)
            p_ac = (op.e * complex(y[1], 0.0).conjugate()).real
            return np.array([*_droop_residuals(op, gfm), p_ac - i_r_gfl])

        omega = gfm.omega_star + gfm.D_f * (gfm.p_star + i_r_gfl)
        y = _solve(residuals, np.array([gfm.v_star, i_r_gfl, omega]), grid)
        op = phasors(y)

    else:
        def residuals(y):
            op = branch_phasors(net, 1.0, complex(y[0], 0.0), cmath.exp(1j * y[1]))
            return np.array(_droop_residuals(op, gfm))

        y = _solve(residuals, np.array([gfm.v_star, 0.0]), grid)
        op = branch_phasors(net, 1.0, complex(y[0], 0.0), cmath.exp(1j * y[1]))
        op = op.rotated(-y[1])

    logger.debug(f"{grid.value} operating point: omega={op.omega:.5f}, p={op.p:.4f}, "
                 f"q={op.q:.4f}, |v|={abs(op.v):.4f}, |v_c|={abs(op.v_c):.4f}")
    return op
