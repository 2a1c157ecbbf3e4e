"""
Network Model
Averaged converter, grid filter, grid branch and fault branch meeting at
an algebraic PCC node. dq quantities are carried as complex numbers
d + jq in the network frame, which rotates at the nominal frequency.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from src.frames.transforms import OMEGA_N, DqVector, Impedance
from src.plant.grids import SmGridState, dc_link_derivative, sm_grid_derivative

logger = logging.getLogger(__name__)


class GridKind(Enum):
    """Grid connected at the PCC"""
    HIGH_INERTIA = "high_inertia"
    LOW_INERTIA = "low_inertia"
    STIFF = "stiff"


@dataclass(frozen=True)
class FilterState:
    """Grid filter: capacitor voltage and branch current"""

    v_cf: DqVector = DqVector()
    i_lf: DqVector = DqVector()


class Branch(NamedTuple):
    """Inductive branch leaving the PCC toward a voltage source"""

    l: float
    r: float
    source: complex
    current: complex

    def back_voltage(self) -> complex:
        # PCC voltage that would hold this branch current constant
        return self.source + complex(self.r, self.l) * self.current

    def current_derivative(self, v_pcc: complex) -> complex:
        return OMEGA_N / self.l * (v_pcc - self.back_voltage())


def solve_pcc_voltage(branches: Sequence[Branch]) -> complex:
    """
    PCC voltage from KCL over inductive branches

    Requiring the branch currents to keep summing to zero gives
    v = sum(e_k / l_k) / sum(1 / l_k) with e_k the branch back voltages.
    """
    num = sum(b.back_voltage() / b.l for b in branches)
    den = sum(1.0 / b.l for b in branches)
    return num / den


def fault_apply(active: bool, branches: List[Branch], i_fault: complex,
                fault: Impedance) -> List[Branch]:
    """
    Add the shunt fault branch (l_l, r_l to ground) to the network while active

    Returns:
        The branch list used by the PCC solve
    """
    if not active:
        return branches
    return branches + [Branch(fault.l, fault.r, 0j, i_fault)]


@dataclass(frozen=True)
class NetworkParams:
    """Passive network parameters in per-unit (defaults from the simulation table)"""

    z_c: Impedance = Impedance(r=0.02, l=0.16)
    c_f: float = 0.006
    z_f: Impedance = Impedance(r=10.0, l=0.2)
    z_fault: Impedance = Impedance(r=0.001, l=0.016)
    z_grid: Impedance = Impedance(r=0.02, l=0.32)
    H_sm: float = 3.0
    tau_dc: float = 0.05


class PlantInputs(NamedTuple):
    """Signals held constant between control samples"""

    v_c: complex
    e_grid: complex = 1 + 0j
    p_m: float = 0.0
    i_r_gfl: float = 0.0
    fault_active: bool = False


class PlantModel:
    """
    Continuous-time plant with a flat state vector

    Layout: i (0:2), i_g (2:4), i_lf (4:6), v_cf (6:8), i_fault (8:10),
    omega_sm (10), delta_sm (11), v_dc (12). i flows from the converter into
    the PCC; the other branch currents leave the PCC. delta_sm is the machine
    phase relative to the network frame.
    """

    SIZE = 13

    def __init__(self, params: NetworkParams, grid: GridKind):
        self.params = params
        self.grid = grid
        self._zc = complex(params.z_c.r, params.z_c.l)
        self._zg = complex(params.z_grid.r, params.z_grid.l)
        self._zf = complex(params.z_f.r, params.z_f.l)

    @staticmethod
    def initial_state(i: complex = 0j, i_g: complex = 0j, i_lf: complex = 0j,
                      v_cf: complex = 0j, omega_sm: float = 1.0, delta_sm: float = 0.0,
                      v_dc: float = 1.0) -> np.ndarray:
        return np.array([i.real, i.imag, i_g.real, i_g.imag, i_lf.real, i_lf.imag,
                         v_cf.real, v_cf.imag, 0.0, 0.0, omega_sm, delta_sm, v_dc])

    def _branches(self, x: np.ndarray, inputs: PlantInputs) -> List[Branch]:
        p = self.params
        i = complex(x[0], x[1])
        branches = [
            Branch(p.z_c.l, p.z_c.r, inputs.v_c, -i),
            Branch(p.z_grid.l, p.z_grid.r, self.grid_source(x, inputs), complex(x[2], x[3])),
            Branch(p.z_f.l, p.z_f.r, complex(x[6], x[7]), complex(x[4], x[5])),
        ]
        return fault_apply(inputs.fault_active, branches, complex(x[8], x[9]), p.z_fault)

    def grid_source(self, x: np.ndarray, inputs: PlantInputs) -> complex:
        if self.grid is GridKind.HIGH_INERTIA:
            delta = x[11]
            return complex(math.cos(delta), math.sin(delta))
        return inputs.e_grid

    def pcc_voltage(self, x: np.ndarray, inputs: PlantInputs) -> complex:
        return solve_pcc_voltage(self._branches(x, inputs))

    def derivative(self, x: np.ndarray, inputs: PlantInputs) -> np.ndarray:
        """Time derivative of the flat state vector under held inputs"""
        branches = self._branches(x, inputs)
        v = solve_pcc_voltage(branches)
        conv, grid, filt = branches[0], branches[1], branches[2]

        di = -conv.current_derivative(v)
        dig = grid.current_derivative(v)
        dilf = filt.current_derivative(v)
        v_cf = complex(x[6], x[7])
        dvcf = OMEGA_N * (filt.current / self.params.c_f - 1j * v_cf)
        dif = branches[3].current_derivative(v) if inputs.fault_active else 0j

        domega = ddelta = dvdc = 0.0
        if self.grid is GridKind.HIGH_INERTIA:
            # Machine output power; the branch current leaves the PCC toward it
            p_sm = (grid.source * (-grid.current).conjugate()).real
            sm = SmGridState(omega_sm=x[10], theta_sm=x[11], p_m=inputs.p_m)
            domega, dtheta = sm_grid_derivative(sm, p_sm, self.params.H_sm)
            ddelta = dtheta - OMEGA_N
        elif self.grid is GridKind.LOW_INERTIA:
            p_ac = (grid.source * (-grid.current).conjugate()).real
            dvdc = dc_link_derivative(x[12], inputs.i_r_gfl, p_ac, self.params.tau_dc)

        return np.array([di.real, di.imag, dig.real, dig.imag, dilf.real, dilf.imag,
                         dvcf.real, dvcf.imag, dif.real, dif.imag, domega, ddelta, dvdc])

    def clear_fault(self, x: np.ndarray) -> np.ndarray:
        """
        Open the fault branch

        The fault current is handed to the remaining branches as a flux
        impulse at the PCC would do (weights 1/l), so KCL stays exact.
        """
        p = self.params
        i_fault = complex(x[8], x[9])
        y = 1.0 / p.z_c.l + 1.0 / p.z_grid.l + 1.0 / p.z_f.l
        impulse = i_fault / y
        out = x.copy()
        d_i = -impulse / p.z_c.l
        d_ig = impulse / p.z_grid.l
        d_ilf = impulse / p.z_f.l
        out[0] += d_i.real
        out[1] += d_i.imag
        out[2] += d_ig.real
        out[3] += d_ig.imag
        out[4] += d_ilf.real
        out[5] += d_ilf.imag
        out[8] = out[9] = 0.0
        logger.debug(f"Fault branch opened, redistributed {abs(i_fault):.4f} p.u.")
        return out

    @staticmethod
    def converter_current(x: np.ndarray) -> complex:
        return complex(x[0], x[1])

    @staticmethod
    def grid_current(x: np.ndarray) -> complex:
        return complex(x[2], x[3])

    @staticmethod
    def filter_state(x: np.ndarray) -> FilterState:
        return FilterState(v_cf=DqVector(x[6], x[7]), i_lf=DqVector(x[4], x[5]))


def as_dq(value: complex) -> DqVector:
    return DqVector(value.real, value.imag)


def as_complex(value: DqVector) -> complex:
    return complex(value.d, value.q)
