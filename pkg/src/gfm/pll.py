"""
Synchronous Reference Frame PLL
atan2 phase detector, PI loop filter and a first-order low-pass on the
frequency estimate
"""

import math
from dataclasses import dataclass, replace

from src.frames.transforms import OMEGA_N, DqVector


@dataclass(frozen=True)
class PllParams:
    """PLL gains; kp in p.u. frequency per radian, times in seconds"""

    kp: float = 0.096
    ti: float = 0.085
    tau_d: float = 0.01

    @property
    def integrator_limit(self) -> float:
        # Frequency offset produced by a +-pi phase error through kp
        return self.kp * math.pi


@dataclass(frozen=True)
class PllState:
    """
    Phase (absolute, rad), PI integrator (p.u.), filtered frequency and the
    unfiltered loop frequency the phase advances with
    """

    theta: float = 0.0
    integrator: float = 0.0
    omega_filtered: float = 1.0
    omega: float = 1.0


def pll_advance(s: PllState, dt: float) -> PllState:
    """Move theta on by one sample at the held loop frequency"""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    return replace(s, theta=s.theta + OMEGA_N * s.omega * dt)


def pll_update(s: PllState, v_pcc: DqVector, dt: float,
               params: PllParams = PllParams()) -> PllState:
    """
    Correct the loop from a PCC voltage measured at the current phase

    Args:
        s: PLL state
        v_pcc: PCC voltage expressed in the PLL's own dq frame
        dt: Sample time in seconds
        params: Loop gains

    Returns:
        State with the new integrator, loop frequency and tau_d low-passed
        estimate; theta is unchanged
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    error = math.atan2(v_pcc.q, v_pcc.d)
    limit = params.integrator_limit
    integrator = s.integrator + params.kp / params.ti * error * dt
    integrator = min(max(integrator, -limit), limit)
    omega_raw = 1.0 + params.kp * error + integrator
    alpha = 1.0 - math.exp(-dt / params.tau_d)
    omega_filtered = s.omega_filtered + alpha * (omega_raw - s.omega_filtered)
    return replace(s, integrator=integrator, omega_filtered=omega_filtered, omega=omega_raw)


def pll_step(s: PllState, v_pcc: DqVector, dt: float,
             params: PllParams = PllParams()) -> PllState:
    """
    Correct from the measurement, then advance theta with the new loop
    frequency
    """
    return pll_advance(pll_update(s, v_pcc, dt, params), dt)
