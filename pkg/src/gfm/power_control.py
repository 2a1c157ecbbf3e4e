"""
Grid-Forming Power Loops
Inverse frequency droop, virtual synchronous machine (VSM), enhanced direct
power control (EDPC) and the reactive-power voltage droop
"""

import math
from dataclasses import dataclass

from src.frames.transforms import OMEGA_N


@dataclass(frozen=True)
class VsmState:
    omega_c: float = 1.0
    theta_c: float = 0.0


@dataclass(frozen=True)
class EdpcState:
    integrator: float = 0.0
    theta_c: float = 0.0


def inverse_frequency_droop(omega_pll: float, p_star: float = 0.0,
                            omega_star: float = 1.0, D_f: float = 0.02) -> float:
    """
    Power reference from the measured frequency

    Returns:
        p_r = p_star - (omega_pll - omega_star) / D_f
    """
    if D_f <= 0.0:
        raise ValueError(f"D_f must be positive, got {D_f}")
    return p_star - (omega_pll - omega_star) / D_f


def vsm_acceleration(p_r: float, p: float, omega_c: float, omega_pll: float,
                     H: float, K_d: float) -> float:
    """d(omega_c)/dt of the swing equation 2H dw/dt = (p_r - p) - K_d (w - w_pll)"""
    return ((p_r - p) - K_d * (omega_c - omega_pll)) / (2.0 * H)


def vsm_step(s: VsmState, p_r: float, p: float, omega_pll: float, dt: float,
             H: float = 3.0, K_d: float = 50.0) -> VsmState:
    """
    Forward-Euler update of the VSM swing equation

    Args:
        s: VSM state
        p_r: Power reference from the droop
        p: Measured active power
        omega_pll: Filtered PLL frequency
        dt: Sample time in seconds
        H: Inertia constant in seconds
        K_d: Damping constant

    Returns:
        New state with theta_c advanced by w_n * omega_c * dt at the held
        frequency, and omega_c updated from the power balance
    """
    if H <= 0.0:
        raise ValueError(f"H must be positive, got {H}")
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    omega_c = s.omega_c + dt * vsm_acceleration(p_r, p, s.omega_c, omega_pll, H, K_d)
    return VsmState(omega_c=omega_c, theta_c=s.theta_c + OMEGA_N * s.omega_c * dt)


def edpc_step(s: EdpcState, theta_pll: float, p_r: float, p: float, dt: float,
              kp: float = 0.45, ti: float = 0.12) -> EdpcState:
    """
    EDPC phase: theta_c = theta_pll + kp (1 + 1/(s ti)) (p_r - p)

    The integrator is clamped to +-pi. The returned theta_c is absolute; the
    PI output theta_r is theta_c - theta_pll.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    error = p_r - p
    integrator = s.integrator + kp * error * dt / ti
    integrator = min(max(integrator, -math.pi), math.pi)
    theta_r = kp * error + integrator
    return EdpcState(integrator=integrator, theta_c=theta_pll + theta_r)


def voltage_droop(q: float, v_star: float = 1.0, q_star: float = 0.0,
                  D_v: float = 0.05) -> float:
    """Amplitude command v_hat = v_star + D_v (q_star - q)"""
    if D_v <= 0.0:
        raise ValueError(f"D_v must be positive, got {D_v}")
    return v_star + D_v * (q_star - q)
