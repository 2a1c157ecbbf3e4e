"""
Fixed-step Integration
Classical fourth-order Runge-Kutta with inputs held by the caller
"""

from typing import Callable, TypeVar

import numpy as np

State = TypeVar("State", float, np.ndarray)


def rk4_step(state: State, derivative_fn: Callable[[State], State], dt: float) -> State:
    """
    Advance state by one RK4 step

    Args:
        state: Current state (scalar or array)
        derivative_fn: Side-effect-free map state -> time derivative; inputs it
            closes over are held constant over the step (zero-order hold)
        dt: Step size in seconds

    Returns:
        State after dt
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    k1 = derivative_fn(state)
    k2 = derivative_fn(state + 0.5 * dt * k1)
    k3 = derivative_fn(state + 0.5 * dt * k2)
    k4 = derivative_fn(state + dt * k3)
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
