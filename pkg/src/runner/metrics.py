"""
Scenario Metrics
Current overshoot, converter-voltage modification, recovery after fault
clearing and post-fault stability, all computed from a trace
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, Optional

import numpy as np
import pandas as pd

from src.runner.trace import SimTrace

logger = logging.getLogger(__name__)

STABILITY_WINDOW = 0.1
OMEGA_SPREAD = 5e-3
CURRENT_BOUND_FACTOR = 1.5


@dataclass(frozen=True)
class Metrics:
    """
    Attributes:
        max_overshoot: max worst-phase |i| - i_max, floored at 0
        max_dv: Largest |v_c - v_cn_lim|
        int_dv: Time integral of |v_c - v_cn_lim| in p.u. s
        recovery_time: Seconds after fault clearing until V <= 0; None if never
        stable: Bounded current and re-locked PLL over the final window
        rlcc_window: Seconds after clearing with the limiter still engaged
        min_p_post_fault: Most negative active power after clearing
        max_i_phase: Largest worst-phase |i|
    """

    max_overshoot: float
    max_dv: float
    int_dv: float
    recovery_time: Optional[float]
    stable: bool
    rlcc_window: float
    min_p_post_fault: float
    max_i_phase: float

    @property
    def recovered(self) -> bool:
        return self.recovery_time is not None

    def to_dict(self) -> Dict:
        return asdict(self)


def _trapezoid(y: np.ndarray, t: np.ndarray) -> float:
    if len(y) < 2:
        return 0.0
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t)))


def metrics_from_frame(df: pd.DataFrame, i_max: float, t_fault_off: float) -> Metrics:
    """Metrics of a trace given as the DataFrame emit_trace writes"""
    if df.empty:
        return Metrics(0.0, 0.0, 0.0, None, False, 0.0, 0.0, 0.0)
    t = df["t"].to_numpy(dtype=float)
    dv = np.hypot(df["dv_d"].to_numpy(dtype=float), df["dv_q"].to_numpy(dtype=float))
    i_phase = df["i_phase_max"].to_numpy(dtype=float)
    max_i_phase = float(np.max(i_phase))

    post = t >= t_fault_off
    recovery_time = None
    if np.any(post):
        recovered = post & (df["V"].to_numpy(dtype=float) <= 0.0)
        if np.any(recovered):
            recovery_time = float(t[np.argmax(recovered)] - t_fault_off)

    active = df["active"].to_numpy(dtype=bool)
    rlcc_window = 0.0
    if np.any(post):
        idx = np.flatnonzero(post)
        released = np.flatnonzero(~active[idx])
        end = idx[released[0]] if len(released) else idx[-1]
        rlcc_window = float(t[end] - t[idx[0]])
    min_p = float(np.min(df["p"].to_numpy(dtype=float)[post])) if np.any(post) else 0.0

    window = t >= t[-1] - STABILITY_WINDOW
    omega = df["omega_pll"].to_numpy(dtype=float)[window]
    i_norm = df["i_norm"].to_numpy(dtype=float)[window]
    finite = bool(np.all(np.isfinite(df.drop(columns=["active"]).to_numpy(dtype=float))))
    stable = finite and float(np.ptp(omega)) < OMEGA_SPREAD \
        and float(np.max(i_norm)) <= CURRENT_BOUND_FACTOR * i_max

    return Metrics(
        max_overshoot=max(0.0, max_i_phase - i_max),
        max_dv=float(np.max(dv)),
        int_dv=_trapezoid(dv, t),
        recovery_time=recovery_time,
        stable=stable,
        rlcc_window=rlcc_window,
        min_p_post_fault=min_p,
        max_i_phase=max_i_phase,
    )


def compute_metrics(trace: SimTrace, i_max: float, t_fault_off: float) -> Metrics:
    """
    Metrics of a scenario trace

    Args:
        trace: Recorded scenario
        i_max: Current limit the overshoot is measured against
        t_fault_off: Trace time at which the fault was cleared
    """
    metrics = metrics_from_frame(trace.to_dataframe(), i_max, t_fault_off)
    if not metrics.recovered:
        logger.warning("Nominal region not re-entered after fault clearing")
    if not math.isfinite(metrics.max_i_phase):
        logger.warning("Trace contains non-finite currents")
    return metrics
