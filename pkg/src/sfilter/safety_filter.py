"""
Safety Filter
Nominal control law, allowable-set margin and the per-sample QP that
minimally modifies the nominal input to respect the barrier (and
optionally the Lyapunov-like) decrease conditions
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from src.frames.transforms import DqVector, Impedance, impedance_apply
from src.plant.converter import (
    NonStationaryState, StationaryState, drift, hold_response, input_matrix
)
from src.sfilter.certificate import (
    PolynomialCertificate, default_certificates, eval_certificate
)
from src.sfilter.qp import ActiveSet, QpResult, qp_solve

logger = logging.getLogger(__name__)

REFINED_GAIN = 0.2


@dataclass(frozen=True)
class FilterParams:
    """
    Safety-filter constants

    m_max bounds the squared shifted input (u + v_pcc_n)^T (u + v_pcc_n);
    tau_v is the PCC-voltage filter constant of the internal model. A
    positive hold_time (the control sample) tightens the barrier row by the
    growth of B over one hold interval and drops a Lyapunov-row solution
    that would break the sampled barrier decrease.
    """

    gamma_b: float = 211.0
    gamma_v: float = 683.0
    i_max: float = 1.3
    i_th: float = 1.18
    m_max: float = 1.5
    d_r: float = 0.1
    epsilon: float = 1e-3
    tau_v: float = 0.1
    hold_time: float = 0.0

    def __post_init__(self):
        if self.gamma_b <= 0.0 or self.gamma_v <= 0.0:
            raise ValueError("gamma_b and gamma_v must be positive")
        if self.m_max <= 0.0 or self.i_max <= 0.0:
            raise ValueError("m_max and i_max must be positive")
        if self.hold_time < 0.0:
            raise ValueError(f"hold_time must be non-negative, got {self.hold_time}")

    def dissipation(self, V: float) -> float:
        """d(x, z) = d_r (V + epsilon)"""
        return self.d_r * (V + self.epsilon)


@dataclass(frozen=True)
class FilterDiagnostics:
    B: float
    V: float
    u_n: DqVector
    u: DqVector
    active_set: ActiveSet
    objective: float

    @property
    def du(self) -> DqVector:
        return self.u - self.u_n

    @property
    def intervened(self) -> bool:
        return self.active_set is not ActiveSet.NONE


def nominal_control(x: NonStationaryState, z: StationaryState, z_c: Impedance,
                    omega: float = 1.0) -> DqVector:
    """u_n = Z_c i_r + dv_pcc_f, so that v_c = u_n + v_pcc equals the limited GFM reference"""
    return impedance_apply(z_c, omega, z.i_r) + x.dv_pcc_f


def refined_nominal_control(x: NonStationaryState, z: StationaryState, z_c: Impedance,
                            omega: float = 1.0, gain: float = REFINED_GAIN) -> DqVector:
    """u_n' = u_n + 0.2 (i_r - i)"""
    return nominal_control(x, z, z_c, omega) + (z.i_r - x.i).scaled(gain)


def allowable_margin(x: NonStationaryState, z: StationaryState, i_max: float) -> float:
    """
    w(x, z) = i^T i - (i_max - i_0)^2

    Negative inside the allowable set, zero on its boundary.
    """
    if z.i_0 > i_max:
        raise ValueError(f"i_0={z.i_0} exceeds i_max={i_max}")
    return x.i.dot(x.i) - (i_max - z.i_0) ** 2


def constraint_row(value: float, grad: np.ndarray, f: np.ndarray, G: np.ndarray,
                   rate: float) -> Tuple[DqVector, float]:
    """
    grad^T (f + G u) <= -rate * value, written as a^T u <= b
    """
    a = G.T @ grad
    b = -rate * value - float(grad @ f)
    return DqVector.from_array(a), b


class SafetyFilter:
    """
    CBF/CLF quadratic-program safety filter

    Certificates are immutable and may be shared between filters.
    """

    def __init__(self, params: FilterParams, z_c: Impedance,
                 certificates: Optional[Dict[str, PolynomialCertificate]] = None):
        """
        Initialize SafetyFilter

        Args:
            params: Filter constants
            z_c: Transformer impedance of the internal model
            certificates: {"B": ..., "V": ...}; packaged table when None
        """
        certificates = certificates or default_certificates()
        self.params = params
        self.z_c = z_c
        self.barrier = certificates["B"]
        self.lyapunov = certificates["V"]
        self.statistics = {"steps": 0, "interventions": 0, "fallbacks": 0}
        self._last_active = ActiveSet.NONE

    def _barrier_after_hold(self, x: NonStationaryState, z: StationaryState, u: DqVector,
                            omega: float) -> float:
        prm = self.params
        x_next = hold_response(x, u, self.z_c, prm.tau_v, omega, prm.hold_time)
        return eval_certificate(self.barrier, x_next, z)[0]

    def _hold_margin(self, x: NonStationaryState, z: StationaryState, u_n: DqVector,
                     B: float, b_dot: float, omega: float) -> float:
        """
        Growth of B over one hold interval under u_n beyond its linear
        prediction, as a rate; never negative
        """
        T = self.params.hold_time
        growth = (self._barrier_after_hold(x, z, u_n, omega) - B) / T - b_dot
        return max(growth, 0.0)

    def _keeps_sampled_decrease(self, x: NonStationaryState, z: StationaryState,
                                u: DqVector, B: float, omega: float) -> bool:
        """B after one hold interval stays below B - gamma_b T B"""
        prm = self.params
        if prm.hold_time <= 0.0:
            return True
        target = B - prm.gamma_b * prm.hold_time * B
        return self._barrier_after_hold(x, z, u, omega) <= target + 1e-9 * max(1.0, abs(B))

    def step(self, x: NonStationaryState, z: StationaryState, v_pcc: DqVector,
             omega: float = 1.0, use_clf: bool = True) -> Tuple[DqVector, FilterDiagnostics]:
        """
        Filter one control sample

        Args:
            x: Current and filtered PCC-voltage deviation (controller frame)
            z: Current reference and zero-component current
            v_pcc: Measured PCC voltage (controller frame)
            omega: Per-unit frequency used in Z_c
            use_clf: Include the Lyapunov row

        Returns:
            (terminal voltage v_c = u + v_pcc, diagnostics)
        """
        prm = self.params
        B, grad_b = eval_certificate(self.barrier, x, z)
        V, grad_v = eval_certificate(self.lyapunov, x, z)
        f = drift(x.as_array(), self.z_c, prm.tau_v, omega)
        G = input_matrix(self.z_c)
        u_n = nominal_control(x, z, self.z_c, omega)

        aB, bB = constraint_row(B, grad_b, f, G, prm.gamma_b)
        if prm.hold_time > 0.0:
            bB -= self._hold_margin(x, z, u_n, B, grad_b @ (f + G @ u_n.as_array()), omega)
        dropped = False
        if use_clf:
            aV, bV = constraint_row(V, grad_v, f, G, prm.gamma_v)
            result: QpResult = qp_solve(u_n, aB, bB, aV, bV)
            if result.active_set in (ActiveSet.CLF, ActiveSet.BOTH) \
                    and not self._keeps_sampled_decrease(x, z, result.u, B, omega):
                result = qp_solve(u_n, aB, bB)
                dropped = True
                if result.active_set is ActiveSet.CBF:
                    result = QpResult(result.u, ActiveSet.CBF_ONLY_FALLBACK, result.objective)
        else:
            result = qp_solve(u_n, aB, bB)

        if result.active_set is not self._last_active:
            logger.debug(f"QP active set {self._last_active.value} -> {result.active_set.value}")
            if result.active_set is ActiveSet.CBF_ONLY_FALLBACK:
                logger.warning(f"Lyapunov row dropped to keep the barrier row "
                               f"(B={B:.4f}, V={V:.4f})")
            self._last_active = result.active_set
        self.statistics["steps"] += 1
        if result.active_set is not ActiveSet.NONE:
            self.statistics["interventions"] += 1
        if dropped or result.active_set is ActiveSet.CBF_ONLY_FALLBACK:
            self.statistics["fallbacks"] += 1

        diagnostics = FilterDiagnostics(B=B, V=V, u_n=u_n, u=result.u,
                                        active_set=result.active_set,
                                        objective=result.objective)
        return result.u + v_pcc, diagnostics


def filter_step(x: NonStationaryState, z: StationaryState, params: FilterParams,
                z_c: Impedance, omega: float, v_pcc: DqVector, use_clf: bool = True,
                certificates: Optional[Dict[str, PolynomialCertificate]] = None
                ) -> Tuple[DqVector, FilterDiagnostics]:
    """Stateless form of SafetyFilter.step"""
    return SafetyFilter(params, z_c, certificates).step(x, z, v_pcc, omega, use_clf)
