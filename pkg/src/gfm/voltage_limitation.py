"""
Voltage Reference Limitation
Current reference from a voltage-behind-impedance model, d-priority current
limiting and the limited converter voltage reference
"""

import math
from dataclasses import dataclass

from src.frames.transforms import DqVector, Impedance, impedance_apply, impedance_solve


@dataclass(frozen=True)
class GfmReference:
    """Unlimited voltage reference, its limited version and the current reference"""

    v_cn: DqVector
    v_cn_lim: DqVector
    i_r: DqVector

    @property
    def limiting(self) -> bool:
        return self.v_cn != self.v_cn_lim


def compute_reference_current(v_cn: DqVector, v_pcc_f: DqVector, z_c: Impedance,
                              omega: float = 1.0) -> DqVector:
    """
    i_r = Z_c^-1 (v_cn - v_pcc_f)

    Raises:
        SingularImpedanceError: if r = omega*l = 0
    """
    return impedance_solve(z_c.r, z_c.l, omega, v_cn - v_pcc_f)


def limit_current_reference(i_r_raw: DqVector, i_th: float) -> DqVector:
    """
    Clamp the current reference to the circle of radius i_th, d-axis first

    The d component is clamped to +-i_th and the q component gets what is
    left of the circle.
    """
    if i_th <= 0.0:
        raise ValueError(f"i_th must be positive, got {i_th}")
    d = min(max(i_r_raw.d, -i_th), i_th)
    q_room = math.sqrt(max(i_th * i_th - d * d, 0.0))
    q = math.copysign(min(abs(i_r_raw.q), q_room), i_r_raw.q)
    return DqVector(d, q)


def limited_voltage_reference(i_r: DqVector, v_pcc_f: DqVector, z_c: Impedance,
                              omega: float = 1.0) -> DqVector:
    """v_cn_lim = Z_c i_r + v_pcc_f"""
    return impedance_apply(z_c, omega, i_r) + v_pcc_f


def limit_voltage_reference(v_cn: DqVector, v_pcc_f: DqVector, z_c: Impedance,
                            i_th: float, omega: float = 1.0) -> GfmReference:
    """Full chain: reference current, d-priority limit, limited voltage"""
    i_r_raw = compute_reference_current(v_cn, v_pcc_f, z_c, omega)
    i_r = limit_current_reference(i_r_raw, i_th)
    if i_r == i_r_raw:
        return GfmReference(v_cn=v_cn, v_cn_lim=v_cn, i_r=i_r)
    return GfmReference(v_cn=v_cn, v_cn_lim=limited_voltage_reference(i_r, v_pcc_f, z_c, omega),
                        i_r=i_r)
