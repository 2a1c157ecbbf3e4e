# Grid-forming reference generation
from src.gfm.pll import PllParams, PllState, pll_advance, pll_step, pll_update
from src.gfm.power_control import (
    EdpcState,
    VsmState,
    edpc_step,
    inverse_frequency_droop,
    voltage_droop,
    vsm_step,
)
from src.gfm.voltage_limitation import (
    GfmReference,
    compute_reference_current,
    limit_current_reference,
    limit_voltage_reference,
    limited_voltage_reference,
)
from src.gfm.controller import GfmController, GfmOutput, GfmParams, GfmScheme

__all__ = [
    "PllParams",
    "PllState",
    "pll_advance",
    "pll_step",
    "pll_update",
    "EdpcState",
    "VsmState",
    "edpc_step",
    "inverse_frequency_droop",
    "voltage_droop",
    "vsm_step",
    "GfmReference",
    "compute_reference_current",
    "limit_current_reference",
    "limit_voltage_reference",
    "limited_voltage_reference",
    "GfmController",
    "GfmOutput",
    "GfmParams",
    "GfmScheme",
]
