# Averaged converter plant, grid models and integration
from src.plant.converter import (
    NonStationaryState,
    StationaryState,
    converter_current_derivative,
    drift,
    hold_response,
    input_matrix,
)
from src.plant.grids import (
    GflGridState,
    GflParams,
    SmGridState,
    dc_link_derivative,
    gfl_grid_step,
    sm_grid_derivative,
)
from src.plant.network import (
    Branch,
    FilterState,
    GridKind,
    NetworkParams,
    PlantInputs,
    PlantModel,
    fault_apply,
    solve_pcc_voltage,
)
from src.plant.integrator import rk4_step
from src.plant.equilibrium import OperatingPoint, OperatingPointError, solve_operating_point

__all__ = [
    "NonStationaryState",
    "StationaryState",
    "converter_current_derivative",
    "drift",
    "hold_response",
    "input_matrix",
    "GflGridState",
    "GflParams",
    "SmGridState",
    "dc_link_derivative",
    "gfl_grid_step",
    "sm_grid_derivative",
    "Branch",
    "FilterState",
    "GridKind",
    "NetworkParams",
    "PlantInputs",
    "PlantModel",
    "fault_apply",
    "solve_pcc_voltage",
    "rk4_step",
    "OperatingPoint",
    "OperatingPointError",
    "solve_operating_point",
]
