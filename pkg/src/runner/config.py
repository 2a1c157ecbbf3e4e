"""
Scenario Configuration
System parameters with the simulation-table defaults and the flat dotted
key/value scenario file format
"""

import io
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, Iterable, Optional, Tuple, Union

from dotenv.parser import parse_stream

from src.clc.baselines import ClcKind, ClcParams
from src.frames.transforms import Impedance
from src.gfm.controller import GfmParams, GfmScheme
from src.gfm.pll import PllParams
from src.plant.grids import GflParams
from src.plant.network import GridKind, NetworkParams
from src.sfilter.safety_filter import FilterParams
from src.verifier.region import OperationalRegion

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Malformed scenario file or violated scenario invariant"""

    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"'{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class PlantSection:
    l_c: float = 0.16
    r_c: float = 0.02
    c_f: float = 0.006
    l_f: float = 0.2
    r_f: float = 10.0
    l_l: float = 0.016
    r_l: float = 0.001
    tau_v: float = 0.1


@dataclass(frozen=True)
class GridSection:
    l_g: float = 0.32
    r_g: float = 0.02
    l_sm: float = 0.16
    r_sm: float = 0.01
    l_gfl: float = 0.16
    r_gfl: float = 0.01
    H_sm: float = 3.0
    p_m: float = 0.9
    i_r_gfl: float = -0.9
    kp_dc: float = 2.0
    ti_dc: float = 0.05
    tau_dc: float = 0.05


@dataclass(frozen=True)
class ControlSection:
    D_f: float = 0.02
    D_v: float = 0.05
    H: float = 3.0
    K_d: float = 50.0
    kp_pll: float = 0.096
    ti_pll: float = 0.085
    kp_edpc: float = 0.45
    ti_edpc: float = 0.12
    tau_d: float = 0.01
    p_star: float = 0.0
    omega_star: float = 1.0
    q_star: float = 0.0
    v_star: float = 1.0


@dataclass(frozen=True)
class LimitsSection:
    i_max: float = 1.3
    i_th: float = 1.18
    dv_max: float = 1.0
    i_r_max: float = 1.18
    i_0_max: float = 0.6


@dataclass(frozen=True)
class FilterSection:
    gamma_b: float = 211.0
    gamma_v: float = 683.0
    d_r: float = 0.1
    m_max: float = 1.5
    epsilon: float = 1e-3


@dataclass(frozen=True)
class ClcSection:
    kp_cc: float = 0.342
    ti_cc: float = 0.002
    K_X: float = 10.0
    eta: float = 16.0
    h_scc: float = 0.05


@dataclass(frozen=True)
class SystemParameters:
    """
    Every tunable constant, grouped the way scenario files address them

    The builders below hand each subsystem its own parameter object, so a
    single override (for example limits.i_max) reaches the safety filter,
    the verifier region and the metrics alike.
    """

    plant: PlantSection = field(default_factory=PlantSection)
    grid: GridSection = field(default_factory=GridSection)
    control: ControlSection = field(default_factory=ControlSection)
    limits: LimitsSection = field(default_factory=LimitsSection)
    filter: FilterSection = field(default_factory=FilterSection)
    clc: ClcSection = field(default_factory=ClcSection)

    @property
    def z_c(self) -> Impedance:
        return Impedance(r=self.plant.r_c, l=self.plant.l_c)

    def grid_impedance(self, grid: GridKind) -> Impedance:
        """Line impedance plus the source impedance of the selected grid"""
        g = self.grid
        if grid is GridKind.HIGH_INERTIA:
            return Impedance(r=g.r_g + g.r_sm, l=g.l_g + g.l_sm)
        if grid is GridKind.LOW_INERTIA:
            return Impedance(r=g.r_g + g.r_gfl, l=g.l_g + g.l_gfl)
        return Impedance(r=g.r_g, l=g.l_g)

    def network_params(self, grid: GridKind) -> NetworkParams:
        p = self.plant
        return NetworkParams(
            z_c=self.z_c,
            c_f=p.c_f,
            z_f=Impedance(r=p.r_f, l=p.l_f),
            z_fault=Impedance(r=p.r_l, l=p.l_l),
            z_grid=self.grid_impedance(grid),
            H_sm=self.grid.H_sm,
            tau_dc=self.grid.tau_dc,
        )

    def pll_params(self) -> PllParams:
        c = self.control
        return PllParams(kp=c.kp_pll, ti=c.ti_pll, tau_d=c.tau_d)

    def gfm_params(self) -> GfmParams:
        c = self.control
        return GfmParams(
            D_f=c.D_f, D_v=c.D_v, H=c.H, K_d=c.K_d,
            kp_edpc=c.kp_edpc, ti_edpc=c.ti_edpc, tau_d=c.tau_d, tau_v=self.plant.tau_v,
            p_star=c.p_star, omega_star=c.omega_star, q_star=c.q_star, v_star=c.v_star,
            pll=self.pll_params(),
        )

    def gfl_params(self) -> GflParams:
        g = self.grid
        return GflParams(
            z_gfl=Impedance(r=g.r_gfl, l=g.l_gfl),
            kp_cc=self.clc.kp_cc, ti_cc=self.clc.ti_cc,
            kp_dc=g.kp_dc, ti_dc=g.ti_dc, tau_dc=g.tau_dc,
            pll=self.pll_params(),
        )

    def clc_params(self) -> ClcParams:
        c = self.clc
        return ClcParams(kp_cc=c.kp_cc, ti_cc=c.ti_cc, i_th=self.limits.i_th,
                         h_scc=c.h_scc, K_X=c.K_X, eta=c.eta)

    def filter_params(self, hold_time: float = 0.0) -> FilterParams:
        f, lim = self.filter, self.limits
        return FilterParams(gamma_b=f.gamma_b, gamma_v=f.gamma_v, i_max=lim.i_max,
                            i_th=lim.i_th, m_max=f.m_max, d_r=f.d_r, epsilon=f.epsilon,
                            tau_v=self.plant.tau_v, hold_time=hold_time)

    def region(self, printed_sign: bool = False) -> OperationalRegion:
        lim = self.limits
        return OperationalRegion(i_max=lim.i_max, dv_max=lim.dv_max, i_r_max=lim.i_r_max,
                                 i_0_max=lim.i_0_max, printed_sign=printed_sign)

    def listing(self) -> Iterable[Tuple[str, float]]:
        """(dotted key, value) pairs of every parameter, in declaration order"""
        for section in fields(self):
            values = getattr(self, section.name)
            for f in fields(values):
                yield f"{section.name}.{f.name}", getattr(values, f.name)


SECTIONS = tuple(f.name for f in fields(SystemParameters))

# bare symbol -> section; symbols are unique across sections
SYMBOLS: Dict[str, str] = {
    f.name: section.name
    for section in fields(SystemParameters)
    for f in fields(section.default_factory())
}


@dataclass(frozen=True)
class ScenarioConfig:
    """One closed-loop scenario: grid, GFM scheme, CLC, timing and parameters"""

    grid: GridKind = GridKind.HIGH_INERTIA
    gfm: GfmScheme = GfmScheme.VSM
    clc: ClcKind = ClcKind.SF
    t_end: float = 1.5
    t_fault_on: float = 0.5
    t_fault_off: float = 0.8
    dt_plant: float = 1e-5
    dt_ctrl: float = 2e-4
    settle_time: float = 0.5
    seed: int = 0
    i_0: float = 0.0
    fault: bool = True
    divergence_limit: float = 100.0
    params: SystemParameters = field(default_factory=SystemParameters)

    def __post_init__(self):
        if self.dt_plant <= 0.0:
            raise ConfigError("must be positive", key="dt_plant")
        if self.dt_ctrl <= 0.0:
            raise ConfigError("must be positive", key="dt_ctrl")
        ratio = self.dt_ctrl / self.dt_plant
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
            raise ConfigError(f"must be an integer multiple of dt_plant={self.dt_plant}",
                              key="dt_ctrl")
        if self.t_end <= 0.0:
            raise ConfigError("must be positive", key="t_end")
        if self.settle_time < 0.0:
            raise ConfigError("must be non-negative", key="settle_time")
        if self.divergence_limit <= 0.0:
            raise ConfigError("must be positive", key="divergence_limit")
        if not self.t_fault_on < self.t_fault_off:
            raise ConfigError(f"t_fault_off={self.t_fault_off} must exceed "
                              f"t_fault_on={self.t_fault_on}", key="t_fault_off")
        if self.t_fault_off > self.t_end:
            raise ConfigError(f"must not exceed t_end={self.t_end}", key="t_fault_off")
        if self.t_fault_on < 0.0:
            raise ConfigError("must be non-negative", key="t_fault_on")
        if not 0.0 <= self.i_0 <= self.params.limits.i_max:
            raise ConfigError(f"must lie in [0, i_max={self.params.limits.i_max}]", key="i_0")

    @property
    def substeps(self) -> int:
        return int(round(self.dt_ctrl / self.dt_plant))

    @property
    def name(self) -> str:
        return f"{self.grid.value}_{self.gfm.value}_{self.clc.value}"

    def with_clc(self, clc: ClcKind) -> "ScenarioConfig":
        return replace(self, clc=clc)

    def to_dict(self) -> Dict:
        out = {
            "grid": self.grid.value, "gfm": self.gfm.value, "clc": self.clc.value,
            "t_end": self.t_end, "t_fault_on": self.t_fault_on,
            "t_fault_off": self.t_fault_off, "dt_plant": self.dt_plant,
            "dt_ctrl": self.dt_ctrl, "settle_time": self.settle_time,
            "seed": self.seed, "i_0": self.i_0, "fault": self.fault,
            "divergence_limit": self.divergence_limit,
        }
        out.update(dict(self.params.listing()))
        return out


_ENUMS = {"grid": GridKind, "gfm": GfmScheme, "clc": ClcKind}
_FLOATS = ("t_end", "t_fault_on", "t_fault_off", "dt_plant", "dt_ctrl", "settle_time", "i_0",
           "divergence_limit")
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(key: str, raw: str, line: int):
    value = raw.strip()
    try:
        if key in _ENUMS:
            return _ENUMS[key](value.lower())
        if key == "seed":
            return int(value)
        if key == "fault":
            lowered = value.lower()
            if lowered in _TRUE | _FALSE:
                return lowered in _TRUE
            raise ValueError(value)
        return float(value)
    except ValueError:
        raise ConfigError(f"invalid value {raw!r}", line=line, key=key) from None


def parse_config(text: str, base: Optional[ScenarioConfig] = None) -> ScenarioConfig:
    """
    Build a scenario from flat dotted key/value text

    Defaults are applied first. Parameter overrides may be written either
    with their section (plant.l_c = 0.16) or as the bare symbol (l_c = 0.16).

    Raises:
        ConfigError: Unparsable line, unknown key, bad value or violated invariant
    """
    base = base or ScenarioConfig()
    scenario: Dict = {}
    overrides: Dict[str, Dict[str, float]] = {s: {} for s in SECTIONS}
    for binding in parse_stream(io.StringIO(text)):
        line = binding.original.line
        if binding.error:
            raise ConfigError(f"cannot parse {binding.original.string.strip()!r}", line=line)
        if binding.key is None:
            continue
        key = binding.key
        if binding.value is None:
            raise ConfigError("missing value", line=line, key=key)
        if "." in key:
            section, _, symbol = key.partition(".")
            if section not in SECTIONS or SYMBOLS.get(symbol) != section:
                raise ConfigError("unknown parameter", line=line, key=key)
            overrides[section][symbol] = _convert(key, binding.value, line)
        elif key in SYMBOLS:
            overrides[SYMBOLS[key]][key] = _convert(key, binding.value, line)
        elif key in _ENUMS or key in _FLOATS or key in ("seed", "fault"):
            scenario[key] = _convert(key, binding.value, line)
        else:
            raise ConfigError("unknown key", line=line, key=key)

    params = base.params
    for section, values in overrides.items():
        if values:
            params = replace(params, **{section: replace(getattr(params, section), **values)})
    try:
        return replace(base, params=params, **scenario)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: Union[str, Path], base: Optional[ScenarioConfig] = None) -> ScenarioConfig:
    """
    Load a scenario file

    Raises:
        FileNotFoundError: If the file does not exist
        ConfigError: See parse_config
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Scenario file not found: {path}")
    cfg = parse_config(path.read_text(), base)
    logger.info(f"Loaded scenario {cfg.name} from {path}")
    return cfg
