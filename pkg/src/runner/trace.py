"""
Simulation Trace
Uniformly sampled scenario records and their CSV serialisation
"""

import logging
from dataclasses import astuple, dataclass, field, fields
from pathlib import Path
from typing import List, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.9g"
TRACE_FORMATS = ("csv",)


@dataclass(frozen=True)
class TraceRecord:
    """
    One control sample

    Currents and voltages are in the controller frame. dv is the
    current-limiting modification v_c - v_cn_lim; active marks samples in
    which the current-limiting stage changed the command.
    """

    t: float
    i_d: float
    i_q: float
    i_norm: float
    i_phase_max: float
    v_cd: float
    v_cq: float
    dv_d: float
    dv_q: float
    omega_pll: float
    p: float
    q: float
    B: float
    V: float
    active: bool

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(astuple(self)[:-1])))


COLUMNS = tuple(f.name for f in fields(TraceRecord))


@dataclass
class SimTrace:
    """Records at a fixed cadence with strictly increasing t"""

    dt: float
    records: List[TraceRecord] = field(default_factory=list)

    def append(self, record: TraceRecord) -> None:
        if self.records and record.t <= self.records[-1].t:
            raise ValueError(f"trace time must increase: {record.t} after {self.records[-1].t}")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def last(self) -> TraceRecord:
        return self.records[-1]

    def to_dataframe(self) -> pd.DataFrame:
        df = pd.DataFrame([astuple(r) for r in self.records], columns=list(COLUMNS))
        df["active"] = df["active"].astype(int)
        return df

    @classmethod
    def from_dataframe(cls, df: pd.DataFrame, dt: float = 0.0) -> "SimTrace":
        missing = [c for c in COLUMNS if c not in df.columns]
        if missing:
            raise ValueError(f"trace is missing columns {missing}")
        if not dt and len(df) > 1:
            dt = float(df["t"].iloc[1] - df["t"].iloc[0])
        trace = cls(dt=dt)
        for row in df[list(COLUMNS)].itertuples(index=False):
            values = [float(v) for v in row[:-1]]
            trace.records.append(TraceRecord(*values, active=bool(row[-1])))
        return trace


def emit_trace(trace: SimTrace, path: Union[str, Path], format: str = "csv") -> Path:
    """
    Write the trace with a fixed column order and 9 significant digits

    Raises:
        ValueError: If format is not one of TRACE_FORMATS
        OSError: If the file cannot be written; the message names the path
    """
    if format not in TRACE_FORMATS:
        raise ValueError(f"unsupported trace format {format!r}; expected one of {TRACE_FORMATS}")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        trace.to_dataframe().to_csv(path, index=False, float_format=FLOAT_FORMAT)
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc
    logger.info(f"Trace with {len(trace)} records written to {path}")
    return path


def read_trace(path: Union[str, Path]) -> SimTrace:
    """Parse a CSV written by emit_trace"""
    df = pd.read_csv(path)
    return SimTrace.from_dataframe(df)
