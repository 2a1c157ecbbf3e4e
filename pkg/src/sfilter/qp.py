"""
Two-Row Quadratic Program
Closed-form minimiser of ||u - u_n||^2 subject to at most two halfplane
constraints in the plane, by active-set enumeration
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from src.frames.transforms import DqVector

logger = logging.getLogger(__name__)

_ZERO_ROW = 1e-12
_FEAS_TOL = 1e-9


class ActiveSet(Enum):
    """Constraints holding with equality at the returned point"""
    NONE = "none"
    CBF = "cbf"
    CLF = "clf"
    BOTH = "both"
    CBF_ONLY_FALLBACK = "cbf_only_fallback"


class DegenerateCbfError(ValueError):
    """The barrier row has a zero normal and a negative bound"""


@dataclass(frozen=True)
class QpResult:
    u: DqVector
    active_set: ActiveSet
    objective: float

    def to_dict(self) -> dict:
        return {"u": self.u.to_dict(), "active_set": self.active_set.value,
                "objective": self.objective}


Row = Tuple[ActiveSet, np.ndarray, float]


def _satisfied(u: np.ndarray, rows: List[Row]) -> bool:
    for _, a, b in rows:
        scale = max(1.0, abs(b), float(np.linalg.norm(a)) * float(np.linalg.norm(u)))
        if a @ u - b > _FEAS_TOL * scale:
            return False
    return True


def _project(u: np.ndarray, a: np.ndarray, b: float) -> np.ndarray:
    excess = a @ u - b
    if excess <= 0.0:
        return u
    return u - excess / (a @ a) * a


def qp_solve(u_n: DqVector, aB: DqVector, bB: float,
             aV: Optional[DqVector] = None, bV: Optional[float] = None) -> QpResult:
    """
    min ||u - u_n||^2 s.t. aB.u <= bB and (optionally) aV.u <= bV

    Tries u_n, then the projection onto each violated halfplane, then the
    intersection of both boundaries, and keeps the feasible candidate
    closest to u_n. If the two halfplanes do not intersect the CLF row is
    dropped and the result is reported as CBF_ONLY_FALLBACK.

    Args:
        u_n: Nominal input
        aB, bB: Barrier row
        aV, bV: Lyapunov row, omitted when None

    Returns:
        QpResult with the minimiser and the active set

    Raises:
        DegenerateCbfError: if aB = 0 while bB < 0
    """
    un = u_n.as_array()
    a_b = aB.as_array()
    rows: List[Row] = []
    if np.linalg.norm(a_b) <= _ZERO_ROW:
        if bB < -_FEAS_TOL * max(1.0, abs(bB)):
            raise DegenerateCbfError(f"barrier row unsatisfiable: aB=0, bB={bB:.6g}")
    else:
        rows.append((ActiveSet.CBF, a_b, float(bB)))
    cbf_rows = list(rows)

    clf_feasible = True
    if aV is not None and bV is not None:
        a_v = aV.as_array()
        if np.linalg.norm(a_v) <= _ZERO_ROW:
            clf_feasible = bV >= -_FEAS_TOL * max(1.0, abs(bV))
        else:
            rows.append((ActiveSet.CLF, a_v, float(bV)))

    if clf_feasible:
        if _satisfied(un, rows):
            return QpResult(u_n, ActiveSet.NONE, 0.0)

        candidates: List[Tuple[ActiveSet, np.ndarray]] = []
        for label, a, b in rows:
            u = _project(un, a, b)
            if _satisfied(u, rows):
                candidates.append((label, u))
        if len(rows) == 2:
            A = np.vstack([rows[0][1], rows[1][1]])
            if abs(np.linalg.det(A)) > _ZERO_ROW * np.linalg.norm(A[0]) * np.linalg.norm(A[1]):
                u = np.linalg.solve(A, np.array([rows[0][2], rows[1][2]]))
                if _satisfied(u, rows):
                    candidates.append((ActiveSet.BOTH, u))
        if candidates:
            label, u = min(candidates, key=lambda c: float(np.sum((c[1] - un) ** 2)))
            return QpResult(DqVector.from_array(u), label, float(np.sum((u - un) ** 2)))

    logger.debug("Barrier and Lyapunov rows incompatible; keeping the barrier row only")
    u = un
    for _, a, b in cbf_rows:
        u = _project(un, a, b)
    return QpResult(DqVector.from_array(u), ActiveSet.CBF_ONLY_FALLBACK,
                    float(np.sum((u - un) ** 2)))
