"""
Operational Region
Bounds on the certificate variables, seeded rejection sampling inside them,
and radial bisection that moves samples onto a certificate's zero level
"""

import logging
from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np

from src.frames.transforms import DqVector
from src.plant.converter import NonStationaryState, StationaryState
from src.sfilter.certificate import N_VARS, PolynomialCertificate

logger = logging.getLogger(__name__)

_MAX_BATCHES = 1000
_BISECTION_STEPS = 60


@dataclass(frozen=True)
class OperationalRegion:
    """
    Permissible ranges of (x, z)

    A point belongs to the region when all four constraint functions are
    non-positive: current inside the allowable disk, voltage deviation below
    dv_max, current reference below i_r_max - i_0 and 0 <= i_0 <= i_0_max.
    printed_sign flips the first constraint to the printed sign, which puts
    the current outside the disk.
    """

    i_max: float = 1.3
    dv_max: float = 1.0
    i_r_max: float = 1.18
    i_0_max: float = 0.6
    printed_sign: bool = False

    def __post_init__(self):
        for name in ("i_max", "dv_max", "i_r_max", "i_0_max"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def current_radius(self) -> float:
        """Half-width of the sampling box for the current"""
        return 2.0 * self.i_max if self.printed_sign else self.i_max

    def constraints(self, points: np.ndarray) -> np.ndarray:
        """Constraint values f_op,1..4, shape (N, 4)"""
        P = np.atleast_2d(points)
        i0 = P[:, 6]
        f1 = np.sum(P[:, 0:2] ** 2, axis=1) - (self.i_max - i0) ** 2
        if self.printed_sign:
            f1 = -f1
        f2 = np.sum(P[:, 2:4] ** 2, axis=1) - self.dv_max ** 2
        f3 = np.sum(P[:, 4:6] ** 2, axis=1) - (self.i_r_max - i0) ** 2
        half = self.i_0_max / 2.0
        f4 = (i0 - half) ** 2 - half ** 2
        return np.column_stack([f1, f2, f3, f4])

    def contains(self, points: np.ndarray) -> np.ndarray:
        return np.all(self.constraints(points) <= 0.0, axis=1)

    def box(self) -> Tuple[np.ndarray, np.ndarray]:
        ri, rv, rr = self.current_radius, self.dv_max, self.i_r_max
        lo = np.array([-ri, -ri, -rv, -rv, -rr, -rr, 0.0])
        hi = np.array([ri, ri, rv, rv, rr, rr, self.i_0_max])
        return lo, hi


def sample_region(r: OperationalRegion, n: int, seed: int = 0) -> np.ndarray:
    """
    Uniform samples of the operational region

    Draws uniformly from the bounding box and keeps the points satisfying
    every region constraint. The result is deterministic for a fixed seed.

    Returns:
        Array of shape (n, 7) with rows (i_d, i_q, dv_d, dv_q, i_rd, i_rq, i_0)
    """
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    rng = np.random.default_rng(seed)
    lo, hi = r.box()
    batch = max(1024, 2 * n)
    accepted = []
    count = 0
    for _ in range(_MAX_BATCHES):
        candidates = rng.uniform(lo, hi, size=(batch, N_VARS))
        keep = candidates[r.contains(candidates)]
        accepted.append(keep)
        count += len(keep)
        if count >= n:
            return np.concatenate(accepted)[:n]
    raise RuntimeError(f"rejection sampling produced {count} of {n} points")


def iter_region(r: OperationalRegion, n: int, seed: int = 0
                ) -> Iterator[Tuple[NonStationaryState, StationaryState]]:
    """Stream the samples of sample_region as (x, z) pairs"""
    for row in sample_region(r, n, seed):
        yield split_point(row)


def split_point(point: np.ndarray) -> Tuple[NonStationaryState, StationaryState]:
    return (NonStationaryState(DqVector(point[0], point[1]), DqVector(point[2], point[3])),
            StationaryState(DqVector(point[4], point[5]), float(point[6])))


def certificate_center(cert: PolynomialCertificate, points: np.ndarray) -> np.ndarray:
    """
    Current at which the certificate is smallest for the remaining coordinates

    One Newton step from each point, exact for certificates quadratic in i.
    """
    _, g0 = cert.evaluate_batch(points)
    hessian = np.empty((len(points), 2, 2))
    for j in range(2):
        shifted = points.copy()
        shifted[:, j] += 1.0
        _, g1 = cert.evaluate_batch(shifted)
        hessian[:, :, j] = (g1 - g0)[:, :2]
    step = np.linalg.solve(hessian, g0[:, :2, None])[:, :, 0]
    return points[:, :2] - step


def project_to_level(cert: PolynomialCertificate, points: np.ndarray, r: OperationalRegion,
                     ) -> Tuple[np.ndarray, np.ndarray]:
    """
    Move each point's current along the ray from the certificate's center
    through the point until the certificate vanishes

    The ray is limited to the sampling disk of the current. Points whose ray
    does not cross the zero level are dropped.

    Returns:
        (projected points, mask of the input rows that produced them)
    """
    P = np.atleast_2d(points).copy()
    center = certificate_center(cert, P)
    direction = P[:, :2] - center
    radius = r.current_radius if r.printed_sign else r.i_max - P[:, 6]

    dd = np.sum(direction ** 2, axis=1)
    cd = np.sum(center * direction, axis=1)
    cc = np.sum(center ** 2, axis=1)
    disc = cd ** 2 - dd * (cc - radius ** 2)
    valid = (dd > 1e-18) & (disc >= 0.0)
    s_hi = np.where(valid, (-cd + np.sqrt(np.maximum(disc, 0.0))) / np.maximum(dd, 1e-18), 0.0)
    valid &= s_hi > 0.0

    def level(s: np.ndarray) -> np.ndarray:
        Q = P.copy()
        Q[:, :2] = center + s[:, None] * direction
        return cert.values(Q)

    lo = np.zeros(len(P))
    hi = s_hi.copy()
    valid &= (level(lo) < 0.0) & (level(hi) > 0.0)
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        above = level(mid) > 0.0
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)

    s = 0.5 * (lo + hi)
    P[:, :2] = center + s[:, None] * direction
    return P[valid], valid
