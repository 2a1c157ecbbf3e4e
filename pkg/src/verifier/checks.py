"""
Certificate Verification
Pointwise, sampling-based checks of the barrier, Lyapunov-like and
nominal-region conditions, the set containments, input feasibility and
the worst-case phase-current bound
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np

from src.frames.transforms import Impedance
from src.plant.converter import drift, input_matrix
from src.sfilter.certificate import PolynomialCertificate
from src.sfilter.safety_filter import REFINED_GAIN, FilterParams
from src.verifier.region import OperationalRegion, project_to_level, sample_region

logger = logging.getLogger(__name__)

Certificates = Dict[str, PolynomialCertificate]

V_PCC_NOMINAL = np.array([1.0, 0.0])
DEFAULT_Z_C = Impedance(r=0.02, l=0.16)
N_SWEEP = 360
_TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    condition: str
    point: Tuple[float, ...]
    residual: float

    def to_dict(self) -> Dict:
        return {"condition": self.condition, "point": list(self.point),
                "residual": self.residual}


@dataclass
class VerificationReport:
    """
    Outcome of one or more checks

    Merging is associative and independent of order, so reports of
    separate sample chunks can be combined in any grouping.
    """

    condition: str
    samples_tested: int = 0
    violations: List[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def merge(self, other: "VerificationReport") -> "VerificationReport":
        names = sorted(set(self.condition.split("+")) | set(other.condition.split("+")))
        violations = sorted(self.violations + other.violations,
                            key=lambda v: (v.condition, v.point))
        return VerificationReport("+".join(names),
                                  self.samples_tested + other.samples_tested, violations)

    def count(self, condition: str) -> int:
        return sum(1 for v in self.violations if v.condition == condition)

    def to_dict(self) -> Dict:
        return {
            "condition": self.condition,
            "samples_tested": self.samples_tested,
            "violations": len(self.violations),
            "pass": self.passed,
            "worst_residual": max((v.residual for v in self.violations), default=None),
        }


def _model(points: np.ndarray, params: FilterParams, z_c: Impedance
           ) -> Tuple[np.ndarray, np.ndarray]:
    return drift(points[:, :4], z_c, params.tau_v), input_matrix(z_c)


def _violations(condition: str, points: np.ndarray, residuals: np.ndarray,
                scale: np.ndarray) -> List[Violation]:
    bad = residuals > _TOL * np.maximum(1.0, scale)
    return [Violation(condition, tuple(float(v) for v in p), float(r))
            for p, r in zip(points[bad], residuals[bad])]


def ball_minimum(a: np.ndarray, m_max: float) -> np.ndarray:
    """
    min a^T u over the input set (u + v_pcc_n)^T (u + v_pcc_n) <= m_max

    Attained at u = -v_pcc_n - sqrt(m_max) a / |a|.
    """
    a = np.atleast_2d(a)
    return -a @ V_PCC_NOMINAL - math.sqrt(m_max) * np.linalg.norm(a, axis=1)


def boundary_points(cert: PolynomialCertificate, region: OperationalRegion, n: int,
                    band: float, seed: int = 0) -> np.ndarray:
    """
    Region samples with |cert| <= band

    Raw samples that already fall in the band are kept; every other sample
    is moved radially onto the zero level.
    """
    if band <= 0.0:
        raise ValueError(f"band must be positive, got {band}")
    points = sample_region(region, n, seed)
    projected, _ = project_to_level(cert, points, region)
    raw = points[np.abs(cert.values(points)) <= band]
    candidates = np.vstack([raw, projected])
    keep = region.contains(candidates) & (np.abs(cert.values(candidates)) <= band)
    return candidates[keep]


def check_cbf_boundary(certs: Certificates, region: OperationalRegion, n: int,
                       band: float = 1e-3, params: FilterParams = FilterParams(),
                       z_c: Impedance = DEFAULT_Z_C, seed: int = 0) -> VerificationReport:
    """
    Barrier condition on the safe-set boundary

    At points with |B| <= band some admissible input must make B
    non-increasing. The best input over the input ball is known in closed
    form, so the residual is exact.
    """
    pts = boundary_points(certs["B"], region, n, band, seed)
    report = VerificationReport("cbf", samples_tested=len(pts))
    if len(pts):
        _, grad = certs["B"].evaluate_batch(pts)
        f, G = _model(pts, params, z_c)
        lf = np.sum(grad * f, axis=1)
        residual = lf + ball_minimum(grad @ G, params.m_max)
        report.violations = _violations("cbf", pts, residual, np.abs(lf))
    _log_report(report)
    return report


def check_input_feasibility(certs: Certificates, region: OperationalRegion, n: int,
                            params: FilterParams = FilterParams(),
                            z_c: Impedance = DEFAULT_Z_C, seed: int = 0) -> VerificationReport:
    """
    Every point of the safe set admits an input of the input set that
    satisfies the barrier row grad_B^T (f + G u) <= -gamma_b B
    """
    points = sample_region(region, n, seed)
    B, grad = certs["B"].evaluate_batch(points)
    inside = B <= 0.0
    pts, B, grad = points[inside], B[inside], grad[inside]
    report = VerificationReport("input", samples_tested=len(pts))
    if len(pts):
        f, G = _model(pts, params, z_c)
        lf = np.sum(grad * f, axis=1)
        residual = lf + params.gamma_b * B + ball_minimum(grad @ G, params.m_max)
        report.violations = _violations("input", pts, residual, np.abs(lf))
    _log_report(report)
    return report


def ball_line_crossings(c: np.ndarray, k: np.ndarray, m_max: float) -> np.ndarray:
    """
    Both points where the line c^T u = k meets the input-ball surface

    Rows whose line misses the ball get the ball centre -v_pcc_n twice.

    Returns:
        Array of shape (m, 2, 2)
    """
    norm = np.linalg.norm(c, axis=1)
    ok = norm > 1e-300
    safe = np.where(ok, norm, 1.0)[:, None]
    unit = c / safe
    # line in coordinates centred on the ball: unit^T w = s
    s = (k + c @ V_PCC_NOMINAL) / safe[:, 0]
    h2 = m_max - s ** 2
    ok &= h2 >= 0.0
    h = np.sqrt(np.where(ok, h2, 0.0))[:, None]
    normal = np.column_stack([-unit[:, 1], unit[:, 0]])
    foot = s[:, None] * unit
    out = np.stack([foot + h * normal, foot - h * normal], axis=1) - V_PCC_NOMINAL
    out[~ok] = -V_PCC_NOMINAL
    return out


def joint_residual(lf_b: np.ndarray, a_b: np.ndarray, lf_v: np.ndarray, a_v: np.ndarray,
                   d: np.ndarray, m_max: float, chunk: int = 512,
                   sweep: int = N_SWEEP) -> np.ndarray:
    """
    Smallest achievable max(barrier row, Lyapunov row) over the input ball

    Candidate inputs are `sweep` points on the ball surface, the ball
    minimiser of each row alone, the two surface points where both rows
    are equal and, when it lies inside the ball, the point where both rows
    are tight. The minimum of the max of two affine functions over a disc
    is attained at one of these exact candidates; the sweep is a cross
    check and can be set to 0.
    """
    if sweep < 0:
        raise ValueError(f"sweep must be non-negative, got {sweep}")
    radius = math.sqrt(m_max)
    angles = np.linspace(0.0, 2.0 * math.pi, sweep, endpoint=False)
    ring = radius * np.column_stack([np.cos(angles), np.sin(angles)]) - V_PCC_NOMINAL
    out = np.empty(len(lf_b))
    for start in range(0, len(lf_b), chunk):
        sl = slice(start, start + chunk)
        m = len(lf_b[sl])
        A = np.stack([a_b[sl], a_v[sl]], axis=1)
        extra = []
        for a in (a_b[sl], a_v[sl]):
            norm = np.maximum(np.linalg.norm(a, axis=1, keepdims=True), 1e-300)
            extra.append(-V_PCC_NOMINAL - radius * a / norm)
        crossings = ball_line_crossings(a_b[sl] - a_v[sl], lf_v[sl] + d[sl] - lf_b[sl], m_max)
        extra.extend([crossings[:, 0], crossings[:, 1]])
        rhs = np.column_stack([-lf_b[sl], -lf_v[sl] - d[sl]])
        det = np.linalg.det(A)
        corner = np.tile(-V_PCC_NOMINAL, (m, 1))
        ok = np.abs(det) > 1e-12
        if np.any(ok):
            solved = np.linalg.solve(A[ok], rhs[ok][:, :, None])[:, :, 0]
            inside = np.sum((solved + V_PCC_NOMINAL) ** 2, axis=1) <= m_max
            corner[np.flatnonzero(ok)[inside]] = solved[inside]
        extra.append(corner)
        U = np.concatenate([np.broadcast_to(ring, (m, sweep, 2)),
                            np.stack(extra, axis=1)], axis=1)
        r_b = lf_b[sl, None] + np.einsum("nk,nmk->nm", a_b[sl], U)
        r_v = lf_v[sl, None] + d[sl, None] + np.einsum("nk,nmk->nm", a_v[sl], U)
        out[sl] = np.min(np.maximum(r_b, r_v), axis=1)
    return out


def check_clf_region(certs: Certificates, region: OperationalRegion, n: int,
                     params: FilterParams = FilterParams(), band: float = 1e-3,
                     z_c: Impedance = DEFAULT_Z_C, seed: int = 0,
                     sweep: int = N_SWEEP) -> VerificationReport:
    """
    Lyapunov-like decrease on the transitional region {B <= 0 <= V}

    Condition "clf": some admissible input achieves dV/dt <= -d(x, z).
    Condition "joint": on the safe-set boundary inside the transitional
    region one and the same input satisfies the barrier and the
    Lyapunov-like condition.
    """
    points = sample_region(region, n, seed)
    B = certs["B"].values(points)
    V, grad_v = certs["V"].evaluate_batch(points)
    mask = (B <= 0.0) & (V >= 0.0)
    pts, V, grad_v = points[mask], V[mask], grad_v[mask]
    report = VerificationReport("clf", samples_tested=len(pts))
    if len(pts):
        f, G = _model(pts, params, z_c)
        lf = np.sum(grad_v * f, axis=1)
        residual = lf + ball_minimum(grad_v @ G, params.m_max) + params.dissipation(V)
        report.violations = _violations("clf", pts, residual, np.abs(lf))

    boundary = boundary_points(certs["B"], region, n, band, seed)
    Vb, grad_vb = certs["V"].evaluate_batch(boundary)
    joint = boundary[Vb >= 0.0]
    joint_report = VerificationReport("joint", samples_tested=len(joint))
    if len(joint):
        sel = Vb >= 0.0
        _, grad_b = certs["B"].evaluate_batch(joint)
        f, G = _model(joint, params, z_c)
        lf_b = np.sum(grad_b * f, axis=1)
        lf_v = np.sum(grad_vb[sel] * f, axis=1)
        residual = joint_residual(lf_b, grad_b @ G, lf_v, grad_vb[sel] @ G,
                                  params.dissipation(Vb[sel]), params.m_max,
                                  sweep=sweep)
        joint_report.violations = _violations(
            "joint", joint, residual, np.maximum(np.abs(lf_b), np.abs(lf_v)))

    merged = report.merge(joint_report)
    _log_report(merged)
    return merged


def check_nominal_invariance(certs: Certificates, region: OperationalRegion, n: int,
                             params: FilterParams = FilterParams(), band: float = 1e-3,
                             z_c: Impedance = DEFAULT_Z_C, seed: int = 0) -> VerificationReport:
    """
    The refined nominal input keeps the state inside the nominal region:
    grad_V^T (f + G u_n') + d <= 0 wherever |V| <= band
    """
    pts = boundary_points(certs["V"], region, n, band, seed)
    report = VerificationReport("nominal", samples_tested=len(pts))
    if len(pts):
        V, grad = certs["V"].evaluate_batch(pts)
        f, G = _model(pts, params, z_c)
        i, dv, i_r = pts[:, 0:2], pts[:, 2:4], pts[:, 4:6]
        u_n = i_r @ z_c.matrix(1.0).T + dv + REFINED_GAIN * (i_r - i)
        residual = np.sum(grad * f, axis=1) + np.sum((grad @ G) * u_n, axis=1) \
            + params.dissipation(V)
        report.violations = _violations("nominal", pts, residual, np.abs(residual))
    _log_report(report)
    return report


def check_containment(certs: Certificates, region: OperationalRegion, n: int,
                      seed: int = 0) -> VerificationReport:
    """
    Nominal region inside the safe set inside the allowable set

    Condition "xn_in_xs" flags V <= 0 with B > 0; "xs_in_xa" flags B <= 0
    with the allowable-set margin w > 0.
    """
    points = sample_region(region, n, seed)
    B = certs["B"].values(points)
    V = certs["V"].values(points)
    w = np.sum(points[:, 0:2] ** 2, axis=1) - (region.i_max - points[:, 6]) ** 2
    report = VerificationReport("containment", samples_tested=len(points))
    xn = (V <= 0.0) & (B > 0.0)
    xs = (B <= 0.0) & (w > 0.0)
    report.violations = (
        [Violation("xn_in_xs", tuple(float(v) for v in p), float(b))
         for p, b in zip(points[xn], B[xn])]
        + [Violation("xs_in_xa", tuple(float(v) for v in p), float(m))
           for p, m in zip(points[xs], w[xs])]
    )
    _log_report(report)
    return report


def check_abc_bound(n_theta: int = 720, n_phi: int = 720, i_hat: float = 1.0,
                    i_0: float = 0.0, tol: float = 1e-4) -> float:
    """
    Worst phase-current amplitude for a dq current of magnitude i_hat plus a
    zero-sequence component i_0, over every frame angle and current angle

    Raises:
        ValueError: If a grid has fewer than 360 points
        AssertionError: If the maximum exceeds i_hat + i_0 + tol
    """
    if n_theta < 360 or n_phi < 360:
        raise ValueError("grid sizes must be at least 360")
    theta = np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False)[:, None]
    phi = np.linspace(0.0, 2.0 * math.pi, n_phi, endpoint=False)[None, :]
    worst = 0.0
    for shift in (0.0, 2.0 * math.pi / 3.0, -2.0 * math.pi / 3.0):
        # cos(th - s) i_d - sin(th - s) i_q + i_0 with (i_d, i_q) = i_hat (cos phi, sin phi)
        phase = i_hat * np.cos(theta - shift + phi) + i_0
        worst = max(worst, float(np.max(np.abs(phase))))
    assert worst <= i_hat + i_0 + tol, f"phase amplitude {worst} exceeds {i_hat + i_0}"
    return worst


def band_convergence(certs: Certificates, region: OperationalRegion, n: int,
                     bands: Sequence[float] = (1e-2, 1e-3, 1e-4),
                     params: FilterParams = FilterParams(), seed: int = 0
                     ) -> List[Dict]:
    """Rerun the boundary checks for each band, widest first"""
    rows = []
    for band in sorted(bands, reverse=True):
        cbf = check_cbf_boundary(certs, region, n, band, params, seed=seed)
        nominal = check_nominal_invariance(certs, region, n, params, band, seed=seed)
        rows.append({"band": band,
                     "cbf_samples": cbf.samples_tested, "cbf_violations": len(cbf.violations),
                     "nominal_samples": nominal.samples_tested,
                     "nominal_violations": len(nominal.violations)})
    return rows


def run_all(certs: Certificates, region: OperationalRegion, n: int, band: float = 1e-3,
            params: FilterParams = FilterParams(), seed: int = 0,
            sweep: int = N_SWEEP) -> Dict[str, VerificationReport]:
    """Every pointwise check on the same seeded sample set"""
    logger.info(f"Verifying certificates on {n} samples (seed={seed}, band={band})")
    return {
        "cbf": check_cbf_boundary(certs, region, n, band, params, seed=seed),
        "input": check_input_feasibility(certs, region, n, params, seed=seed),
        "clf": check_clf_region(certs, region, n, params, band, seed=seed, sweep=sweep),
        "nominal": check_nominal_invariance(certs, region, n, params, band, seed=seed),
        "containment": check_containment(certs, region, n, seed=seed),
    }


def write_report(reports: Iterable[VerificationReport], path: Union[str, Path]) -> Path:
    """
    Write one JSON object per line: a summary line per report followed by
    one line per violation
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for report in reports:
            fh.write(json.dumps({"summary": report.to_dict()}) + "\n")
            for violation in report.violations:
                fh.write(json.dumps(violation.to_dict()) + "\n")
    logger.info(f"Verification report written to {path}")
    return path


def _log_report(report: VerificationReport) -> None:
    if report.passed:
        logger.info(f"{report.condition}: {report.samples_tested} points, no violations")
    else:
        logger.warning(f"{report.condition}: {len(report.violations)} violations "
                       f"over {report.samples_tested} points")
