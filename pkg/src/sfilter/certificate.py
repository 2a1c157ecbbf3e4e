"""
Polynomial Certificates
Coefficient tables for the barrier B(x, z) and the Lyapunov-like V(x, z),
their evaluation with analytic x-gradients, and the text-table loader
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from src.plant.converter import NonStationaryState, StationaryState

logger = logging.getLogger(__name__)

VARIABLES = ("i_d", "i_q", "dv_d", "dv_q", "i_rd", "i_rq", "i_0")
N_VARS = len(VARIABLES)
N_X = 4

DEFAULT_CERTIFICATE_FILE = Path(__file__).parent / "data" / "certificates.txt"


class CertificateFormatError(ValueError):
    """Malformed or duplicate line in a certificate table"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True, eq=False)
class PolynomialCertificate:
    """
    Polynomial over (i_d, i_q, dv_d, dv_q, i_rd, i_rq, i_0)

    Attributes:
        name: Certificate name ("B" or "V")
        exponents: Integer exponent matrix, one row per monomial
        coefficients: Monomial coefficients
    """

    name: str
    exponents: np.ndarray
    coefficients: np.ndarray

    @classmethod
    def from_terms(cls, name: str,
                   terms: Iterable[Tuple[float, Tuple[int, ...]]]) -> "PolynomialCertificate":
        coefficients: List[float] = []
        exponents: List[Tuple[int, ...]] = []
        for coefficient, exps in terms:
            exps = tuple(int(e) for e in exps)
            if len(exps) != N_VARS or min(exps) < 0:
                raise CertificateFormatError(f"bad exponent vector {exps} in {name}")
            if exps in exponents:
                raise CertificateFormatError(f"duplicate monomial {exps} in {name}")
            exponents.append(exps)
            coefficients.append(float(coefficient))
        return cls(name, np.array(exponents, dtype=int).reshape(-1, N_VARS),
                   np.array(coefficients, dtype=float))

    @property
    def terms(self) -> List[Tuple[float, Tuple[int, ...]]]:
        return [(float(c), tuple(int(e) for e in row))
                for c, row in zip(self.coefficients, self.exponents)]

    @property
    def degree(self) -> int:
        return int(self.exponents.sum(axis=1).max()) if len(self.coefficients) else 0

    def evaluate_batch(self, points: np.ndarray,
                       chunk: int = 8192) -> Tuple[np.ndarray, np.ndarray]:
        """
        Values and x-gradients at many points

        Args:
            points: Array of shape (N, 7)
            chunk: Rows processed per vectorised block

        Returns:
            (values of shape (N,), gradients with respect to the four x
            components, shape (N, 4))
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        values = np.empty(len(points))
        grads = np.empty((len(points), N_X))
        E = self.exponents
        for start in range(0, len(points), chunk):
            P = points[start:start + chunk]
            powers = P[:, None, :] ** E[None, :, :]
            values[start:start + chunk] = powers.prod(axis=2) @ self.coefficients
            for j in range(N_X):
                e = E[:, j]
                d_power = e * P[:, None, j] ** np.maximum(e - 1, 0)
                others = np.delete(powers, j, axis=2).prod(axis=2)
                grads[start:start + chunk, j] = (d_power * others) @ self.coefficients
        return values, grads

    def values(self, points: np.ndarray, chunk: int = 8192) -> np.ndarray:
        """Values only, shape (N,)"""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty(len(points))
        for start in range(0, len(points), chunk):
            P = points[start:start + chunk]
            out[start:start + chunk] = (P[:, None, :] ** self.exponents[None, :, :]).prod(axis=2) \
                @ self.coefficients
        return out

    def evaluate(self, point: np.ndarray) -> Tuple[float, np.ndarray]:
        values, grads = self.evaluate_batch(np.asarray(point, dtype=float).reshape(1, N_VARS))
        return float(values[0]), grads[0]

    def x_hessian(self, point: np.ndarray) -> np.ndarray:
        """
        Hessian of the certificate with respect to the current (i_d, i_q)

        Obtained from gradient differences, which is exact for certificates
        of degree two in the current.
        """
        base = np.asarray(point, dtype=float)
        _, g0 = self.evaluate(base)
        hessian = np.empty((2, 2))
        for j in range(2):
            shifted = base.copy()
            shifted[j] += 1.0
            _, g1 = self.evaluate(shifted)
            hessian[:, j] = (g1 - g0)[:2]
        return hessian


def state_point(x: NonStationaryState, z: StationaryState) -> np.ndarray:
    """Stack (x, z) into the 7-vector the certificates are defined over"""
    return np.concatenate([x.as_array(), z.as_array()])


def eval_certificate(c: PolynomialCertificate, x: NonStationaryState,
                     z: StationaryState) -> Tuple[float, np.ndarray]:
    """
    Evaluate a certificate and its gradient with respect to x

    Returns:
        (value, gradient over (i_d, i_q, dv_d, dv_q))
    """
    return c.evaluate(state_point(x, z))


def parse_certificates(lines: Iterable[str]) -> Dict[str, PolynomialCertificate]:
    """
    Parse a certificate table

    Sections start with "[NAME]"; each data line holds seven exponents and a
    coefficient. "#" starts a comment.

    Raises:
        CertificateFormatError: with the offending line number
    """
    sections: Dict[str, List[Tuple[float, Tuple[int, ...]]]] = {}
    seen: Dict[str, Dict[Tuple[int, ...], int]] = {}
    current: Optional[str] = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if not current or current in sections:
                raise CertificateFormatError(f"bad or repeated section '{line}'", lineno)
            sections[current] = []
            seen[current] = {}
            continue
        if current is None:
            raise CertificateFormatError("monomial outside of a section", lineno)
        fields = line.split()
        if len(fields) != N_VARS + 1:
            raise CertificateFormatError(
                f"expected {N_VARS} exponents and a coefficient, got {len(fields)} fields", lineno)
        try:
            exps = tuple(int(f) for f in fields[:N_VARS])
            coefficient = float(fields[N_VARS])
        except ValueError as exc:
            raise CertificateFormatError(str(exc), lineno) from exc
        if min(exps) < 0:
            raise CertificateFormatError(f"negative exponent in {exps}", lineno)
        if exps in seen[current]:
            raise CertificateFormatError(
                f"duplicate monomial {exps} in [{current}] (first on line {seen[current][exps]})",
                lineno)
        seen[current][exps] = lineno
        sections[current].append((coefficient, exps))
    return {name: PolynomialCertificate.from_terms(name, terms)
            for name, terms in sections.items()}


def load_certificates(path: Optional[Union[str, Path]] = None) -> Dict[str, PolynomialCertificate]:
    """
    Load the B and V certificates from a text table

    Args:
        path: Table path; the packaged table when None
    """
    path = Path(path) if path is not None else DEFAULT_CERTIFICATE_FILE
    with open(path, "r", encoding="utf-8") as f:
        certificates = parse_certificates(f)
    missing = {"B", "V"} - certificates.keys()
    if missing:
        raise CertificateFormatError(f"{path} lacks sections {sorted(missing)}")
    logger.info(f"Loaded certificates from {path}: "
                f"B ({len(certificates['B'].coefficients)} terms), "
                f"V ({len(certificates['V'].coefficients)} terms)")
    return certificates


@lru_cache(maxsize=1)
def default_certificates() -> Dict[str, PolynomialCertificate]:
    """Packaged certificates, loaded once and shared read-only"""
    return load_certificates()
